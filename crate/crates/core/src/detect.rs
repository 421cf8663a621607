//! Ranking of word types by coverage.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::CorpusStats;
use crate::error::{Error, Result};
use crate::vmf::{coverage, LogBase};

/// Types need strictly more than this many instances in each corpus.
pub const DEFAULT_MIN_FREQ: u64 = 10;

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub min_freq: u64,
    pub exclude: BTreeSet<String>,
    pub log_base: LogBase,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            min_freq: DEFAULT_MIN_FREQ,
            exclude: BTreeSet::new(),
            log_base: LogBase::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredType {
    pub word_type: String,
    pub f_source: u64,
    pub f_target: u64,
    pub l_source: f64,
    pub l_target: f64,
    pub coverage: f64,
    /// Logarithm of `coverage` in the requested base.
    pub log_coverage: f64,
    pub degenerate: bool,
}

/// Score every word type frequent enough in both corpora and sort by
/// coverage, largest first, ties broken by word type.
pub fn detect(source: &CorpusStats, target: &CorpusStats, opts: &DetectOptions) -> Result<Vec<ScoredType>> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    let candidates: Vec<_> = source
        .iter()
        .filter(|s| s.n() > opts.min_freq && !opts.exclude.contains(s.word_type()))
        .filter_map(|s| {
            target
                .get(s.word_type())
                .filter(|t| t.n() > opts.min_freq)
                .map(|t| (s, t))
        })
        .collect();

    let mut scored = candidates
        .par_iter()
        .map(|(s, t)| {
            let pair = coverage(s.mean_norm(), t.mean_norm())?;
            Ok(ScoredType {
                word_type: s.word_type().to_string(),
                f_source: s.n(),
                f_target: t.n(),
                l_source: s.mean_norm(),
                l_target: t.mean_norm(),
                coverage: pair.coverage,
                log_coverage: opts.log_base.from_ln(pair.log_coverage),
                degenerate: pair.degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    scored.sort_by(|a, b| {
        b.coverage
            .total_cmp(&a.coverage)
            .then_with(|| a.word_type.cmp(&b.word_type))
    });
    Ok(scored)
}

/// One word type per line; blank lines and `#` comments are skipped.
/// Entries are lowercased to match stream word types.
pub fn read_exclude_list<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.insert(word.to_lowercase());
    }
    Ok(words)
}

pub(crate) fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// TSV: rank, word_type, log_coverage, f_S, f_T, degenerate (0/1).
pub fn write_tsv<W: Write>(scored: &[ScoredType], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rank\tword_type\tlog_coverage\tf_S\tf_T\tdegenerate")?;
    for (rank, t) in scored.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            rank + 1,
            t.word_type,
            fixed6(t.log_coverage),
            t.f_source,
            t.f_target,
            u8::from(t.degenerate)
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DetectReport<'a> {
    pub source_label: &'a str,
    pub target_label: &'a str,
    pub dim: usize,
    pub min_freq: u64,
    pub log_base: LogBase,
    pub types: &'a [ScoredType],
}

/// Full-precision JSON report.
pub fn write_json<W: Write>(
    source: &CorpusStats,
    target: &CorpusStats,
    opts: &DetectOptions,
    scored: &[ScoredType],
    out: W,
) -> Result<()> {
    let report = DetectReport {
        source_label: source.corpus_label(),
        target_label: target.corpus_label(),
        dim: source.dim(),
        min_freq: opts.min_freq,
        log_base: opts.log_base,
        types: scored,
    };
    serde_json::to_writer_pretty(out, &report).map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::TypeStats;

    fn corpus(label: &str, types: &[(&str, u64, f64)]) -> CorpusStats {
        let mut c = CorpusStats::new(label, 2);
        for &(w, n, l) in types {
            c.insert(TypeStats::from_sum(w, n, vec![l * n as f64, 0.0]).unwrap()).unwrap();
        }
        c
    }

    #[test]
    fn identical_corpora_score_one() {
        let c = corpus("c", &[("a", 20, 0.3), ("b", 30, 0.7), ("c", 11, 0.5)]);
        let out = detect(&c, &c, &DetectOptions::default()).unwrap();
        assert_eq!(out.len(), 3);
        for t in &out {
            assert_eq!(t.coverage, 1.0);
            assert_eq!(t.log_coverage, 0.0);
        }
        // all tied: lexicographic
        let words: Vec<_> = out.iter().map(|t| t.word_type.as_str()).collect();
        assert_eq!(words, ["a", "b", "c"]);
    }

    #[test]
    fn threshold_is_strict_and_per_corpus() {
        let s = corpus("s", &[("ten", 10, 0.5), ("eleven", 11, 0.5), ("rare_t", 50, 0.5)]);
        let t = corpus("t", &[("ten", 50, 0.5), ("eleven", 11, 0.6), ("rare_t", 10, 0.5)]);
        let out = detect(&s, &t, &DetectOptions::default()).unwrap();
        let words: Vec<_> = out.iter().map(|t| t.word_type.as_str()).collect();
        assert_eq!(words, ["eleven"]);
    }

    #[test]
    fn types_missing_from_one_corpus_are_skipped() {
        let s = corpus("s", &[("only_s", 50, 0.5), ("both", 50, 0.5)]);
        let t = corpus("t", &[("only_t", 50, 0.5), ("both", 50, 0.4)]);
        let out = detect(&s, &t, &DetectOptions::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word_type, "both");
    }

    #[test]
    fn empty_intersection_is_empty_list() {
        let s = corpus("s", &[("a", 50, 0.5)]);
        let t = corpus("t", &[("b", 50, 0.5)]);
        assert!(detect(&s, &t, &DetectOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn exclusion_list_and_sorting() {
        let s = corpus("s", &[("wide", 50, 0.2), ("same", 50, 0.5), ("narrow", 50, 0.8), ("noise", 50, 0.1)]);
        let t = corpus("t", &[("wide", 50, 0.6), ("same", 50, 0.5), ("narrow", 50, 0.3), ("noise", 50, 0.9)]);
        let opts = DetectOptions {
            exclude: ["noise".to_string(), "absent".to_string()].into_iter().collect(),
            ..DetectOptions::default()
        };
        let out = detect(&s, &t, &opts).unwrap();
        let words: Vec<_> = out.iter().map(|t| t.word_type.as_str()).collect();
        assert_eq!(words, ["wide", "same", "narrow"]);
        assert!(out[0].log_coverage > 0.0 && out[2].log_coverage < 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let s = corpus("s", &[]);
        let t = CorpusStats::new("t", 3);
        assert!(detect(&s, &t, &DetectOptions::default()).is_err());
    }

    #[test]
    fn log_base_ten() {
        let s = corpus("s", &[("w", 50, 0.2)]);
        let t = corpus("t", &[("w", 50, 0.6)]);
        let e = detect(&s, &t, &DetectOptions::default()).unwrap();
        let ten = detect(&s, &t, &DetectOptions { log_base: LogBase::Ten, ..Default::default() }).unwrap();
        assert!((ten[0].log_coverage - e[0].coverage.log10()).abs() < 1e-12);
    }

    #[test]
    fn exclude_list_parsing() {
        let text = "# proper nouns\nJohn\n\n  internet \n";
        let words = read_exclude_list(text.as_bytes()).unwrap();
        assert_eq!(words.into_iter().collect::<Vec<_>>(), ["internet", "john"]);
    }

    #[test]
    fn tsv_layout() {
        let s = corpus("s", &[("w", 50, 0.2)]);
        let t = corpus("t", &[("w", 40, 1.0)]);
        let out = detect(&s, &t, &DetectOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_tsv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cols: Vec<_> = row.split('\t').collect();
        assert_eq!(cols[0], "1");
        assert_eq!(cols[1], "w");
        assert_eq!(cols[2], fixed6(out[0].log_coverage));
        assert_eq!(&cols[3..], ["50", "40", "1"]);
    }
}
