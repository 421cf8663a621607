//! Extraction of the instances that carry a meaning missing from the other
//! corpus.
//!
//! The instances of one word are scored by representativeness against the
//! word's source and target statistics. With `Direction::Source` the
//! source instances are ranked by `r(x, S, T)`; `Direction::Target` swaps
//! the roles and ranks target instances by `r(x, T, S)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{PairwiseSum, TypeStats};
use crate::detect::{fixed6, DEFAULT_MIN_FREQ};
use crate::embstore::{InstanceRecord, StreamReader};
use crate::error::{Error, Result};
use crate::report::{truncate_display, tsv_field};
use crate::vmf::{representativeness_weights, score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Source,
    Target,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Direction::Source),
            "target" => Ok(Direction::Target),
            other => Err(Error::invalid(format!(
                "unknown direction {other:?} (expected source or target)"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Source => "source",
            Direction::Target => "target",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub instance_id: u64,
    pub sentence: String,
    pub unit: Vec<f64>,
}

/// All instances of one word in one corpus, with their statistics.
#[derive(Debug, Clone)]
pub struct WordInstances {
    word: String,
    corpus_label: String,
    dim: usize,
    instances: Vec<Instance>,
    stats: Option<TypeStats>,
}

impl WordInstances {
    pub fn from_records<I>(word: &str, corpus_label: &str, dim: usize, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = Result<InstanceRecord>>,
    {
        let mut acc = PairwiseSum::new(dim);
        let mut instances = Vec::new();
        for record in records {
            let record = record?;
            if record.word_type != word {
                continue;
            }
            if record.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: record.vector.len(),
                });
            }
            let unit = record.unit_vector()?;
            acc.push(&unit);
            instances.push(Instance {
                instance_id: record.instance_id,
                sentence: record.sentence,
                unit,
            });
        }
        let stats = if instances.is_empty() {
            None
        } else {
            Some(TypeStats::from_sum(word, instances.len() as u64, acc.total())?)
        };
        Ok(WordInstances {
            word: word.to_string(),
            corpus_label: corpus_label.to_string(),
            dim,
            instances,
            stats,
        })
    }

    /// Scan a stream once, keeping only the instances of `word`.
    pub fn collect<R: BufRead>(reader: StreamReader<R>, word: &str) -> Result<Self> {
        let header = reader.header().clone();
        WordInstances::from_records(word, &header.corpus_label, header.dim(), reader)
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn corpus_label(&self) -> &str {
        &self.corpus_label
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn stats(&self) -> Option<&TypeStats> {
        self.stats.as_ref()
    }

    fn checked_stats(&self, min_freq: u64) -> Result<&TypeStats> {
        let stats = self.stats.as_ref().ok_or_else(|| Error::WordNotFound {
            word: self.word.clone(),
            corpus: self.corpus_label.clone(),
        })?;
        if stats.n() <= min_freq {
            return Err(Error::BelowThreshold {
                word: self.word.clone(),
                corpus: self.corpus_label.clone(),
                count: stats.n(),
                min_freq,
            });
        }
        Ok(stats)
    }
}

#[derive(Debug, Clone)]
pub struct InstanceQuery {
    pub direction: Direction,
    /// Zero returns every instance.
    pub top_k: usize,
    pub min_freq: u64,
}

impl Default for InstanceQuery {
    fn default() -> Self {
        InstanceQuery {
            direction: Direction::Source,
            top_k: 10,
            min_freq: DEFAULT_MIN_FREQ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredInstance {
    pub instance_id: u64,
    pub sentence: String,
    pub corpus_label: String,
    pub score: f64,
}

/// Rank the instances of one word by representativeness, highest first,
/// ties broken by ascending instance id.
pub fn typical_instances(
    source: &WordInstances,
    target: &WordInstances,
    query: &InstanceQuery,
) -> Result<Vec<ScoredInstance>> {
    if source.word != target.word {
        return Err(Error::WordTypeMismatch(source.word.clone(), target.word.clone()));
    }
    if source.dim != target.dim {
        return Err(Error::DimensionMismatch {
            expected: source.dim,
            found: target.dim,
        });
    }
    let s = source.checked_stats(query.min_freq)?;
    let t = target.checked_stats(query.min_freq)?;
    let (chosen, weights) = match query.direction {
        Direction::Source => (source, representativeness_weights(s, t)?),
        Direction::Target => (target, representativeness_weights(t, s)?),
    };

    let mut scored = chosen
        .instances
        .par_iter()
        .map(|inst| {
            Ok(ScoredInstance {
                instance_id: inst.instance_id,
                sentence: inst.sentence.clone(),
                corpus_label: chosen.corpus_label.clone(),
                score: score(&weights, &inst.unit)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    if query.top_k > 0 {
        scored.truncate(query.top_k);
    }
    Ok(scored)
}

/// TSV: rank, score, corpus_label, instance_id, sentence. Sentences longer
/// than `width` characters are cut for display; zero disables the cut.
pub fn write_tsv<W: Write>(scored: &[ScoredInstance], width: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "rank\tscore\tcorpus_label\tinstance_id\tsentence")?;
    for (rank, inst) in scored.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            rank + 1,
            fixed6(inst.score),
            tsv_field(&inst.corpus_label),
            inst.instance_id,
            truncate_display(&tsv_field(&inst.sentence), width)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(word: &str, id: u64, v: &[f32]) -> Result<InstanceRecord> {
        Ok(InstanceRecord {
            word_type: word.into(),
            instance_id: id,
            sentence: format!("sentence {id}"),
            vector: v.to_vec(),
        })
    }

    fn words(label: &str, word: &str, vectors: &[[f32; 2]]) -> WordInstances {
        let records = vectors.iter().enumerate().map(|(i, v)| rec(word, i as u64, v));
        WordInstances::from_records(word, label, 2, records).unwrap()
    }

    #[test]
    fn collects_only_the_requested_word() {
        let records = [rec("a", 0, &[1.0, 0.0]), rec("b", 1, &[0.0, 1.0]), rec("a", 2, &[0.0, 3.0])];
        let w = WordInstances::from_records("a", "c", 2, records).unwrap();
        assert_eq!(w.instances().len(), 2);
        assert_eq!(w.instances()[1].unit, vec![0.0, 1.0]);
        assert_eq!(w.stats().unwrap().n(), 2);
    }

    #[test]
    fn identical_statistics_give_zero_scores_ordered_by_id() {
        let vs = [[1.0, 0.2], [0.3, 1.0], [1.0, 1.0]];
        let s = words("s", "w", &vs);
        let t = words("t", "w", &vs);
        let q = InstanceQuery { min_freq: 0, top_k: 0, ..Default::default() };
        let out = typical_instances(&s, &t, &q).unwrap();
        assert!(out.iter().all(|i| i.score == 0.0));
        let ids: Vec<_> = out.iter().map(|i| i.instance_id).collect();
        assert_eq!(ids, [0, 1, 2]);
    }

    #[test]
    fn top_k_larger_than_instances_returns_all() {
        let s = words("s", "w", &[[1.0, 0.0], [0.0, 1.0]]);
        let t = words("t", "w", &[[0.0, 1.0], [0.1, 1.0]]);
        let q = InstanceQuery { min_freq: 0, top_k: 100, ..Default::default() };
        let out = typical_instances(&s, &t, &q).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].instance_id, 0);
        assert_eq!(out[0].corpus_label, "s");
    }

    #[test]
    fn target_direction_scores_target_instances() {
        let s = words("s", "w", &[[1.0, 0.0], [0.0, 1.0]]);
        let t = words("t", "w", &[[0.0, 1.0], [0.1, 1.0], [1.0, -1.0]]);
        let q = InstanceQuery { min_freq: 0, top_k: 0, direction: Direction::Target };
        let out = typical_instances(&s, &t, &q).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|i| i.corpus_label == "t"));
    }

    #[test]
    fn missing_or_rare_word_is_an_error() {
        let s = words("s", "w", &[[1.0, 0.0]; 5]);
        let t = WordInstances::from_records("w", "t", 2, std::iter::empty()).unwrap();
        let q = InstanceQuery { min_freq: 0, ..Default::default() };
        assert!(matches!(typical_instances(&s, &t, &q), Err(Error::WordNotFound { .. })));
        let t = words("t", "w", &[[0.0, 1.0]; 5]);
        let q = InstanceQuery::default();
        assert!(matches!(
            typical_instances(&s, &t, &q),
            Err(Error::BelowThreshold { count: 5, min_freq: 10, .. })
        ));
    }

    #[test]
    fn direction_parsing() {
        assert_eq!("target".parse::<Direction>().unwrap(), Direction::Target);
        assert!("sideways".parse::<Direction>().is_err());
    }

    #[test]
    fn tsv_truncates_sentence_display() {
        let item = ScoredInstance {
            instance_id: 3,
            sentence: "it has become near\timpossible to".into(),
            corpus_label: "native".into(),
            score: 0.5,
        };
        let mut buf = Vec::new();
        write_tsv(&[item], 12, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1\t0.500000\tnative\t3\tit has be...");
    }
}
