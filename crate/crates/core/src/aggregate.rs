//! Per-word-type statistics over unit word vectors.
//!
//! Each record is normalized, then added to its word type's running sum.
//! Sums use streaming pairwise summation: partial sums form a binary
//! counter, and a new leaf is folded into equal-sized partials before being
//! pushed. The final total adds the remaining partials from the smallest to
//! the largest. The reduction order therefore depends only on the order of
//! instances, and the error grows with `log n` rather than `n`.
//!
//! Shards merge by adding their finished sums, so sharded aggregation
//! agrees with a serial pass up to floating-point reassociation.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::embstore::{InstanceRecord, StreamReader};
use crate::error::{Error, Result};
use crate::report::format_significant;

/// Streaming pairwise sum of fixed-length vectors.
#[derive(Debug, Clone)]
pub struct PairwiseSum {
    dim: usize,
    partials: Vec<(u32, Vec<f64>)>,
}

impl PairwiseSum {
    pub fn new(dim: usize) -> Self {
        PairwiseSum {
            dim,
            partials: Vec::new(),
        }
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        let mut level = 0;
        let mut node = v.to_vec();
        while let Some((top, _)) = self.partials.last() {
            if *top != level {
                break;
            }
            let (_, partial) = self.partials.pop().expect("checked non-empty");
            for (a, b) in node.iter_mut().zip(partial) {
                *a += b;
            }
            level += 1;
        }
        self.partials.push((level, node));
    }

    pub fn total(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.dim];
        for (_, partial) in self.partials.iter().rev() {
            for (t, p) in total.iter_mut().zip(partial) {
                *t += p;
            }
        }
        total
    }
}

/// Count, mean vector and mean norm of one word type in one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeStats {
    word_type: String,
    n: u64,
    sum: Vec<f64>,
    mean: Vec<f64>,
    mean_norm: f64,
}

impl TypeStats {
    /// Build from the sum of `n` unit vectors.
    pub fn from_sum(word_type: impl Into<String>, n: u64, sum: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("type statistics need at least one instance"));
        }
        if sum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
        Ok(TypeStats {
            word_type: word_type.into(),
            n,
            sum,
            mean,
            mean_norm,
        })
    }

    /// Build from vectors that are already unit length.
    pub fn from_unit_vectors<'a, I>(word_type: impl Into<String>, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = vectors.into_iter().peekable();
        let dim = iter.peek().map(|v| v.len()).ok_or_else(|| {
            Error::invalid("type statistics need at least one instance")
        })?;
        let mut acc = PairwiseSum::new(dim);
        let mut n = 0;
        for v in iter {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            acc.push(v);
            n += 1;
        }
        TypeStats::from_sum(word_type, n, acc.total())
    }

    pub fn word_type(&self) -> &str {
        &self.word_type
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Euclidean norm of the mean vector, `l`.
    pub fn mean_norm(&self) -> f64 {
        self.mean_norm
    }

    pub fn merge(&self, other: &TypeStats) -> Result<TypeStats> {
        if self.word_type != other.word_type {
            return Err(Error::WordTypeMismatch(
                self.word_type.clone(),
                other.word_type.clone(),
            ));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let sum = self.sum.iter().zip(&other.sum).map(|(a, b)| a + b).collect();
        TypeStats::from_sum(self.word_type.clone(), self.n + other.n, sum)
    }
}

/// Statistics for every word type of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    corpus_label: String,
    dim: usize,
    types: BTreeMap<String, TypeStats>,
}

impl CorpusStats {
    pub fn new(corpus_label: impl Into<String>, dim: usize) -> Self {
        CorpusStats {
            corpus_label: corpus_label.into(),
            dim,
            types: BTreeMap::new(),
        }
    }

    pub fn corpus_label(&self) -> &str {
        &self.corpus_label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word_type: &str) -> Option<&TypeStats> {
        self.types.get(word_type)
    }

    /// Word types in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &TypeStats> {
        self.types.values()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn insert(&mut self, stats: TypeStats) -> Result<()> {
        if stats.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: stats.dim(),
            });
        }
        let merged = match self.types.get(stats.word_type()) {
            Some(existing) => existing.merge(&stats)?,
            None => stats,
        };
        self.types.insert(merged.word_type.clone(), merged);
        Ok(())
    }

    /// Combine two shards. The label of `self` is kept.
    pub fn merge(&self, other: &CorpusStats) -> Result<CorpusStats> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut merged = self.clone();
        for stats in other.iter() {
            merged.insert(stats.clone())?;
        }
        Ok(merged)
    }

    /// TSV dump: `word_type`, `n`, `l` with 15 significant digits.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "word_type\tn\tl")?;
        for stats in self.iter() {
            writeln!(
                out,
                "{}\t{}\t{}",
                stats.word_type,
                stats.n,
                format_significant(stats.mean_norm, 15)
            )?;
        }
        Ok(())
    }
}

/// Single-pass accumulator fed one record at a time.
pub struct Aggregator {
    corpus_label: String,
    dim: usize,
    sums: HashMap<String, (u64, PairwiseSum)>,
}

impl Aggregator {
    pub fn new(corpus_label: impl Into<String>, dim: usize) -> Self {
        Aggregator {
            corpus_label: corpus_label.into(),
            dim,
            sums: HashMap::new(),
        }
    }

    pub fn push(&mut self, record: &InstanceRecord) -> Result<()> {
        if record.vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: record.vector.len(),
            });
        }
        let unit = record.unit_vector()?;
        self.push_unit(&record.word_type, &unit);
        Ok(())
    }

    pub fn push_unit(&mut self, word_type: &str, unit: &[f64]) {
        let dim = self.dim;
        let entry = match self.sums.get_mut(word_type) {
            Some(entry) => entry,
            None => self
                .sums
                .entry(word_type.to_string())
                .or_insert_with(|| (0, PairwiseSum::new(dim))),
        };
        entry.0 += 1;
        entry.1.push(unit);
    }

    pub fn finish(self) -> CorpusStats {
        let types = self
            .sums
            .into_iter()
            .map(|(word, (n, acc))| {
                let stats = TypeStats::from_sum(word.clone(), n, acc.total())
                    .expect("unit summands are finite and n >= 1");
                (word, stats)
            })
            .collect();
        CorpusStats {
            corpus_label: self.corpus_label,
            dim: self.dim,
            types,
        }
    }
}

/// Aggregate a whole stream in one sequential pass.
pub fn accumulate<R: BufRead>(reader: StreamReader<R>) -> Result<CorpusStats> {
    let header = reader.header().clone();
    accumulate_records(&header.corpus_label, header.dim(), reader)
}

pub fn accumulate_records<I>(corpus_label: &str, dim: usize, records: I) -> Result<CorpusStats>
where
    I: IntoIterator<Item = Result<InstanceRecord>>,
{
    let mut agg = Aggregator::new(corpus_label, dim);
    for record in records {
        agg.push(&record?)?;
    }
    Ok(agg.finish())
}
