//! How quickly mean-vector norms settle as occurrences accumulate.
//!
//! For each word type, `l_k` is the norm of the mean of its first `k` unit
//! vectors in stream order. The curve reports, for every `k` in
//! `2..=max_n`, the average of `|l_k - l_{k-1}|` over all types with at
//! least `k` instances. The result depends on stream order.

use std::collections::HashMap;
use std::io::Write;

use crate::embstore::InstanceRecord;
use crate::error::{Error, Result};
use crate::report::format_significant;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCurve {
    max_n: usize,
    avg_diff: Vec<f64>,
    support: Vec<u64>,
}

impl StabilityCurve {
    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Average norm difference at occurrence `k`; zero when no type
    /// reaches `k` occurrences.
    pub fn avg_diff(&self, k: usize) -> Option<f64> {
        k.checked_sub(2).and_then(|i| self.avg_diff.get(i)).copied()
    }

    /// Number of word types with at least `k` instances.
    pub fn support(&self, k: usize) -> Option<u64> {
        k.checked_sub(2).and_then(|i| self.support.get(i)).copied()
    }

    /// `(k, avg_diff, support)` for `k = 2..=max_n`.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64, u64)> + '_ {
        self.avg_diff
            .iter()
            .zip(&self.support)
            .enumerate()
            .map(|(i, (&d, &s))| (i + 2, d, s))
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k\tavg_diff\tsupport")?;
        for (k, d, s) in self.points() {
            writeln!(out, "{k}\t{}\t{s}", format_significant(d, 15))?;
        }
        Ok(())
    }
}

struct Prefix {
    count: usize,
    sum: Vec<f64>,
    last_norm: f64,
}

pub fn stability_curve<I>(dim: usize, records: I, max_n: usize) -> Result<StabilityCurve>
where
    I: IntoIterator<Item = Result<InstanceRecord>>,
{
    if max_n < 2 {
        return Err(Error::invalid(format!("max_n must be at least 2, got {max_n}")));
    }
    let mut diff_sum = vec![0.0f64; max_n - 1];
    let mut support = vec![0u64; max_n - 1];
    let mut prefixes: HashMap<String, Prefix> = HashMap::new();

    for record in records {
        let record = record?;
        if record.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: record.vector.len(),
            });
        }
        if let Some(p) = prefixes.get(&record.word_type) {
            if p.count >= max_n {
                continue;
            }
        }
        let unit = record.unit_vector()?;
        let p = prefixes.entry(record.word_type).or_insert_with(|| Prefix {
            count: 0,
            sum: vec![0.0; dim],
            last_norm: 0.0,
        });
        for (s, u) in p.sum.iter_mut().zip(&unit) {
            *s += u;
        }
        p.count += 1;
        let k = p.count;
        let norm = p.sum.iter().map(|s| s * s).sum::<f64>().sqrt() / k as f64;
        if k >= 2 {
            diff_sum[k - 2] += (norm - p.last_norm).abs();
            support[k - 2] += 1;
        }
        p.last_norm = norm;
    }

    let avg_diff = diff_sum
        .iter()
        .zip(&support)
        .map(|(&d, &s)| if s == 0 { 0.0 } else { d / s as f64 })
        .collect();
    Ok(StabilityCurve {
        max_n,
        avg_diff,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(word: &str, id: u64, v: &[f32]) -> Result<InstanceRecord> {
        Ok(InstanceRecord {
            word_type: word.into(),
            instance_id: id,
            sentence: String::new(),
            vector: v.to_vec(),
        })
    }

    #[test]
    fn identical_instances_give_flat_curve() {
        let records = (0..30).map(|i| rec(if i % 2 == 0 { "a" } else { "b" }, i, &[1.0, 1.0]));
        let curve = stability_curve(2, records, 10).unwrap();
        for (_, d, _) in curve.points() {
            assert!(d.abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_pair() {
        let records = [rec("w", 0, &[1.0, 0.0]), rec("w", 1, &[0.0, 1.0])];
        let curve = stability_curve(2, records, 2).unwrap();
        // 1 - sqrt(2)/2
        assert!((curve.avg_diff(2).unwrap() - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert_eq!(curve.support(2), Some(1));
    }

    #[test]
    fn support_drops_with_short_types() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(rec("long", i, &[1.0, i as f32]));
        }
        records.push(rec("short", 10, &[1.0, 0.0]));
        records.push(rec("short", 11, &[0.0, 1.0]));
        let curve = stability_curve(2, records, 6).unwrap();
        let support: Vec<_> = curve.points().map(|(_, _, s)| s).collect();
        assert_eq!(support, [2, 1, 1, 1, 0]);
        assert_eq!(curve.avg_diff(6), Some(0.0));
        assert_eq!(curve.avg_diff(1), None);
    }

    #[test]
    fn max_n_below_two_is_an_error() {
        assert!(stability_curve(2, std::iter::empty(), 1).is_err());
    }

    #[test]
    fn tsv_layout() {
        let records = [rec("w", 0, &[1.0, 0.0]), rec("w", 1, &[0.0, 1.0])];
        let curve = stability_curve(2, records, 3).unwrap();
        let mut buf = Vec::new();
        curve.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k\tavg_diff\tsupport\n2\t0.292893218813452\t1\n3\t0\t0\n"
        );
    }
}
