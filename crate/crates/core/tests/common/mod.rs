//! Test-only oracles and fixtures, independent of the library's scoring path.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semnorm::embstore::InstanceRecord;
use semnorm::vmf::{random_unit_vector, sample_vmf_with};

/// Average ranks (1-based), ties share the mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// Kendall tau-b by brute-force pair enumeration.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                continue;
            } else if da == 0.0 {
                ties_a += 1;
            } else if db == 0.0 {
                ties_b += 1;
            } else if (da > 0.0) == (db > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n1 = (concordant + discordant + ties_a) as f64;
    let n2 = (concordant + discordant + ties_b) as f64;
    (concordant - discordant) as f64 / (n1 * n2).sqrt()
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub fn isotonic_decreasing(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2));
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Unit vector from stored f32 components, computed without the library.
pub fn oracle_unit(v: &[f32]) -> Vec<f64> {
    let wide: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
    let norm = compensated_sum(wide.iter().map(|x| x * x)).sqrt();
    wide.iter().map(|x| x / norm).collect()
}

/// Mean vector and its norm with compensated summation.
pub fn oracle_mean(units: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let d = units[0].len();
    let n = units.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| compensated_sum(units.iter().map(|u| u[j])) / n)
        .collect();
    let l = compensated_sum(mean.iter().map(|m| m * m)).sqrt();
    (mean, l)
}

/// Representativeness of `x` straight from the formula, with the same
/// norm clamp as the library.
pub fn oracle_representativeness(x: &[f64], source: &[Vec<f64>], target: &[Vec<f64>]) -> f64 {
    let (ms, ls) = oracle_mean(source);
    let (mt, lt) = oracle_mean(target);
    let clamp = |l: f64| l.clamp(1e-9, 1.0 - 1e-6);
    let (ls, lt) = (clamp(ls), clamp(lt));
    let ws = 1.0 / (1.0 - ls * ls);
    let wt = 1.0 / (1.0 - lt * lt);
    compensated_sum(x.iter().enumerate().map(|(j, xj)| (ws * ms[j] - wt * mt[j]) * xj))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn records_from(word: &str, first_id: u64, vectors: &[Vec<f64>]) -> Vec<InstanceRecord> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| InstanceRecord {
            word_type: word.to_string(),
            instance_id: first_id + i as u64,
            sentence: format!("{word} context {}", first_id + i as u64),
            vector: v.iter().map(|&x| x as f32).collect(),
        })
        .collect()
}

pub fn ok_records(records: &[InstanceRecord]) -> impl Iterator<Item = semnorm::Result<InstanceRecord>> + '_ {
    records.iter().cloned().map(Ok)
}

/// Two-sense word: in the source, `missing` instances near direction `u`
/// and `shared` instances near an orthogonal direction `v`; in the target,
/// only instances near `v`. Returns (source records, target records, ids of
/// the u-cluster in the source).
pub struct TwoSense {
    pub source: Vec<InstanceRecord>,
    pub target: Vec<InstanceRecord>,
    pub missing_ids: Vec<u64>,
}

pub fn two_sense_word(seed: u64, dim: usize, missing: usize, shared: usize, target_n: usize, kappa: f64) -> TwoSense {
    let mut rng = rng(seed);
    let u = random_unit_vector(dim, &mut rng);
    let mut v = random_unit_vector(dim, &mut rng);
    let along: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    for (vi, ui) in v.iter_mut().zip(&u) {
        *vi -= along * ui;
    }
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let from_u = sample_vmf_with(&u, kappa, missing, &mut rng).unwrap();
    let from_v = sample_vmf_with(&v, kappa, shared, &mut rng).unwrap();
    let mut source_vectors: Vec<(bool, Vec<f64>)> = from_u
        .into_iter()
        .map(|x| (true, x))
        .chain(from_v.into_iter().map(|x| (false, x)))
        .collect();
    use rand::seq::SliceRandom;
    source_vectors.shuffle(&mut rng);

    let missing_ids = source_vectors
        .iter()
        .enumerate()
        .filter(|(_, (m, _))| *m)
        .map(|(i, _)| i as u64)
        .collect();
    let vectors: Vec<Vec<f64>> = source_vectors.into_iter().map(|(_, x)| x).collect();
    let source = records_from("w", 0, &vectors);
    let target_vectors = sample_vmf_with(&v, kappa, target_n, &mut rng).unwrap();
    let target = records_from("w", 0, &target_vectors);
    TwoSense {
        source,
        target,
        missing_ids,
    }
}
