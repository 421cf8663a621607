//! Synthetic corpus pairs with known concentrations.
//!
//! Every word type gets a random mean direction shared by both corpora and
//! independent concentrations for source and target, drawn log-uniformly.
//! Instances are vMF samples. The planted concentrations are written to a
//! sidecar so detection output can be checked against ground truth.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::embstore::{InstanceRecord, StreamHeader};
use crate::error::{Error, Result};
use crate::report::format_significant;
use crate::vmf::{random_unit_vector, sample_vmf_with};

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub dim: usize,
    pub word_types: usize,
    pub instances_per_type: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dim: 64,
            word_types: 50,
            instances_per_type: 300,
            kappa_min: 10.0,
            kappa_max: 300.0,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim > u32::MAX as usize {
            return Err(Error::invalid(format!("dimension {} out of range", self.dim)));
        }
        if self.word_types == 0 || self.instances_per_type == 0 {
            return Err(Error::invalid("need at least one word type and one instance"));
        }
        if !(self.kappa_min > 0.0 && self.kappa_max >= self.kappa_min && self.kappa_max.is_finite()) {
            return Err(Error::invalid(format!(
                "concentration range [{}, {}] must be positive and ordered",
                self.kappa_min, self.kappa_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedType {
    pub word_type: String,
    pub kappa_source: f64,
    pub kappa_target: f64,
}

impl PlantedType {
    /// `ln(kappa_T / kappa_S)`, the quantity coverage estimates.
    pub fn log_kappa_ratio(&self) -> f64 {
        (self.kappa_target / self.kappa_source).ln()
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    pub header: StreamHeader,
    pub records: Vec<InstanceRecord>,
}

#[derive(Debug, Clone)]
pub struct SimulatedPair {
    pub source: SimulatedCorpus,
    pub target: SimulatedCorpus,
    pub truth: Vec<PlantedType>,
}

pub const SIMULATED_MODEL_ID: &str = "simulated-vmf";

pub fn word_name(index: usize) -> String {
    format!("w{index:04}")
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

struct TypeDraw {
    planted: PlantedType,
    source: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
}

/// Generate a source/target pair. Each word type draws from its own RNG
/// stream, so the output does not depend on thread scheduling.
pub fn simulate(config: &SimulationConfig) -> Result<SimulatedPair> {
    config.validate()?;
    let draws = (0..config.word_types)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64 + 1);
            let mu = random_unit_vector(config.dim, &mut rng);
            let kappa_source = log_uniform(&mut rng, config.kappa_min, config.kappa_max);
            let kappa_target = log_uniform(&mut rng, config.kappa_min, config.kappa_max);
            let source = sample_vmf_with(&mu, kappa_source, config.instances_per_type, &mut rng)?;
            let target = sample_vmf_with(&mu, kappa_target, config.instances_per_type, &mut rng)?;
            Ok(TypeDraw {
                planted: PlantedType {
                    word_type: word_name(t),
                    kappa_source,
                    kappa_target,
                },
                source,
                target,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    order_rng.set_stream(0);
    let source = build_corpus(config, "source", &draws, |d| &d.source, &mut order_rng);
    let target = build_corpus(config, "target", &draws, |d| &d.target, &mut order_rng);
    Ok(SimulatedPair {
        source,
        target,
        truth: draws.into_iter().map(|d| d.planted).collect(),
    })
}

fn build_corpus<F>(
    config: &SimulationConfig,
    label: &str,
    draws: &[TypeDraw],
    pick: F,
    rng: &mut ChaCha8Rng,
) -> SimulatedCorpus
where
    F: Fn(&TypeDraw) -> &Vec<Vec<f64>>,
{
    let mut slots: Vec<(usize, usize)> = draws
        .iter()
        .enumerate()
        .flat_map(|(t, d)| (0..pick(d).len()).map(move |i| (t, i)))
        .collect();
    slots.shuffle(rng);
    let records: Vec<InstanceRecord> = slots
        .into_iter()
        .enumerate()
        .map(|(id, (t, i))| {
            let word = &draws[t].planted.word_type;
            InstanceRecord {
                word_type: word.clone(),
                instance_id: id as u64,
                sentence: format!("synthetic {label} context {i} of {word}"),
                vector: pick(&draws[t])[i].iter().map(|&v| v as f32).collect(),
            }
        })
        .collect();
    let header = StreamHeader::new(config.dim as u32, SIMULATED_MODEL_ID, label)
        .with_record_count(records.len() as u64);
    SimulatedCorpus { header, records }
}

/// Ground-truth sidecar: word_type, kappa_source, kappa_target.
pub fn write_truth_tsv<W: Write>(truth: &[PlantedType], mut out: W) -> std::io::Result<()> {
    writeln!(out, "word_type\tkappa_source\tkappa_target")?;
    for p in truth {
        writeln!(
            out,
            "{}\t{}\t{}",
            p.word_type,
            format_significant(p.kappa_source, 15),
            format_significant(p.kappa_target, 15)
        )?;
    }
    Ok(())
}
