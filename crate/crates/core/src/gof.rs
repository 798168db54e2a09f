//! Monte Carlo null calibration, z-tests and power experiments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{Sidedness, StudyConfig};
use crate::pipeline::replicate;
use crate::pointproc::ProcessSpec;
use crate::rng::{derive_seed, tag};
use crate::stats::{StatisticName, StatisticValue};
use crate::{Error, Result, VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub name: StatisticName,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub config_hash: String,
    pub root_seed: u64,
    pub replications: usize,
    pub version: String,
    pub entries: Vec<CalibrationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<BTreeMap<StatisticName, Vec<f64>>>,
}

impl NullCalibration {
    pub fn entry(&self, name: StatisticName) -> Option<&CalibrationEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs `f` for every seed in parallel and returns the results in seed order.
fn run_all<F>(seeds: &[u64], f: F) -> Result<Vec<Vec<StatisticValue>>>
where
    F: Fn(u64) -> Result<Vec<StatisticValue>> + Sync,
{
    seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            f(seed).map_err(|e| Error::Replication {
                index,
                seed,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Builds a calibration from per-statistic samples.
pub fn calibration_from_samples(
    config_hash: String,
    root_seed: u64,
    samples: BTreeMap<StatisticName, Vec<f64>>,
    keep_samples: bool,
) -> Result<NullCalibration> {
    let mut entries = Vec::new();
    let mut replications = 0;
    for (&name, xs) in &samples {
        if xs.len() < 2 {
            return Err(Error::domain(format!("calibration of {name} needs at least 2 replications")));
        }
        let (mean, sd) = mean_sd(xs);
        if !(sd > 0.0) {
            return Err(Error::DegenerateVariance(format!(
                "{name}: all {} null replications gave {mean}",
                xs.len()
            )));
        }
        replications = xs.len();
        entries.push(CalibrationEntry {
            name,
            mean,
            sd,
            n: xs.len(),
        });
    }
    Ok(NullCalibration {
        config_hash,
        root_seed,
        replications,
        version: VERSION.to_string(),
        entries,
        samples: keep_samples.then_some(samples),
    })
}

fn collect_samples(runs: Vec<Vec<StatisticValue>>) -> BTreeMap<StatisticName, Vec<f64>> {
    let mut samples: BTreeMap<StatisticName, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for s in run {
            samples.entry(s.name).or_default().push(s.value);
        }
    }
    samples
}

/// Calibrates with explicit replication seeds.
pub fn calibrate_with_seeds(cfg: &StudyConfig, seeds: &[u64], root_seed: u64, keep_samples: bool) -> Result<NullCalibration> {
    cfg.validate()?;
    if seeds.len() < 2 {
        return Err(Error::domain("calibration needs at least 2 replications"));
    }
    let runs = run_all(seeds, |s| replicate(cfg, &cfg.process, s))?;
    calibration_from_samples(cfg.config_hash(), root_seed, collect_samples(runs), keep_samples)
}

/// Seeds of the `n` calibration replications under `root`.
pub fn calibration_seeds(root: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(root, &[tag::CALIBRATION, i])).collect()
}

/// Mean and standard deviation of every statistic under the configured
/// (null) process, from `n` independent replications.
pub fn calibrate_null(cfg: &StudyConfig, n: usize, seed: u64, keep_samples: bool) -> Result<NullCalibration> {
    calibrate_with_seeds(cfg, &calibration_seeds(seed, n), seed, keep_samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub name: StatisticName,
    pub observed: f64,
    pub mean: f64,
    pub sd: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub config_hash: String,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub calibration_replications: usize,
    pub calibration_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_seed: Option<u64>,
    pub version: String,
    pub entries: Vec<TestEntry>,
}

impl TestReport {
    /// Plain-text table with one row per statistic.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<8}{:>14}{:>14}{:>12}{:>9}{:>10}  reject\n",
            "Stat", "observed", "null mean", "null sd", "z", "p"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<8}{:>14.6}{:>14.6}{:>12.6}{:>9.3}{:>10.4}  {}",
                e.name.as_str(),
                e.observed,
                e.mean,
                e.sd,
                e.z,
                e.p_value,
                if e.reject { "yes" } else { "no" }
            );
        }
        out
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Critical value of the test at level `alpha`.
pub fn critical_value(alpha: f64, sidedness: Sidedness) -> f64 {
    let n = std_normal();
    match sidedness {
        Sidedness::TwoSided => n.inverse_cdf(1.0 - alpha / 2.0),
        Sidedness::Upper | Sidedness::Lower => n.inverse_cdf(1.0 - alpha),
    }
}

/// z-scores of `observed` against `cal`. Refuses to run when the observation
/// was produced under different conventions.
pub fn z_test(
    observed: &[StatisticValue],
    observed_hash: &str,
    cal: &NullCalibration,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<TestReport> {
    if observed_hash != cal.config_hash {
        return Err(Error::HashMismatch {
            calibration: cal.config_hash.clone(),
            observed: observed_hash.to_string(),
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let crit = critical_value(alpha, sidedness);
    let n = std_normal();
    let entries = observed
        .iter()
        .map(|s| {
            let e = cal
                .entry(s.name)
                .ok_or_else(|| Error::domain(format!("no calibration entry for {}", s.name)))?;
            let z = (s.value - e.mean) / e.sd;
            let (p_value, reject) = match sidedness {
                Sidedness::TwoSided => (2.0 * n.cdf(-z.abs()), z.abs() > crit),
                Sidedness::Upper => (n.cdf(-z), z > crit),
                Sidedness::Lower => (n.cdf(z), z < -crit),
            };
            Ok(TestEntry {
                name: s.name,
                observed: s.value,
                mean: e.mean,
                sd: e.sd,
                z,
                p_value,
                reject,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestReport {
        config_hash: cal.config_hash.clone(),
        alpha,
        sidedness,
        calibration_replications: cal.replications,
        calibration_seed: cal.root_seed,
        observed_seed: None,
        version: VERSION.to_string(),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub model: String,
    pub replications: usize,
    /// Rejection rate per statistic, in `[0, 1]`.
    pub rates: BTreeMap<StatisticName, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub config_hash: String,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub root_seed: u64,
    pub version: String,
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn rate(&self, model: &str, name: StatisticName) -> Option<f64> {
        self.rows.iter().find(|r| r.model == model)?.rates.get(&name).copied()
    }

    /// Plain-text table, one row per model and one column per statistic.
    pub fn to_text(&self) -> String {
        let names: Vec<StatisticName> = StatisticName::ALL
            .into_iter()
            .filter(|n| self.rows.iter().any(|r| r.rates.contains_key(n)))
            .collect();
        let mut out = format!("{:<8}", "Model");
        for n in &names {
            let _ = write!(out, "{:>10}", n.as_str());
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<8}", r.model);
            for n in &names {
                match r.rates.get(n) {
                    Some(v) => {
                        let _ = write!(out, "{:>9.2}%", 100.0 * v);
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Stable stream id of a model name, so a model's seeds do not depend on its
/// position in the model list.
fn model_stream(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Rejection rates of `n` replications of every model, tested against `cal`.
/// `stream` separates experiments sharing a root seed.
pub fn power_with_stream(
    cfg: &StudyConfig,
    models: &[(String, ProcessSpec)],
    cal: &NullCalibration,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PowerTable> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::domain("power experiment needs at least 1 replication"));
    }
    let hash = cfg.config_hash();
    let mut rows = Vec::new();
    for (model, spec) in models {
        spec.validate()?;
        let seeds: Vec<u64> = (0..n as u64)
            .map(|i| derive_seed(seed, &[stream, model_stream(model), i]))
            .collect();
        let runs = run_all(&seeds, |s| replicate(cfg, spec, s))?;
        let mut rejected: BTreeMap<StatisticName, usize> = BTreeMap::new();
        for run in &runs {
            let report = z_test(run, &hash, cal, cfg.alpha, cfg.sidedness)?;
            for e in report.entries {
                *rejected.entry(e.name).or_default() += e.reject as usize;
            }
        }
        rows.push(PowerRow {
            model: model.clone(),
            replications: n,
            rates: rejected.into_iter().map(|(k, v)| (k, v as f64 / n as f64)).collect(),
        });
    }
    Ok(PowerTable {
        config_hash: hash,
        alpha: cfg.alpha,
        sidedness: cfg.sidedness,
        root_seed: seed,
        version: VERSION.to_string(),
        rows,
    })
}

pub fn power_experiment(
    cfg: &StudyConfig,
    models: &[(String, ProcessSpec)],
    cal: &NullCalibration,
    n: usize,
    seed: u64,
) -> Result<PowerTable> {
    power_with_stream(cfg, models, cal, n, seed, tag::POWER)
}

/// The study's models: the configured null followed by the alternatives.
pub fn default_models() -> Vec<(String, ProcessSpec)> {
    ProcessSpec::PRESETS
        .iter()
        .map(|&n| (n.to_string(), ProcessSpec::preset(n).expect("preset exists")))
        .collect()
}

/// Calibrates and runs the power experiment for the middle slice alone.
/// Returns the single-slice calibration together with the table.
pub fn single_slice_experiment(
    cfg: &StudyConfig,
    models: &[(String, ProcessSpec)],
    n_calibration: usize,
    n: usize,
    seed: u64,
) -> Result<(NullCalibration, PowerTable)> {
    let single = cfg.single_slice();
    let root = derive_seed(seed, &[tag::SINGLE_SLICE]);
    let cal = calibrate_null(&single, n_calibration, root, false)?;
    let table = power_with_stream(&single, models, &cal, n, root, tag::SINGLE_SLICE)?;
    Ok((cal, table))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityEntry {
    pub name: StatisticName,
    pub n: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `(theoretical normal quantile, standardized sample quantile)`.
    pub qq: Vec<(f64, f64)>,
}

/// Skewness, excess kurtosis and QQ pairs of one sample.
pub fn normality_of_sample(name: StatisticName, xs: &[f64]) -> Result<NormalityEntry> {
    if xs.len() < 100 {
        return Err(Error::domain(format!("{name}: normality diagnostics need >= 100 samples, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::DegenerateVariance(format!("{name}: constant sample")));
    }
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let sd = m2.sqrt();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = std_normal();
    let qq = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (norm.inverse_cdf((i as f64 + 0.5) / n), (x - mean) / sd))
        .collect();
    Ok(NormalityEntry {
        name,
        n: xs.len(),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        qq,
    })
}

/// Normality diagnostics of every statistic of a calibration with samples.
pub fn normality_diagnostics(cal: &NullCalibration) -> Result<Vec<NormalityEntry>> {
    let samples = cal
        .samples
        .as_ref()
        .ok_or_else(|| Error::domain("calibration has no raw samples"))?;
    samples.iter().map(|(&name, xs)| normality_of_sample(name, xs)).collect()
}
