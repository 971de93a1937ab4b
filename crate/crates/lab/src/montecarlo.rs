//! Parallel, reproducible estimation of the FDR on the construction.
//!
//! Trials run on a rayon pool sized by `thread_hint`, each with its own
//! keyed stream (see [`sssplus_core::trial`]). Per-trial results land in a
//! trial-indexed buffer and are summed in index order on one thread, so an
//! estimate is bit-identical for any number of workers.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use sssplus_core::construction::{build_spec, ConstructionSpec};
use sssplus_core::trial::TrialRunner;
use sssplus_core::{ProcedureParams, Rational, TrialOutcome};

use crate::LabError;

/// Name recorded in run metadata for the interval construction.
pub const CI_METHOD: &str = "normal-approximation";

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: ProcedureParams,
    pub spec: ConstructionSpec,
    pub trials: u64,
    pub master_seed: u64,
    pub confidence_level: Rational,
    /// Worker threads; 0 lets rayon decide.
    pub thread_hint: usize,
}

impl ExperimentConfig {
    /// Config on `n` hypotheses with a 99% interval and default threading.
    pub fn new(params: ProcedureParams, n: u64, trials: u64, master_seed: u64) -> Result<Self, LabError> {
        params.require_construction()?;
        let spec = build_spec(params.a(), params.b(), n)?;
        let config = Self {
            params,
            spec,
            trials,
            master_seed,
            confidence_level: Rational::new(99, 100).expect("nonzero"),
            thread_hint: 0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.thread_hint = threads;
        self
    }

    pub fn with_confidence(mut self, level: Rational) -> Result<Self, LabError> {
        self.confidence_level = level;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(&self, n: u64) -> Result<Self, LabError> {
        Ok(Self {
            spec: self.spec.with_n(n)?,
            ..self.clone()
        })
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.trials == 0 {
            return Err(LabError::Usage("trials must be at least 1".into()));
        }
        if !self.confidence_level.is_positive() || self.confidence_level >= Rational::ONE {
            return Err(LabError::Usage(format!(
                "confidence level {} must lie strictly between 0 and 1",
                self.confidence_level
            )));
        }
        Ok(())
    }
}

/// Aggregated result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrEstimate {
    pub n: u64,
    pub trials: u64,
    pub mean_fdp: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of trials with `K = n`.
    pub p_hit_end: f64,
    /// Mean of `I_K/(D_K + 1)` over trials with `K < n` (0 otherwise).
    pub z_hat: f64,
    pub mean_k: f64,
}

/// What one trial contributes to the averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub fdp: f64,
    pub hit_end: bool,
    pub z: f64,
    pub k: u64,
}

impl From<TrialOutcome> for TrialRecord {
    fn from(out: TrialOutcome) -> Self {
        let z = if out.hit_end {
            0.0
        } else {
            out.false_discoveries as f64 / (out.decoys() + 1) as f64
        };
        Self {
            fdp: out.fdp.to_f64(),
            hit_end: out.hit_end,
            z,
            k: out.k,
        }
    }
}

/// Standard-normal quantile `z` with `P(|Z| <= z) = level`.
pub fn normal_quantile(level: Rational) -> f64 {
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let tail = (1.0 - level.to_f64()) / 2.0;
    standard.inverse_cdf(1.0 - tail)
}

/// `mean ± z·std_err`, clamped to `[0, 1]`.
pub fn confidence_interval(mean: f64, std_err: f64, level: Rational) -> (f64, f64) {
    if std_err == 0.0 {
        return (mean, mean);
    }
    let half = normal_quantile(level) * std_err;
    ((mean - half).clamp(0.0, 1.0), (mean + half).clamp(0.0, 1.0))
}

/// Folds per-trial records, in order, into an estimate.
pub fn aggregate(n: u64, records: &[TrialRecord], level: Rational) -> FdrEstimate {
    let count = records.len() as f64;
    let mut fdp_sum = 0.0;
    let mut z_sum = 0.0;
    let mut k_sum = 0.0;
    let mut hits = 0u64;
    for r in records {
        fdp_sum += r.fdp;
        z_sum += r.z;
        k_sum += r.k as f64;
        hits += u64::from(r.hit_end);
    }
    let mean = fdp_sum / count;
    let std_err = if records.len() > 1 {
        let ss: f64 = records.iter().map(|r| (r.fdp - mean).powi(2)).sum();
        (ss / (count - 1.0)).sqrt() / count.sqrt()
    } else {
        0.0
    };
    let (ci_low, ci_high) = confidence_interval(mean, std_err, level);
    FdrEstimate {
        n,
        trials: records.len() as u64,
        mean_fdp: mean,
        std_err,
        ci_low,
        ci_high,
        p_hit_end: hits as f64 / count,
        z_hat: z_sum / count,
        mean_k: k_sum / count,
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, LabError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// Per-trial records in trial order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, LabError> {
    let runner = TrialRunner::new(&config.spec, &config.params)?;
    let seed = config.master_seed;
    let records = pool(config.thread_hint)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map_init(|| runner.clone(), |runner, trial| TrialRecord::from(runner.run(seed, trial)))
            .collect()
    });
    Ok(records)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<FdrEstimate, LabError> {
    let records = run_trials(config)?;
    Ok(aggregate(config.spec.n, &records, config.confidence_level))
}

/// One estimate per entry of `n_values`, in input order.
pub fn sweep_n(template: &ExperimentConfig, n_values: &[u64]) -> Result<Vec<FdrEstimate>, LabError> {
    n_values
        .iter()
        .map(|&n| run_experiment(&template.with_n(n)?))
        .collect()
}

/// Cycle counts used when no `n` grid is given: `n = m(a+b)` for these `m`.
pub const DEFAULT_CYCLES: [u64; 8] = [5, 10, 15, 20, 30, 50, 75, 100];

pub fn default_n_grid(period: u64) -> Vec<u64> {
    DEFAULT_CYCLES.iter().map(|m| m * period).collect()
}
