//! Parameter sweeps, figure presets and result files.

pub mod config;
pub mod output;
pub mod presets;

use serde::Serialize;

use crate::bounds::{optimal_conclusive_probability, BoundInput};
use crate::engine::{derive_trial_seed, estimate, PerformanceEstimate, RunPlan, Strategy};
use crate::error::{Error, Result};
use crate::heterodyne::matched_error;
use crate::physics::ChannelParams;
use crate::receivers::{enumerate_exact, static_closed_form, ExactPerformance, ReceiverConfig};

pub use config::{parse_config, ConfigError, ExperimentConfig, Method, Sweep, SweepVariable};
pub use output::{to_csv, to_json, CSV_HEADER, SCHEMA_LINE};
pub use presets::{preset, PRESET_NAMES};

/// One output line: a method evaluated at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub method: String,
    pub alpha_sq: f64,
    /// Stage count; 0 for the optimal bound.
    #[serde(rename = "M")]
    pub stages: usize,
    pub eta_path: f64,
    pub eta_det: f64,
    pub xi: f64,
    pub nu: f64,
    pub discard_factor: f64,
    pub p_conclusive: f64,
    pub p_conclusive_se: f64,
    pub p_error: f64,
    pub p_error_se: f64,
    /// 0 for analytic methods.
    pub n_trials: u64,
    pub seed: u64,
}

/// A row plus the Monte Carlo details that only go to the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowRecord {
    #[serde(flatten)]
    pub row: ResultRow,
    pub binomial_se_conclusive: Option<f64>,
    pub binomial_se_error: Option<f64>,
    /// Batches without a conclusive result, whose `p_error` entered as 0.
    pub empty_batches: usize,
}

/// Overrides applied to every config of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub batches: Option<usize>,
    pub workers: Option<usize>,
}

impl RunOptions {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(batches) = self.batches {
            config.batches = batches;
        }
    }
}

/// Runs a list of configs in order and concatenates their rows.
pub fn run_series(series: &[ExperimentConfig], options: &RunOptions) -> Result<Vec<RowRecord>> {
    let configs: Vec<ExperimentConfig> = series
        .iter()
        .map(|c| {
            let mut c = c.clone();
            options.apply(&mut c);
            c
        })
        .collect();
    for c in &configs {
        c.validate().map_err(Error::Config)?;
    }
    let mut rows = Vec::new();
    for (index, config) in configs.iter().enumerate() {
        rows.extend(run_config(config, index as u64, options.workers)?);
    }
    Ok(rows)
}

fn run_config(config: &ExperimentConfig, series_index: u64, workers: Option<usize>) -> Result<Vec<RowRecord>> {
    let mut rows = Vec::new();
    for (point_index, value) in config.sweep.points().into_iter().enumerate() {
        let (params, stages) = config.at(value);
        let point = Point {
            config,
            params,
            stages,
            workers,
            series_index,
            point_index: point_index as u64,
        };
        let mut exact = None;
        for (code, &method) in config.methods.iter().enumerate() {
            let record = point.evaluate(method, code as u64, &mut exact)?;
            check_finite(&record.row)?;
            rows.push(record);
        }
    }
    Ok(rows)
}

struct Point<'a> {
    config: &'a ExperimentConfig,
    params: ChannelParams,
    stages: usize,
    workers: Option<usize>,
    series_index: u64,
    point_index: u64,
}

impl Point<'_> {
    fn row(&self, method: Method, stages: usize, discard_factor: f64) -> ResultRow {
        ResultRow {
            method: method.name().to_string(),
            alpha_sq: self.params.alpha_sq,
            stages,
            eta_path: self.params.eta_path,
            eta_det: self.params.eta_det,
            xi: self.params.visibility,
            nu: self.params.dark_rate,
            discard_factor,
            p_conclusive: 0.0,
            p_conclusive_se: 0.0,
            p_error: 0.0,
            p_error_se: 0.0,
            n_trials: 0,
            seed: self.config.seed,
        }
    }

    fn analytic(row: ResultRow) -> RowRecord {
        RowRecord {
            row,
            binomial_se_conclusive: None,
            binomial_se_error: None,
            empty_batches: 0,
        }
    }

    fn receiver(&self) -> ReceiverConfig {
        self.config.receiver(self.stages)
    }

    fn exact<'e>(&self, cache: &'e mut Option<ExactPerformance>) -> Result<&'e ExactPerformance> {
        if cache.is_none() {
            *cache = Some(enumerate_exact(&self.params, &self.receiver())?);
        }
        Ok(cache.as_ref().expect("filled above"))
    }

    fn matched_heterodyne(&self, target_pc: f64) -> Result<f64> {
        let eta = self.config.heterodyne_eta_for(&self.params);
        Ok(matched_error(target_pc, self.params.alpha_sq, eta, self.config.heterodyne_region)?.1)
    }

    fn evaluate(&self, method: Method, code: u64, cache: &mut Option<ExactPerformance>) -> Result<RowRecord> {
        let static_config = ReceiverConfig::static_four().with_timing(self.config.timing);
        match method {
            Method::OptimalBound => {
                let mut row = self.row(method, 0, 1.0);
                row.p_conclusive = optimal_conclusive_probability(&BoundInput::new(self.params.alpha_sq))?;
                Ok(Self::analytic(row))
            }
            Method::StaticExact => {
                let factor = static_config.discard_factor()?;
                let mut row = self.row(method, 4, factor);
                let (pc, pe) = static_closed_form(&self.params, self.params.alpha_sq * factor);
                row.p_conclusive = pc;
                row.p_error = pe;
                Ok(Self::analytic(row))
            }
            Method::AdaptiveExact => {
                let mut row = self.row(method, self.stages, self.receiver().discard_factor()?);
                let exact = self.exact(cache)?;
                row.p_conclusive = exact.p_conclusive;
                row.p_error = exact.p_error;
                Ok(Self::analytic(row))
            }
            Method::StaticMc => {
                let row = self.row(method, 4, static_config.discard_factor()?);
                self.monte_carlo(
                    row,
                    Strategy::Static {
                        timing: self.config.timing,
                    },
                    code,
                )
            }
            Method::AdaptiveMc => {
                let row = self.row(method, self.stages, self.receiver().discard_factor()?);
                self.monte_carlo(row, Strategy::Adaptive(self.receiver()), code)
            }
            Method::HeterodyneMatched => {
                let mut row = self.row(method, self.stages, self.receiver().discard_factor()?);
                let target = self.exact(cache)?.p_conclusive;
                row.p_conclusive = target;
                row.p_error = self.matched_heterodyne(target)?;
                Ok(Self::analytic(row))
            }
            Method::ErrorRatio => {
                let mut row = self.row(method, self.stages, self.receiver().discard_factor()?);
                let exact = *self.exact(cache)?;
                let heterodyne = self.matched_heterodyne(exact.p_conclusive)?;
                if heterodyne <= 0.0 {
                    return Err(Error::Numeric(format!(
                        "matched heterodyne error is 0 at alpha_sq = {}; ratio undefined",
                        self.params.alpha_sq
                    )));
                }
                row.p_conclusive = exact.p_conclusive;
                row.p_error = exact.p_error / heterodyne;
                Ok(Self::analytic(row))
            }
        }
    }

    fn monte_carlo(&self, mut row: ResultRow, strategy: Strategy, code: u64) -> Result<RowRecord> {
        // One independent master seed per (series, point, method).
        let seed = derive_trial_seed(self.config.seed, self.series_index, (self.point_index << 4) | code);
        let plan = RunPlan::new(self.params, strategy)
            .with_seed(seed)
            .with_trials(self.config.trials, self.config.batches)
            .with_workers(self.workers);
        let est: PerformanceEstimate = estimate(&plan)?;
        row.p_conclusive = est.p_conclusive.mean;
        row.p_conclusive_se = est.p_conclusive.std_err;
        row.p_error = est.p_error.mean;
        row.p_error_se = est.p_error.std_err;
        row.n_trials = est.total_trials();
        row.seed = seed;
        Ok(RowRecord {
            row,
            binomial_se_conclusive: Some(est.binomial_se_conclusive),
            binomial_se_error: Some(est.binomial_se_error),
            empty_batches: est.batches.iter().filter(|b| b.no_conclusive).count(),
        })
    }
}

fn check_finite(row: &ResultRow) -> Result<()> {
    let fields = [
        row.alpha_sq,
        row.eta_path,
        row.eta_det,
        row.xi,
        row.nu,
        row.discard_factor,
        row.p_conclusive,
        row.p_conclusive_se,
        row.p_error,
        row.p_error_se,
    ];
    if fields.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "non-finite value in {} row at alpha_sq = {}",
            row.method, row.alpha_sq
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &str) -> ExperimentConfig {
        parse_config(&format!(
            "sweep = alpha_sq\nsweep_start = 0.5\nsweep_stop = 1.5\nsweep_step = 0.5\nmethods = {methods}\ntrials = 2000\nbatches = 3\n"
        ))
        .unwrap()
    }

    #[test]
    fn one_row_per_method_and_point() {
        let rows = run_series(
            &[small("optimal_bound, static_exact, adaptive_exact, adaptive_mc")],
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].row.method, "optimal_bound");
        assert_eq!(rows[3].row.method, "adaptive_mc");
        assert_eq!(rows[3].row.n_trials, 6000);
        assert_eq!(rows[2].row.n_trials, 0);
        assert!(rows[3].binomial_se_conclusive.is_some());
    }

    #[test]
    fn overrides_apply() {
        let options = RunOptions {
            trials: Some(100),
            batches: Some(2),
            seed: Some(5),
            workers: Some(2),
        };
        let rows = run_series(&[small("adaptive_mc, static_exact")], &options).unwrap();
        assert_eq!(rows[0].row.n_trials, 200);
        assert_eq!(rows[1].row.seed, 5);
        assert_ne!(rows[0].row.seed, rows[2].row.seed);
    }

    #[test]
    fn heterodyne_rows_match_adaptive_conclusive_probability() {
        let rows = run_series(
            &[small("adaptive_exact, heterodyne_matched, error_ratio")],
            &RunOptions::default(),
        )
        .unwrap();
        for chunk in rows.chunks(3) {
            let (photon, het, ratio) = (&chunk[0].row, &chunk[1].row, &chunk[2].row);
            assert_eq!(het.p_conclusive, photon.p_conclusive);
            assert_close!(ratio.p_error, photon.p_error / het.p_error, 1e-15);
        }
    }

    #[test]
    fn invalid_override_is_a_validation_error() {
        let err = run_series(
            &[small("adaptive_mc")],
            &RunOptions {
                batches: Some(1),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(err.is_validation());
    }
}
