//! Frozen parameter sets for the figure curves.
//!
//! Each preset is a list of configs run in order into one file. Shared
//! conditions:
//!
//! * theory conditions (`fig2a`, `fig2b`): unit efficiency, spatial split
//!   (no discarding), ξ ∈ {0.998, 0.996, 0.994} at ν = 1.0e-3 plus the
//!   ideal ξ = 1, ν = 0 curves;
//! * experimental conditions (`fig4`, `fig5`, `fig7a`, `fig7b`): η_SE = 0.66
//!   as path 0.91 × detector 0.66/0.91, ξ = 0.994, ν = 1.5e-3, temporal bins
//!   of a 60 µs signal with 0.3 µs gaps;
//! * stage scan (`fig6`): as above with ξ = 0.9955, at |α|² ∈ {1.5, 3.0}.

use crate::error::{Error, Result};
use crate::heterodyne::Region;
use crate::physics::{ChannelParams, TimingModel};

use super::config::{ExperimentConfig, Method, Sweep, SweepVariable};

pub const PRESET_NAMES: [&str; 7] = ["fig2a", "fig2b", "fig4", "fig5", "fig6", "fig7a", "fig7b"];

const PATH: f64 = 0.91;
const EXPERIMENT_ETA_DET: f64 = 0.66 / PATH;
const EXPERIMENT_XI: f64 = 0.994;
const EXPERIMENT_NU: f64 = 1.5e-3;
const THEORY_NU: f64 = 1.0e-3;

fn sweep(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Sweep {
    Sweep {
        variable,
        start,
        stop,
        step,
    }
}

fn alpha_sweep(start: f64, stop: f64, step: f64) -> Sweep {
    sweep(SweepVariable::AlphaSq, start, stop, step)
}

fn theory(sweep: Sweep, stages: usize, visibility: f64, dark_rate: f64, methods: &[Method]) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(sweep);
    c.params = ChannelParams {
        visibility,
        dark_rate,
        ..ChannelParams::ideal(0.0)
    };
    c.stages = stages;
    c.timing = None;
    c.methods = methods.to_vec();
    c
}

fn experiment(sweep: Sweep, stages: usize, methods: &[Method]) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(sweep);
    c.params = ChannelParams {
        alpha_sq: 1.0,
        eta_path: PATH,
        eta_det: EXPERIMENT_ETA_DET,
        visibility: EXPERIMENT_XI,
        dark_rate: EXPERIMENT_NU,
        priors: [0.25; 4],
    };
    c.stages = stages;
    c.timing = Some(TimingModel::default());
    c.methods = methods.to_vec();
    c.heterodyne_region = Region::Cross;
    c
}

/// The configs of a named preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    use Method::*;
    let configs = match name {
        // Conclusive probability versus |α|²: bound, ideal M = 4, 10, 100,
        // and M = 4, 10 under three visibilities.
        "fig2a" => {
            let range = || alpha_sweep(0.0, 4.0, 0.1);
            let mut v = vec![
                theory(range(), 4, 1.0, 0.0, &[OptimalBound]),
                theory(range(), 4, 1.0, 0.0, &[StaticExact]),
                theory(range(), 10, 1.0, 0.0, &[AdaptiveExact, AdaptiveMc]),
                theory(range(), 100, 1.0, 0.0, &[AdaptiveMc]),
            ];
            for xi in [0.998, 0.996, 0.994] {
                v.push(theory(range(), 4, xi, THEORY_NU, &[StaticExact]));
                v.push(theory(range(), 10, xi, THEORY_NU, &[AdaptiveExact]));
            }
            v
        }
        // Error probability versus |α|² for M = 4, 10 at ξ ∈ {1, 0.998, 0.996, 0.994}.
        "fig2b" => {
            let range = || alpha_sweep(0.1, 4.0, 0.1);
            let mut v = Vec::new();
            for xi in [1.0, 0.998, 0.996, 0.994] {
                v.push(theory(range(), 4, xi, THEORY_NU, &[StaticExact]));
                v.push(theory(range(), 10, xi, THEORY_NU, &[AdaptiveExact, AdaptiveMc]));
            }
            v
        }
        // Conclusive probability under experimental conditions, with an
        // ideal detector behind the same path (η = 0.91) and the fully
        // ideal receiver for reference.
        "fig4" => {
            let range = || alpha_sweep(0.0, 4.0, 0.25);
            let mut v = vec![theory(range(), 4, 1.0, 0.0, &[OptimalBound])];
            for stages in [4, 10] {
                v.push(experiment(range(), stages, &[AdaptiveExact, AdaptiveMc]));
                let mut ideal_detector = experiment(range(), stages, &[AdaptiveExact]);
                ideal_detector.params.eta_det = 1.0;
                v.push(ideal_detector);
                v.push(theory(range(), stages, 1.0, 0.0, &[AdaptiveExact]));
            }
            v
        }
        // Error probability under experimental conditions against the
        // heterodyne receiver matched to the same conclusive probability.
        "fig5" => {
            let range = || alpha_sweep(0.1, 4.0, 0.1);
            [4, 10]
                .into_iter()
                .map(|stages| experiment(range(), stages, &[AdaptiveExact, AdaptiveMc, HeterodyneMatched]))
                .collect()
        }
        "fig6" => [1.5, 3.0]
            .into_iter()
            .map(|alpha_sq| {
                let mut c = experiment(
                    sweep(SweepVariable::Stages, 4.0, 15.0, 1.0),
                    10,
                    &[AdaptiveExact, AdaptiveMc, HeterodyneMatched],
                );
                c.params.alpha_sq = alpha_sq;
                c.params.visibility = 0.9955;
                c
            })
            .collect(),
        // Photon / heterodyne error ratio versus detector efficiency, path fixed at 0.91.
        "fig7a" => {
            let mut v = Vec::new();
            for alpha_sq in [1.5, 3.0] {
                for stages in [4, 10] {
                    let mut c = experiment(sweep(SweepVariable::EtaDet, 0.5, 1.0, 0.01), stages, &[ErrorRatio]);
                    c.params.alpha_sq = alpha_sq;
                    v.push(c);
                }
            }
            v
        }
        // Error ratio versus |α|² at the experimental (0.73) and a unit detector efficiency.
        "fig7b" => {
            let mut v = Vec::new();
            for eta_det in [0.73, 1.0] {
                for stages in [4, 10] {
                    let mut c = experiment(alpha_sweep(0.25, 4.0, 0.25), stages, &[ErrorRatio]);
                    c.params.eta_det = eta_det;
                    v.push(c);
                }
            }
            v
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(configs)
}
