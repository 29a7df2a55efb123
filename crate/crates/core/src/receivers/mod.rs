//! Static and adaptive displacement receivers.
//!
//! A trial runs `M` stages. Each stage displaces one hypothesis to vacuum and
//! records whether the detector clicked. A click rules that hypothesis out.
//! The verdict is conclusive iff exactly three states have been ruled out; a
//! fourth click makes the trial inconclusive.

mod exact;
mod lookup;
mod policy;

use rand::Rng;

use crate::error::Result;
use crate::physics::{off_probability, ChannelParams, StateIndex};

pub use exact::{
    enumerate_exact, enumerate_exact_with_cap, static_closed_form, ExactPerformance, StatePerformance,
    DEFAULT_ENUMERATION_CAP,
};
pub use lookup::{build_lookup_table, LookupEntry, LookupTable};
pub use policy::{next_hypothesis, CycleRule, ReceiverConfig, StateSet, DEFAULT_CYCLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRecord {
    pub hypothesis: StateIndex,
    pub outcome: Outcome,
}

/// History of one simulated trial. Stages after the fourth click are not run,
/// so `stages` may be shorter than `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub true_state: StateIndex,
    pub stages: Vec<StageRecord>,
    pub on_count: usize,
    pub eliminated: StateSet,
}

impl TrialRecord {
    /// True when every recorded hypothesis is what the policy would choose
    /// from the preceding outcomes.
    pub fn follows_policy(&self, config: &ReceiverConfig) -> bool {
        let mut eliminated = StateSet::EMPTY;
        let mut previous = None;
        for (k, stage) in self.stages.iter().enumerate() {
            match next_hypothesis(k + 1, eliminated, previous, config) {
                Ok(h) if h == stage.hypothesis => {}
                _ => return false,
            }
            if stage.outcome == Outcome::On {
                eliminated = eliminated.with(stage.hypothesis);
            }
            previous = Some(stage.hypothesis);
        }
        eliminated == self.eliminated
            && self.on_count == self.stages.iter().filter(|s| s.outcome == Outcome::On).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Conclusive(StateIndex),
    Inconclusive,
}

impl Decision {
    pub fn state(self) -> Option<StateIndex> {
        match self {
            Decision::Conclusive(k) => Some(k),
            Decision::Inconclusive => None,
        }
    }
}

/// Conclusive iff exactly three clicks were recorded; the verdict is the
/// single state left standing.
pub fn decide(record: &TrialRecord) -> Decision {
    if record.on_count == 3 {
        record
            .eliminated
            .survivor()
            .map_or(Decision::Inconclusive, Decision::Conclusive)
    } else {
        Decision::Inconclusive
    }
}

/// A receiver with its click probabilities precomputed for one parameter point.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: ReceiverConfig,
    /// `off[m][i]`: probability of no click for true state `m`, hypothesis `i`.
    off: [[f64; 4]; 4],
}

impl Receiver {
    pub fn new(params: &ChannelParams, config: &ReceiverConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let effective = config.effective_alpha_sq(params.alpha_sq)?;
        let mut off = [[0.0; 4]; 4];
        for m in StateIndex::ALL {
            for i in StateIndex::ALL {
                off[m.as_usize()][i.as_usize()] = off_probability(m, i, params, config.stages, effective);
            }
        }
        Ok(Self { config: *config, off })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.config
    }

    pub fn off_probability(&self, truth: StateIndex, hypothesis: StateIndex) -> f64 {
        self.off[truth.as_usize()][hypothesis.as_usize()]
    }

    /// Simulates one trial; each stage consumes one uniform draw from `rng`.
    pub fn run_trial<R: Rng + ?Sized>(&self, true_state: StateIndex, rng: &mut R) -> TrialRecord {
        let mut stages = Vec::with_capacity(self.config.stages);
        let mut eliminated = StateSet::EMPTY;
        let mut previous = None;
        for stage in 1..=self.config.stages {
            let Some(hypothesis) = self.config.hypothesis(stage, eliminated, previous) else {
                break;
            };
            let u: f64 = rng.random();
            let outcome = if u < self.off_probability(true_state, hypothesis) {
                Outcome::Off
            } else {
                eliminated = eliminated.with(hypothesis);
                Outcome::On
            };
            stages.push(StageRecord { hypothesis, outcome });
            previous = Some(hypothesis);
        }
        let on_count = stages.iter().filter(|s| s.outcome == Outcome::On).count();
        TrialRecord {
            true_state,
            stages,
            on_count,
            eliminated,
        }
    }
}

/// Simulates one trial of the configured receiver.
pub fn run_trial<R: Rng + ?Sized>(
    true_state: StateIndex,
    params: &ChannelParams,
    config: &ReceiverConfig,
    rng: &mut R,
) -> Result<TrialRecord> {
    Ok(Receiver::new(params, config)?.run_trial(true_state, rng))
}
