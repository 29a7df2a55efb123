//! Deterministic, parallel Monte Carlo estimation of `P_C` and `P_E`.
//!
//! Every trial owns a ChaCha8 stream seeded by [`derive_trial_seed`] from the
//! master seed and its (batch, trial) coordinates. Trials never share a
//! stream, and the per-batch tallies are integer sums, so results do not
//! depend on how the work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heterodyne::{sample_outcome, HeterodyneModel};
use crate::physics::{ChannelParams, StateIndex, TimingModel};
use crate::receivers::{decide, Receiver, ReceiverConfig};

const TRIAL_BITS: u32 = 40;
const MAX_BATCHES: usize = 1 << (64 - TRIAL_BITS);
const MAX_TRIALS: usize = 1 << TRIAL_BITS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Four-stage static receiver.
    Static {
        timing: Option<TimingModel>,
    },
    Adaptive(ReceiverConfig),
    Heterodyne(HeterodyneModel),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Static { .. } => "static",
            Strategy::Adaptive(_) => "adaptive",
            Strategy::Heterodyne(_) => "heterodyne",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub seed: u64,
    pub trials_per_batch: usize,
    pub batches: usize,
    pub strategy: Strategy,
    pub params: ChannelParams,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

/// 300 pulses × 20 repetitions × 4 states.
pub const DEFAULT_TRIALS_PER_BATCH: usize = 24_000;
pub const DEFAULT_BATCHES: usize = 5;

impl RunPlan {
    pub fn new(params: ChannelParams, strategy: Strategy) -> Self {
        Self {
            seed: 1,
            trials_per_batch: DEFAULT_TRIALS_PER_BATCH,
            batches: DEFAULT_BATCHES,
            strategy,
            params,
            workers: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials_per_batch: usize, batches: usize) -> Self {
        self.trials_per_batch = trials_per_batch;
        self.batches = batches;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_batch < 1 || self.trials_per_batch > MAX_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "trials per batch {} outside 1..=2^{TRIAL_BITS}",
                self.trials_per_batch
            )));
        }
        if self.batches < 2 || self.batches > MAX_BATCHES {
            return Err(Error::InvalidConfig(format!(
                "batches = {} must be >= 2 (and < 2^{})",
                self.batches,
                64 - TRIAL_BITS
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        self.params.validate()?;
        match &self.strategy {
            Strategy::Static { timing } => ReceiverConfig::static_four().with_timing(*timing).validate(),
            Strategy::Adaptive(config) => config.validate(),
            Strategy::Heterodyne(model) => model.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean and standard error (sample standard deviation / √n) of `values`.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_err = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub conclusive: u64,
    pub wrong: u64,
}

impl Tally {
    fn add(self, other: Tally) -> Tally {
        Tally {
            trials: self.trials + other.trials,
            conclusive: self.conclusive + other.conclusive,
            wrong: self.wrong + other.wrong,
        }
    }

    pub fn p_conclusive(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.conclusive as f64 / self.trials as f64
        }
    }

    /// Wrong among conclusive; 0 without conclusive results.
    pub fn p_error(&self) -> f64 {
        if self.conclusive == 0 {
            0.0
        } else {
            self.wrong as f64 / self.conclusive as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub tally: Tally,
    pub p_conclusive: f64,
    pub p_error: f64,
    /// Set when the batch had no conclusive result, so `p_error` is a placeholder 0.
    pub no_conclusive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceEstimate {
    pub p_conclusive: Estimate,
    pub p_error: Estimate,
    /// Binomial standard errors of the pooled frequencies.
    pub binomial_se_conclusive: f64,
    pub binomial_se_error: f64,
    pub batches: Vec<BatchResult>,
    /// Pooled counts conditioned on the true state.
    pub per_state: [Tally; 4],
    pub total: Tally,
}

impl PerformanceEstimate {
    pub fn total_trials(&self) -> u64 {
        self.total.trials
    }
}

/// SplitMix64 output function; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the per-trial random stream.
///
/// `counter = batch · 2^40 + trial` identifies the trial; the seed is
/// `mix64(mix64(master) ⊕ counter · φ64)` with `φ64 = 0x9e3779b97f4a7c15`.
/// For a fixed master seed this is a bijection of `counter`, so distinct
/// trials of a run (batch < 2^24, trial < 2^40) never share a stream. The
/// stream itself is `ChaCha8Rng::seed_from_u64(seed)`.
pub fn derive_trial_seed(master: u64, batch: u64, trial: u64) -> u64 {
    let counter = (batch << TRIAL_BITS) | (trial & ((1 << TRIAL_BITS) - 1));
    mix64(mix64(master) ^ counter.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

enum Simulator {
    Receiver(Receiver),
    Heterodyne { model: HeterodyneModel, alpha_sq: f64 },
}

impl Simulator {
    fn new(plan: &RunPlan) -> Result<Self> {
        Ok(match &plan.strategy {
            Strategy::Static { timing } => Simulator::Receiver(Receiver::new(
                &plan.params,
                &ReceiverConfig::static_four().with_timing(*timing),
            )?),
            Strategy::Adaptive(config) => Simulator::Receiver(Receiver::new(&plan.params, config)?),
            Strategy::Heterodyne(model) => Simulator::Heterodyne {
                model: *model,
                alpha_sq: plan.params.alpha_sq,
            },
        })
    }

    fn run<R: Rng>(&self, truth: StateIndex, rng: &mut R) -> Option<StateIndex> {
        match self {
            Simulator::Receiver(receiver) => decide(&receiver.run_trial(truth, rng)).state(),
            Simulator::Heterodyne { model, alpha_sq } => {
                let (x, p) = sample_outcome(truth, *alpha_sq, model.eta, rng);
                model.classify(x, p)
            }
        }
    }
}

fn draw_state<R: Rng>(priors: &[f64; 4], rng: &mut R) -> StateIndex {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for m in StateIndex::ALL {
        acc += priors[m.as_usize()];
        if u < acc {
            return m;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    StateIndex::ALL
        .into_iter()
        .rev()
        .find(|m| priors[m.as_usize()] > 0.0)
        .unwrap_or(StateIndex::ALL[3])
}

type StateTallies = [Tally; 4];

fn merge(a: StateTallies, b: StateTallies) -> StateTallies {
    [a[0].add(b[0]), a[1].add(b[1]), a[2].add(b[2]), a[3].add(b[3])]
}

fn run_batch(plan: &RunPlan, simulator: &Simulator, batch: usize) -> StateTallies {
    (0..plan.trials_per_batch)
        .into_par_iter()
        .fold(StateTallies::default, |mut acc, trial| {
            let seed = derive_trial_seed(plan.seed, batch as u64, trial as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = draw_state(&plan.params.priors, &mut rng);
            let verdict = simulator.run(truth, &mut rng);
            let t = &mut acc[truth.as_usize()];
            t.trials += 1;
            if let Some(k) = verdict {
                t.conclusive += 1;
                t.wrong += u64::from(k != truth);
            }
            acc
        })
        .reduce(StateTallies::default, merge)
}

/// Runs every batch of the plan and aggregates batch statistics.
pub fn estimate(plan: &RunPlan) -> Result<PerformanceEstimate> {
    plan.validate()?;
    let simulator = Simulator::new(plan)?;
    let run_all = || -> Vec<StateTallies> { (0..plan.batches).map(|b| run_batch(plan, &simulator, b)).collect() };
    let per_batch = match plan.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {n} workers: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let mut per_state = StateTallies::default();
    let mut batches = Vec::with_capacity(per_batch.len());
    for tallies in &per_batch {
        per_state = merge(per_state, *tallies);
        let tally = tallies.iter().fold(Tally::default(), |a, &b| a.add(b));
        batches.push(BatchResult {
            tally,
            p_conclusive: tally.p_conclusive(),
            p_error: tally.p_error(),
            no_conclusive: tally.conclusive == 0,
        });
    }
    let total = per_state.iter().fold(Tally::default(), |a, &b| a.add(b));
    let pc: Vec<f64> = batches.iter().map(|b| b.p_conclusive).collect();
    let pe: Vec<f64> = batches.iter().map(|b| b.p_error).collect();
    let binomial = |p: f64, n: u64| if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
    Ok(PerformanceEstimate {
        p_conclusive: Estimate::from_samples(&pc),
        p_error: Estimate::from_samples(&pe),
        binomial_se_conclusive: binomial(total.p_conclusive(), total.trials),
        binomial_se_error: binomial(total.p_error(), total.conclusive),
        batches,
        per_state,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receivers::enumerate_exact;
    use std::collections::HashSet;

    #[test]
    fn trial_seeds_are_distinct() {
        let a = derive_trial_seed(42, 0, 0);
        let b = derive_trial_seed(42, 0, 1);
        let c = derive_trial_seed(42, 1, 0);
        assert!(a != b && b != c && a != c);
        let mut seen = HashSet::new();
        for batch in 0..8 {
            for trial in 0..4096 {
                assert!(seen.insert(derive_trial_seed(7, batch, trial)));
            }
        }
    }

    #[test]
    fn trial_seed_test_vector() {
        assert_eq!(derive_trial_seed(42, 3, 17), TEST_VECTOR);
    }
    const TEST_VECTOR: u64 = 13_928_996_954_536_416_811;

    #[test]
    fn ideal_adaptive_never_errs() {
        let plan = RunPlan::new(
            ChannelParams::ideal(2.0),
            Strategy::Adaptive(ReceiverConfig::adaptive(10)),
        )
        .with_trials(20_000, 5);
        let est = estimate(&plan).unwrap();
        assert_eq!(est.total.wrong, 0);
        assert!(est.total.conclusive > 0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let params = ChannelParams {
            alpha_sq: 1.5,
            ..ChannelParams::default()
        };
        let plan = RunPlan::new(params, Strategy::Adaptive(ReceiverConfig::adaptive(10))).with_trials(6000, 3);
        let one = estimate(&plan.clone().with_workers(Some(1))).unwrap();
        let eight = estimate(&plan.clone().with_workers(Some(8))).unwrap();
        let global = estimate(&plan).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one, global);
    }

    #[test]
    fn different_master_seeds_differ() {
        let params = ChannelParams {
            alpha_sq: 1.5,
            ..ChannelParams::default()
        };
        let plan = RunPlan::new(params, Strategy::Static { timing: None }).with_trials(5000, 2);
        let a = estimate(&plan.clone().with_seed(1)).unwrap();
        let b = estimate(&plan.with_seed(2)).unwrap();
        assert_ne!(a.batches, b.batches);
    }

    #[test]
    fn static_strategy_matches_enumeration() {
        let params = ChannelParams::with_system_efficiency(2.0, 0.66, 0.994, 1.5e-3);
        let timing = Some(TimingModel::default());
        let plan = RunPlan::new(params, Strategy::Static { timing }).with_seed(4);
        let est = estimate(&plan).unwrap();
        let exact = enumerate_exact(&params, &ReceiverConfig::static_four().with_timing(timing)).unwrap();
        assert!(
            (est.p_conclusive.mean - exact.p_conclusive).abs()
                < 4.0 * est.p_conclusive.std_err.max(est.binomial_se_conclusive)
        );
    }

    #[test]
    fn empty_batches_are_flagged() {
        let plan = RunPlan::new(
            ChannelParams::ideal(0.0),
            Strategy::Adaptive(ReceiverConfig::adaptive(6)),
        )
        .with_trials(100, 2);
        let est = estimate(&plan).unwrap();
        assert!(est.batches.iter().all(|b| b.no_conclusive && b.p_error == 0.0));
        assert_eq!(est.p_error.mean, 0.0);
    }

    #[test]
    fn priors_are_respected() {
        let params = ChannelParams {
            priors: [0.0, 1.0, 0.0, 0.0],
            ..ChannelParams::ideal(1.0)
        };
        let plan = RunPlan::new(params, Strategy::Static { timing: None }).with_trials(1000, 2);
        let est = estimate(&plan).unwrap();
        assert_eq!(est.per_state[1].trials, 2000);
    }

    #[test]
    fn plan_validation() {
        let plan = RunPlan::new(ChannelParams::ideal(1.0), Strategy::Static { timing: None });
        assert!(estimate(&plan.clone().with_trials(10, 1)).is_err());
        assert!(estimate(&plan.clone().with_trials(0, 5)).is_err());
        assert!(estimate(&plan.with_workers(Some(0))).is_err());
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_close!(e.mean, 2.5, 1e-15);
        assert_close!(e.std_err, (5.0f64 / 3.0 / 4.0).sqrt(), 1e-15);
    }
}
