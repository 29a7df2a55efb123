//! Cross-module invariants as property tests.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{class_weights, optimal_conclusive_probability, BoundInput};
use crate::engine::{estimate, RunPlan, Strategy as Simulation};
use crate::heterodyne::{
    conclusive_probability, error_probability, error_probability_quadrature, HeterodyneModel, Region,
};
use crate::physics::{discard_factor, off_probability, p_shorthand, ChannelParams, StateIndex, TimingModel};
use crate::receivers::{enumerate_exact, run_trial, static_closed_form, ReceiverConfig, DEFAULT_CYCLE};

fn state() -> impl Strategy<Value = StateIndex> {
    (0u8..4).prop_map(|m| StateIndex::new(m).unwrap())
}

fn imperfect() -> impl Strategy<Value = ChannelParams> {
    (0.0..5.0f64, 0.05..1.0f64, 0.9..1.0f64, 0.0..0.01f64).prop_map(|(a, eta, xi, nu)| ChannelParams {
        eta_det: eta,
        visibility: xi,
        dark_rate: nu,
        ..ChannelParams::ideal(a)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn off_probability_is_a_probability(p in imperfect(), m in state(), i in state(), stages in 4usize..30) {
        let v = off_probability(m, i, &p, stages, p.alpha_sq);
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn off_probability_decreases_with_signal(p in imperfect(), m in state(), i in state(), scale in 1.01..3.0f64) {
        prop_assume!(p.alpha_sq > 1e-3);
        let low = off_probability(m, i, &p, 10, p.alpha_sq);
        let high = off_probability(m, i, &p, 10, p.alpha_sq * scale);
        if m == i && p.visibility == 1.0 {
            prop_assert_eq!(low, high);
        } else {
            prop_assert!(high < low);
        }
    }

    #[test]
    fn off_probability_depends_on_offset_only(p in imperfect(), m in state(), i in state(), shift in 0u8..4) {
        let rot = |s: StateIndex| StateIndex::new((s.value() + shift) % 4).unwrap();
        prop_assert_eq!(
            off_probability(m, i, &p, 7, p.alpha_sq),
            off_probability(rot(m), rot(i), &p, 7, p.alpha_sq)
        );
        prop_assert_eq!(
            off_probability(m, i, &p, 7, p.alpha_sq),
            off_probability(i, m, &p, 7, p.alpha_sq)
        );
    }

    #[test]
    fn shorthand_is_the_four_stage_off_probability(p in imperfect(), s in 0u8..3) {
        let zero = StateIndex::new(0).unwrap();
        let other = StateIndex::new(s).unwrap();
        prop_assert_eq!(p_shorthand(s, &p, p.alpha_sq).unwrap(), off_probability(other, zero, &p, 4, p.alpha_sq));
    }

    #[test]
    fn discard_factor_is_affine(t in 10.0..100.0f64, gap in 0.0..0.5f64, m in 1usize..60) {
        prop_assume!(gap * (m as f64) < t);
        let timing = TimingModel { signal_duration: t, gap_duration: gap };
        let f = |m| discard_factor(m, &timing).unwrap();
        prop_assert!((f(m) - f(m + 1) - gap / t).abs() < 1e-12);
        prop_assert_eq!(f(1), 1.0);
    }

    #[test]
    fn trials_replay_through_the_policy(p in imperfect(), stages in 4usize..16, truth in state(), seed in any::<u64>(), rotate in any::<bool>()) {
        let rule = if rotate { crate::receivers::CycleRule::Rotate } else { crate::receivers::CycleRule::RestartFromHead };
        let config = ReceiverConfig::adaptive(stages).with_rule(rule);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let record = run_trial(truth, &p, &config, &mut rng).unwrap();
        prop_assert!(record.follows_policy(&config));
    }

    #[test]
    fn four_stage_enumeration_is_the_closed_form(p in imperfect(), timing in any::<bool>()) {
        let timing = timing.then(TimingModel::default);
        let config = ReceiverConfig::static_four().with_timing(timing);
        let exact = enumerate_exact(&p, &config).unwrap();
        let (pc, pe) = static_closed_form(&p, config.effective_alpha_sq(p.alpha_sq).unwrap());
        prop_assert!((exact.p_conclusive - pc).abs() <= 1e-12);
        prop_assert!((exact.p_error - pe).abs() <= 1e-12);
    }

    #[test]
    fn ideal_receivers_never_err(a in 0.0..8.0f64, stages in 4usize..=20) {
        let exact = enumerate_exact(&ChannelParams::ideal(a), &ReceiverConfig::adaptive(stages)).unwrap();
        prop_assert_eq!(exact.p_error, 0.0);
        prop_assert!(exact.per_state.iter().all(|s| s.p_error == 0.0));
    }

    #[test]
    fn four_stage_states_are_symmetric(p in imperfect()) {
        let exact = enumerate_exact(&p, &ReceiverConfig::static_four()).unwrap();
        for s in &exact.per_state[1..] {
            prop_assert!((s.p_conclusive - exact.per_state[0].p_conclusive).abs() < 1e-14);
            prop_assert!((s.p_error - exact.per_state[0].p_error).abs() < 1e-12);
        }
    }

    /// Past four stages the fixed cycle order breaks the symmetry between
    /// states; shifting every cycle label by one shifts the per-state results.
    #[test]
    fn relabeled_cycle_permutes_states(p in imperfect(), stages in 5usize..=12, shift in 1u8..4) {
        let base = ReceiverConfig::adaptive(stages);
        let cycle = DEFAULT_CYCLE.map(|s| StateIndex::new((s.value() + shift) % 4).unwrap());
        let a = enumerate_exact(&p, &base).unwrap();
        let b = enumerate_exact(&p, &base.with_cycle(cycle)).unwrap();
        for m in StateIndex::ALL {
            let moved = (m.value() + shift) as usize % 4;
            prop_assert!((a.per_state[m.as_usize()].p_conclusive - b.per_state[moved].p_conclusive).abs() < 1e-13);
            prop_assert!((a.per_state[m.as_usize()].p_error - b.per_state[moved].p_error).abs() < 1e-11);
        }
        prop_assert!((a.p_conclusive - b.p_conclusive).abs() < 1e-13);
    }

    /// Above |α|² ≈ 5 the single adaptive stage of M = 5 no longer pays for
    /// the thinner static stages, so the range stops there.
    #[test]
    fn ideal_adaptive_is_monotone_and_below_the_bound(a in 0.05..5.0f64) {
        let bound = optimal_conclusive_probability(&BoundInput::new(a)).unwrap();
        let mut last = 0.0;
        for stages in 4..=14 {
            let pc = enumerate_exact(&ChannelParams::ideal(a), &ReceiverConfig::adaptive(stages)).unwrap().p_conclusive;
            prop_assert!(pc >= last - 1e-15);
            prop_assert!(pc < bound);
            last = pc;
        }
    }

    #[test]
    fn class_weights_sum_to_one(a in 0.0..60.0f64) {
        let w = class_weights(&BoundInput::new(a)).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn heterodyne_conclusive_falls_with_threshold(a in 0.0..6.0f64, eta in 0.1..1.0f64, t in 0.0..4.0f64, dt in 0.01..1.0f64, square in any::<bool>()) {
        let region = if square { Region::Square } else { Region::Cross };
        let pc = |t| conclusive_probability(&HeterodyneModel::new(t, eta, region), a);
        prop_assert!(pc(t + dt) < pc(t));
        let model = HeterodyneModel::new(t, eta, region);
        let e = error_probability(&model, a);
        prop_assert!((0.0..=1.0).contains(&pc(t)) && (0.0..=1.0).contains(&e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heterodyne_error_by_quadrature(a in 0.1..5.0f64, eta in 0.3..1.0f64, t in 0.0..2.5f64, square in any::<bool>()) {
        let region = if square { Region::Square } else { Region::Cross };
        let model = HeterodyneModel::new(t, eta, region);
        let closed = error_probability(&model, a);
        let quad = error_probability_quadrature(&model, a, 1e-10).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-8 * closed.max(1e-6), "{} vs {}", closed, quad);
    }
}

/// Monte Carlo agrees with enumeration within 3 binomial standard errors
/// at all but at most one point of a 100-point grid.
#[test]
fn monte_carlo_matches_enumeration_on_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut outliers = 0;
    for k in 0..100u64 {
        use rand::Rng;
        let params = ChannelParams {
            alpha_sq: rng.random_range(0.2..4.0),
            eta_det: rng.random_range(0.5..1.0),
            visibility: rng.random_range(0.99..1.0),
            dark_rate: rng.random_range(0.0..2e-3),
            ..ChannelParams::default()
        };
        let stages = rng.random_range(4..=20);
        let config = ReceiverConfig::adaptive(stages).with_timing(Some(TimingModel::default()));
        let exact = enumerate_exact(&params, &config).unwrap();
        let plan = RunPlan::new(params, Simulation::Adaptive(config))
            .with_seed(k)
            .with_trials(2000, 5);
        let est = estimate(&plan).unwrap();
        if (est.p_conclusive.mean - exact.p_conclusive).abs() > 3.0 * est.binomial_se_conclusive {
            outliers += 1;
        }
    }
    assert!(outliers <= 1, "{outliers} of 100 points outside 3 standard errors");
}

#[test]
fn quadrupling_trials_halves_the_error_bar() {
    let params = ChannelParams::with_system_efficiency(1.5, 0.66, 0.994, 1.5e-3);
    let strategy = Simulation::Adaptive(ReceiverConfig::adaptive(10));
    let mean_se = |trials| {
        (0..30u64)
            .map(|seed| {
                let plan = RunPlan::new(params, strategy).with_seed(seed).with_trials(trials, 5);
                estimate(&plan).unwrap().p_conclusive.std_err
            })
            .sum::<f64>()
            / 30.0
    };
    let ratio = mean_se(1000) / mean_se(4000);
    assert!((ratio - 2.0).abs() <= 0.3 * 2.0, "ratio {ratio}");
}
