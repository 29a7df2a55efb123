use crate::error::{Error, Result};
use crate::physics::{p_shorthand, ChannelParams, StateIndex};

use super::{Receiver, ReceiverConfig, StateSet};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Conclusive and error probability of the four-stage receiver from the
/// off probabilities `P_0, P_1, P_2` at cyclic distance 0, 1, 2.
///
/// `P_E` is taken as 0 when `P_C` is 0.
pub fn static_closed_form(params: &ChannelParams, effective_alpha_sq: f64) -> (f64, f64) {
    let p = |s| p_shorthand(s, params, effective_alpha_sq).expect("distance in 0..=2");
    let (p0, p1, p2) = (p(0), p(1), p(2));
    let correct = p0 * (1.0 - p2) * (1.0 - p1).powi(2);
    let wrong = p2 * (1.0 - p0) * (1.0 - p1).powi(2) + 2.0 * p1 * (1.0 - p1) * (1.0 - p0) * (1.0 - p2);
    let conclusive = correct + wrong;
    let error = if conclusive > 0.0 { wrong / conclusive } else { 0.0 };
    (conclusive, error)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatePerformance {
    /// `Σ_k p_{k|m}`.
    pub p_conclusive: f64,
    /// `Σ_{k≠m} p_{k|m} / Σ_k p_{k|m}`.
    pub p_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPerformance {
    pub p_conclusive: f64,
    pub p_error: f64,
    pub per_state: [StatePerformance; 4],
}

/// Exact `P_C` and `P_E` by walking every outcome sequence of the policy.
pub fn enumerate_exact(params: &ChannelParams, config: &ReceiverConfig) -> Result<ExactPerformance> {
    enumerate_exact_with_cap(params, config, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_exact_with_cap(
    params: &ChannelParams,
    config: &ReceiverConfig,
    cap: usize,
) -> Result<ExactPerformance> {
    if config.stages > cap {
        return Err(Error::ResourceLimit {
            stages: config.stages,
            cap,
        });
    }
    let receiver = Receiver::new(params, config)?;
    let mut per_state = [StatePerformance::default(); 4];
    let mut conclusive = 0.0;
    let mut wrong = 0.0;
    for m in StateIndex::ALL {
        let mut acc = Tally::default();
        receiver.walk(m, 1, StateSet::EMPTY, None, 1.0, &mut acc);
        per_state[m.as_usize()] = StatePerformance {
            p_conclusive: acc.conclusive,
            p_error: ratio(acc.wrong, acc.conclusive),
        };
        conclusive += params.prior(m) * acc.conclusive;
        wrong += params.prior(m) * acc.wrong;
    }
    Ok(ExactPerformance {
        p_conclusive: conclusive,
        p_error: ratio(wrong, conclusive),
        per_state,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Default)]
struct Tally {
    conclusive: f64,
    wrong: f64,
}

impl Receiver {
    fn walk(
        &self,
        truth: StateIndex,
        stage: usize,
        eliminated: StateSet,
        previous: Option<StateIndex>,
        weight: f64,
        acc: &mut Tally,
    ) {
        if stage > self.config.stages {
            if let Some(k) = eliminated.survivor() {
                acc.conclusive += weight;
                if k != truth {
                    acc.wrong += weight;
                }
            }
            return;
        }
        let Some(h) = self.config.hypothesis(stage, eliminated, previous) else {
            return;
        };
        let off = self.off_probability(truth, h);
        if off > 0.0 {
            self.walk(truth, stage + 1, eliminated, Some(h), weight * off, acc);
        }
        let on = 1.0 - off;
        let after = eliminated.with(h);
        // A fourth click ends the trial as inconclusive.
        if on > 0.0 && !after.is_full() {
            self.walk(truth, stage + 1, after, Some(h), weight * on, acc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::TimingModel;
    use crate::receivers::CycleRule;

    #[test]
    fn static_ideal_value() {
        let (pc, pe) = static_closed_form(&ChannelParams::ideal(1.0), 1.0);
        let expected = (1.0 - (-1.0f64).exp()) * (1.0 - (-0.5f64).exp()).powi(2);
        assert_close!(pc, expected, 1e-15);
        assert_close!(pc, 0.0978637, 1e-7);
        assert_eq!(pe, 0.0);
    }

    #[test]
    fn static_vacuum_is_never_conclusive() {
        let (pc, pe) = static_closed_form(&ChannelParams::ideal(0.0), 0.0);
        assert_eq!(pc, 0.0);
        assert_eq!(pe, 0.0);
    }

    #[test]
    fn enumeration_matches_closed_form_at_four_stages() {
        let config = ReceiverConfig::static_four();
        for &a in &[0.0, 0.1, 0.7, 1.0, 2.3, 4.9] {
            let params = ChannelParams::with_system_efficiency(a, 0.66, 0.994, 1.5e-3);
            let exact = enumerate_exact(&params, &config).unwrap();
            let (pc, pe) = static_closed_form(&params, a);
            assert_close!(exact.p_conclusive, pc, 1e-12);
            assert_close!(exact.p_error, pe, 1e-12);
        }
    }

    #[test]
    fn ideal_conditions_give_zero_error() {
        for stages in [4, 7, 10, 16] {
            for rule in [CycleRule::Rotate, CycleRule::RestartFromHead] {
                let config = ReceiverConfig::adaptive(stages).with_rule(rule);
                let exact = enumerate_exact(&ChannelParams::ideal(1.7), &config).unwrap();
                assert_eq!(exact.p_error, 0.0);
                assert!(exact.per_state.iter().all(|s| s.p_error == 0.0));
            }
        }
    }

    #[test]
    fn ideal_ten_stage_regression() {
        let exact = enumerate_exact(&ChannelParams::ideal(1.0), &ReceiverConfig::adaptive(10)).unwrap();
        assert!(exact.p_conclusive > 0.0978637 && exact.p_conclusive < 0.2455450);
        // Frozen from this enumeration; an independent Python walk of the same
        // policy gives 0.16110836.
        assert_close!(exact.p_conclusive, 0.161108, 5e-7);
    }

    #[test]
    fn cap_is_enforced() {
        let config = ReceiverConfig::adaptive(21);
        assert!(matches!(
            enumerate_exact(&ChannelParams::ideal(1.0), &config),
            Err(Error::ResourceLimit { stages: 21, cap: 20 })
        ));
        assert!(enumerate_exact_with_cap(&ChannelParams::ideal(1.0), &config, 30).is_ok());
    }

    #[test]
    fn timing_reduces_signal() {
        let params = ChannelParams::ideal(2.0);
        let plain = enumerate_exact(&params, &ReceiverConfig::adaptive(10)).unwrap();
        let lossy = enumerate_exact(
            &params,
            &ReceiverConfig::adaptive(10).with_timing(Some(TimingModel::default())),
        )
        .unwrap();
        let rescaled = enumerate_exact(&params.with_alpha_sq(2.0 * 0.955), &ReceiverConfig::adaptive(10)).unwrap();
        assert!(lossy.p_conclusive < plain.p_conclusive);
        assert_close!(lossy.p_conclusive, rescaled.p_conclusive, 1e-14);
    }
}
