use std::fmt;

use crate::error::{Error, Result};
use crate::physics::{discard_factor, StateIndex, TimingModel};

/// Set of eliminated states, stored as a 4-bit mask (bit `m` set ⇔ state `m` ruled out).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet(u8);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);
    pub const FULL: StateSet = StateSet(0b1111);

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits <= 0b1111 {
            Ok(StateSet(bits))
        } else {
            Err(Error::InvalidConfig(format!("state mask {bits} outside 0..=15")))
        }
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn contains(self, m: StateIndex) -> bool {
        self.0 & (1 << m.value()) != 0
    }

    #[must_use]
    pub const fn with(self, m: StateIndex) -> StateSet {
        StateSet(self.0 | (1 << m.value()))
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn is_full(self) -> bool {
        self.0 == 0b1111
    }

    pub fn iter(self) -> impl Iterator<Item = StateIndex> {
        StateIndex::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    /// The single state not in the set, when exactly three are eliminated.
    pub fn survivor(self) -> Option<StateIndex> {
        if self.len() == 3 {
            StateIndex::ALL.into_iter().find(|m| !self.contains(*m))
        } else {
            None
        }
    }
}

impl FromIterator<StateIndex> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateIndex>>(iter: I) -> Self {
        iter.into_iter().fold(StateSet::EMPTY, StateSet::with)
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// How the adaptive stages walk the hypothesis cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum CycleRule {
    /// Each adaptive stage tests the next state after the previous stage's
    /// hypothesis in cycle order, skipping eliminated states.
    #[default]
    Rotate,
    /// Each adaptive stage tests the first non-eliminated state from the head
    /// of the cycle; the hypothesis only moves when a photon is detected.
    RestartFromHead,
}

impl CycleRule {
    pub fn name(self) -> &'static str {
        match self {
            CycleRule::Rotate => "rotate",
            CycleRule::RestartFromHead => "restart",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rotate" => Some(CycleRule::Rotate),
            "restart" | "restart-from-head" => Some(CycleRule::RestartFromHead),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    /// Number of stages `M`.
    pub stages: usize,
    /// Hypothesis order; the static prefix tests `cycle[0..static_prefix]`.
    pub cycle: [StateIndex; 4],
    pub static_prefix: usize,
    /// Discarding loss between time bins; `None` means no loss.
    pub timing: Option<TimingModel>,
    pub rule: CycleRule,
}

pub const DEFAULT_CYCLE: [StateIndex; 4] = [
    StateIndex::ALL[0],
    StateIndex::ALL[2],
    StateIndex::ALL[1],
    StateIndex::ALL[3],
];

impl ReceiverConfig {
    pub fn adaptive(stages: usize) -> Self {
        Self {
            stages,
            cycle: DEFAULT_CYCLE,
            static_prefix: 4,
            timing: None,
            rule: CycleRule::default(),
        }
    }

    /// The static four-stage receiver.
    pub fn static_four() -> Self {
        Self::adaptive(4)
    }

    pub fn with_timing(mut self, timing: Option<TimingModel>) -> Self {
        self.timing = timing;
        self
    }

    pub fn with_rule(mut self, rule: CycleRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_cycle(mut self, cycle: [StateIndex; 4]) -> Self {
        self.cycle = cycle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages < 4 {
            return Err(Error::InvalidConfig(format!("stages = {} must be >= 4", self.stages)));
        }
        if self.static_prefix > 4 || self.static_prefix > self.stages {
            return Err(Error::InvalidConfig(format!(
                "static_prefix = {} must be <= 4 and <= stages",
                self.static_prefix
            )));
        }
        let seen: StateSet = self.cycle.iter().copied().collect();
        if !seen.is_full() {
            return Err(Error::InvalidConfig(format!(
                "cycle {:?} is not a permutation of 0..=3",
                self.cycle.map(StateIndex::value)
            )));
        }
        if let Some(timing) = &self.timing {
            discard_factor(self.stages, timing)?;
        }
        Ok(())
    }

    /// `|α|²` after discarding loss.
    pub fn effective_alpha_sq(&self, alpha_sq: f64) -> Result<f64> {
        match &self.timing {
            Some(timing) => Ok(alpha_sq * discard_factor(self.stages, timing)?),
            None => Ok(alpha_sq),
        }
    }

    pub fn discard_factor(&self) -> Result<f64> {
        self.effective_alpha_sq(1.0)
    }

    fn position(&self, m: StateIndex) -> usize {
        self.cycle.iter().position(|&c| c == m).unwrap_or(0)
    }

    /// Policy core. `None` only when every state is eliminated.
    pub(crate) fn hypothesis(
        &self,
        stage: usize,
        eliminated: StateSet,
        previous: Option<StateIndex>,
    ) -> Option<StateIndex> {
        if eliminated.is_full() {
            return None;
        }
        if stage <= self.static_prefix {
            return Some(self.cycle[stage - 1]);
        }
        let start = match (self.rule, previous) {
            (CycleRule::Rotate, Some(prev)) => self.position(prev) + 1,
            _ => 0,
        };
        (0..4)
            .map(|k| self.cycle[(start + k) % 4])
            .find(|&m| !eliminated.contains(m))
    }
}

/// Hypothesis displaced to vacuum at `stage` (1-based), given the states
/// eliminated so far and the hypothesis tested at `stage − 1`.
///
/// Stages inside the static prefix ignore the history. After that the
/// configured [`CycleRule`] picks the next non-eliminated state; with
/// [`CycleRule::Rotate`] the previous hypothesis is required.
pub fn next_hypothesis(
    stage: usize,
    eliminated: StateSet,
    previous: Option<StateIndex>,
    config: &ReceiverConfig,
) -> Result<StateIndex> {
    if stage == 0 || stage > config.stages {
        return Err(Error::InvalidConfig(format!(
            "stage {stage} outside 1..={}",
            config.stages
        )));
    }
    if eliminated.is_full() {
        return Err(Error::NoHypothesis);
    }
    if config.rule == CycleRule::Rotate && stage > config.static_prefix && stage > 1 && previous.is_none() {
        return Err(Error::InvalidConfig(format!(
            "rotating policy needs the hypothesis of stage {}",
            stage - 1
        )));
    }
    config
        .hypothesis(stage, eliminated, previous)
        .ok_or(Error::NoHypothesis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(m: u8) -> StateIndex {
        StateIndex::new(m).unwrap()
    }

    fn set(ms: &[u8]) -> StateSet {
        ms.iter().map(|&m| s(m)).collect()
    }

    #[test]
    fn static_prefix_ignores_history() {
        let config = ReceiverConfig::adaptive(10);
        let expected = [0, 2, 1, 3];
        for bits in 0..15u8 {
            let eliminated = StateSet::from_bits(bits).unwrap();
            for (k, &want) in expected.iter().enumerate() {
                let got = next_hypothesis(k + 1, eliminated, Some(s(1)), &config).unwrap();
                assert_eq!(got, s(want));
            }
        }
    }

    #[test]
    fn fifth_stage_takes_first_surviving_cycle_entry() {
        for rule in [CycleRule::Rotate, CycleRule::RestartFromHead] {
            let config = ReceiverConfig::adaptive(10).with_rule(rule);
            let h = next_hypothesis(5, set(&[0, 2]), Some(s(3)), &config).unwrap();
            assert_eq!(h, s(1));
            let h = next_hypothesis(5, set(&[0]), Some(s(3)), &config).unwrap();
            assert_eq!(h, s(2));
            let h = next_hypothesis(5, StateSet::EMPTY, Some(s(3)), &config).unwrap();
            assert_eq!(h, s(0));
        }
    }

    #[test]
    fn three_eliminated_fixes_the_survivor() {
        for rule in [CycleRule::Rotate, CycleRule::RestartFromHead] {
            let config = ReceiverConfig::adaptive(12).with_rule(rule);
            for stage in 7..=12 {
                let h = next_hypothesis(stage, set(&[0, 2, 1]), Some(s(3)), &config).unwrap();
                assert_eq!(h, s(3));
            }
        }
    }

    #[test]
    fn rules_differ_after_stage_five() {
        // Stage 5 tested 0 and saw nothing.
        let rotate = ReceiverConfig::adaptive(10);
        let head = rotate.with_rule(CycleRule::RestartFromHead);
        assert_eq!(next_hypothesis(6, StateSet::EMPTY, Some(s(0)), &rotate).unwrap(), s(2));
        assert_eq!(next_hypothesis(6, StateSet::EMPTY, Some(s(0)), &head).unwrap(), s(0));
        // Wrap-around skips eliminated states.
        assert_eq!(next_hypothesis(8, set(&[0, 2]), Some(s(3)), &rotate).unwrap(), s(1));
        assert_eq!(next_hypothesis(8, set(&[1]), Some(s(2)), &rotate).unwrap(), s(3));
    }

    #[test]
    fn errors() {
        let config = ReceiverConfig::adaptive(10);
        assert!(matches!(
            next_hypothesis(6, StateSet::FULL, Some(s(0)), &config),
            Err(Error::NoHypothesis)
        ));
        assert!(next_hypothesis(0, StateSet::EMPTY, None, &config).is_err());
        assert!(next_hypothesis(11, StateSet::EMPTY, Some(s(0)), &config).is_err());
        assert!(next_hypothesis(6, StateSet::EMPTY, None, &config).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ReceiverConfig::adaptive(3).validate().is_err());
        assert!(ReceiverConfig::adaptive(4).validate().is_ok());
        let bad = ReceiverConfig::adaptive(10).with_cycle([s(0), s(0), s(1), s(3)]);
        assert!(bad.validate().is_err());
        let long = ReceiverConfig::adaptive(250).with_timing(Some(TimingModel::default()));
        assert!(long.validate().is_err());
        let c = ReceiverConfig::adaptive(10).with_timing(Some(TimingModel::default()));
        assert_close!(c.effective_alpha_sq(2.0).unwrap(), 1.91, 1e-14);
    }

    #[test]
    fn state_set_basics() {
        let e = set(&[0, 2, 1]);
        assert_eq!(e.len(), 3);
        assert_eq!(e.survivor(), Some(s(3)));
        assert_eq!(e.bits(), 0b0111);
        assert_eq!(set(&[0]).survivor(), None);
        assert!(StateSet::from_bits(16).is_err());
        assert_eq!(e.to_string(), "{0,1,2}");
    }
}
