//! QPSK alphabet, detector imperfections and the on/off click model.
//!
//! A coherent state `|α_m⟩` with `α_m = |α| e^{(2m+1)iπ/4}` is split into `M`
//! equal parts. Each part is displaced by `D(-γ_i)` (which maps hypothesis `i`
//! to vacuum) and sent to an on/off detector with total efficiency `η`,
//! dark-count parameter `ν` and displacement visibility `ξ`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use crate::error::{Error, Result};

/// Label `m ∈ {0,1,2,3}` of a QPSK state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIndex(u8);

impl StateIndex {
    pub const ALL: [StateIndex; 4] = [StateIndex(0), StateIndex(1), StateIndex(2), StateIndex(3)];

    pub fn new(m: u8) -> Result<Self> {
        if m < 4 {
            Ok(StateIndex(m))
        } else {
            Err(Error::InvalidConfig(format!("state index {m} outside 0..=3")))
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub const fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// `(self - other) mod 4`.
    pub const fn offset_from(self, other: StateIndex) -> u8 {
        (self.0 + 4 - other.0) % 4
    }

    /// Cyclic distance in {0, 1, 2}.
    pub const fn distance(self, other: StateIndex) -> u8 {
        let d = self.offset_from(other);
        if d > 2 {
            4 - d
        } else {
            d
        }
    }

    /// Phase `(2m+1)π/4` of the coherent amplitude.
    pub fn phase(self) -> f64 {
        (2 * self.0 as u32 + 1) as f64 * FRAC_PI_4
    }

    /// Signs of the (x, p) quadrature means: m=0 is (+,+), m=1 (−,+), m=2 (−,−), m=3 (+,−).
    pub const fn quadrant_signs(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 1.0),
            1 => (-1.0, 1.0),
            2 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        }
    }

    /// The state whose quadrant contains `(x, p)`.
    pub fn from_quadrant(x_positive: bool, p_positive: bool) -> Self {
        match (x_positive, p_positive) {
            (true, true) => StateIndex(0),
            (false, true) => StateIndex(1),
            (false, false) => StateIndex(2),
            (true, false) => StateIndex(3),
        }
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Signal and detector parameters shared by every receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Mean photon number `|α|²`.
    pub alpha_sq: f64,
    /// Transmittance from the displacement to the detector.
    pub eta_path: f64,
    /// Detector quantum efficiency.
    pub eta_det: f64,
    /// Displacement visibility `ξ`.
    pub visibility: f64,
    /// Dark-count parameter `ν` per time bin.
    pub dark_rate: f64,
    pub priors: [f64; 4],
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            alpha_sq: 1.0,
            eta_path: 0.91,
            eta_det: 0.73,
            visibility: 0.994,
            dark_rate: 1.5e-3,
            priors: [0.25; 4],
        }
    }
}

impl ChannelParams {
    /// Unit efficiency, perfect visibility, no dark counts.
    pub fn ideal(alpha_sq: f64) -> Self {
        Self {
            alpha_sq,
            eta_path: 1.0,
            eta_det: 1.0,
            visibility: 1.0,
            dark_rate: 0.0,
            priors: [0.25; 4],
        }
    }

    /// Imperfect receiver with total efficiency `eta`, split as path 0.91 × detector `eta / 0.91`.
    pub fn with_system_efficiency(alpha_sq: f64, eta: f64, visibility: f64, dark_rate: f64) -> Self {
        let eta_path = 0.91;
        Self {
            alpha_sq,
            eta_path,
            eta_det: eta / eta_path,
            visibility,
            dark_rate,
            priors: [0.25; 4],
        }
    }

    pub fn with_alpha_sq(mut self, alpha_sq: f64) -> Self {
        self.alpha_sq = alpha_sq;
        self
    }

    /// Total efficiency `η = eta_path · eta_det`.
    pub fn efficiency(&self) -> f64 {
        self.eta_path * self.eta_det
    }

    pub fn prior(&self, m: StateIndex) -> f64 {
        self.priors[m.as_usize()]
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {v} outside [0, 1]")))
            }
        };
        if !(self.alpha_sq.is_finite() && self.alpha_sq >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_sq = {} must be finite and >= 0",
                self.alpha_sq
            )));
        }
        unit("eta_path", self.eta_path)?;
        unit("eta_det", self.eta_det)?;
        unit("visibility", self.visibility)?;
        unit("efficiency", self.efficiency())?;
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dark_rate = {} must be finite and >= 0",
                self.dark_rate
            )));
        }
        for (m, &p) in self.priors.iter().enumerate() {
            unit(&format!("priors[{m}]"), p)?;
        }
        let total: f64 = self.priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("priors sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Temporal multiplexing: a signal of width `signal_duration` is cut into
/// `M` bins with a discarded gap between consecutive bins (both in µs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    pub signal_duration: f64,
    pub gap_duration: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            signal_duration: 60.0,
            gap_duration: 0.3,
        }
    }
}

/// Fraction of the signal energy kept after discarding `M − 1` gaps:
/// `1 − τ_gap (M − 1) / T`.
pub fn discard_factor(stages: usize, timing: &TimingModel) -> Result<f64> {
    if stages < 1 {
        return Err(Error::InvalidConfig("stage count must be >= 1".into()));
    }
    if !(timing.signal_duration > 0.0 && timing.gap_duration >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "timing model needs signal_duration > 0 and gap_duration >= 0, got {:?}",
            timing
        )));
    }
    let factor = 1.0 - timing.gap_duration * (stages - 1) as f64 / timing.signal_duration;
    if factor <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{stages} stages discard the whole {} µs signal",
            timing.signal_duration
        )));
    }
    Ok(factor)
}

/// `cos(dπ/2)` for an integer offset, exact.
const fn quarter_turn_cos(offset: u8) -> f64 {
    match offset % 4 {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

/// Probability of "off" when hypothesis `i` is displaced to vacuum and the
/// received state is `m`:
/// `exp(−ν − 2η (|α|²_eff / M)(1 − ξ cos((m−i)π/2)))`.
///
/// `effective_alpha_sq` already includes any discarding loss.
pub fn off_probability(
    m: StateIndex,
    i: StateIndex,
    params: &ChannelParams,
    stages: usize,
    effective_alpha_sq: f64,
) -> f64 {
    off_probability_at_offset(m.offset_from(i), params, stages, effective_alpha_sq)
}

pub(crate) fn off_probability_at_offset(
    offset: u8,
    params: &ChannelParams,
    stages: usize,
    effective_alpha_sq: f64,
) -> f64 {
    let per_stage = effective_alpha_sq / stages as f64;
    let residual = 1.0 - params.visibility * quarter_turn_cos(offset);
    (-params.dark_rate - 2.0 * params.efficiency() * per_stage * residual).exp()
}

pub fn on_probability(
    m: StateIndex,
    i: StateIndex,
    params: &ChannelParams,
    stages: usize,
    effective_alpha_sq: f64,
) -> f64 {
    1.0 - off_probability(m, i, params, stages, effective_alpha_sq)
}

/// `P_s`: the four-stage off probability at cyclic distance `s ∈ {0,1,2}`.
pub fn p_shorthand(s: u8, params: &ChannelParams, effective_alpha_sq: f64) -> Result<f64> {
    if s > 2 {
        return Err(Error::InvalidConfig(format!("cyclic distance {s} outside 0..=2")));
    }
    Ok(off_probability_at_offset(s, params, 4, effective_alpha_sq))
}
