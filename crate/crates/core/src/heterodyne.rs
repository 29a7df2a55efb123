//! Heterodyne baseline emulating unambiguous discrimination by thresholding.
//!
//! Outcomes follow the Q-function of the (attenuated) coherent state: `x` and
//! `p` are independent Gaussians with variance 1/2 and means
//! `±√(η|α|²/2)`, the signs given by the quadrant of the state. Outcomes in
//! the inconclusive region are discarded; every other outcome is assigned the
//! state of its quadrant.

use std::f64::consts::{FRAC_1_PI, FRAC_1_SQRT_2, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::physics::StateIndex;
use crate::quadrature::integrate_2d;

const SIGMA: f64 = FRAC_1_SQRT_2;

/// Shape of the inconclusive region, both with `x_th = p_th = t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Region {
    /// Inconclusive if either quadrature lies inside `(−t, t)`: each
    /// quadrature is thresholded on its own.
    #[default]
    Cross,
    /// Inconclusive only inside the square `|x| < t, |p| < t`.
    Square,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Cross => "cross",
            Region::Square => "square",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cross" => Some(Region::Cross),
            "square" => Some(Region::Square),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneModel {
    pub threshold: f64,
    /// Detection efficiency of the heterodyne arm.
    pub eta: f64,
    pub region: Region,
}

impl Default for HeterodyneModel {
    fn default() -> Self {
        Self {
            threshold: 0.0,
            eta: 1.0,
            region: Region::default(),
        }
    }
}

impl HeterodyneModel {
    pub fn new(threshold: f64, eta: f64, region: Region) -> Self {
        Self { threshold, eta, region }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must be >= 0",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!(
                "heterodyne eta {} outside [0, 1]",
                self.eta
            )));
        }
        Ok(())
    }

    /// Decision for one outcome: the quadrant's state, or `None` if inconclusive.
    pub fn classify(&self, x: f64, p: f64) -> Option<StateIndex> {
        let t = self.threshold;
        let inside = match self.region {
            Region::Cross => x.abs() < t || p.abs() < t,
            Region::Square => x.abs() < t && p.abs() < t,
        };
        (!inside).then(|| StateIndex::from_quadrant(x >= 0.0, p >= 0.0))
    }
}

fn axis_mean(alpha_sq: f64, eta: f64) -> f64 {
    (eta * alpha_sq / 2.0).sqrt()
}

/// `Pr(Z > z)` for a standard normal.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Draws one heterodyne outcome `(x, p)` for state `m`.
pub fn sample_outcome<R: Rng + ?Sized>(m: StateIndex, alpha_sq: f64, eta: f64, rng: &mut R) -> (f64, f64) {
    let mu = axis_mean(alpha_sq, eta);
    let (sx, sp) = m.quadrant_signs();
    let zx: f64 = rng.sample(StandardNormal);
    let zp: f64 = rng.sample(StandardNormal);
    (sx * mu + SIGMA * zx, sp * mu + SIGMA * zp)
}

/// Per-quadrature probabilities for a Gaussian with positive mean, split at `−t, 0, t`.
#[derive(Debug, Clone, Copy)]
struct AxisMass {
    /// `x > t`
    beyond_pos: f64,
    /// `0 < x < t`
    inner_pos: f64,
    /// `−t < x < 0`
    inner_neg: f64,
    /// `x < −t`
    beyond_neg: f64,
}

impl AxisMass {
    fn new(model: &HeterodyneModel, alpha_sq: f64) -> Self {
        let mu = axis_mean(alpha_sq, model.eta);
        let t = model.threshold;
        let beyond_pos = upper_tail((t - mu) / SIGMA);
        let beyond_neg = upper_tail((t + mu) / SIGMA);
        let positive = upper_tail(-mu / SIGMA);
        let negative = upper_tail(mu / SIGMA);
        Self {
            beyond_pos,
            inner_pos: (positive - beyond_pos).max(0.0),
            inner_neg: (negative - beyond_neg).max(0.0),
            beyond_neg,
        }
    }

    /// (conclusive, wrong) for a state in the positive quadrant.
    fn conclusive_and_wrong(&self, region: Region) -> (f64, f64) {
        let AxisMass {
            beyond_pos: bp,
            inner_pos: ip,
            inner_neg: inn,
            beyond_neg: bn,
        } = *self;
        match region {
            Region::Cross => {
                let beyond = bp + bn;
                (beyond * beyond, bn * bn + 2.0 * bp * bn)
            }
            Region::Square => {
                let inside = ip + inn;
                let pos = bp + ip;
                let neg = bn + inn;
                // 1 − inside², written so it keeps precision when inside → 1.
                let outside = bp + bn;
                let conclusive = outside * (1.0 + inside);
                let wrong = 2.0 * pos * neg + neg * neg - 2.0 * ip * inn - inn * inn;
                (conclusive, wrong.max(0.0))
            }
        }
    }
}

/// Probability that an outcome falls outside the inconclusive region. The
/// same for every state of the alphabet.
pub fn conclusive_probability(model: &HeterodyneModel, alpha_sq: f64) -> f64 {
    AxisMass::new(model, alpha_sq).conclusive_and_wrong(model.region).0
}

/// Fraction of conclusive outcomes that land in a wrong quadrant; 0 when no
/// outcome is conclusive.
pub fn error_probability(model: &HeterodyneModel, alpha_sq: f64) -> f64 {
    let (conclusive, wrong) = AxisMass::new(model, alpha_sq).conclusive_and_wrong(model.region);
    if conclusive > 0.0 {
        wrong / conclusive
    } else {
        0.0
    }
}

/// [`error_probability`] by direct 2-D integration of the outcome density
/// over the wrong-quadrant part of the conclusive region.
pub fn error_probability_quadrature(model: &HeterodyneModel, alpha_sq: f64, rel_tol: f64) -> Result<f64> {
    model.validate()?;
    let mu = axis_mean(alpha_sq, model.eta);
    let t = model.threshold;
    let reach = mu.max(t) + 12.0;
    let cuts = [-reach, -t, 0.0, t, reach];
    let density = |x: f64, p: f64| FRAC_1_PI * (-(x - mu).powi(2) - (p - mu).powi(2)).exp();

    let mut conclusive = 0.0;
    let mut wrong = 0.0;
    for xs in cuts.windows(2) {
        for ps in cuts.windows(2) {
            if xs[0] == xs[1] || ps[0] == ps[1] {
                continue;
            }
            let (cx, cp) = (0.5 * (xs[0] + xs[1]), 0.5 * (ps[0] + ps[1]));
            let Some(k) = model.classify(cx, cp) else {
                continue;
            };
            let mass = integrate_2d(density, (xs[0], xs[1]), (ps[0], ps[1]), rel_tol, 1e-300)?;
            conclusive += mass;
            if k != StateIndex::ALL[0] {
                wrong += mass;
            }
        }
    }
    Ok(if conclusive > 0.0 { wrong / conclusive } else { 0.0 })
}

/// Threshold whose conclusive probability is `target_pc` within `tol`, by bisection.
pub fn match_threshold(target_pc: f64, alpha_sq: f64, eta: f64, region: Region, tol: f64) -> Result<f64> {
    if !(target_pc > 0.0 && target_pc <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target conclusive probability {target_pc} outside (0, 1]"
        )));
    }
    let pc = |t: f64| conclusive_probability(&HeterodyneModel::new(t, eta, region), alpha_sq);
    if pc(0.0) - target_pc <= tol {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = axis_mean(alpha_sq, eta).max(1.0);
    let mut doublings = 0;
    while pc(hi) > target_pc {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Convergence(format!(
                "no threshold bracket for P_C = {target_pc}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = pc(mid);
        if (value - target_pc).abs() <= tol {
            return Ok(mid);
        }
        if value > target_pc {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::Convergence(format!(
        "threshold bisection stalled at t = {} without reaching P_C = {target_pc} ± {tol}",
        0.5 * (lo + hi)
    )))
}

/// Heterodyne error at the threshold matching `target_pc`.
pub fn matched_error(target_pc: f64, alpha_sq: f64, eta: f64, region: Region) -> Result<(f64, f64)> {
    let t = match_threshold(target_pc, alpha_sq, eta, region, 1e-12 * target_pc)?;
    Ok((t, error_probability(&HeterodyneModel::new(t, eta, region), alpha_sq)))
}
