//! Largest conclusive probability any measurement can reach for the QPSK alphabet.
//!
//! The four states are symmetric under a quarter-turn phase shift, so the
//! optimum is `4 · min_k λ_k`, where `λ_k` is the Poisson weight of photon
//! numbers `n ≡ k (mod 4)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInput {
    pub alpha_sq: f64,
    /// Absolute bound on the truncated Poisson tail.
    pub series_tolerance: f64,
    pub term_cap: usize,
}

impl BoundInput {
    pub fn new(alpha_sq: f64) -> Self {
        Self {
            alpha_sq,
            series_tolerance: 1e-15,
            term_cap: 500,
        }
    }
}

/// `λ_k = e^{−|α|²} Σ_{n ≡ k mod 4} |α|^{2n} / n!` for k = 0..3.
pub fn class_weights(input: &BoundInput) -> Result<[f64; 4]> {
    let a = input.alpha_sq;
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidConfig(format!("alpha_sq = {a} must be finite and >= 0")));
    }
    if input.series_tolerance.is_nan() || input.series_tolerance <= 0.0 {
        return Err(Error::InvalidConfig("series_tolerance must be > 0".into()));
    }
    let mut weights = [0.0; 4];
    let mut term = (-a).exp();
    for n in 0..input.term_cap {
        if n > 0 {
            term *= a / n as f64;
        }
        weights[n % 4] += term;
        // Once the ratio a/(n+1) drops below 1 the remaining terms are
        // dominated by a geometric series.
        let ratio = a / (n + 1) as f64;
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < input.series_tolerance {
            return Ok(weights);
        }
    }
    Err(Error::Numeric(format!(
        "photon-number series for alpha_sq = {a} not converged after {} terms",
        input.term_cap
    )))
}

pub fn optimal_conclusive_probability(input: &BoundInput) -> Result<f64> {
    let weights = class_weights(input)?;
    let smallest = weights.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((4.0 * smallest).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct summation with factorials in log space; independent of the
    /// ratio recurrence above.
    fn brute_force(a: f64) -> f64 {
        let mut lambda = [0.0; 4];
        for n in 0..400u32 {
            let log_term = -a + n as f64 * a.ln() - (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
            lambda[(n % 4) as usize] += log_term.exp();
        }
        4.0 * lambda.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn vacuum_cannot_be_discriminated() {
        assert_eq!(class_weights(&BoundInput::new(0.0)).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(optimal_conclusive_probability(&BoundInput::new(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn pinned_values() {
        let lambda3 = (-1.0f64).exp() * (1.0 / 6.0 + 1.0 / 5040.0 + 1.0 / 39_916_800.0 + 1.0 / 1_307_674_368_000.0);
        assert_close!(lambda3, 0.0613862, 1e-7);
        let at1 = optimal_conclusive_probability(&BoundInput::new(1.0)).unwrap();
        assert_close!(at1, 4.0 * lambda3, 1e-12);
        assert_close!(at1, 0.2455450, 1e-6);
        let at2 = optimal_conclusive_probability(&BoundInput::new(2.0)).unwrap();
        assert_close!(at2, 0.7355643, 1e-6);
        for &a in &[0.3, 1.0, 2.0, 5.5, 12.0, 40.0] {
            assert_close!(
                optimal_conclusive_probability(&BoundInput::new(a)).unwrap(),
                brute_force(a),
                1e-12
            );
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for k in 0..=100 {
            let a = k as f64 * 0.5;
            let total: f64 = class_weights(&BoundInput::new(a)).unwrap().iter().sum();
            assert_close!(total, 1.0, 1e-12);
        }
    }

    #[test]
    fn monotone_and_saturating() {
        let mut last = 0.0;
        for k in 0..=250 {
            let v = optimal_conclusive_probability(&BoundInput::new(k as f64 * 0.1)).unwrap();
            assert!(v >= last - 1e-15, "decreased at {}", k as f64 * 0.1);
            last = v;
        }
        assert!(optimal_conclusive_probability(&BoundInput::new(25.0)).unwrap() > 0.999);
    }

    #[test]
    fn term_cap_reports_non_convergence() {
        let input = BoundInput {
            term_cap: 10,
            ..BoundInput::new(30.0)
        };
        assert!(matches!(optimal_conclusive_probability(&input), Err(Error::Numeric(_))));
        assert!(class_weights(&BoundInput::new(-1.0)).is_err());
    }
}
