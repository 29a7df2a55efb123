//! Unambiguous discrimination of QPSK coherent states.
//!
//! Static (four-stage) and adaptive (M-stage) displacement + photon-counting
//! receivers, a thresholded heterodyne baseline, the optimal conclusive
//! probability for the alphabet, and a deterministic Monte Carlo engine.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {})", $tol);
    }};
}

pub mod bounds;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod heterodyne;
pub mod physics;
pub mod quadrature;
pub mod receivers;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use physics::{ChannelParams, StateIndex, TimingModel};
pub use receivers::{Decision, ReceiverConfig};
