//! Bistatic OFDM sensing laboratory.
//!
//! Two halves live here. The analytic half computes Fisher information and
//! Cramer-Rao bounds for bistatic range and velocity as a function of the
//! pilot pattern. The simulation half generates pilot-bearing OFDM frames,
//! passes them through a single-target delay-Doppler channel, and runs a
//! least-squares / 2D periodogram receiver so the measured RMSE can be laid
//! next to the bounds.
//!
//! Module map:
//!
//! - [`geometry`]: Cartesian scenarios to delay, Doppler, bistatic angle and back.
//! - [`numerology`]: OFDM frame dimensions and timing.
//! - [`pilots`]: pilot sets, overhead and the index statistics the bounds need.
//! - [`bounds`]: Fisher matrix, EFIM, CRBs, expected CRB, rate upper bound.
//! - [`sim`]: QPSK frames, the channel, noise, scenario sampling, grid files.
//! - [`estimator`]: LS estimates, periodogram, peak refinement, estimates.
//! - [`harness`]: SNR sweeps, table reproduction and CSV/JSON output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod numerology;
pub mod pilots;
pub mod rng;
pub mod sim;
pub mod snr;

pub use error::{Error, Result};
pub use numerology::OfdmNumerology;
pub use snr::Snr;

/// Speed of light in m/s. Fixed at 3e8 rather than the CODATA value.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
