use serde::{Deserialize, Serialize};

/// A power ratio. Constructed from dB at API boundaries; the math uses
/// the linear value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snr(f64);

impl Snr {
    pub fn from_db(db: f64) -> Self {
        Snr(10f64.powf(db / 10.0))
    }

    pub fn from_linear(ratio: f64) -> Self {
        Snr(ratio)
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}
