use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// OFDM frame dimensions and timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    /// Number of subcarriers `N`.
    pub subcarriers: usize,
    /// Number of OFDM symbols `M`.
    pub symbols: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Cyclic prefix duration in seconds.
    pub cp_duration: f64,
    /// Carrier frequency in Hz.
    pub carrier: f64,
}

impl Default for OfdmNumerology {
    /// 70 subcarriers at 200 kHz, 50 symbols, 1 us CP, 30 GHz carrier.
    fn default() -> Self {
        OfdmNumerology {
            subcarriers: 70,
            symbols: 50,
            subcarrier_spacing: 200e3,
            cp_duration: 1e-6,
            carrier: 30e9,
        }
    }
}

impl OfdmNumerology {
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers == 0 || self.symbols == 0 {
            return Err(Error::InvalidNumerology(format!(
                "grid must be non-empty, got {}x{}",
                self.subcarriers, self.symbols
            )));
        }
        for (name, v) in [
            ("subcarrier_spacing", self.subcarrier_spacing),
            ("cp_duration", self.cp_duration),
            ("carrier", self.carrier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidNumerology(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Useful symbol duration `T = 1 / delta_f`.
    pub fn useful_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Total symbol duration `T_s = T + T_cp`.
    pub fn symbol_duration(&self) -> f64 {
        self.useful_duration() + self.cp_duration
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Largest ISI-free bistatic range, `c T_cp`.
    pub fn max_isi_free_range(&self) -> f64 {
        SPEED_OF_LIGHT * self.cp_duration
    }

    pub fn cells(&self) -> usize {
        self.subcarriers * self.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_timing() {
        let n = OfdmNumerology::default();
        n.validate().unwrap();
        assert!((n.useful_duration() - 5e-6).abs() < 1e-18);
        assert!((n.symbol_duration() - 6e-6).abs() < 1e-18);
        assert!((n.wavelength() - 0.01).abs() < 1e-15);
        assert!((n.max_isi_free_range() - 300.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        let n = OfdmNumerology {
            subcarriers: 0,
            ..OfdmNumerology::default()
        };
        assert!(n.validate().is_err());
        let n = OfdmNumerology {
            cp_duration: -1.0,
            ..OfdmNumerology::default()
        };
        assert!(n.validate().is_err());
    }
}
