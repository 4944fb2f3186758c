//! Pilot-only receiver: LS channel estimates on the pilot subgrid, a
//! zero-padded 2D periodogram, global peak search and per-axis parabolic
//! refinement.
//!
//! Transform signs: the LS grid carries `exp(-j 2 pi tau n_p df k)` along
//! the pilot rows and `exp(+j 2 pi f_D m_p T_s l)` along the pilot columns.
//! The delay axis is therefore transformed with a positive exponent and the
//! Doppler axis with a negative one, which puts the peak at delay bin
//! `tau n_p df F_n` and Doppler bin `f_D m_p T_s F_m` (mod `F_m`).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::geometry::{beta_from_estimates, bistatic_velocity};
use crate::pilots::PilotPattern;
use crate::sim::{write_grid, FrameGrid};
use crate::{Error, OfdmNumerology, Result, SPEED_OF_LIGHT};

/// Smallest pilot modulus accepted by the LS division.
const PILOT_MODULUS_FLOOR: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodogramConfig {
    /// Transform size along the subcarrier (delay) axis.
    pub fft_n: usize,
    /// Transform size along the symbol (Doppler) axis.
    pub fft_m: usize,
    pub interpolate: bool,
}

impl Default for PeriodogramConfig {
    fn default() -> Self {
        PeriodogramConfig::square(4096)
    }
}

impl PeriodogramConfig {
    pub fn square(size: usize) -> Self {
        PeriodogramConfig {
            fft_n: size,
            fft_m: size,
            interpolate: true,
        }
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        for (axis, size, need) in [("fft_n", self.fft_n, rows), ("fft_m", self.fft_m, cols)] {
            if !size.is_power_of_two() {
                return Err(Error::FftConfig(format!("{axis} = {size} is not a power of two")));
            }
            if size < need {
                return Err(Error::FftConfig(format!(
                    "{axis} = {size} is smaller than the {need} pilot positions on that axis"
                )));
            }
        }
        Ok(())
    }
}

/// LS channel estimates on the pilot subgrid, row-major in the delay index.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

impl PilotGrid {
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.cols + l]
    }
}

/// `H_hat[k, l] = Y[k n_p, l m_p] / X[k n_p, l m_p]` for a periodic pattern.
pub fn ls_channel_estimate(
    received: &FrameGrid,
    transmitted: &FrameGrid,
    pattern: &PilotPattern,
) -> Result<PilotGrid> {
    let (n_p, m_p) = pattern.periodic_spacing().ok_or(Error::NotPeriodic)?;
    let (k_max, l_max) = pattern.periodic_extent().ok_or(Error::NotPeriodic)?;
    let grid = pattern.grid();
    for (name, g) in [("received", received), ("transmitted", transmitted)] {
        if (g.rows, g.cols) != grid {
            return Err(Error::GridMismatch(format!(
                "{name} grid {}x{} vs pattern {}x{}",
                g.rows, g.cols, grid.0, grid.1
            )));
        }
    }
    let (rows, cols) = (k_max + 1, l_max + 1);
    let mut values = Vec::with_capacity(rows * cols);
    for k in 0..rows {
        for l in 0..cols {
            let (n, m) = (k * n_p, l * m_p);
            let x = transmitted.get(n, m);
            let modulus = x.norm();
            if !(modulus >= PILOT_MODULUS_FLOOR) {
                return Err(Error::PilotModulus { n, m, modulus });
            }
            values.push(received.get(n, m) / x);
        }
    }
    Ok(PilotGrid { rows, cols, values })
}

/// Squared magnitude of the zero-padded 2D transform, `fft_n x fft_m`,
/// row-major in the delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSurface {
    pub fft_n: usize,
    pub fft_m: usize,
    pub power: Vec<f64>,
}

impl PowerSurface {
    pub fn get(&self, delay_bin: usize, doppler_bin: usize) -> f64 {
        self.power[delay_bin * self.fft_m + doppler_bin]
    }

    /// Global maximum; ties resolve to the first bin in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let (mut best, mut at) = (f64::NEG_INFINITY, 0);
        for (i, &p) in self.power.iter().enumerate() {
            if p > best {
                best = p;
                at = i;
            }
        }
        (at / self.fft_m, at % self.fft_m)
    }

    /// Dumps the surface in the binary grid format, power in the real part.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let values: Vec<Complex64> = self.power.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_grid(f, self.fft_n, self.fft_m, &values)
    }
}

/// Planned transforms for one periodogram size; cheap to share across
/// threads.
#[derive(Clone)]
pub struct Periodogram {
    config: PeriodogramConfig,
    doppler_fft: Arc<dyn Fft<f64>>,
    delay_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Periodogram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Periodogram").field("config", &self.config).finish()
    }
}

impl Periodogram {
    pub fn new(config: PeriodogramConfig) -> Self {
        let mut planner = FftPlanner::new();
        Periodogram {
            config,
            doppler_fft: planner.plan_fft_forward(config.fft_m),
            delay_fft: planner.plan_fft_inverse(config.fft_n),
        }
    }

    pub fn config(&self) -> PeriodogramConfig {
        self.config
    }

    pub fn compute(&self, grid: &PilotGrid) -> Result<PowerSurface> {
        let PeriodogramConfig { fft_n, fft_m, .. } = self.config;
        if grid.rows == 0 || grid.cols == 0 {
            return Err(Error::GridMismatch("empty pilot grid".into()));
        }
        self.config.validate(grid.rows, grid.cols)?;

        // Doppler transform of each non-zero pilot row.
        let zero = Complex64::new(0.0, 0.0);
        let mut rows = vec![zero; grid.rows * fft_m];
        for (k, row) in rows.chunks_exact_mut(fft_m).enumerate() {
            row[..grid.cols].copy_from_slice(&grid.values[k * grid.cols..(k + 1) * grid.cols]);
        }
        self.doppler_fft.process(&mut rows);

        // Delay transform along columns, done on a transposed buffer.
        let mut cols = vec![zero; fft_m * fft_n];
        for k in 0..grid.rows {
            for l in 0..fft_m {
                cols[l * fft_n + k] = rows[k * fft_m + l];
            }
        }
        self.delay_fft.process(&mut cols);

        let mut power = vec![0.0; fft_n * fft_m];
        for (l, col) in cols.chunks_exact(fft_n).enumerate() {
            for (b, v) in col.iter().enumerate() {
                power[b * fft_m + l] = v.norm_sqr();
            }
        }
        Ok(PowerSurface {
            fft_n,
            fft_m,
            power,
        })
    }
}

pub fn periodogram_2d(grid: &PilotGrid, config: PeriodogramConfig) -> Result<PowerSurface> {
    Periodogram::new(config).compute(grid)
}

/// Fractional bin offsets of the peak from a 3-point parabola per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRefinement {
    pub delay_offset: f64,
    pub doppler_offset: f64,
    /// The 3-point curvature vanished on that axis; its offset is 0.
    pub flat_delay: bool,
    pub flat_doppler: bool,
}

/// Vertex of the parabola through `(-1, before), (0, at), (1, after)`,
/// clamped to half a bin.
pub fn parabolic_offset(before: f64, at: f64, after: f64) -> (f64, bool) {
    let denom = before - 2.0 * at + after;
    if denom.abs() <= 1e-12 * at.abs() || denom == 0.0 {
        return (0.0, true);
    }
    (((before - after) / (2.0 * denom)).clamp(-0.5, 0.5), false)
}

/// Neighbours are taken circularly on both axes.
pub fn refine_peak(surface: &PowerSurface, peak: (usize, usize)) -> PeakRefinement {
    let (b, v) = peak;
    let (n, m) = (surface.fft_n, surface.fft_m);
    let at = surface.get(b, v);
    let (delay_offset, flat_delay) = parabolic_offset(
        surface.get((b + n - 1) % n, v),
        at,
        surface.get((b + 1) % n, v),
    );
    let (doppler_offset, flat_doppler) = parabolic_offset(
        surface.get(b, (v + m - 1) % m),
        at,
        surface.get(b, (v + 1) % m),
    );
    PeakRefinement {
        delay_offset,
        doppler_offset,
        flat_delay,
        flat_doppler,
    }
}

/// Delay and Doppler read off the periodogram, before any geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayDoppler {
    pub tau_hat: f64,
    pub doppler_hat: f64,
    pub peak_power: f64,
    pub peak_bins: (usize, usize),
    pub refinement: PeakRefinement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub tau_hat: f64,
    pub doppler_hat: f64,
    pub d_bis_hat: f64,
    pub v_bis_hat: f64,
    pub d_rx_hat: f64,
    pub beta_hat: f64,
    /// The bistatic-angle cosine was clamped into [-1, 1].
    pub beta_clamped: bool,
    pub peak_power: f64,
    pub peak_bins: (usize, usize),
    pub fractional_offsets: (f64, f64),
}

/// Periodogram receiver for one periodic pattern and numerology.
#[derive(Debug, Clone)]
pub struct Estimator {
    numerology: OfdmNumerology,
    pattern: PilotPattern,
    spacing: (usize, usize),
    periodogram: Periodogram,
}

impl Estimator {
    pub fn new(
        numerology: OfdmNumerology,
        pattern: PilotPattern,
        config: PeriodogramConfig,
    ) -> Result<Self> {
        numerology.validate()?;
        let spacing = pattern.periodic_spacing().ok_or(Error::NotPeriodic)?;
        if !pattern.fits(&numerology) {
            return Err(Error::GridMismatch(format!(
                "pattern grid {:?} does not match numerology",
                pattern.grid()
            )));
        }
        let (k, l) = pattern.periodic_extent().ok_or(Error::NotPeriodic)?;
        config.validate(k + 1, l + 1)?;
        Ok(Estimator {
            numerology,
            pattern,
            spacing,
            periodogram: Periodogram::new(config),
        })
    }

    pub fn config(&self) -> PeriodogramConfig {
        self.periodogram.config()
    }

    pub fn surface(&self, received: &FrameGrid, transmitted: &FrameGrid) -> Result<PowerSurface> {
        let grid = ls_channel_estimate(received, transmitted, &self.pattern)?;
        self.periodogram.compute(&grid)
    }

    /// Maps a refined peak to delay in `[0, 1 / (n_p df))` and Doppler in
    /// the signed interval `(-1, 1] / (2 m_p T_s)`.
    pub fn read_peak(&self, surface: &PowerSurface) -> DelayDoppler {
        let peak_bins = surface.argmax();
        let refinement = if self.config().interpolate {
            refine_peak(surface, peak_bins)
        } else {
            PeakRefinement {
                delay_offset: 0.0,
                doppler_offset: 0.0,
                flat_delay: false,
                flat_doppler: false,
            }
        };
        let (fft_n, fft_m) = (surface.fft_n as f64, surface.fft_m as f64);
        let (n_p, m_p) = self.spacing;

        let mut delay_pos = peak_bins.0 as f64 + refinement.delay_offset;
        if delay_pos < 0.0 {
            delay_pos += fft_n;
        } else if delay_pos >= fft_n {
            delay_pos -= fft_n;
        }
        let mut doppler_pos = peak_bins.1 as f64 + refinement.doppler_offset;
        if doppler_pos > fft_m / 2.0 {
            doppler_pos -= fft_m;
        } else if doppler_pos <= -fft_m / 2.0 {
            doppler_pos += fft_m;
        }

        DelayDoppler {
            tau_hat: delay_pos / (n_p as f64 * self.numerology.subcarrier_spacing * fft_n),
            doppler_hat: doppler_pos / (m_p as f64 * self.numerology.symbol_duration() * fft_m),
            peak_power: surface.get(peak_bins.0, peak_bins.1),
            peak_bins,
            refinement,
        }
    }

    pub fn delay_doppler(&self, received: &FrameGrid, transmitted: &FrameGrid) -> Result<DelayDoppler> {
        Ok(self.read_peak(&self.surface(received, transmitted)?))
    }

    /// Full estimate. `baseline` and `theta` are the known tx-rx distance
    /// and angle of arrival.
    pub fn estimate(
        &self,
        received: &FrameGrid,
        transmitted: &FrameGrid,
        baseline: f64,
        theta: f64,
    ) -> Result<EstimationResult> {
        let dd = self.delay_doppler(received, transmitted)?;
        self.finish(&dd, baseline, theta)
    }

    pub fn finish(&self, dd: &DelayDoppler, baseline: f64, theta: f64) -> Result<EstimationResult> {
        let d_bis_hat = SPEED_OF_LIGHT * dd.tau_hat;
        let beta = beta_from_estimates(d_bis_hat, baseline, theta)?;
        Ok(EstimationResult {
            tau_hat: dd.tau_hat,
            doppler_hat: dd.doppler_hat,
            d_bis_hat,
            v_bis_hat: bistatic_velocity(dd.doppler_hat, beta.beta, self.numerology.wavelength()),
            d_rx_hat: beta.d_rx,
            beta_hat: beta.beta,
            beta_clamped: beta.clamped,
            peak_power: dd.peak_power,
            peak_bins: dd.peak_bins,
            fractional_offsets: (dd.refinement.delay_offset, dd.refinement.doppler_offset),
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn estimate(
    received: &FrameGrid,
    transmitted: &FrameGrid,
    pattern: &PilotPattern,
    numerology: &OfdmNumerology,
    config: PeriodogramConfig,
    baseline: f64,
    theta: f64,
) -> Result<EstimationResult> {
    Estimator::new(*numerology, pattern.clone(), config)?.estimate(received, transmitted, baseline, theta)
}
