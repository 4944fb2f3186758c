//! Fisher information and Cramer-Rao bounds for bistatic range and velocity.
//!
//! The unknowns are `eta = [alpha_re, alpha_im, f_D, tau]`. For unit-modulus
//! pilots the Fisher matrix depends on the pattern only through the index
//! sums in [`PatternStats`]; the complex gain is a nuisance parameter removed
//! by a Schur complement, which leaves the 2x2 equivalent Fisher matrix
//! (EFIM) on `(f_D, tau)`:
//!
//! ```text
//! J_e = 8 pi^2 |alpha|^2 / sigma^2 * [[T_s^2 Q_M2,      -T_s df Q_NM],
//!                                     [-T_s df Q_NM,    df^2 Q_N2  ]]
//! ```
//!
//! The velocity bound uses `T_s^2` (consistent with the EFIM above and
//! with the periodic closed form); a `T_s^1` variant of the generic velocity
//! expression appears in some write-ups and is a typo.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pilots::{pattern_stats, periodic_stats_closed_form, ratio_to_f64, PatternStats, PilotPattern};
use crate::sim::{channel_coefficient, ScenarioDistribution};
use crate::{rng, Error, OfdmNumerology, Result, Snr, SPEED_OF_LIGHT};

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

/// Single-target channel parameters and the noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingChannelParams {
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// Delay in seconds.
    pub tau: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
    /// Complex noise variance per resource element.
    pub noise_var: f64,
}

impl SensingChannelParams {
    /// Unit gain with zero phase; the noise variance is set from the SNR.
    pub fn from_snr(snr: Snr, tau: f64, doppler: f64) -> Self {
        SensingChannelParams {
            alpha_re: 1.0,
            alpha_im: 0.0,
            tau,
            doppler,
            noise_var: 1.0 / snr.linear(),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_re, self.alpha_im)
    }

    pub fn gain_power(&self) -> f64 {
        self.alpha_re * self.alpha_re + self.alpha_im * self.alpha_im
    }

    pub fn snr(&self) -> Snr {
        Snr::from_linear(self.gain_power() / self.noise_var)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }
}

/// Analytic derivatives of `mu = H X` at cell `(n, m)` with respect to
/// `[alpha_re, alpha_im, f_D, tau]`.
pub fn mean_derivatives(
    params: &SensingChannelParams,
    numerology: &OfdmNumerology,
    n: usize,
    m: usize,
    symbol: Complex64,
) -> [Complex64; 4] {
    let unit = SensingChannelParams {
        alpha_re: 1.0,
        alpha_im: 0.0,
        ..*params
    };
    let e = channel_coefficient(&unit, numerology, n, m) * symbol;
    let j = Complex64::i();
    let a = params.alpha();
    [
        e,
        j * e,
        j * a * (2.0 * PI * m as f64 * numerology.symbol_duration()) * e,
        -j * a * (2.0 * PI * n as f64 * numerology.subcarrier_spacing) * e,
    ]
}

/// The Fisher matrix in block form, `J = scale * [[A, B], [C, D]]` with
/// `scale = 2 / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherBlocks {
    pub a: Mat2,
    pub b: Mat2,
    pub c: Mat2,
    pub d: Mat2,
    pub scale: f64,
}

impl FisherBlocks {
    pub fn full(&self) -> Mat4 {
        let mut j = [[0.0; 4]; 4];
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] = self.scale * self.a[r][c];
                j[r][c + 2] = self.scale * self.b[r][c];
                j[r + 2][c] = self.scale * self.c[r][c];
                j[r + 2][c + 2] = self.scale * self.d[r][c];
            }
        }
        j
    }
}

pub fn fisher_matrix(
    params: &SensingChannelParams,
    pattern: &PilotPattern,
    numerology: &OfdmNumerology,
) -> FisherBlocks {
    fisher_from_stats(params, &pattern_stats(pattern), numerology)
}

pub fn fisher_from_stats(
    params: &SensingChannelParams,
    stats: &PatternStats,
    numerology: &OfdmNumerology,
) -> FisherBlocks {
    let ts = numerology.symbol_duration();
    let df = numerology.subcarrier_spacing;
    let (ar, ai) = (params.alpha_re, params.alpha_im);
    let p = stats.cardinality as f64;
    let sn = stats.sum_n as f64;
    let sm = stats.sum_m as f64;
    let two_pi = 2.0 * PI;

    let b = [
        [-two_pi * ai * ts * sm, two_pi * ai * df * sn],
        [two_pi * ar * ts * sm, -two_pi * ar * df * sn],
    ];
    let g = 4.0 * PI * PI * params.gain_power();
    let cross = -g * ts * df * stats.sum_nm as f64;
    FisherBlocks {
        a: [[p, 0.0], [0.0, p]],
        b,
        c: transpose(&b),
        d: [
            [g * ts * ts * stats.sum_m2 as f64, cross],
            [cross, g * df * df * stats.sum_n2 as f64],
        ],
        scale: 2.0 / params.noise_var,
    }
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn mul2(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = x[r][0] * y[0][c] + x[r][1] * y[1][c];
        }
    }
    out
}

pub fn inverse2(m: &Mat2) -> Option<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// EFIM on `(f_D, tau)` by the Schur complement `scale * (D - C A^-1 B)`.
pub fn efim(
    params: &SensingChannelParams,
    pattern: &PilotPattern,
    numerology: &OfdmNumerology,
) -> Result<Mat2> {
    let stats = pattern_stats(pattern);
    if !stats.is_nondegenerate() {
        return Err(Error::SingularPattern);
    }
    let blocks = fisher_from_stats(params, &stats, numerology);
    let a_inv = inverse2(&blocks.a).ok_or(Error::SingularPattern)?;
    let cab = mul2(&blocks.c, &mul2(&a_inv, &blocks.b));
    let mut je = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            je[r][c] = blocks.scale * (blocks.d[r][c] - cab[r][c]);
        }
    }
    Ok(je)
}

/// EFIM written directly in terms of the Q statistics.
pub fn efim_from_stats(
    params: &SensingChannelParams,
    stats: &PatternStats,
    numerology: &OfdmNumerology,
) -> Mat2 {
    let ts = numerology.symbol_duration();
    let df = numerology.subcarrier_spacing;
    let k = 8.0 * PI * PI * params.gain_power() / params.noise_var;
    let off = -k * ts * df * stats.q_nm;
    [[k * ts * ts * stats.q_m2, off], [off, k * df * df * stats.q_n2]]
}

/// Range and velocity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// Bistatic range bound, m^2.
    #[serde(rename = "crb_ran_m2")]
    pub crb_ran: f64,
    /// Bistatic velocity bound, (m/s)^2.
    #[serde(rename = "crb_vel_ms2")]
    pub crb_vel: f64,
    #[serde(rename = "sqrt_crb_ran_m")]
    pub rmse_bound_ran: f64,
    #[serde(rename = "sqrt_crb_vel_ms")]
    pub rmse_bound_vel: f64,
    #[serde(skip)]
    pub efim: Mat2,
}

fn assemble(
    params: &SensingChannelParams,
    numerology: &OfdmNumerology,
    beta: f64,
    range_factor: f64,
    velocity_factor: f64,
    efim: Mat2,
) -> CrbReport {
    let snr_inv = params.noise_var / params.gain_power();
    let df = numerology.subcarrier_spacing;
    let ts = numerology.symbol_duration();
    let lambda = numerology.wavelength();
    let cos_half = (beta / 2.0).cos();

    let crb_ran =
        range_factor * (snr_inv * SPEED_OF_LIGHT * SPEED_OF_LIGHT / (8.0 * PI * PI * df * df));
    let crb_vel = velocity_factor
        * (snr_inv * lambda * lambda / (32.0 * PI * PI * ts * ts * cos_half * cos_half));
    CrbReport {
        crb_ran,
        crb_vel,
        rmse_bound_ran: crb_ran.sqrt(),
        rmse_bound_vel: crb_vel.sqrt(),
        efim,
    }
}

/// Bounds for an arbitrary pattern. `beta` is the true bistatic angle.
pub fn crb(
    params: &SensingChannelParams,
    pattern: &PilotPattern,
    numerology: &OfdmNumerology,
    beta: f64,
) -> Result<CrbReport> {
    crb_from_stats(params, &pattern_stats(pattern), numerology, beta)
}

pub fn crb_from_stats(
    params: &SensingChannelParams,
    stats: &PatternStats,
    numerology: &OfdmNumerology,
    beta: f64,
) -> Result<CrbReport> {
    params.validate()?;
    let range_factor = stats.range_factor()?;
    let velocity_factor = stats.velocity_factor()?;
    Ok(assemble(
        params,
        numerology,
        beta,
        range_factor,
        velocity_factor,
        efim_from_stats(params, stats, numerology),
    ))
}

/// Bounds for the periodic pattern `(n_p, m_p)` from its closed form,
/// without building the pattern.
pub fn crb_periodic_closed_form(
    params: &SensingChannelParams,
    numerology: &OfdmNumerology,
    n_p: usize,
    m_p: usize,
    beta: f64,
) -> Result<CrbReport> {
    params.validate()?;
    let stats = periodic_stats_closed_form(numerology.subcarriers, numerology.symbols, n_p, m_p)?;
    let k = ((numerology.subcarriers - 1) / n_p) as i128;
    let l = ((numerology.symbols - 1) / m_p) as i128;
    if k == 0 {
        return Err(Error::Unobservable { axis: "range" });
    }
    if l == 0 {
        return Err(Error::Unobservable { axis: "velocity" });
    }
    let pilots = stats.cardinality as i128;
    let (np, mp) = (n_p as i128, m_p as i128);
    let range_factor = ratio_to_f64(12, k * (k + 2) * pilots * np * np);
    let velocity_factor = ratio_to_f64(12, l * (l + 2) * pilots * mp * mp);
    Ok(assemble(
        params,
        numerology,
        beta,
        range_factor,
        velocity_factor,
        efim_from_stats(params, &stats, numerology),
    ))
}

/// Monte Carlo mean of the velocity RMSE bound over random geometries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcrbEstimate {
    /// Mean of `sqrt(CRB_vel)` over the valid draws, m/s.
    pub ecrb_vel: f64,
    pub draws: usize,
    /// Draws that produced a degenerate geometry and were skipped.
    pub skipped: usize,
}

impl EcrbEstimate {
    pub fn skip_fraction(&self) -> f64 {
        self.skipped as f64 / self.draws as f64
    }
}

/// Averages `sqrt(CRB_vel)` over bistatic angles induced by `distribution`.
/// Draw `i` uses its own stream derived from `(seed, i)`, so the result does
/// not depend on the rayon pool size.
pub fn ecrb_vel(
    distribution: &ScenarioDistribution,
    params: &SensingChannelParams,
    pattern: &PilotPattern,
    numerology: &OfdmNumerology,
    draws: usize,
    seed: u64,
) -> Result<EcrbEstimate> {
    if draws == 0 {
        return Err(Error::InvalidConfig("ecrb needs at least one draw".into()));
    }
    let stats = pattern_stats(pattern);
    // Only beta changes between draws; evaluate the rest once at beta = 0.
    let base = crb_from_stats(params, &stats, numerology, 0.0)?;
    let samples: Vec<Option<f64>> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, &[i as u64]);
            distribution
                .sample(&mut rng)
                .ok()
                .map(|(_, truth)| base.rmse_bound_vel / (truth.beta / 2.0).cos())
        })
        .collect();
    let valid: Vec<f64> = samples.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(Error::InvalidConfig(
            "every geometry draw was degenerate".into(),
        ));
    }
    Ok(EcrbEstimate {
        ecrb_vel: valid.iter().sum::<f64>() / valid.len() as f64,
        draws,
        skipped: draws - valid.len(),
    })
}

/// Ergodic rate upper bound `N (1 - rho) / T_s * log2(1 + snr)` in bit/s.
pub fn rate_upper_bound(numerology: &OfdmNumerology, rho: f64, snr_comm: Snr) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!(
            "pilot overhead must lie in [0, 1], got {rho}"
        )));
    }
    if !(snr_comm.linear() >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "communication SNR must be non-negative, got {}",
            snr_comm.linear()
        )));
    }
    Ok(numerology.subcarriers as f64 * (1.0 - rho) / numerology.symbol_duration()
        * (1.0 + snr_comm.linear()).log2())
}
