//! Frequency-domain forward model of one OFDM frame.
//!
//! The simulation works directly on the post-DFT resource grid: a QPSK
//! frame `X` is multiplied cell by cell with the single-target channel
//! `H[n, m] = alpha exp(j 2 pi (f_D m T_s - tau n df))` and complex white
//! Gaussian noise is added. No time-domain waveform, CP or ICI is modelled.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::SensingChannelParams;
use crate::geometry::{derive_ground_truth, BistaticScenario, Point2, SensingGroundTruth};
use crate::pilots::PilotPattern;
use crate::{rng, Error, OfdmNumerology, Result};

/// `x - round(x)`: exact for |x| < 2^52, keeps phase arguments small.
fn wrap_cycles(x: f64) -> f64 {
    x - x.round()
}

/// Channel coefficient at subcarrier `n`, symbol `m`.
pub fn channel_coefficient(
    params: &SensingChannelParams,
    numerology: &OfdmNumerology,
    n: usize,
    m: usize,
) -> Complex64 {
    let doppler_cycles = wrap_cycles(params.doppler * numerology.symbol_duration() * m as f64);
    let delay_cycles = wrap_cycles(params.tau * numerology.subcarrier_spacing * n as f64);
    params.alpha() * Complex64::cis(2.0 * PI * (doppler_cycles - delay_cycles))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridRole {
    Transmitted,
    Channel,
    Received,
    LsEstimate,
}

/// `N x M` complex grid stored row-major in the subcarrier index.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
    pub role: GridRole,
    /// Pilot flags for transmitted frames, same layout as `values`.
    pub pilot_mask: Option<Vec<bool>>,
}

impl FrameGrid {
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.values[n * self.cols + m]
    }

    pub fn set(&mut self, n: usize, m: usize, v: Complex64) {
        self.values[n * self.cols + m] = v;
    }

    pub fn is_pilot(&self, n: usize, m: usize) -> bool {
        self.pilot_mask
            .as_ref()
            .is_some_and(|mask| mask[n * self.cols + m])
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_grid(w, self.rows, self.cols, &self.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn read_from<R: Read>(r: R, role: GridRole) -> Result<Self> {
        let (rows, cols, values) = read_grid(r)?;
        Ok(FrameGrid {
            rows,
            cols,
            values,
            role,
            pilot_mask: None,
        })
    }
}

/// Binary grid layout: little-endian `u32` rows, `u32` cols, then
/// `rows * cols` pairs of `f64` `(re, im)`, row-major in the first index.
pub fn write_grid<W: Write>(mut w: W, rows: usize, cols: usize, values: &[Complex64]) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::GridMismatch(format!(
            "{} values for a {rows}x{cols} grid",
            values.len()
        )));
    }
    let dim = |x: usize| {
        u32::try_from(x).map_err(|_| Error::GridMismatch(format!("dimension {x} exceeds u32")))
    };
    w.write_all(&dim(rows)?.to_le_bytes())?;
    w.write_all(&dim(cols)?.to_le_bytes())?;
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<(usize, usize, Vec<Complex64>)> {
    let mut u = [0u8; 4];
    r.read_exact(&mut u)?;
    let rows = u32::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let cols = u32::from_le_bytes(u) as usize;
    let mut values = Vec::with_capacity(rows * cols);
    let mut f = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut f)?;
        let re = f64::from_le_bytes(f);
        r.read_exact(&mut f)?;
        values.push(Complex64::new(re, f64::from_le_bytes(f)));
    }
    Ok((rows, cols, values))
}

/// Gray-mapped QPSK: bit 0 picks the sign of I, bit 1 the sign of Q.
pub fn qpsk(bits: u8) -> Complex64 {
    let i = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let q = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(i, q)
}

/// A seeded QPSK frame. Pilot and data cells are drawn from the same
/// alphabet; the pilot cells are flagged in `pilot_mask`.
pub fn generate_frame(
    numerology: &OfdmNumerology,
    pattern: &PilotPattern,
    seed: u64,
) -> Result<FrameGrid> {
    numerology.validate()?;
    if !pattern.fits(numerology) {
        return Err(Error::GridMismatch(format!(
            "pattern grid {:?} does not match numerology {}x{}",
            pattern.grid(),
            numerology.subcarriers,
            numerology.symbols
        )));
    }
    let mut rng = rng::stream(seed, &[]);
    let values = (0..numerology.cells())
        .map(|_| qpsk(rng.random::<u8>() & 3))
        .collect();
    Ok(FrameGrid {
        rows: numerology.subcarriers,
        cols: numerology.symbols,
        values,
        role: GridRole::Transmitted,
        pilot_mask: Some(pattern.mask()),
    })
}

pub fn channel_grid(params: &SensingChannelParams, numerology: &OfdmNumerology) -> FrameGrid {
    let (rows, cols) = (numerology.subcarriers, numerology.symbols);
    let values = (0..rows)
        .flat_map(|n| (0..cols).map(move |m| (n, m)))
        .map(|(n, m)| channel_coefficient(params, numerology, n, m))
        .collect();
    FrameGrid {
        rows,
        cols,
        values,
        role: GridRole::Channel,
        pilot_mask: None,
    }
}

#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub received: FrameGrid,
    /// The delay exceeds the cyclic prefix, so the frequency-domain model
    /// would not hold for a real ISI-affected receiver.
    pub isi_violation: bool,
}

/// `Y = H X + Z` with `Z ~ CN(0, sigma^2)` i.i.d. per cell.
pub fn apply_channel(
    transmitted: &FrameGrid,
    params: &SensingChannelParams,
    numerology: &OfdmNumerology,
    seed: u64,
) -> Result<ChannelOutput> {
    if transmitted.rows != numerology.subcarriers || transmitted.cols != numerology.symbols {
        return Err(Error::GridMismatch(format!(
            "frame {}x{} vs numerology {}x{}",
            transmitted.rows, transmitted.cols, numerology.subcarriers, numerology.symbols
        )));
    }
    if !(params.noise_var >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be non-negative, got {}",
            params.noise_var
        )));
    }
    let h = channel_grid(params, numerology);
    let mut values: Vec<Complex64> = h
        .values
        .iter()
        .zip(&transmitted.values)
        .map(|(h, x)| h * x)
        .collect();
    if params.noise_var > 0.0 {
        let sd = (params.noise_var / 2.0).sqrt();
        let mut rng = rng::stream(seed, &[]);
        for v in &mut values {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(sd * re, sd * im);
        }
    }
    Ok(ChannelOutput {
        received: FrameGrid {
            rows: transmitted.rows,
            cols: transmitted.cols,
            values,
            role: GridRole::Received,
            pilot_mask: None,
        },
        isi_violation: params.tau > numerology.cp_duration,
    })
}

/// Uniform target box and velocity ranges around fixed tx/rx positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    pub tx: Point2,
    pub rx: Point2,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Signed speed range, m/s.
    pub speed_range: (f64, f64),
    /// Velocity-to-bisector angle range, radians.
    pub delta_range: (f64, f64),
    pub carrier: f64,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        ScenarioDistribution {
            tx: Point2::new(-40.0, 0.0),
            rx: Point2::new(0.0, 40.0),
            x_range: (80.0, 100.0),
            y_range: (-100.0, -80.0),
            speed_range: (-30.0, 30.0),
            delta_range: (-5f64.to_radians(), 5f64.to_radians()),
            carrier: 30e9,
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

impl ScenarioDistribution {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("x_range", self.x_range),
            ("y_range", self.y_range),
            ("speed_range", self.speed_range),
            ("delta_range", self.delta_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be an ordered finite interval, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Draws target x, y, speed and delta in that order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(BistaticScenario, SensingGroundTruth)> {
        let x = uniform(rng, self.x_range);
        let y = uniform(rng, self.y_range);
        let speed = uniform(rng, self.speed_range);
        let delta = uniform(rng, self.delta_range);
        let scenario = BistaticScenario {
            tx: self.tx,
            rx: self.rx,
            target: Point2::new(x, y),
            speed,
            delta,
            carrier: self.carrier,
        };
        let truth = derive_ground_truth(&scenario)?;
        Ok((scenario, truth))
    }
}

pub fn sample_scenario(
    distribution: &ScenarioDistribution,
    seed: u64,
) -> Result<(BistaticScenario, SensingGroundTruth)> {
    distribution.validate()?;
    distribution.sample(&mut rng::stream(seed, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pilots::make_periodic;
    use crate::Snr;

    fn num() -> OfdmNumerology {
        OfdmNumerology::default()
    }

    #[test]
    fn frames_are_unit_modulus_and_reproducible() {
        let p = make_periodic(70, 50, 2, 5).unwrap();
        let a = generate_frame(&num(), &p, 9).unwrap();
        assert!(a.values.iter().all(|x| (x.norm() - 1.0).abs() < 1e-15));
        assert_eq!(a, generate_frame(&num(), &p, 9).unwrap());
        assert_ne!(a.values, generate_frame(&num(), &p, 10).unwrap().values);
        let pilots = a.pilot_mask.as_ref().unwrap().iter().filter(|&&b| b).count();
        assert_eq!(pilots, p.len());
        assert!(a.is_pilot(2, 5) && !a.is_pilot(1, 5));
    }

    #[test]
    fn frame_rejects_mismatched_pattern() {
        let p = make_periodic(10, 50, 2, 5).unwrap();
        assert!(generate_frame(&num(), &p, 0).is_err());
    }

    #[test]
    fn identity_channel() {
        let p = make_periodic(70, 50, 1, 1).unwrap();
        let x = generate_frame(&num(), &p, 1).unwrap();
        let params = SensingChannelParams {
            alpha_re: 1.0,
            alpha_im: 0.0,
            tau: 0.0,
            doppler: 0.0,
            noise_var: 0.0,
        };
        let y = apply_channel(&x, &params, &num(), 2).unwrap();
        assert_eq!(y.received.values, x.values);
        assert!(!y.isi_violation);
    }

    #[test]
    fn delay_rotates_across_subcarriers() {
        let params = SensingChannelParams {
            alpha_re: 1.0,
            alpha_im: 0.0,
            tau: 1e-6,
            doppler: 0.0,
            noise_var: 0.0,
        };
        let h = channel_grid(&params, &num());
        for n in 0..69 {
            let step = (h.get(n + 1, 3) / h.get(n, 3)).arg();
            assert!((step + 2.0 * PI * 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn isi_flag() {
        let p = make_periodic(70, 50, 1, 1).unwrap();
        let x = generate_frame(&num(), &p, 1).unwrap();
        let params = SensingChannelParams::from_snr(Snr::from_db(10.0), 1.5e-6, 0.0);
        assert!(apply_channel(&x, &params, &num(), 2).unwrap().isi_violation);
    }

    #[test]
    fn noise_variance_and_energy() {
        let big = OfdmNumerology {
            subcarriers: 1000,
            symbols: 1000,
            ..num()
        };
        let p = make_periodic(1000, 1000, 10, 10).unwrap();
        let x = generate_frame(&big, &p, 3).unwrap();
        let params = SensingChannelParams {
            alpha_re: 0.6,
            alpha_im: -0.8,
            tau: 0.7e-6,
            doppler: 1234.0,
            noise_var: 0.5,
        };
        let y = apply_channel(&x, &params, &big, 4).unwrap().received;
        let h = channel_grid(&params, &big);
        let cells = big.cells() as f64;
        let mut noise_power = 0.0;
        let mut re2 = 0.0;
        let mut energy = 0.0;
        for i in 0..big.cells() {
            let z = y.values[i] - h.values[i] * x.values[i];
            noise_power += z.norm_sqr();
            re2 += z.re * z.re;
            energy += y.values[i].norm_sqr();
        }
        assert!((noise_power / cells / 0.5 - 1.0).abs() < 0.01);
        assert!((re2 / cells / 0.25 - 1.0).abs() < 0.01);
        assert!((energy / cells / 1.5 - 1.0).abs() < 0.01);
    }

    #[test]
    fn grid_binary_layout() {
        let g = FrameGrid {
            rows: 2,
            cols: 3,
            values: (0..6).map(|i| Complex64::new(i as f64, -(i as f64) / 2.0)).collect(),
            role: GridRole::Channel,
            pilot_mask: None,
        };
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 6 * 16);
        assert_eq!(&buf[..8], &[2, 0, 0, 0, 3, 0, 0, 0]);
        // Cell (0, 1) sits right after cell (0, 0).
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), -0.5);
        let back = FrameGrid::read_from(&buf[..], GridRole::Channel).unwrap();
        assert_eq!(back, g);
        assert!(write_grid(Vec::new(), 2, 2, &g.values).is_err());
    }

    #[test]
    fn scenario_defaults_and_point_mass() {
        let d = ScenarioDistribution::default();
        assert_eq!(d.x_range, (80.0, 100.0));
        assert_eq!(d.y_range, (-100.0, -80.0));
        assert_eq!(d.speed_range, (-30.0, 30.0));
        assert!((d.delta_range.1.to_degrees() - 5.0).abs() < 1e-12);

        let point = ScenarioDistribution {
            x_range: (90.0, 90.0),
            y_range: (-90.0, -90.0),
            speed_range: (12.0, 12.0),
            delta_range: (0.02, 0.02),
            ..d
        };
        let (s, truth) = sample_scenario(&point, 77).unwrap();
        assert_eq!(s.target, Point2::new(90.0, -90.0));
        assert_eq!(truth, derive_ground_truth(&s).unwrap());
    }

    #[test]
    fn scenario_box_mean() {
        let d = ScenarioDistribution::default();
        let mut rng = rng::stream(5, &[]);
        let mean = (0..100_000)
            .map(|_| d.sample(&mut rng).unwrap().0.target.x)
            .sum::<f64>()
            / 100_000.0;
        assert!((mean - 90.0).abs() < 0.2);
    }

    #[test]
    fn scenario_rejects_reversed_interval() {
        let d = ScenarioDistribution {
            x_range: (100.0, 80.0),
            ..Default::default()
        };
        assert!(sample_scenario(&d, 0).is_err());
    }
}
