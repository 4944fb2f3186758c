//! Experiment orchestration: Monte Carlo SNR sweeps, the bound table over
//! pilot spacings at fixed overhead, and the rate table.
//!
//! Each trial derives its own random streams from the master seed and its
//! `(snr index, trial index)` label, and results are gathered in trial
//! order, so outputs are byte-identical for any worker count.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{crb, ecrb_vel, rate_upper_bound, SensingChannelParams};
use crate::estimator::{Estimator, PeriodogramConfig};
use crate::pilots::{make_periodic, PilotPattern};
use crate::rng::{derive_seed, stream};
use crate::sim::{apply_channel, generate_frame, ScenarioDistribution};
use crate::{Error, OfdmNumerology, Result, Snr};

/// Identifies the sweep CSV column layout; bumped on any column change.
pub const SWEEP_SCHEMA: &str = "isac-sweep/1";

const TAG_SCENARIO: u64 = 1;
const TAG_FRAME: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_ECRB: u64 = 4;

fn default_ecrb_draws() -> usize {
    10_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub numerology: OfdmNumerology,
    pub pattern: PilotPattern,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    pub scenario: ScenarioDistribution,
    pub fft: PeriodogramConfig,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    /// Geometry draws behind the expected velocity bound column.
    #[serde(default = "default_ecrb_draws")]
    pub ecrb_draws: usize,
}

impl Default for ExperimentConfig {
    /// Desk-scale run: rho = 0.5 pattern, 0..30 dB in 5 dB steps,
    /// 200 trials per point, 1024-point transforms.
    fn default() -> Self {
        let numerology = OfdmNumerology::default();
        ExperimentConfig {
            pattern: make_periodic(numerology.subcarriers, numerology.symbols, 2, 1)
                .expect("default spacing fits the default grid"),
            numerology,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            trials_per_point: 200,
            scenario: ScenarioDistribution::default(),
            fft: PeriodogramConfig::square(1024),
            seed: 1,
            output: OutputPaths::default(),
            ecrb_draws: default_ecrb_draws(),
        }
    }
}

impl ExperimentConfig {
    /// 4096-point transforms and 1000 trials per point.
    pub fn full_scale(mut self) -> Self {
        self.fft = PeriodogramConfig::square(4096);
        self.trials_per_point = 1000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.numerology.validate()?;
        self.scenario.validate()?;
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("snr_grid_db is empty".into()));
        }
        if let Some(bad) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite SNR {bad}")));
        }
        if self.ecrb_draws == 0 {
            return Err(Error::InvalidConfig("ecrb_draws must be at least 1".into()));
        }
        if !self.pattern.fits(&self.numerology) {
            return Err(Error::InvalidConfig(format!(
                "pattern grid {:?} does not match numerology",
                self.pattern.grid()
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub rmse_range_m: f64,
    pub rmse_vel_ms: f64,
    pub sqrt_crb_ran_m: f64,
    pub ecrb_vel_ms: f64,
    pub valid_trial_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

fn rows_to_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_string(&self.rows)
    }
}

/// Config echo written next to a sweep CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub generator: String,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunManifest {
            schema: SWEEP_SCHEMA.to_string(),
            generator: format!("{}-v{}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            config: config.clone(),
        }
    }
}

/// Runs `job` on a dedicated pool of `workers` threads, or on the global
/// pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::InvalidConfig("worker count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trial {
    Valid { range_err: f64, vel_err: f64 },
    Invalid,
}

fn run_trial(
    config: &ExperimentConfig,
    estimator: &Estimator,
    snr: Snr,
    snr_index: usize,
    trial: usize,
) -> Result<Trial> {
    let t = trial as u64;
    // Geometry and symbols are shared across SNR points; only noise differs.
    let mut scenario_rng = stream(config.seed, &[TAG_SCENARIO, t]);
    let Ok((_, truth)) = config.scenario.sample(&mut scenario_rng) else {
        return Ok(Trial::Invalid);
    };
    let x = generate_frame(
        &config.numerology,
        &config.pattern,
        derive_seed(config.seed, &[TAG_FRAME, t]),
    )?;
    let params = SensingChannelParams::from_snr(snr, truth.tau, truth.doppler);
    let y = apply_channel(
        &x,
        &params,
        &config.numerology,
        derive_seed(config.seed, &[TAG_NOISE, snr_index as u64, t]),
    )?
    .received;
    Ok(match estimator.estimate(&y, &x, truth.baseline, truth.theta) {
        Ok(est) => Trial::Valid {
            range_err: est.d_bis_hat - truth.d_bis,
            vel_err: est.v_bis_hat - truth.v_bis,
        },
        Err(Error::RangeDomain { .. } | Error::DegenerateGeometry { .. }) => Trial::Invalid,
        Err(e) => return Err(e),
    })
}

/// RMSE of the estimator against the bounds at every SNR point.
pub fn run_sweep(config: &ExperimentConfig, workers: Option<usize>) -> Result<SweepResult> {
    config.validate()?;
    let estimator = Estimator::new(config.numerology, config.pattern.clone(), config.fft)?;
    let trials = config.trials_per_point;

    with_workers(workers, || {
        let mut rows = Vec::with_capacity(config.snr_grid_db.len());
        for (snr_index, &snr_db) in config.snr_grid_db.iter().enumerate() {
            let snr = Snr::from_db(snr_db);
            let outcomes: Vec<Trial> = (0..trials)
                .into_par_iter()
                .map(|t| run_trial(config, &estimator, snr, snr_index, t))
                .collect::<Result<_>>()?;

            let (mut n, mut se_range, mut se_vel) = (0usize, 0.0, 0.0);
            for o in &outcomes {
                if let Trial::Valid { range_err, vel_err } = *o {
                    n += 1;
                    se_range += range_err * range_err;
                    se_vel += vel_err * vel_err;
                }
            }
            let (rmse_range_m, rmse_vel_ms) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                ((se_range / n as f64).sqrt(), (se_vel / n as f64).sqrt())
            };

            let params = SensingChannelParams::from_snr(snr, 0.0, 0.0);
            let bound = crb(&params, &config.pattern, &config.numerology, 0.0)?;
            let ecrb = ecrb_vel(
                &config.scenario,
                &params,
                &config.pattern,
                &config.numerology,
                config.ecrb_draws,
                derive_seed(config.seed, &[TAG_ECRB]),
            )?;
            rows.push(SweepRow {
                snr_db,
                rmse_range_m,
                rmse_vel_ms,
                sqrt_crb_ran_m: bound.rmse_bound_ran,
                ecrb_vel_ms: ecrb.ecrb_vel,
                valid_trial_fraction: n as f64 / trials as f64,
            });
        }
        Ok(SweepResult { rows })
    })?
}

/// Writes the CSV and manifest named in `config.output`, if any.
pub fn write_outputs(config: &ExperimentConfig, result: &SweepResult) -> Result<()> {
    if let Some(path) = &config.output.csv {
        result.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    if let Some(path) = &config.output.manifest {
        let text = serde_json::to_string_pretty(&RunManifest::new(config))?;
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

/// The four spacings with 350 pilots on the default 70 x 50 grid.
pub const TABLE1_SPACINGS: [(usize, usize); 4] = [(1, 11), (2, 5), (5, 2), (11, 1)];

/// Spacings giving 2%, 10%, 50% and 100% overhead on the default grid.
pub const OVERHEAD_SPACINGS: [(usize, usize); 4] = [(10, 5), (2, 5), (2, 1), (1, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub numerology: OfdmNumerology,
    pub spacings: Vec<(usize, usize)>,
    pub snr_db: f64,
    pub scenario: ScenarioDistribution,
    pub draws: usize,
    pub seed: u64,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            numerology: OfdmNumerology::default(),
            spacings: TABLE1_SPACINGS.to_vec(),
            snr_db: 5.0,
            scenario: ScenarioDistribution::default(),
            draws: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n_p: usize,
    pub m_p: usize,
    pub pilots: usize,
    pub overhead: f64,
    pub sqrt_crb_ran_m: f64,
    pub ecrb_vel_ms: f64,
}

/// Range bound and expected velocity bound per pilot spacing.
pub fn run_table1(config: &Table1Config) -> Result<Vec<Table1Row>> {
    config.numerology.validate()?;
    config.scenario.validate()?;
    let params = SensingChannelParams::from_snr(Snr::from_db(config.snr_db), 0.0, 0.0);
    config
        .spacings
        .iter()
        .map(|&(n_p, m_p)| {
            let pattern = make_periodic(config.numerology.subcarriers, config.numerology.symbols, n_p, m_p)?;
            let range = crb(&params, &pattern, &config.numerology, 0.0)?;
            // Same geometry draws for every row.
            let ecrb = ecrb_vel(
                &config.scenario,
                &params,
                &pattern,
                &config.numerology,
                config.draws,
                config.seed,
            )?;
            Ok(Table1Row {
                n_p,
                m_p,
                pilots: pattern.len(),
                overhead: pattern.overhead(),
                sqrt_crb_ran_m: range.rmse_bound_ran,
                ecrb_vel_ms: ecrb.ecrb_vel,
            })
        })
        .collect()
}

pub fn table1_csv(rows: &[Table1Row]) -> Result<String> {
    rows_to_string(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTableConfig {
    pub numerology: OfdmNumerology,
    pub overheads: Vec<f64>,
    /// Average channel power over noise, dB.
    pub snr_comm_db: f64,
}

impl Default for RateTableConfig {
    fn default() -> Self {
        RateTableConfig {
            numerology: OfdmNumerology::default(),
            overheads: vec![0.02, 0.1, 0.5, 1.0],
            snr_comm_db: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub rho: f64,
    pub rate_mbps: f64,
}

pub fn run_rate_table(config: &RateTableConfig) -> Result<Vec<RateRow>> {
    let snr = Snr::from_db(config.snr_comm_db);
    config
        .overheads
        .iter()
        .map(|&rho| {
            Ok(RateRow {
                rho,
                rate_mbps: rate_upper_bound(&config.numerology, rho, snr)? / 1e6,
            })
        })
        .collect()
}

pub fn rate_csv(rows: &[RateRow]) -> Result<String> {
    rows_to_string(rows)
}

/// Parses `a:b:step` (inclusive of `b`) or a single value into an SNR grid.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad SNR grid `{spec}`, expected a:b:step or a value"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, stop, step] if step > 0.0 && stop >= start => {
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_parsing() {
        assert_eq!(parse_snr_grid("5").unwrap(), vec![5.0]);
        assert_eq!(parse_snr_grid("-10:10:5").unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(parse_snr_grid("0:1:0.25").unwrap().len(), 5);
        assert!(parse_snr_grid("0:10:0").is_err());
        assert!(parse_snr_grid("10:0:1").is_err());
        assert!(parse_snr_grid("a:b").is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<ExperimentConfig>(&text.replace("\"seed\"", "\"sed\"")).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            ExperimentConfig {
                trials_per_point: 0,
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                snr_grid_db: vec![],
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                pattern: make_periodic(10, 10, 1, 1).unwrap(),
                ..ExperimentConfig::default()
            },
        ];
        assert!(bad.iter().all(|c| c.validate().is_err()));
        let c = ExperimentConfig::default().full_scale();
        assert_eq!(c.fft.fft_n, 4096);
    }

    #[test]
    fn overhead_spacings_hit_targets() {
        for (&(np, mp), rho) in OVERHEAD_SPACINGS.iter().zip([0.02, 0.1, 0.5, 1.0]) {
            let p = make_periodic(70, 50, np, mp).unwrap();
            assert!((p.overhead() - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_rows() {
        let rows = run_rate_table(&RateTableConfig::default()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].rate_mbps, 0.0);
        let csv = rate_csv(&rows).unwrap();
        assert!(csv.starts_with("rho,rate_mbps\n"));
    }

    #[test]
    fn worker_pool_rejects_zero() {
        assert!(with_workers(Some(0), || 1).is_err());
        assert_eq!(with_workers(Some(2), || 7).unwrap(), 7);
    }
}
