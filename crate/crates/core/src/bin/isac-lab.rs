use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bistatic_isac::bounds::{crb, SensingChannelParams};
use bistatic_isac::estimator::{Estimator, PeriodogramConfig};
use bistatic_isac::harness::{
    parse_snr_grid, rate_csv, run_rate_table, run_sweep, run_table1, table1_csv, write_outputs,
    ExperimentConfig, RateTableConfig, Table1Config,
};
use bistatic_isac::pilots::make_periodic;
use bistatic_isac::rng::derive_seed;
use bistatic_isac::sim::{apply_channel, generate_frame, sample_scenario};
use bistatic_isac::{Result, Snr};

#[derive(Parser)]
#[command(name = "isac-lab", version, about = "Bistatic OFDM sensing bounds and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the range and velocity bounds for one pattern (JSON)
    Crb {
        #[command(flatten)]
        common: Common,
        /// Bistatic angle in degrees; defaults to the centre of the target box
        #[arg(long)]
        beta_deg: Option<f64>,
    },
    /// Monte Carlo RMSE versus SNR against the bounds (CSV)
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to all cores
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Profile::Desk)]
        profile: Profile,
    },
    /// Range bound and expected velocity bound per pilot spacing (CSV)
    Table1 {
        #[command(flatten)]
        common: Common,
        /// Geometry draws for the expected velocity bound
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
    },
    /// Communication rate upper bound per pilot overhead (CSV)
    Rates {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pilot overheads
        #[arg(long, default_value = "0.02,0.1,0.5,1")]
        rho: String,
    },
    /// One noisy trial; prints truth and estimate, dumps the periodogram
    Simulate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// SNR in dB, a single value or a:b:step
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Pilot spacing along subcarriers
    #[arg(long)]
    np: Option<usize>,
    /// Pilot spacing along symbols
    #[arg(long)]
    mp: Option<usize>,
    /// Square periodogram size
    #[arg(long)]
    fft: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(spec) = &self.snr_db {
            cfg.snr_grid_db = parse_snr_grid(spec)?;
        }
        if self.np.is_some() || self.mp.is_some() {
            let (np, mp) = cfg.pattern.periodic_spacing().unwrap_or((1, 1));
            cfg.pattern = make_periodic(
                cfg.numerology.subcarriers,
                cfg.numerology.symbols,
                self.np.unwrap_or(np),
                self.mp.unwrap_or(mp),
            )?;
        }
        if let Some(size) = self.fft {
            cfg.fft = PeriodogramConfig {
                fft_n: size,
                fft_m: size,
                ..cfg.fft
            };
        }
        if let Some(trials) = self.trials {
            cfg.trials_per_point = trials;
        }
        Ok(cfg)
    }

    fn single_snr(&self, cfg: &ExperimentConfig, default_db: f64) -> f64 {
        if self.snr_db.is_some() {
            cfg.snr_grid_db[0]
        } else {
            default_db
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Crb { common, beta_deg } => {
            let cfg = common.experiment()?;
            let snr = Snr::from_db(common.single_snr(&cfg, 5.0));
            let beta = match beta_deg {
                Some(deg) => deg.to_radians(),
                None => {
                    let mut centre = cfg.scenario;
                    let mid = |(a, b): (f64, f64)| ((a + b) / 2.0, (a + b) / 2.0);
                    centre.x_range = mid(centre.x_range);
                    centre.y_range = mid(centre.y_range);
                    sample_scenario(&centre, 0)?.1.beta
                }
            };
            let params = SensingChannelParams::from_snr(snr, 0.0, 0.0);
            common.emit(&json(&crb(&params, &cfg.pattern, &cfg.numerology, beta)?)?)
        }
        Command::Sweep {
            common,
            workers,
            profile,
        } => {
            let mut cfg = common.experiment()?;
            if profile == Profile::Full {
                let trials = cfg.trials_per_point;
                cfg = cfg.full_scale();
                if common.trials.is_some() {
                    cfg.trials_per_point = trials;
                }
                if let Some(size) = common.fft {
                    cfg.fft = PeriodogramConfig::square(size);
                }
            }
            if let Some(out) = &common.out {
                cfg.output.csv = Some(out.clone());
                cfg.output.manifest = Some(out.with_extension("json"));
            }
            let result = run_sweep(&cfg, workers)?;
            if cfg.output.csv.is_some() {
                write_outputs(&cfg, &result)
            } else {
                print!("{}", result.to_csv()?);
                Ok(())
            }
        }
        Command::Table1 { common, draws } => {
            let cfg = common.experiment()?;
            let mut table = Table1Config {
                numerology: cfg.numerology,
                scenario: cfg.scenario,
                draws,
                seed: cfg.seed,
                ..Table1Config::default()
            };
            table.snr_db = common.single_snr(&cfg, table.snr_db);
            common.emit(&table1_csv(&run_table1(&table)?)?)
        }
        Command::Rates { common, rho } => {
            let cfg = common.experiment()?;
            let overheads = rho
                .split(',')
                .map(|r| {
                    r.trim().parse::<f64>().map_err(|_| {
                        bistatic_isac::Error::InvalidConfig(format!("bad overhead `{r}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut table = RateTableConfig {
                numerology: cfg.numerology,
                overheads,
                ..RateTableConfig::default()
            };
            table.snr_comm_db = common.single_snr(&cfg, table.snr_comm_db);
            common.emit(&rate_csv(&run_rate_table(&table)?)?)
        }
        Command::Simulate { common } => {
            let cfg = common.experiment()?;
            let snr = Snr::from_db(common.single_snr(&cfg, 20.0));
            let (scenario, truth) = sample_scenario(&cfg.scenario, derive_seed(cfg.seed, &[1]))?;
            let x = generate_frame(&cfg.numerology, &cfg.pattern, derive_seed(cfg.seed, &[2]))?;
            let params = SensingChannelParams::from_snr(snr, truth.tau, truth.doppler);
            let channel = apply_channel(&x, &params, &cfg.numerology, derive_seed(cfg.seed, &[3]))?;
            let estimator = Estimator::new(cfg.numerology, cfg.pattern.clone(), cfg.fft)?;
            let surface = estimator.surface(&channel.received, &x)?;
            let dd = estimator.read_peak(&surface);
            let estimate = estimator.finish(&dd, truth.baseline, truth.theta);
            if let Some(path) = &common.out {
                surface.save(path)?;
            }
            #[derive(Serialize)]
            struct Report {
                scenario: bistatic_isac::geometry::BistaticScenario,
                truth: bistatic_isac::geometry::SensingGroundTruth,
                isi_violation: bool,
                estimate: Option<bistatic_isac::estimator::EstimationResult>,
                error: Option<String>,
            }
            let (estimate, error) = match estimate {
                Ok(e) => (Some(e), None),
                Err(e) => (None, Some(e.to_string())),
            };
            print!(
                "{}",
                json(&Report {
                    scenario,
                    truth,
                    isi_violation: channel.isi_violation,
                    estimate,
                    error,
                })?
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isac-lab: {e}");
            ExitCode::FAILURE
        }
    }
}
