// Small Monte Carlo sweep of RMSE against the bounds. The `isac-lab sweep`
// subcommand runs the same thing from a config file.

use bistatic_isac::harness::{run_sweep, ExperimentConfig, SweepResult};

pub fn run_example() -> bistatic_isac::Result<SweepResult> {
    let config = ExperimentConfig {
        snr_grid_db: vec![0.0, 10.0, 20.0],
        trials_per_point: 40,
        ecrb_draws: 2000,
        ..ExperimentConfig::default()
    };
    let result = run_sweep(&config, None)?;
    print!("{}", result.to_csv()?);
    Ok(result)
}

fn main() -> bistatic_isac::Result<()> {
    run_example().map(|_| ())
}
