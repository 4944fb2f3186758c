// One frame end to end: random target, QPSK frame with pilots, noisy
// channel, periodogram estimate, and the bound for comparison.

use bistatic_isac::bounds::{crb, SensingChannelParams};
use bistatic_isac::estimator::{Estimator, EstimationResult, PeriodogramConfig};
use bistatic_isac::geometry::SensingGroundTruth;
use bistatic_isac::pilots::make_periodic;
use bistatic_isac::sim::{apply_channel, generate_frame, sample_scenario, ScenarioDistribution};
use bistatic_isac::{OfdmNumerology, Snr};

pub fn run_example() -> bistatic_isac::Result<(SensingGroundTruth, EstimationResult)> {
    let num = OfdmNumerology::default();
    let pattern = make_periodic(num.subcarriers, num.symbols, 2, 1)?;
    let snr = Snr::from_db(20.0);

    let (_, truth) = sample_scenario(&ScenarioDistribution::default(), 7)?;
    let x = generate_frame(&num, &pattern, 8)?;
    let params = SensingChannelParams::from_snr(snr, truth.tau, truth.doppler);
    let y = apply_channel(&x, &params, &num, 9)?.received;

    let est = Estimator::new(num, pattern.clone(), PeriodogramConfig::square(4096))?
        .estimate(&y, &x, truth.baseline, truth.theta)?;
    let bound = crb(&params, &pattern, &num, truth.beta)?;

    println!("            truth      estimate   sqrt CRB");
    println!(
        "range  {:10.3} m {:10.3} m {:8.4}",
        truth.d_bis, est.d_bis_hat, bound.rmse_bound_ran
    );
    println!(
        "speed  {:10.3}   {:10.3}   {:8.4}",
        truth.v_bis, est.v_bis_hat, bound.rmse_bound_vel
    );
    Ok((truth, est))
}

fn main() -> bistatic_isac::Result<()> {
    run_example().map(|_| ())
}
