// Ground truth for a target in the middle of the surveillance box, then
// back again from the measured bistatic range and angle of arrival.

use bistatic_isac::geometry::{
    beta_from_estimates, derive_ground_truth, invert_bistatic_range, BistaticScenario, Point2,
};

pub struct GeometrySummary {
    pub d_bis: f64,
    pub beta_deg: f64,
    pub doppler_hz: f64,
    pub recovered_d_rx: f64,
    pub true_d_rx: f64,
}

pub fn run_example() -> bistatic_isac::Result<GeometrySummary> {
    let scenario = BistaticScenario {
        tx: Point2::new(-40.0, 0.0),
        rx: Point2::new(0.0, 40.0),
        target: Point2::new(90.0, -90.0),
        speed: 20.0,
        delta: 0.0,
        carrier: 30e9,
    };
    let truth = derive_ground_truth(&scenario)?;
    let d_rx = invert_bistatic_range(truth.d_bis, truth.baseline, truth.theta)?;
    let beta = beta_from_estimates(truth.d_bis, truth.baseline, truth.theta)?;

    println!("baseline      {:8.3} m", truth.baseline);
    println!("d_tx + d_rx   {:8.3} m", truth.d_bis);
    println!("bistatic angle{:8.3} deg", truth.beta.to_degrees());
    println!("Doppler       {:8.1} Hz", truth.doppler);
    println!("d_rx inverted {:8.3} m (true {:.3})", d_rx, truth.d_rx);
    println!("beta inverted {:8.3} deg", beta.beta.to_degrees());

    Ok(GeometrySummary {
        d_bis: truth.d_bis,
        beta_deg: truth.beta.to_degrees(),
        doppler_hz: truth.doppler,
        recovered_d_rx: d_rx,
        true_d_rx: truth.d_rx,
    })
}

fn main() -> bistatic_isac::Result<()> {
    run_example().map(|_| ())
}
