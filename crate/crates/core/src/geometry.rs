//! Planar bistatic geometry.
//!
//! ```text
//!                     target
//!                    /  ^  \
//!            d_tx   /  beta \   d_rx
//!                  /         \
//!                 /       theta\
//!   tx  ---------------------- rx
//!                   D
//! ```
//!
//! `theta` is the angle at the receiver between the baseline direction
//! `tx - rx` and the target direction `target - rx`, counterclockwise
//! positive, in `(-pi, pi]`. With that reference the law of cosines at the
//! receiver gives `d_tx^2 = D^2 + d_rx^2 - 2 D d_rx cos(theta)`, which is
//! exactly what [`invert_bistatic_range`] solves. Only `cos(theta)` enters,
//! so the sign convention does not affect the inversion.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Smallest pairwise distance accepted as a non-degenerate geometry.
pub const GEOMETRY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, other: Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// Transmitter, receiver and a single moving target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistaticScenario {
    pub tx: Point2,
    pub rx: Point2,
    pub target: Point2,
    /// Signed speed in m/s.
    pub speed: f64,
    /// Angle between the velocity vector and the bistatic bisector, radians.
    pub delta: f64,
    /// Carrier frequency in Hz.
    pub carrier: f64,
}

/// Sensing parameters implied by a [`BistaticScenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingGroundTruth {
    pub d_tx: f64,
    pub d_rx: f64,
    /// Transmitter-receiver baseline `D`.
    pub baseline: f64,
    pub d_bis: f64,
    pub v_bis: f64,
    /// Propagation delay in seconds.
    pub tau: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
    /// Bistatic angle at the target, radians.
    pub beta: f64,
    /// Angle of arrival at the receiver, radians (see module docs).
    pub theta: f64,
}

impl BistaticScenario {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }
}

fn check_distance(what: &'static str, distance: f64) -> Result<()> {
    if distance.is_finite() && distance >= GEOMETRY_EPSILON {
        Ok(())
    } else {
        Err(Error::DegenerateGeometry {
            what,
            distance,
            epsilon: GEOMETRY_EPSILON,
        })
    }
}

/// Law-of-cosines angle opposite `opposite` in a triangle with sides `a`, `b`.
/// Returns the angle and whether the cosine had to be clamped into [-1, 1].
fn angle_between_sides(a: f64, b: f64, opposite: f64) -> (f64, bool) {
    let cos = (a * a + b * b - opposite * opposite) / (2.0 * a * b);
    let clamped = cos.clamp(-1.0, 1.0);
    (clamped.acos(), clamped != cos)
}

/// Doppler shift of a bistatic target: `2 v_bis cos(beta / 2) / lambda`.
pub fn doppler_shift(v_bis: f64, beta: f64, wavelength: f64) -> f64 {
    2.0 * v_bis * (beta / 2.0).cos() / wavelength
}

/// Inverse of [`doppler_shift`].
pub fn bistatic_velocity(doppler: f64, beta: f64, wavelength: f64) -> f64 {
    doppler * wavelength / (2.0 * (beta / 2.0).cos())
}

pub fn derive_ground_truth(scenario: &BistaticScenario) -> Result<SensingGroundTruth> {
    let d_tx = scenario.tx.distance(scenario.target);
    let d_rx = scenario.rx.distance(scenario.target);
    let baseline = scenario.tx.distance(scenario.rx);
    check_distance("tx-target", d_tx)?;
    check_distance("rx-target", d_rx)?;
    check_distance("tx-rx", baseline)?;
    if !(scenario.carrier > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "carrier must be positive, got {}",
            scenario.carrier
        )));
    }

    let d_bis = d_tx + d_rx;
    let (beta, _) = angle_between_sides(d_tx, d_rx, baseline);
    let v_bis = scenario.speed * scenario.delta.cos();

    let (bx, by) = scenario.tx.sub(scenario.rx);
    let (tx_, ty_) = scenario.target.sub(scenario.rx);
    let theta = (bx * ty_ - by * tx_).atan2(bx * tx_ + by * ty_);

    Ok(SensingGroundTruth {
        d_tx,
        d_rx,
        baseline,
        d_bis,
        v_bis,
        tau: d_bis / SPEED_OF_LIGHT,
        doppler: doppler_shift(v_bis, beta, scenario.wavelength()),
        beta,
        theta,
    })
}

/// Receiver leg of the bistatic ellipse:
/// `d_rx = (d_bis^2 - D^2) / (2 (d_bis - D cos(theta)))`.
pub fn invert_bistatic_range(d_bis: f64, baseline: f64, theta: f64) -> Result<f64> {
    if !(d_bis.is_finite() && baseline >= 0.0 && d_bis > baseline) {
        return Err(Error::RangeDomain { d_bis, baseline });
    }
    let denom = 2.0 * (d_bis - baseline * theta.cos());
    // d_bis > D already implies denom > 0; kept for non-finite theta.
    if !(denom > 0.0) {
        return Err(Error::RangeDomain { d_bis, baseline });
    }
    Ok((d_bis * d_bis - baseline * baseline) / denom)
}

/// Bistatic angle recovered from an estimated bistatic range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    pub d_rx: f64,
    pub d_tx: f64,
    /// The law-of-cosines argument fell outside [-1, 1] and was clamped.
    pub clamped: bool,
}

pub fn beta_from_estimates(d_bis_hat: f64, baseline: f64, theta: f64) -> Result<BetaEstimate> {
    let d_rx = invert_bistatic_range(d_bis_hat, baseline, theta)?;
    let d_tx = d_bis_hat - d_rx;
    check_distance("estimated rx-target", d_rx)?;
    check_distance("estimated tx-target", d_tx)?;
    let (beta, clamped) = angle_between_sides(d_tx, d_rx, baseline);
    Ok(BetaEstimate {
        beta,
        d_rx,
        d_tx,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn box_centre() -> BistaticScenario {
        BistaticScenario {
            tx: Point2::new(-40.0, 0.0),
            rx: Point2::new(0.0, 40.0),
            target: Point2::new(90.0, -90.0),
            speed: 0.0,
            delta: 0.0,
            carrier: 30e9,
        }
    }

    /// Bistatic angle from the two unit vectors at the target, independent
    /// of the law of cosines.
    fn vector_angle_at_target(s: &BistaticScenario) -> f64 {
        let (ax, ay) = s.tx.sub(s.target);
        let (bx, by) = s.rx.sub(s.target);
        (ax * by - ay * bx).abs().atan2(ax * bx + ay * by)
    }

    #[test]
    fn center_of_box_values() {
        let s = box_centre();
        let g = derive_ground_truth(&s).unwrap();
        assert!((g.d_tx - 25000f64.sqrt()).abs() < 1e-9);
        assert!((g.d_rx - 25000f64.sqrt()).abs() < 1e-9);
        assert!((g.baseline - 3200f64.sqrt()).abs() < 1e-9);
        assert!((g.d_bis - 316.227_766_016_838).abs() < 1e-9);
        // 2 asin(D / (2 d_tx)) for the isosceles triangle.
        let iso = 2.0 * (3200f64.sqrt() / (2.0 * 25000f64.sqrt())).asin();
        assert!((g.beta - iso).abs() < 1e-12);
        assert!((g.beta.to_degrees() - 20.61).abs() < 0.01);
        assert!((g.beta - vector_angle_at_target(&s)).abs() < 1e-12);
        assert_eq!(g.doppler, 0.0);
    }

    #[test]
    fn perpendicular_bisector_is_symmetric() {
        // Baseline tx=(-40,0), rx=(0,40); bisector passes through (-20,20)
        // with direction (1,-1).
        let mut s = box_centre();
        s.target = Point2::new(-20.0 + 70.0, 20.0 - 70.0);
        let g = derive_ground_truth(&s).unwrap();
        assert!((g.d_tx - g.d_rx).abs() < 1e-12);
        assert!((g.tau - 2.0 * g.d_tx / SPEED_OF_LIGHT).abs() < 1e-20);
    }

    #[test]
    fn doppler_at_zero_angles() {
        let s = BistaticScenario {
            tx: Point2::new(-1.0, 0.0),
            rx: Point2::new(1.0, 0.0),
            target: Point2::new(0.0, 1e9),
            speed: 10.0,
            delta: 0.0,
            carrier: 30e9,
        };
        assert!((doppler_shift(10.0, 0.0, s.wavelength()) - 2000.0).abs() < 1e-9);
        // Far-away target: beta nearly zero.
        let g = derive_ground_truth(&s).unwrap();
        assert!((g.doppler - 2000.0).abs() < 1e-6);
    }

    #[test]
    fn doppler_parity() {
        let mut s = box_centre();
        s.speed = 17.0;
        s.delta = 0.07;
        let a = derive_ground_truth(&s).unwrap().doppler;
        s.speed = -17.0;
        let b = derive_ground_truth(&s).unwrap().doppler;
        s.delta = -0.07;
        let c = derive_ground_truth(&s).unwrap().doppler;
        assert_eq!(a, -b);
        assert_eq!(b, c);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let mut s = box_centre();
        s.target = s.rx;
        assert!(matches!(
            derive_ground_truth(&s),
            Err(Error::DegenerateGeometry { .. })
        ));
        let mut s = box_centre();
        s.rx = s.tx;
        assert!(derive_ground_truth(&s).is_err());
    }

    #[test]
    fn inversion_special_cases() {
        assert_eq!(invert_bistatic_range(10.0, 0.0, 1.3).unwrap(), 5.0);
        let d = 7.0;
        let r = invert_bistatic_range(2.0 * d, d, PI / 2.0).unwrap();
        assert!((r - 0.75 * d).abs() < 1e-12);
        assert!(matches!(
            invert_bistatic_range(5.0, 5.0, 0.0),
            Err(Error::RangeDomain { .. })
        ));
        assert!(invert_bistatic_range(4.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn inversion_round_trip_center() {
        let g = derive_ground_truth(&box_centre()).unwrap();
        let d_rx = invert_bistatic_range(g.d_bis, g.baseline, g.theta).unwrap();
        assert!((d_rx - 158.113_883_008_419).abs() < 1e-9);
    }

    #[test]
    fn inversion_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = |rng: &mut ChaCha8Rng| {
                Point2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0))
            };
            let s = BistaticScenario {
                tx: p(&mut rng),
                rx: p(&mut rng),
                target: p(&mut rng),
                speed: 0.0,
                delta: 0.0,
                carrier: 30e9,
            };
            let Ok(g) = derive_ground_truth(&s) else {
                continue;
            };
            // Collinear target beyond the transmitter puts d_bis at D.
            if g.d_bis - g.baseline < 1e-6 * g.d_bis {
                continue;
            }
            let d_rx = invert_bistatic_range(g.d_bis, g.baseline, g.theta).unwrap();
            assert!(
                ((d_rx - g.d_rx) / g.d_rx).abs() < 1e-9,
                "{s:?}: {d_rx} vs {}",
                g.d_rx
            );
        }
    }

    #[test]
    fn beta_round_trip_and_monostatic() {
        let g = derive_ground_truth(&box_centre()).unwrap();
        let b = beta_from_estimates(g.d_bis, g.baseline, g.theta).unwrap();
        assert!(((b.beta - g.beta) / g.beta).abs() < 1e-12);
        assert!(!b.clamped);
        let b0 = beta_from_estimates(12.0, 0.0, 0.4).unwrap();
        assert_eq!(b0.beta, 0.0);
    }

    #[test]
    fn beta_sensitivity_matches_finite_difference() {
        // Perturbing d_bis by +1 m: compare against a central-difference
        // derivative of beta along the ellipse family at fixed theta.
        let g = derive_ground_truth(&box_centre()).unwrap();
        let f = |d: f64| beta_from_estimates(d, g.baseline, g.theta).unwrap().beta;
        let h = 1e-3;
        let slope = (f(g.d_bis + h) - f(g.d_bis - h)) / (2.0 * h);
        let curvature = (f(g.d_bis + h) - 2.0 * f(g.d_bis) + f(g.d_bis - h)) / (h * h);
        let predicted = slope + 0.5 * curvature;
        let actual = f(g.d_bis + 1.0) - g.beta;
        assert!(slope < 0.0);
        assert!(((actual - predicted) / actual).abs() < 1e-2);
    }

    #[test]
    fn beta_in_open_interval_and_decays_on_ray() {
        let mut s = box_centre();
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let r = 10.0 * 1.3f64.powi(k);
            s.target = Point2::new(r * 0.6, -r * 0.8);
            let g = derive_ground_truth(&s).unwrap();
            assert!(g.beta > 0.0 && g.beta < PI);
            assert!(g.beta < last);
            last = g.beta;
        }
        assert!(last < 1e-4);
    }
}
