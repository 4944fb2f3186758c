use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {what} distance {distance} m is below {epsilon} m")]
    DegenerateGeometry {
        what: &'static str,
        distance: f64,
        epsilon: f64,
    },

    /// The bistatic range does not exceed the baseline, so the ellipse
    /// collapses and the receiver leg cannot be recovered.
    #[error("bistatic range {d_bis} m does not exceed baseline {baseline} m")]
    RangeDomain { d_bis: f64, baseline: f64 },

    #[error("invalid numerology: {0}")]
    InvalidNumerology(String),

    #[error("invalid pilot pattern: {0}")]
    InvalidPattern(String),

    #[error("pilot pattern is not periodic")]
    NotPeriodic,

    /// Q_N2 * Q_M2 - Q_NM^2 vanishes: the pattern spans a line (or a
    /// point) in the (n, m) plane.
    #[error("pilot pattern gives a singular equivalent Fisher matrix")]
    SingularPattern,

    #[error("{axis} is unobservable with a single pilot row along that axis")]
    Unobservable { axis: &'static str },

    #[error("pilot symbol at ({n}, {m}) has modulus {modulus}")]
    PilotModulus { n: usize, m: usize, modulus: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid periodogram config: {0}")]
    FftConfig(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
