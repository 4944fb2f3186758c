//! Pilot sets on the (subcarrier, symbol) grid and their index statistics.
//!
//! The bounds depend on a pattern only through five integer index sums.
//! They are accumulated exactly and every derived quantity is formed as a
//! reduced fraction before the single conversion to `f64`, so the generic
//! path and the periodic closed forms agree bit for bit.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::{Error, OfdmNumerology, Result, SPEED_OF_LIGHT};

/// A set of pilot cells `(n, m)` on an `N x M` grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternRepr", into = "PatternRepr")]
pub struct PilotPattern {
    grid_n: usize,
    grid_m: usize,
    /// Sorted by `(n, m)`, no duplicates.
    cells: Vec<(usize, usize)>,
    periodic: Option<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct PatternRepr {
    N: usize,
    M: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    periodic: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<[usize; 2]>>,
}

impl TryFrom<PatternRepr> for PilotPattern {
    type Error = Error;

    fn try_from(r: PatternRepr) -> Result<Self> {
        match (r.periodic, r.cells) {
            (Some([np, mp]), None) => PilotPattern::periodic(r.N, r.M, np, mp),
            (None, Some(cells)) => {
                PilotPattern::from_cells(r.N, r.M, cells.into_iter().map(|[n, m]| (n, m)))
            }
            _ => Err(Error::InvalidPattern(
                "exactly one of `periodic` or `cells` is required".into(),
            )),
        }
    }
}

impl From<PilotPattern> for PatternRepr {
    fn from(p: PilotPattern) -> Self {
        match p.periodic {
            Some((np, mp)) => PatternRepr {
                N: p.grid_n,
                M: p.grid_m,
                periodic: Some([np, mp]),
                cells: None,
            },
            None => PatternRepr {
                N: p.grid_n,
                M: p.grid_m,
                periodic: None,
                cells: Some(p.cells.iter().map(|&(n, m)| [n, m]).collect()),
            },
        }
    }
}

impl PilotPattern {
    /// Every `n_p`-th subcarrier of every `m_p`-th symbol, starting at
    /// index 0: `(k n_p, l m_p)` for `0 <= k <= K`, `0 <= l <= L`.
    pub fn periodic(grid_n: usize, grid_m: usize, n_p: usize, m_p: usize) -> Result<Self> {
        if grid_n == 0 || grid_m == 0 {
            return Err(Error::InvalidPattern(format!(
                "empty grid {grid_n}x{grid_m}"
            )));
        }
        if n_p == 0 || n_p > grid_n || m_p == 0 || m_p > grid_m {
            return Err(Error::InvalidPattern(format!(
                "spacing ({n_p}, {m_p}) outside 1..={grid_n} x 1..={grid_m}"
            )));
        }
        let cells = (0..grid_n)
            .step_by(n_p)
            .flat_map(|n| (0..grid_m).step_by(m_p).map(move |m| (n, m)))
            .collect();
        Ok(PilotPattern {
            grid_n,
            grid_m,
            cells,
            periodic: Some((n_p, m_p)),
        })
    }

    /// Arbitrary pilot mask. Duplicates and out-of-grid cells are rejected.
    pub fn from_cells(
        grid_n: usize,
        grid_m: usize,
        cells: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut cells: Vec<_> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::InvalidPattern("no pilot cells".into()));
        }
        if let Some(&(n, m)) = cells.iter().find(|&&(n, m)| n >= grid_n || m >= grid_m) {
            return Err(Error::InvalidPattern(format!(
                "cell ({n}, {m}) outside {grid_n}x{grid_m} grid"
            )));
        }
        cells.sort_unstable();
        if let Some(w) = cells.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPattern(format!(
                "duplicate cell ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(PilotPattern {
            grid_n,
            grid_m,
            cells,
            periodic: None,
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_n, self.grid_m)
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(n_p, m_p)` when the pattern was built by [`PilotPattern::periodic`].
    pub fn periodic_spacing(&self) -> Option<(usize, usize)> {
        self.periodic
    }

    /// `(K, L)`: the largest pilot row and column indices of a periodic pattern.
    pub fn periodic_extent(&self) -> Option<(usize, usize)> {
        self.periodic
            .map(|(np, mp)| ((self.grid_n - 1) / np, (self.grid_m - 1) / mp))
    }

    /// Pilot overhead `|P| / (N M)`.
    pub fn overhead(&self) -> f64 {
        self.cells.len() as f64 / (self.grid_n * self.grid_m) as f64
    }

    pub fn contains(&self, n: usize, m: usize) -> bool {
        self.cells.binary_search(&(n, m)).is_ok()
    }

    /// Row-major (in `n`) boolean mask of the grid.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.grid_n * self.grid_m];
        for &(n, m) in &self.cells {
            mask[n * self.grid_m + m] = true;
        }
        mask
    }

    pub fn fits(&self, numerology: &OfdmNumerology) -> bool {
        self.grid_n == numerology.subcarriers && self.grid_m == numerology.symbols
    }

    pub fn stats(&self) -> PatternStats {
        pattern_stats(self)
    }
}

pub fn make_periodic(grid_n: usize, grid_m: usize, n_p: usize, m_p: usize) -> Result<PilotPattern> {
    PilotPattern::periodic(grid_n, grid_m, n_p, m_p)
}

/// Exact index sums of a pilot set and the centred second moments
/// `Q_N2`, `Q_M2`, `Q_NM` built from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub cardinality: u64,
    pub sum_n: u64,
    pub sum_m: u64,
    pub sum_nm: u64,
    pub sum_n2: u64,
    pub sum_m2: u64,
    pub q_n2: f64,
    pub q_m2: f64,
    pub q_nm: f64,
}

/// `num / den` reduced to lowest terms, then converted once.
pub(crate) fn ratio_to_f64(num: i128, den: i128) -> f64 {
    let g = num.gcd(&den);
    if g == 0 {
        return f64::NAN;
    }
    (num / g) as f64 / (den / g) as f64
}

impl PatternStats {
    fn from_sums(p: u64, sn: u64, sm: u64, snm: u64, sn2: u64, sm2: u64) -> Self {
        let mut s = PatternStats {
            cardinality: p,
            sum_n: sn,
            sum_m: sm,
            sum_nm: snm,
            sum_n2: sn2,
            sum_m2: sm2,
            q_n2: 0.0,
            q_m2: 0.0,
            q_nm: 0.0,
        };
        let [a, b, c] = s.scaled_q();
        let p = p as i128;
        s.q_n2 = ratio_to_f64(a, p);
        s.q_m2 = ratio_to_f64(b, p);
        s.q_nm = ratio_to_f64(c, p);
        s
    }

    /// `|P|` times `[Q_N2, Q_M2, Q_NM]`, all exact integers.
    pub fn scaled_q(&self) -> [i128; 3] {
        let p = self.cardinality as i128;
        let (sn, sm) = (self.sum_n as i128, self.sum_m as i128);
        [
            p * self.sum_n2 as i128 - sn * sn,
            p * self.sum_m2 as i128 - sm * sm,
            p * self.sum_nm as i128 - sn * sm,
        ]
    }

    /// `|P|^2 (Q_N2 Q_M2 - Q_NM^2)`, or `None` on overflow.
    pub fn scaled_determinant(&self) -> Option<i128> {
        let [a, b, c] = self.scaled_q();
        a.checked_mul(b)?.checked_sub(c.checked_mul(c)?)
    }

    pub fn determinant(&self) -> f64 {
        match self.scaled_determinant() {
            Some(d) => {
                let p = self.cardinality as i128;
                match p.checked_mul(p) {
                    Some(p2) => ratio_to_f64(d, p2),
                    None => d as f64 / (p as f64 * p as f64),
                }
            }
            None => self.q_n2 * self.q_m2 - self.q_nm * self.q_nm,
        }
    }

    pub fn is_nondegenerate(&self) -> bool {
        match self.scaled_determinant() {
            Some(d) => d > 0,
            None => self.determinant() > 0.0,
        }
    }

    fn factor(&self, numerator_index: usize) -> Result<f64> {
        let [a, b, c] = self.scaled_q();
        let p = self.cardinality as i128;
        let num = if numerator_index == 0 { a } else { b };
        let exact = a
            .checked_mul(b)
            .zip(c.checked_mul(c))
            .and_then(|(ab, cc)| ab.checked_sub(cc))
            .zip(num.checked_mul(p));
        match exact {
            Some((det, _)) if det <= 0 => Err(Error::SingularPattern),
            Some((det, num_p)) => Ok(ratio_to_f64(num_p, det)),
            None => {
                let det = self.q_n2 * self.q_m2 - self.q_nm * self.q_nm;
                if det <= 0.0 {
                    return Err(Error::SingularPattern);
                }
                let q = if numerator_index == 0 { self.q_n2 } else { self.q_m2 };
                Ok(q / det)
            }
        }
    }

    /// `Q_M2 / (Q_N2 Q_M2 - Q_NM^2)`: the pattern-dependent part of the
    /// range bound.
    pub fn range_factor(&self) -> Result<f64> {
        self.factor(1)
    }

    /// `Q_N2 / (Q_N2 Q_M2 - Q_NM^2)`: the pattern-dependent part of the
    /// velocity bound.
    pub fn velocity_factor(&self) -> Result<f64> {
        self.factor(0)
    }
}

pub fn pattern_stats(pattern: &PilotPattern) -> PatternStats {
    let mut acc = [0u64; 5];
    for &(n, m) in &pattern.cells {
        let (n, m) = (n as u64, m as u64);
        acc[0] += n;
        acc[1] += m;
        acc[2] += n * m;
        acc[3] += n * n;
        acc[4] += m * m;
    }
    PatternStats::from_sums(
        pattern.cells.len() as u64,
        acc[0],
        acc[1],
        acc[2],
        acc[3],
        acc[4],
    )
}

/// Closed-form statistics of [`PilotPattern::periodic`], without
/// enumerating the cells.
pub fn periodic_stats_closed_form(
    grid_n: usize,
    grid_m: usize,
    n_p: usize,
    m_p: usize,
) -> Result<PatternStats> {
    if grid_n == 0 || grid_m == 0 || n_p == 0 || n_p > grid_n || m_p == 0 || m_p > grid_m {
        return Err(Error::InvalidPattern(format!(
            "spacing ({n_p}, {m_p}) invalid for {grid_n}x{grid_m} grid"
        )));
    }
    let k = ((grid_n - 1) / n_p) as u64;
    let l = ((grid_m - 1) / m_p) as u64;
    let (np, mp) = (n_p as u64, m_p as u64);
    let p = (k + 1) * (l + 1);

    // sum_{i=0}^{K} i = K(K+1)/2, sum i^2 = K(K+1)(2K+1)/6
    let tri_k = k * (k + 1) / 2;
    let tri_l = l * (l + 1) / 2;
    let sq_k = k * (k + 1) * (2 * k + 1) / 6;
    let sq_l = l * (l + 1) * (2 * l + 1) / 6;

    let mut s = PatternStats {
        cardinality: p,
        sum_n: (l + 1) * np * tri_k,
        sum_m: (k + 1) * mp * tri_l,
        sum_nm: np * mp * tri_k * tri_l,
        sum_n2: (l + 1) * np * np * sq_k,
        sum_m2: (k + 1) * mp * mp * sq_l,
        q_n2: 0.0,
        q_m2: 0.0,
        q_nm: 0.0,
    };
    s.q_n2 = ratio_to_f64((k * (k + 2) * p * np * np) as i128, 12);
    s.q_m2 = ratio_to_f64((l * (l + 2) * p * mp * mp) as i128, 12);
    Ok(s)
}

/// Largest unambiguous bistatic range and velocity span for pilot spacing
/// `(n_p, m_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnambiguousLimits {
    /// `c / (n_p delta_f)` in metres.
    pub range: f64,
    /// `c / (2 f_c m_p T_s cos(beta / 2))` in m/s. This is the full width
    /// of the Doppler interval; signed velocities cover half of it either
    /// side of zero.
    pub velocity: f64,
}

pub fn max_unambiguous(
    numerology: &OfdmNumerology,
    n_p: usize,
    m_p: usize,
    beta: f64,
) -> UnambiguousLimits {
    UnambiguousLimits {
        range: SPEED_OF_LIGHT / (n_p as f64 * numerology.subcarrier_spacing),
        velocity: SPEED_OF_LIGHT
            / (2.0
                * numerology.carrier
                * m_p as f64
                * numerology.symbol_duration()
                * (beta / 2.0).cos()),
    }
}
