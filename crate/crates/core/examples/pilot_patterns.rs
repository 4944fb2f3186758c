// Index statistics and unambiguous limits for a few periodic pilot grids.

use bistatic_isac::pilots::{make_periodic, max_unambiguous, PilotPattern};
use bistatic_isac::OfdmNumerology;

pub struct PatternRow {
    pub spacing: (usize, usize),
    pub pilots: usize,
    pub overhead: f64,
    pub q_nm: f64,
    pub range_limit_m: f64,
}

pub fn run_example() -> bistatic_isac::Result<Vec<PatternRow>> {
    let num = OfdmNumerology::default();
    println!("n_p m_p pilots  rho     Q_N2      Q_M2    Q_NM  R_max[m]  V_span[m/s]");
    let mut rows = Vec::new();
    for (n_p, m_p) in [(1, 1), (2, 1), (2, 5), (10, 5), (11, 1)] {
        let p = make_periodic(num.subcarriers, num.symbols, n_p, m_p)?;
        let s = p.stats();
        let lim = max_unambiguous(&num, n_p, m_p, 0.0);
        println!(
            "{n_p:3} {m_p:3} {:6} {:5.3} {:9.1} {:9.1} {:6.1} {:8.1} {:10.2}",
            p.len(),
            p.overhead(),
            s.q_n2,
            s.q_m2,
            s.q_nm,
            lim.range,
            lim.velocity
        );
        rows.push(PatternRow {
            spacing: (n_p, m_p),
            pilots: p.len(),
            overhead: p.overhead(),
            q_nm: s.q_nm,
            range_limit_m: lim.range,
        });
    }

    // Patterns round-trip through their compact JSON form.
    let p = make_periodic(num.subcarriers, num.symbols, 2, 5)?;
    let text = serde_json::to_string(&p)?;
    let back: PilotPattern = serde_json::from_str(&text)?;
    assert_eq!(back, p);
    println!("json: {text}");
    Ok(rows)
}

fn main() -> bistatic_isac::Result<()> {
    run_example().map(|_| ())
}
