// Range bound and expected velocity bound for pilot layouts sharing the
// same overhead. Pass a draw count to change the Monte Carlo size.

use bistatic_isac::harness::{run_table1, Table1Config, Table1Row};

pub fn run_example_with(draws: usize) -> bistatic_isac::Result<Vec<Table1Row>> {
    let rows = run_table1(&Table1Config {
        draws,
        ..Table1Config::default()
    })?;
    println!("(n_p, m_p)  sqrt CRB range [m]  E sqrt CRB vel [m/s]");
    for r in &rows {
        println!(
            "({:2}, {:2})    {:>10.4}          {:>10.4}",
            r.n_p, r.m_p, r.sqrt_crb_ran_m, r.ecrb_vel_ms
        );
    }
    Ok(rows)
}

pub fn run_example() -> bistatic_isac::Result<Vec<Table1Row>> {
    run_example_with(10_000)
}

fn main() -> bistatic_isac::Result<()> {
    let draws = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(100_000);
    run_example_with(draws).map(|_| ())
}
