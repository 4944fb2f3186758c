// Communication rate left over after spending a fraction of the grid on pilots.

use bistatic_isac::harness::{run_rate_table, RateRow, RateTableConfig};

pub fn run_example() -> bistatic_isac::Result<Vec<RateRow>> {
    let rows = run_rate_table(&RateTableConfig::default())?;
    for r in &rows {
        println!("rho = {:4.2}  ->  {:7.3} Mbps", r.rho, r.rate_mbps);
    }
    Ok(rows)
}

fn main() -> bistatic_isac::Result<()> {
    run_example().map(|_| ())
}
