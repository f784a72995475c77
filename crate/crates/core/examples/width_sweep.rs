//! Optimal value against the number of sampled patterns, as CSV.

use convex_relu::dataset::{generate_dataset, LabelMode, SolverConfig};
use convex_relu::experiments::{sweep_is_monotone, width_sweep, width_sweep_csv, WidthSweepConfig};

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(300, 10, 1.0, &LabelMode::RandomGaussian, 0)?;
    let rows = width_sweep(&ds, &WidthSweepConfig::default(), 0, &SolverConfig::default(), &SolverConfig::cone_default())?;
    print!("{}", width_sweep_csv(&rows));
    eprintln!("nonincreasing: {}", sweep_is_monotone(&rows, 1e-7));
    Ok(())
}
