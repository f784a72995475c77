//! Spectral summary, optimality-gap bounds and sample-count thresholds.

use convex_relu::arrangements::sample_patterns;
use convex_relu::bounds::DEFAULT_DELTA;
use convex_relu::dataset::{generate_dataset, LabelMode};
use convex_relu::experiments::bounds_for;

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(10, 3, 0.1, &LabelMode::RandomGaussian, 5)?;
    let ps = sample_patterns(&ds, 30, 5)?;
    let report = bounds_for(&ds, &ps, DEFAULT_DELTA)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(())
}
