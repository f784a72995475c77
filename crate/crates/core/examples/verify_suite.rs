//! Runs acceptance checks and prints one line per check with its wall time.
//!
//! `cargo run --release --example verify_suite -- 3 7` runs checks 3 and 7;
//! no arguments runs all of them. Add `--quick` for reduced trial counts.

use std::time::Instant;

use convex_relu::verify::{Suite, VerifyConfig};

fn main() -> convex_relu::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let quick = args.iter().any(|a| a == "--quick");
    let mut ids: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if ids.is_empty() {
        ids = (1..=11).collect();
    }
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let suite = Suite::new(&VerifyConfig { quick, only: ids.clone() }, jobs)?;
    for id in ids {
        let start = Instant::now();
        let out = suite.run(id)?;
        println!("{}  ({:.1}s)", out.line(), start.elapsed().as_secs_f64());
    }
    Ok(())
}
