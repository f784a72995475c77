//! Sample, solve the cone relaxation, and read off an equivalent network.

use convex_relu::arrangements::enumerate_patterns;
use convex_relu::dataset::{generate_dataset, LabelMode, SolverConfig};
use convex_relu::experiments::train_pipeline;
use convex_relu::solvers::solve_cone_constrained;

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(10, 2, 0.1, &LabelMode::RandomGaussian, 7)?;
    let cone = SolverConfig::cone_default().with_tol(1e-8);
    let full = solve_cone_constrained(&ds, &enumerate_patterns(&ds)?, &cone)?;
    for m in [2, 4, 8, 16] {
        let (report, _, net) = train_pipeline(&ds, m, 7, &cone, true)?;
        println!(
            "m {m:>2}: network loss {:.6} ({} neurons), full optimum {:.6}",
            report.network_loss,
            net.m(),
            full.objective
        );
    }
    Ok(())
}
