//! Cone-constrained relaxation next to the gated one on the same patterns.

use convex_relu::arrangements::sample_patterns;
use convex_relu::dataset::{generate_dataset, LabelMode, SolverConfig};
use convex_relu::solvers::{solve_cone_constrained, solve_gated};

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(40, 4, 0.2, &LabelMode::RandomGaussian, 3)?;
    let ps = sample_patterns(&ds, 12, 3)?;
    let gated = solve_gated(&ds, &ps, &SolverConfig::default())?;
    let cone = solve_cone_constrained(&ds, &ps, &SolverConfig::cone_default())?;
    println!("gated {:.6}  cone {:.6}", gated.objective, cone.objective);
    println!("cone residual {:.2e}, violation {:.2e}, certified {}", cone.kkt_residual, cone.cone_violation, cone.certified);
    Ok(())
}
