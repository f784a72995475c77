//! Gated group lasso on sampled patterns, with its KKT and duality certificate.

use convex_relu::arrangements::sample_patterns;
use convex_relu::dataset::{generate_dataset, LabelMode, SolverConfig};
use convex_relu::solvers::{solve_gated, verify_kkt_gated};

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(50, 5, 0.5, &LabelMode::RandomGaussian, 1)?;
    let ps = sample_patterns(&ds, 20, 1)?;
    let sol = solve_gated(&ds, &ps, &SolverConfig::default())?;
    let kkt = verify_kkt_gated(&ds, &ps, &sol)?;
    println!("objective      {:.8}", sol.objective);
    println!("dual value     {:.8}", sol.dual_value);
    println!("duality gap    {:.2e}", sol.duality_gap());
    println!("kkt violation  {:.2e}", kkt.max_violation);
    println!("active blocks  {}/{}", sol.active_blocks(), ps.len());
    println!("iterations     {}, certified {}", sol.iterations, sol.certified);
    Ok(())
}
