//! The two closed-form solves: the squared-norm regularized problem and the
//! least-norm interpolating fit on paired patterns.

use convex_relu::arrangements::{paired_patterns, sample_patterns};
use convex_relu::dataset::{generate_dataset, LabelMode};
use convex_relu::solvers::{exact_fit, solve_gated_l2};

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(30, 4, 0.3, &LabelMode::RandomGaussian, 2)?;
    let ps = sample_patterns(&ds, 10, 2)?;
    let l2 = solve_gated_l2(&ds, &ps)?;
    println!("squared-norm optimum {:.8}, dual norm {:.4}", l2.value, l2.dual.norm());

    let interp = ds.with_beta(0.0)?;
    let fit = exact_fit(&interp, &paired_patterns(&interp)?.pattern_set())?;
    println!("paired-pattern fit residual {:.2e} (fit: {})", fit.residual, fit.fit);
    Ok(())
}
