//! Convex solvers over a fixed pattern set: the gated group lasso, its
//! squared-norm and unregularized variants, and the cone-constrained
//! relaxation.

pub mod cone;
pub mod exact_fit;
pub mod gated;
pub mod l2;
pub mod operator;

pub use cone::{cone_violation, objective_cone, solve_cone_constrained, solve_cone_from, ConeSolution};
pub use exact_fit::{exact_fit, ExactFit};
pub use gated::{objective_gated, solve_gated, solve_gated_from, verify_kkt_gated, GatedSolution, KktReport};
pub use l2::{objective_l2, solve_gated_l2, L2Solution};
pub use operator::GatedOperator;
