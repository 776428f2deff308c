//! Independent reference solvers for tests and `verify --oracle`: an exact
//! dense simplex, exact Laplacian solves, and a subgradient Poisson solver
//! with exact polishing. None of them touch the barrier method or the
//! min-cost flow code.

pub mod linalg;
pub mod poisson;
pub mod simplex;

pub use linalg::{effective_resistance, exact_graph_poisson, laplacian_apply, laplacian_solve, solve_dense};
pub use poisson::{
    oracle_dual_optimum, oracle_primal_poisson, oracle_regularized, restore_dual, DualOracle, ExactOptimum,
    OracleOptions, PrimalOracle, RegularizedOracle,
};
pub use simplex::{mcf_lp, oracle_dense_simplex, support_lp, LpConstraint, LpOutcome, LpProblem, Relation};
