//! Certified solver for the cut-based hypergraph Laplacian Poisson problem
//! `min_x ½ Σ_e w_e R_e(x)² - <s, x>` over `<Dx, 1> = 0`, together with its
//! regularized and resolvent variants.
//!
//! A float first stage approximately solves the lifted quadratic-cost flow
//! problem. Exact min-cost flow on rounded budgets recovers the primal
//! potential, and exact repair turns the stage-1 dual into a dyadic
//! certificate. The reported gap is computed in rational arithmetic.

pub mod certificate;
pub mod dual;
pub mod dualsolve;
pub mod dyadic;
pub mod format;
pub mod hypergraph;
pub mod lifted;
pub mod mcf;
pub mod oracle;
pub mod recovery;
pub mod regularized;
pub mod scalar;
pub mod solver;

pub use certificate::{DualCertificate, GapReport};
pub use dual::{DualVector, MassVector};
pub use dyadic::Dyadic;
pub use hypergraph::{Demand, Edge, Hypergraph, Potential};
pub use solver::{solve_poisson, PoissonSolution, SolveError, SolveParams};
