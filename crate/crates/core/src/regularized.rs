//! Regularized Poisson problem `min_x E_H(x) - <s,x> + (λ/2) <Dx, x>` through a
//! ground vertex, resolvents and pairwise responses.

use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::dual::{dual_objective, DualVector};
use crate::dyadic::Dyadic;
use crate::hypergraph::{energy, Demand, Edge, Hypergraph, InstanceError};
use crate::scalar::{self, Scalar};
use crate::solver::{solve_poisson, PoissonSolution, SolveError, SolveParams};

#[derive(Debug, Error)]
pub enum RegularizedError {
    #[error("vertex {vertex} has zero weighted degree")]
    ZeroDegreeVertex { vertex: usize },
    #[error("λ must be positive, got {0}")]
    NonpositiveLambda(Dyadic),
    #[error("vector has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("response needs two distinct vertices, got u = v = {0}")]
    SameVertex(usize),
    #[error("vertex {vertex} is outside [0, {n})")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("η on edge {edge} does not sum to zero")]
    EdgeNotZeroSum { edge: usize },
    #[error("regularized gap is negative ({0})")]
    NegativeGap(BigRational),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl RegularizedError {
    pub fn is_invalid_instance(&self) -> bool {
        match self {
            RegularizedError::Solve(inner) => inner.is_invalid_instance(),
            RegularizedError::NegativeGap(_) => false,
            _ => true,
        }
    }
}

/// `H̄`: `H` plus a ground vertex `g = n` joined to every `v` by an edge of weight `λ d_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedInstance {
    pub base: Hypergraph,
    pub lambda: Dyadic,
    pub demand: Demand,
    pub augmented: Hypergraph,
    /// `s̄ = (s, -Σ s)`.
    pub augmented_demand: Demand,
}

impl RegularizedInstance {
    pub fn ground(&self) -> usize {
        self.base.vertex_count()
    }
}

pub fn ground_augment(h: &Hypergraph, lambda: &Dyadic, s: &[Dyadic]) -> Result<RegularizedInstance, RegularizedError> {
    if !lambda.is_positive() {
        return Err(RegularizedError::NonpositiveLambda(lambda.clone()));
    }
    let n = h.vertex_count();
    if s.len() != n {
        return Err(RegularizedError::LengthMismatch { expected: n, found: s.len() });
    }
    let degrees = h.degrees();
    if let Some(vertex) = degrees.iter().position(Dyadic::is_zero) {
        return Err(RegularizedError::ZeroDegreeVertex { vertex });
    }
    let mut edges = h.edges().to_vec();
    edges.extend(degrees.iter().enumerate().map(|(v, d)| Edge {
        vertices: vec![v, n],
        weight: lambda * d,
    }));
    let augmented = Hypergraph::new(n + 1, edges)?;
    let mut sbar = s.to_vec();
    sbar.push(-s.iter().sum::<Dyadic>());
    Ok(RegularizedInstance {
        base: h.clone(),
        lambda: lambda.clone(),
        demand: Demand(s.to_vec()),
        augmented,
        augmented_demand: Demand(sbar),
    })
}

/// `P_λ(x) = E_H(x) - <s,x> + (λ/2) Σ_v d_v x_v²`.
pub fn regularized_primal<T: Scalar>(h: &Hypergraph, lambda: &Dyadic, s: &[Dyadic], x: &[T]) -> T {
    let quad = scalar::sum(h.degrees().iter().zip(x).map(|(d, xv)| T::from_dyadic(d) * xv.clone() * xv.clone()));
    let linear = scalar::sum(s.iter().zip(x).map(|(sv, xv)| T::from_dyadic(sv) * xv.clone()));
    energy(h, x) - linear + T::from_dyadic(lambda) * quad / T::from_i64(2)
}

/// `D_λ(η) = D(η) + (1/2λ) Σ_v (s_v - (Bη)_v)² / d_v` and the induced primal
/// `x_v = (s_v - (Bη)_v) / (λ d_v)`.
pub fn regularized_dual_objective<T: Scalar>(
    h: &Hypergraph,
    lambda: &Dyadic,
    s: &[Dyadic],
    eta: &DualVector<T>,
) -> (T, Vec<T>) {
    let lam = T::from_dyadic(lambda);
    let residual: Vec<T> = s
        .iter()
        .zip(eta.aggregate(h))
        .map(|(sv, b)| T::from_dyadic(sv) - b)
        .collect();
    let degrees = h.degrees();
    let penalty = scalar::sum(
        residual
            .iter()
            .zip(&degrees)
            .map(|(r, d)| r.clone() * r.clone() / T::from_dyadic(d)),
    );
    let x = residual
        .iter()
        .zip(&degrees)
        .map(|(r, d)| r.clone() / (lam.clone() * T::from_dyadic(d)))
        .collect();
    (dual_objective(h, eta) + penalty / (T::from_i64(2) * lam), x)
}

/// Extends `η` on `H` to `H̄` with the ground-edge blocks `(r_v, -r_v)`, `r = s - Bη`.
pub fn extend_to_ground<T: Scalar>(h: &Hypergraph, s: &[Dyadic], eta: &DualVector<T>) -> DualVector<T> {
    let mut values = eta.values.clone();
    for (sv, b) in s.iter().zip(eta.aggregate(h)) {
        let r = T::from_dyadic(sv) - b;
        values.push(vec![r.clone(), -r]);
    }
    DualVector { values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedReport {
    /// `P_λ(x)`.
    pub primal: BigRational,
    /// `D_λ(η)`.
    pub dual: BigRational,
    pub gap: BigRational,
}

impl RegularizedReport {
    pub fn gap_f64(&self) -> f64 {
        self.gap.to_f64()
    }
}

/// Exact regularized gap; only `η_e ∈ U_e` is required of the dual.
pub fn certify_regularized(
    h: &Hypergraph,
    lambda: &Dyadic,
    s: &[Dyadic],
    x: &[BigRational],
    eta: &DualVector<BigRational>,
) -> Result<RegularizedReport, RegularizedError> {
    if x.len() != h.vertex_count() {
        return Err(RegularizedError::LengthMismatch {
            expected: h.vertex_count(),
            found: x.len(),
        });
    }
    eta.check_shape(h).map_err(|_| RegularizedError::LengthMismatch {
        expected: h.edge_count(),
        found: eta.values.len(),
    })?;
    if let Some(edge) = (0..h.edge_count()).find(|&e| !num_traits::Zero::is_zero(&eta.edge_sum(e))) {
        return Err(RegularizedError::EdgeNotZeroSum { edge });
    }
    let primal = regularized_primal(h, lambda, s, x);
    let (dual, _) = regularized_dual_objective(h, lambda, s, eta);
    let gap = &primal + &dual;
    if gap.is_negative() {
        return Err(RegularizedError::NegativeGap(gap));
    }
    Ok(RegularizedReport { primal, dual, gap })
}

#[derive(Clone, Debug)]
pub struct RegularizedSolution {
    pub instance: RegularizedInstance,
    /// Pipeline run on `(H̄, s̄)`.
    pub inner: PoissonSolution,
    /// Potential on `V`, shifted so the ground coordinate is zero.
    pub x: Vec<BigRational>,
    /// Original-edge blocks of the augmented certificate.
    pub eta: DualVector<Dyadic>,
    pub report: RegularizedReport,
}

pub fn solve_regularized(
    h: &Hypergraph,
    lambda: &Dyadic,
    s: &[Dyadic],
    params: &SolveParams,
) -> Result<RegularizedSolution, RegularizedError> {
    let instance = ground_augment(h, lambda, s)?;
    let inner = solve_poisson(&instance.augmented, &instance.augmented_demand, params)?;
    let xbar = &inner.x().0;
    let ground = &xbar[instance.ground()];
    let x: Vec<BigRational> = xbar[..instance.ground()].iter().map(|v| v - ground).collect();
    let eta = DualVector {
        values: inner.certificate.eta.values[..h.edge_count()].to_vec(),
    };
    let exact = crate::dual::dyadic_to_rational(&eta);
    let report = certify_regularized(h, lambda, s, &x, &exact)?;
    Ok(RegularizedSolution {
        instance,
        inner,
        x,
        eta,
        report,
    })
}

/// `J_λ(y) = argmin E_H(x) + (λ/2) <D(x - y), x - y>`, through `s = λ D y`.
/// The returned report certifies `(λ/2) ||x - J_λ(y)||²_D <= gap`.
pub fn resolvent(
    h: &Hypergraph,
    lambda: &Dyadic,
    y: &[Dyadic],
    params: &SolveParams,
) -> Result<RegularizedSolution, RegularizedError> {
    if y.len() != h.vertex_count() {
        return Err(RegularizedError::LengthMismatch {
            expected: h.vertex_count(),
            found: y.len(),
        });
    }
    let s: Vec<Dyadic> = h.degrees().iter().zip(y).map(|(d, yv)| &(lambda * d) * yv).collect();
    solve_regularized(h, lambda, &s, params)
}

#[derive(Clone, Debug)]
pub struct PairwiseResponse {
    /// `x_u - x_v` for the computed potential.
    pub response: BigRational,
    /// Certified gap of the underlying Poisson solve; not an error bound on the response.
    pub gap: BigRational,
    pub solution: PoissonSolution,
}

/// Approximates `<e_u - e_v, x*>` where `x*` solves the Poisson problem with `s = e_u - e_v`.
pub fn pairwise_response(
    h: &Hypergraph,
    u: usize,
    v: usize,
    params: &SolveParams,
) -> Result<PairwiseResponse, RegularizedError> {
    let n = h.vertex_count();
    for vertex in [u, v] {
        if vertex >= n {
            return Err(RegularizedError::VertexOutOfRange { vertex, n });
        }
    }
    if u == v {
        return Err(RegularizedError::SameVertex(u));
    }
    let solution = solve_poisson(h, &Demand::unit_pair(n, u, v), params)?;
    let x = &solution.x().0;
    Ok(PairwiseResponse {
        response: &x[u] - &x[v],
        gap: solution.report.gap.clone(),
        solution,
    })
}
