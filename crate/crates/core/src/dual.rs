//! Edge-local dual vectors, the dual objective, masses and transport splits.
//!
//! The scalar type selects the mode: `DualVector<f64>` is what the first stage
//! produces, `DualVector<BigRational>` is what certificates carry and is
//! checked exactly.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::hypergraph::Hypergraph;
use crate::scalar::{self, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("dual vector on edge {edge} does not sum to zero (sum = {sum})")]
    NotZeroSumOnEdge { edge: usize, sum: f64 },
    #[error("dual vector shape does not match the hypergraph: {0}")]
    ShapeMismatch(String),
    #[error("transport split invariant violated: {0}")]
    InvariantViolation(String),
}

/// `η = (η_e)_e`; `values[e][i]` is the coordinate at vertex `h.edge(e).vertices[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVector<T> {
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> DualVector<T> {
    pub fn zeros(h: &Hypergraph) -> Self {
        Self {
            values: h
                .edges()
                .iter()
                .map(|e| vec![T::zero(); e.vertices.len()])
                .collect(),
        }
    }

    pub fn new(h: &Hypergraph, values: Vec<Vec<T>>) -> Result<Self, DualError> {
        let eta = Self { values };
        eta.check_shape(h)?;
        Ok(eta)
    }

    pub fn check_shape(&self, h: &Hypergraph) -> Result<(), DualError> {
        if self.values.len() != h.edge_count() {
            return Err(DualError::ShapeMismatch(format!(
                "{} edge blocks for {} edges",
                self.values.len(),
                h.edge_count()
            )));
        }
        for (e, (block, edge)) in self.values.iter().zip(h.edges()).enumerate() {
            if block.len() != edge.vertices.len() {
                return Err(DualError::ShapeMismatch(format!(
                    "edge {e} has {} entries for {} vertices",
                    block.len(),
                    edge.vertices.len()
                )));
            }
        }
        Ok(())
    }

    pub fn edge_sum(&self, e: usize) -> T {
        scalar::sum(self.values[e].iter().cloned())
    }

    pub fn edge_l1(&self, e: usize) -> T {
        scalar::sum(self.values[e].iter().map(Scalar::magnitude))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> DualVector<U> {
        DualVector {
            values: self
                .values
                .iter()
                .map(|block| block.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> DualVector<f64> {
        self.map(Scalar::to_f64)
    }

    /// `Bη = Σ_e η_e` as a vertex vector.
    pub fn aggregate(&self, h: &Hypergraph) -> Vec<T> {
        let mut out = vec![T::zero(); h.vertex_count()];
        for (block, edge) in self.values.iter().zip(h.edges()) {
            for (value, &v) in block.iter().zip(&edge.vertices) {
                out[v] = out[v].clone() + value.clone();
            }
        }
        out
    }
}

/// `D(η) = Σ_e ||η_e||_1² / (8 w_e)`, without a membership check.
pub fn dual_objective<T: Scalar>(h: &Hypergraph, eta: &DualVector<T>) -> T {
    scalar::sum(h.edges().iter().enumerate().map(|(e, edge)| {
        let l1 = eta.edge_l1(e);
        l1.clone() * l1 / (T::from_i64(8) * T::from_dyadic(&edge.weight))
    }))
}

/// `D(η)` after checking `η_e ∈ U_e`; exact for rationals, within `tol` for floats.
pub fn dual_objective_checked<T: Scalar>(
    h: &Hypergraph,
    eta: &DualVector<T>,
    tol: f64,
) -> Result<T, DualError> {
    eta.check_shape(h)?;
    for e in 0..h.edge_count() {
        let sum = eta.edge_sum(e);
        if !sum.is_negligible(tol) {
            return Err(DualError::NotZeroSumOnEdge {
                edge: e,
                sum: sum.to_f64(),
            });
        }
    }
    Ok(dual_objective(h, eta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport<T> {
    /// `Σ_{v∈e} (η_e)_v` per edge.
    pub edge_sums: Vec<T>,
    /// `s - Bη` per vertex.
    pub vertex_residuals: Vec<T>,
    pub max_edge_residual: f64,
    pub max_vertex_residual: f64,
    pub feasible: bool,
}

impl<T: Scalar> FeasibilityReport<T> {
    pub fn first_violated_vertex(&self, tol: f64) -> Option<usize> {
        self.vertex_residuals.iter().position(|r| !r.is_negligible(tol))
    }

    pub fn first_violated_edge(&self, tol: f64) -> Option<usize> {
        self.edge_sums.iter().position(|r| !r.is_negligible(tol))
    }
}

/// Checks `η_e ∈ U_e` and `Bη = s`; `tol` is ignored for exact scalars.
pub fn check_dual_feasible<T: Scalar>(
    h: &Hypergraph,
    s: &[Dyadic],
    eta: &DualVector<T>,
    tol: f64,
) -> FeasibilityReport<T> {
    let edge_sums: Vec<T> = (0..h.edge_count()).map(|e| eta.edge_sum(e)).collect();
    let vertex_residuals: Vec<T> = eta
        .aggregate(h)
        .into_iter()
        .zip(s)
        .map(|(b, sv)| T::from_dyadic(sv) - b)
        .collect();
    let max_abs = |xs: &[T]| xs.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    let feasible = edge_sums
        .iter()
        .chain(&vertex_residuals)
        .all(|r| r.is_negligible(tol));
    FeasibilityReport {
        max_edge_residual: max_abs(&edge_sums),
        max_vertex_residual: max_abs(&vertex_residuals),
        edge_sums,
        vertex_residuals,
        feasible,
    }
}

/// Per-edge masses `μ_e >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassVector<T>(pub Vec<T>);

/// `μ_e = ½ ||η_e||_1`.
pub fn mass_of<T: Scalar>(eta: &DualVector<T>) -> MassVector<T> {
    MassVector(
        (0..eta.values.len())
            .map(|e| eta.edge_l1(e) / T::from_i64(2))
            .collect(),
    )
}

/// `q(μ) = ½ Σ_e μ_e² / w_e`.
pub fn quadratic_mass_objective<T: Scalar>(h: &Hypergraph, mu: &MassVector<T>) -> T {
    let twice = scalar::sum(
        mu.0.iter()
            .zip(h.edges())
            .map(|(m, edge)| m.clone() * m.clone() / T::from_dyadic(&edge.weight)),
    );
    twice / T::from_i64(2)
}

/// Lifted transport data: `p_ev`, `n_ev` per incidence and `μ_e` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportSplit<T> {
    pub positive: Vec<Vec<T>>,
    pub negative: Vec<Vec<T>>,
    pub mass: MassVector<T>,
}

impl<T: Scalar> TransportSplit<T> {
    /// Nonnegativity and `Σ p = Σ n = μ` per edge.
    pub fn check(&self, h: &Hypergraph, tol: f64) -> Result<(), DualError> {
        if self.positive.len() != h.edge_count()
            || self.negative.len() != h.edge_count()
            || self.mass.0.len() != h.edge_count()
        {
            return Err(DualError::ShapeMismatch("split block count".into()));
        }
        for (e, edge) in h.edges().iter().enumerate() {
            let (p, n) = (&self.positive[e], &self.negative[e]);
            if p.len() != edge.vertices.len() || n.len() != edge.vertices.len() {
                return Err(DualError::ShapeMismatch(format!("split block {e}")));
            }
            let zero = T::zero();
            let negative_entry = |x: &T| *x < zero && !x.is_negligible(tol);
            if p.iter().chain(n).any(negative_entry) || negative_entry(&self.mass.0[e]) {
                return Err(DualError::InvariantViolation(format!(
                    "negative entry on edge {e}"
                )));
            }
            let mu = &self.mass.0[e];
            let sp = scalar::sum(p.iter().cloned());
            let sn = scalar::sum(n.iter().cloned());
            if !(sp - mu.clone()).is_negligible(tol) || !(sn - mu.clone()).is_negligible(tol) {
                return Err(DualError::InvariantViolation(format!(
                    "positive or negative parts on edge {e} do not sum to the mass"
                )));
            }
        }
        Ok(())
    }
}

/// Sign split: `p = η⁺`, `n = η⁻`, `μ = mass_of(η)`.
pub fn dual_to_split<T: Scalar>(
    h: &Hypergraph,
    eta: &DualVector<T>,
    tol: f64,
) -> Result<TransportSplit<T>, DualError> {
    dual_objective_checked(h, eta, tol)?;
    let zero = T::zero();
    let part = |sign: bool| -> Vec<Vec<T>> {
        eta.values
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|x| {
                        let x = if sign { x.clone() } else { -x.clone() };
                        if x > zero {
                            x
                        } else {
                            zero.clone()
                        }
                    })
                    .collect()
            })
            .collect()
    };
    Ok(TransportSplit {
        positive: part(true),
        negative: part(false),
        mass: mass_of(eta),
    })
}

/// `(η_e)_v = p_ev - n_ev`.
pub fn split_to_dual<T: Scalar>(
    h: &Hypergraph,
    split: &TransportSplit<T>,
    tol: f64,
) -> Result<DualVector<T>, DualError> {
    split.check(h, tol)?;
    Ok(DualVector {
        values: split
            .positive
            .iter()
            .zip(&split.negative)
            .map(|(p, n)| p.iter().zip(n).map(|(a, b)| a.clone() - b.clone()).collect())
            .collect(),
    })
}

/// Converts a dyadic dual to the exact rational mode.
pub fn dyadic_to_rational(eta: &DualVector<Dyadic>) -> DualVector<BigRational> {
    DualVector {
        values: eta
            .values
            .iter()
            .map(|block| block.iter().map(Dyadic::to_rational).collect())
            .collect(),
    }
}
