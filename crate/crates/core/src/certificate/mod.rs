//! Exact dual certificates: quantization, per-edge repair, tree routing of the
//! leftover demand, and the primal-dual gap report.

pub mod file;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{check_dual_feasible, dual_objective, dyadic_to_rational, DualError, DualVector};
use crate::dyadic::Dyadic;
use crate::hypergraph::{energy, primal_objective, Hypergraph, Potential, SpanningTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("hypergraph is not connected ({components} components); no tree to route the residual")]
    NotConnected { components: usize },
    #[error("demand does not sum to zero (sum = {sum})")]
    NonZeroSumDemand { sum: Dyadic },
    #[error("raw dual has a non-finite entry on edge {edge}")]
    NonFiniteEntry { edge: usize },
    #[error(transparent)]
    Shape(#[from] DualError),
    #[error("η̂ on edge {edge} does not sum to zero")]
    EdgeNotZeroSum { edge: usize },
    #[error("B·η̂ ≠ s at vertex {vertex}")]
    DemandMismatch { vertex: usize },
    #[error("potential is not in X_0")]
    NotNormalized,
    #[error("potential has {found} entries, expected {expected}")]
    PotentialLength { expected: usize, found: usize },
    #[error("gap is negative ({gap}); weak duality violated")]
    NegativeGap { gap: BigRational },
    #[error("s - ξ* is not a multiple of D1")]
    IncompatibleSubgradient,
    #[error("Bregman identity failed: {bregman} != {difference}")]
    BregmanMismatch {
        bregman: BigRational,
        difference: BigRational,
    },
}

/// Transfer `amount · (e_vertex - e_parent)` placed on hyperedge `edge`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTransfer {
    pub vertex: usize,
    pub parent: usize,
    pub edge: usize,
    pub amount: Dyadic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    /// `η̂`, exactly feasible.
    pub eta: DualVector<Dyadic>,
    /// `a(e)`: smallest vertex id of each edge, whose coordinate was overwritten.
    pub representatives: Vec<usize>,
    /// Nonzero tree transfers forming `ζ`.
    pub transfers: Vec<TreeTransfer>,
    /// Quantization grid `2^-bits`.
    pub quantization_bits: u32,
    /// `s - B η̄` before routing.
    pub residual: Vec<Dyadic>,
}

impl DualCertificate {
    pub fn to_rational(&self) -> DualVector<BigRational> {
        dyadic_to_rational(&self.eta)
    }
}

/// Smallest `q` with `2^-q <= Γ 2^-20 / (P+1)²`.
pub fn quantization_bits(h: &Hypergraph, gamma: &Dyadic) -> u32 {
    let p1 = BigInt::from(h.incidence_size() + 1);
    let theta = gamma.to_rational() / BigRational::from_integer((&p1 * &p1) << 20usize);
    let mut q = 0u32;
    let mut step = BigRational::one();
    while step > theta {
        step /= BigRational::from_integer(BigInt::from(2));
        q += 1;
    }
    q
}

/// Quantizes `raw`, restores per-edge zero sums at the representatives and
/// routes `s - Bη̄` along `tree` so that `Bη̂ = s` holds exactly.
pub fn repair_dual_certificate(
    h: &Hypergraph,
    tree: &SpanningTree,
    s: &[Dyadic],
    raw: &DualVector<f64>,
    gamma: &Dyadic,
) -> Result<DualCertificate, CertificateError> {
    raw.check_shape(h)?;
    if !tree.is_spanning() {
        return Err(CertificateError::NotConnected {
            components: tree.components,
        });
    }
    let total: Dyadic = s.iter().sum();
    if !total.is_zero() {
        return Err(CertificateError::NonZeroSumDemand { sum: total });
    }
    let bits = quantization_bits(h, gamma);
    let mut values = Vec::with_capacity(h.edge_count());
    let mut representatives = Vec::with_capacity(h.edge_count());
    for (e, (block, edge)) in raw.values.iter().zip(h.edges()).enumerate() {
        let mut q = block
            .iter()
            .map(|&x| Dyadic::from_f64(x).map(|d| d.round_to_grid(bits)))
            .collect::<Option<Vec<_>>>()
            .ok_or(CertificateError::NonFiniteEntry { edge: e })?;
        let (slot, &rep) = edge
            .vertices
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .expect("edges have at least two vertices");
        q[slot] = Dyadic::zero();
        let others: Dyadic = q.iter().sum();
        q[slot] = -others;
        values.push(q);
        representatives.push(rep);
    }
    let mut eta = DualVector { values };
    let aggregate = aggregate_dyadic(h, &eta);
    let residual: Vec<Dyadic> = s.iter().zip(&aggregate).map(|(a, b)| a - b).collect();
    let sums = tree.subtree_sums(&residual);
    let mut transfers = Vec::new();
    for &v in &tree.order {
        let Some(link) = tree.parent[v] else { continue };
        let amount = sums[v].clone();
        if amount.is_zero() {
            continue;
        }
        let edge = h.edge(link.edge);
        let block = &mut eta.values[link.edge];
        for (slot, &u) in edge.vertices.iter().enumerate() {
            if u == v {
                block[slot] = &block[slot] + &amount;
            } else if u == link.parent {
                block[slot] = &block[slot] - &amount;
            }
        }
        transfers.push(TreeTransfer {
            vertex: v,
            parent: link.parent,
            edge: link.edge,
            amount,
        });
    }
    Ok(DualCertificate {
        eta,
        representatives,
        transfers,
        quantization_bits: bits,
        residual,
    })
}

pub(crate) fn aggregate_dyadic(h: &Hypergraph, eta: &DualVector<Dyadic>) -> Vec<Dyadic> {
    let mut out = vec![Dyadic::zero(); h.vertex_count()];
    for (block, edge) in eta.values.iter().zip(h.edges()) {
        for (value, &v) in block.iter().zip(&edge.vertices) {
            out[v] = &out[v] + value;
        }
    }
    out
}

/// Exact checks of `η_e ∈ U_e` and `Bη = s`.
pub fn check_exact_feasibility(
    h: &Hypergraph,
    s: &[Dyadic],
    eta: &DualVector<BigRational>,
) -> Result<(), CertificateError> {
    eta.check_shape(h)?;
    let report = check_dual_feasible(h, s, eta, 0.0);
    if let Some(edge) = report.first_violated_edge(0.0) {
        return Err(CertificateError::EdgeNotZeroSum { edge });
    }
    if let Some(vertex) = report.first_violated_vertex(0.0) {
        return Err(CertificateError::DemandMismatch { vertex });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `P(x)`.
    pub primal: BigRational,
    /// `D(η̂)`.
    pub dual: BigRational,
    /// `P(x) + D(η̂)`.
    pub gap: BigRational,
    pub edges_zero_sum: bool,
    pub demand_matched: bool,
    pub normalized: bool,
}

impl GapReport {
    pub fn gap_f64(&self) -> f64 {
        crate::scalar::Scalar::to_f64(&self.gap)
    }
}

/// Exact primal-dual gap of a normalized potential and a feasible certificate.
pub fn certify_pair(
    h: &Hypergraph,
    s: &[Dyadic],
    x: &Potential,
    eta: &DualVector<BigRational>,
) -> Result<GapReport, CertificateError> {
    if x.len() != h.vertex_count() {
        return Err(CertificateError::PotentialLength {
            expected: h.vertex_count(),
            found: x.len(),
        });
    }
    if !x.is_normalized(h) {
        return Err(CertificateError::NotNormalized);
    }
    check_exact_feasibility(h, s, eta)?;
    let primal = primal_objective(h, s, &x.0).objective;
    let dual = dual_objective(h, eta);
    let gap = &primal + &dual;
    if gap.is_negative() {
        return Err(CertificateError::NegativeGap { gap });
    }
    Ok(GapReport {
        primal,
        dual,
        gap,
        edges_zero_sum: true,
        demand_matched: true,
        normalized: true,
    })
}

/// `E(x) - E(x*) - <ξ*, x - x*>`, checked against `P(x) - P(x*)`.
pub fn bregman_gap(
    h: &Hypergraph,
    s: &[Dyadic],
    x: &[BigRational],
    x_star: &[BigRational],
    xi_star: &[BigRational],
) -> Result<BigRational, CertificateError> {
    let degrees = h.degrees();
    let diff: Vec<BigRational> = s.iter().zip(xi_star).map(|(a, b)| a.to_rational() - b).collect();
    let pivot = degrees.iter().position(|d| !d.is_zero());
    let ratio = pivot.map(|v| &diff[v] / degrees[v].to_rational()).unwrap_or_else(BigRational::zero);
    if diff
        .iter()
        .zip(&degrees)
        .any(|(r, d)| *r != &ratio * d.to_rational())
    {
        return Err(CertificateError::IncompatibleSubgradient);
    }
    let linear: BigRational = xi_star
        .iter()
        .zip(x.iter().zip(x_star))
        .map(|(xi, (a, b))| xi * (a - b))
        .sum();
    let bregman = energy(h, x) - energy(h, x_star) - linear;
    let difference = primal_objective(h, s, x).objective - primal_objective(h, s, x_star).objective;
    if bregman != difference {
        return Err(CertificateError::BregmanMismatch { bregman, difference });
    }
    Ok(bregman)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{rational, unit_hypergraph};

    fn ints(values: &[i64]) -> Vec<Dyadic> {
        values.iter().map(|&v| Dyadic::from_int(v)).collect()
    }

    fn q(values: &[(i64, i64)]) -> Vec<BigRational> {
        values.iter().map(|&(a, b)| rational(a, b)).collect()
    }

    fn gamma() -> Dyadic {
        Dyadic::pow2_neg(30)
    }

    #[test]
    fn exactly_feasible_raw_is_a_fixed_point() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let raw = DualVector { values: vec![vec![1.0, 0.0, -1.0]] };
        let cert = repair_dual_certificate(&h, &h.overlap_tree(), &s, &raw, &gamma()).unwrap();
        assert!(cert.transfers.is_empty());
        assert!(cert.residual.iter().all(Dyadic::is_zero));
        assert_eq!(cert.eta.values[0], ints(&[1, 0, -1]));
    }

    #[test]
    fn triangle_noise_is_repaired() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let raw = DualVector { values: vec![vec![1.0 + 1e-12, -1e-12, -1.0]] };
        let cert = repair_dual_certificate(&h, &h.overlap_tree(), &s, &raw, &gamma()).unwrap();
        assert_eq!(cert.eta.values[0], ints(&[1, 0, -1]));
        check_exact_feasibility(&h, &s, &cert.to_rational()).unwrap();
    }

    #[test]
    fn path_imbalance_is_routed_along_the_tree() {
        let h = unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let raw = DualVector {
            values: vec![vec![1.0, -1.0], vec![0.75, -0.75]],
        };
        let cert = repair_dual_certificate(&h, &h.overlap_tree(), &s, &raw, &gamma()).unwrap();
        let exact = cert.to_rational();
        check_exact_feasibility(&h, &s, &exact).unwrap();
        assert_eq!(cert.residual, vec![Dyadic::zero(), Dyadic::new(1, 2), Dyadic::new(-1, 2)]);
        assert_eq!(cert.transfers.len(), 1);
        let before = dual_objective(&h, &raw);
        let after = crate::scalar::Scalar::to_f64(&dual_objective(&h, &exact));
        assert!(after >= before);
        assert_eq!(after, 1.0);
    }

    #[test]
    fn small_noise_costs_at_most_gamma() {
        let h = unit_hypergraph(4, &[&[0, 1, 2], &[2, 3]]).unwrap();
        let s = ints(&[1, 0, 0, -1]);
        let raw = DualVector {
            values: vec![vec![1.0 + 3e-13, -2e-13, -1.0], vec![1.0 - 1e-13, -1.0 + 4e-13]],
        };
        let cert = repair_dual_certificate(&h, &h.overlap_tree(), &s, &raw, &gamma()).unwrap();
        let exact = cert.to_rational();
        check_exact_feasibility(&h, &s, &exact).unwrap();
        let raw_exact = raw.map(|&v| Dyadic::from_f64(v).unwrap().to_rational());
        let increase = dual_objective(&h, &exact) - dual_objective(&h, &raw_exact);
        assert!(increase <= gamma().to_rational());
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let h = unit_hypergraph(4, &[&[0, 1], &[2, 3]]).unwrap();
        let raw = DualVector::zeros(&h);
        let err = repair_dual_certificate(&h, &h.overlap_tree(), &ints(&[0, 0, 0, 0]), &raw, &gamma());
        assert!(matches!(err, Err(CertificateError::NotConnected { components: 2 })));
    }

    #[test]
    fn certify_pair_examples() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let eta = DualVector { values: vec![q(&[(1, 1), (0, 1), (-1, 1)])] };
        let x = Potential(q(&[(1, 2), (0, 1), (-1, 2)]));
        let report = certify_pair(&h, &s, &x, &eta).unwrap();
        assert_eq!(report.primal, rational(-1, 2));
        assert_eq!(report.dual, rational(1, 2));
        assert!(report.gap.is_zero());
        let report = certify_pair(&h, &s, &Potential::zeros(3), &eta).unwrap();
        assert_eq!(report.gap, rational(1, 2));
    }

    #[test]
    fn certify_pair_rejects_bad_inputs() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let eta = DualVector { values: vec![q(&[(1, 1), (0, 1), (-1, 1)])] };
        let shifted = Potential(q(&[(1, 1), (0, 1), (0, 1)]));
        assert_eq!(certify_pair(&h, &s, &shifted, &eta), Err(CertificateError::NotNormalized));
        let tampered = DualVector { values: vec![q(&[(1, 1), (1, 1), (-2, 1)])] };
        assert_eq!(
            certify_pair(&h, &s, &Potential::zeros(3), &tampered),
            Err(CertificateError::DemandMismatch { vertex: 1 })
        );
        let unbalanced = DualVector { values: vec![q(&[(1, 1), (0, 1), (0, 1)])] };
        assert_eq!(
            certify_pair(&h, &s, &Potential::zeros(3), &unbalanced),
            Err(CertificateError::EdgeNotZeroSum { edge: 0 })
        );
    }

    #[test]
    fn bregman_examples() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let x = q(&[(1, 1), (0, 1), (-1, 1)]);
        let xs = q(&[(1, 2), (0, 1), (-1, 2)]);
        let xi = s.iter().map(Dyadic::to_rational).collect::<Vec<_>>();
        assert_eq!(bregman_gap(&h, &s, &x, &xs, &xi).unwrap(), rational(1, 2));
        assert!(bregman_gap(&h, &s, &xs, &xs, &xi).unwrap().is_zero());
        let shifted: Vec<BigRational> = xi.iter().map(|v| v + rational(3, 1)).collect();
        assert_eq!(bregman_gap(&h, &s, &x, &xs, &shifted).unwrap(), rational(1, 2));
        let bad = q(&[(1, 1), (1, 1), (-1, 1)]);
        assert_eq!(
            bregman_gap(&h, &s, &x, &xs, &bad),
            Err(CertificateError::IncompatibleSubgradient)
        );
    }

    #[test]
    fn bregman_is_laplacian_energy_on_graphs() {
        let h = unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let xs = q(&[(1, 1), (0, 1), (-1, 1)]);
        let xi = s.iter().map(Dyadic::to_rational).collect::<Vec<_>>();
        let x = q(&[(1, 3), (1, 5), (-8, 15)]);
        let diff: Vec<BigRational> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
        let half_l_norm = energy(&h, &diff);
        assert_eq!(bregman_gap(&h, &s, &x, &xs, &xi).unwrap(), half_l_norm);
    }
}
