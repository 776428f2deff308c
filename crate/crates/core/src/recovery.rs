//! Primal recovery: mass rounding, the support min-cost flow and its potentials.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::dualsolve::FirstStageOutput;
use crate::dyadic::Dyadic;
use crate::hypergraph::{edge_range, project_to_weighted_mean_zero, Hypergraph, InstanceError, Potential};
use crate::lifted::{build_lifted_graph, ArcKind};
use crate::mcf::{
    extract_residual_potentials, make_acyclic, solve_mcf_exact, McfArc, McfError, McfInstance,
    McfSolution, PotentialCertificate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error(transparent)]
    Mcf(#[from] McfError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("upper-bound multiplier on arc {arc} is nonzero; the capacities were not slack")]
    CapacityMultiplierNonzero { arc: usize },
    #[error("mass of edge {edge} is not finite")]
    NonFiniteMass { edge: usize },
    #[error("support solution is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryParams {
    /// `M` in `ρ = 2^-M`.
    pub grid_bits: u32,
    /// Mass safety margin `τ`.
    pub tau: Dyadic,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self::with_grid_bits(20)
    }
}

impl RecoveryParams {
    /// `τ = ρ · 2^-10`.
    pub fn with_grid_bits(grid_bits: u32) -> Self {
        Self {
            grid_bits,
            tau: Dyadic::pow2_neg(grid_bits + 10),
        }
    }
}

/// `r̂_e = ρ ⌈(max(0, μ̃_e) + τ) / (w_e ρ)⌉`, exact on the dyadic value of each `μ̃_e`.
pub fn round_budgets(
    mu: &[f64],
    weights: &[Dyadic],
    grid_bits: u32,
    tau: &Dyadic,
) -> Result<Vec<Dyadic>, RecoveryError> {
    mu.iter()
        .zip(weights)
        .enumerate()
        .map(|(edge, (&m, w))| {
            let m = Dyadic::from_f64(m).ok_or(RecoveryError::NonFiniteMass { edge })?;
            let upper = &m.max(Dyadic::zero()) + tau;
            let scaled = upper.mul_pow2(grid_bits as i64).to_rational() / w.to_rational();
            let k = ceil(&scaled);
            Ok(Dyadic::new(k, grid_bits))
        })
        .collect()
}

fn ceil(q: &BigRational) -> BigInt {
    let (quot, rem) = q.numer().div_mod_floor(q.denom());
    if rem.is_zero() {
        quot
    } else {
        quot + 1
    }
}

/// Nearest grid multiple (ties to even) for `v != 0`; vertex 0 absorbs the residue.
pub fn round_demand(s: &[Dyadic], grid_bits: u32) -> Vec<Dyadic> {
    let mut out: Vec<Dyadic> = s.iter().map(|v| v.round_to_grid(grid_bits)).collect();
    if let Some(first) = out.first_mut() {
        *first = Dyadic::zero();
        let rest: Dyadic = out.iter().sum();
        out[0] = -rest;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportInstance {
    pub budgets: Vec<Dyadic>,
    pub demand: Vec<Dyadic>,
    pub grid_bits: u32,
    /// Lifted topology scaled by `1/ρ`: costs `r̂_e/ρ` on quadratic arcs, capacities `(‖ŝ‖₁ + ρ)/ρ`.
    pub mcf: McfInstance,
}

pub fn build_support_instance(
    h: &Hypergraph,
    demand: &[Dyadic],
    budgets: &[Dyadic],
    grid_bits: u32,
) -> Result<SupportInstance, RecoveryError> {
    let off_grid = || RecoveryError::Inconsistent("value is not on the grid".into());
    let g = build_lifted_graph(h);
    let l1: Dyadic = demand.iter().map(Dyadic::abs).sum();
    let cap = (&l1 + &Dyadic::pow2_neg(grid_bits))
        .grid_index(grid_bits)
        .ok_or_else(off_grid)?;
    let costs = budgets
        .iter()
        .map(|r| r.grid_index(grid_bits).ok_or_else(off_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut node_demand = vec![BigInt::zero(); g.node_count()];
    for (slot, s) in node_demand.iter_mut().zip(demand) {
        *slot = s.grid_index(grid_bits).ok_or_else(off_grid)?;
    }
    let arcs = g
        .arcs()
        .iter()
        .map(|arc| McfArc {
            tail: arc.tail,
            head: arc.head,
            capacity: cap.clone(),
            cost: match arc.kind {
                ArcKind::Quadratic { edge } => costs[edge].clone(),
                _ => BigInt::zero(),
            },
        })
        .collect();
    Ok(SupportInstance {
        budgets: budgets.to_vec(),
        demand: demand.to_vec(),
        grid_bits,
        mcf: McfInstance {
            node_count: g.node_count(),
            arcs,
            demand: node_demand,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportResult {
    /// `L = max{<ŝ, x> : x ∈ X_0, R_e(x) <= r̂_e}`.
    pub value: BigRational,
    /// `ρ π` restricted to the vertices.
    pub potentials: Vec<Dyadic>,
    /// The maximizer, shifted into `X_0`.
    pub x: Potential,
    pub flow: McfSolution,
    pub certificate: PotentialCertificate,
}

/// Exact support query through the scaled min-cost flow and its residual potentials.
pub fn solve_support(
    h: &Hypergraph,
    demand: &[Dyadic],
    budgets: &[Dyadic],
    grid_bits: u32,
) -> Result<SupportResult, RecoveryError> {
    let inst = build_support_instance(h, demand, budgets, grid_bits)?;
    let flow = make_acyclic(&inst.mcf, &solve_mcf_exact(&inst.mcf)?);
    let certificate = extract_residual_potentials(&inst.mcf, &flow)?;
    certificate.verify(&inst.mcf, &flow)?;
    if let Some(arc) = certificate.upper_multipliers.iter().position(|l| !l.is_zero()) {
        return Err(RecoveryError::CapacityMultiplierNonzero { arc });
    }
    let rho2 = BigRational::new(BigInt::one(), BigInt::one() << (2 * grid_bits as usize));
    let value = BigRational::from_integer(flow.objective.clone()) * rho2;
    let potentials: Vec<Dyadic> = certificate.potentials[..h.vertex_count()]
        .iter()
        .map(|p| Dyadic::new(p.clone(), grid_bits))
        .collect();
    let raw: Vec<BigRational> = potentials.iter().map(Dyadic::to_rational).collect();
    let x = project_to_weighted_mean_zero(h, &raw)?;
    for (e, edge) in h.edges().iter().enumerate() {
        if edge_range(&x.0, &edge.vertices) > budgets[e].to_rational() {
            return Err(RecoveryError::Inconsistent(format!("range budget exceeded on edge {e}")));
        }
    }
    let linear: BigRational = demand.iter().zip(x.iter()).map(|(s, xv)| s.to_rational() * xv).sum();
    if linear != value {
        return Err(RecoveryError::Inconsistent("<ŝ, x> differs from the flow value".into()));
    }
    Ok(SupportResult {
        value,
        potentials,
        x,
        flow,
        certificate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub budgets: Vec<Dyadic>,
    pub rounded_demand: Vec<Dyadic>,
    pub support: SupportResult,
}

impl Recovery {
    pub fn x(&self) -> &Potential {
        &self.support.x
    }
}

/// Rounds the first-stage masses and demand and returns the support maximizer.
pub fn recover_primal(
    h: &Hypergraph,
    s: &[Dyadic],
    fs: &FirstStageOutput,
    params: &RecoveryParams,
) -> Result<Recovery, RecoveryError> {
    let weights: Vec<Dyadic> = h.edges().iter().map(|e| e.weight.clone()).collect();
    let budgets = round_budgets(&fs.masses.0, &weights, params.grid_bits, &params.tau)?;
    let rounded_demand = round_demand(s, params.grid_bits);
    let support = solve_support(h, &rounded_demand, &budgets, params.grid_bits)?;
    Ok(Recovery {
        budgets,
        rounded_demand,
        support,
    })
}

/// `‖a - b‖₁`.
pub fn l1_distance(a: &[Dyadic], b: &[Dyadic]) -> Dyadic {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualsolve::{solve_first_stage, SolverOptions};
    use crate::hypergraph::{primal_objective, rational, unit_hypergraph};

    fn ints(values: &[i64]) -> Vec<Dyadic> {
        values.iter().map(|&v| Dyadic::from_int(v)).collect()
    }

    fn q(values: &[(i64, i64)]) -> Vec<BigRational> {
        values.iter().map(|&(a, b)| rational(a, b)).collect()
    }

    #[test]
    fn budget_rounding_examples() {
        let one = [Dyadic::one()];
        let r = round_budgets(&[1.0], &one, 10, &Dyadic::pow2_neg(20)).unwrap();
        assert_eq!(r, vec![&Dyadic::one() + &Dyadic::pow2_neg(10)]);
        let r = round_budgets(&[0.0], &one, 10, &Dyadic::pow2_neg(20)).unwrap();
        assert_eq!(r, vec![Dyadic::pow2_neg(10)]);
        let r = round_budgets(&[-1e-12], &one, 10, &Dyadic::pow2_neg(20)).unwrap();
        assert_eq!(r, vec![Dyadic::pow2_neg(10)]);
        assert!(round_budgets(&[f64::NAN], &one, 10, &Dyadic::pow2_neg(20)).is_err());
    }

    #[test]
    fn demand_rounding_examples() {
        let s = vec![Dyadic::new(3, 15), Dyadic::new(-3, 15)];
        assert_eq!(round_demand(&s, 10), vec![Dyadic::zero(), Dyadic::zero()]);
        let on_grid = vec![Dyadic::new(7, 4), Dyadic::new(-3, 4), Dyadic::new(-1, 2)];
        assert_eq!(round_demand(&on_grid, 10), on_grid);
        let s = vec![Dyadic::new(-3, 12), Dyadic::new(1, 12), Dyadic::new(1, 11)];
        let hat = round_demand(&s, 10);
        assert!(hat.iter().sum::<Dyadic>().is_zero());
        assert!(l1_distance(&hat, &s) <= &Dyadic::from_int(3) * &Dyadic::pow2_neg(10));
    }

    #[test]
    fn support_examples() {
        let edge = unit_hypergraph(2, &[&[0, 1]]).unwrap();
        let res = solve_support(&edge, &ints(&[1, -1]), &ints(&[1]), 20).unwrap();
        assert_eq!(res.value, rational(1, 1));
        assert_eq!(res.x.0, q(&[(1, 2), (-1, 2)]));

        let tri = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let res = solve_support(&tri, &ints(&[1, 0, -1]), &ints(&[0]), 20).unwrap();
        assert_eq!(res.value, rational(0, 1));
        assert_eq!(res.x.0, q(&[(0, 1), (0, 1), (0, 1)]));

        let res = solve_support(&tri, &ints(&[1, 0, -1]), &ints(&[1]), 20).unwrap();
        assert_eq!(res.value, rational(1, 1));
        assert_eq!(&res.x.0[0] - &res.x.0[2], rational(1, 1));
    }

    fn pipeline(h: &Hypergraph, s: &[Dyadic]) -> Recovery {
        let g = build_lifted_graph(h);
        let opts = SolverOptions {
            epsilon: 1e-8,
            ..Default::default()
        };
        let fs = solve_first_stage(h, &g, &h.overlap_tree(), s, &opts).unwrap();
        recover_primal(h, s, &fs, &RecoveryParams::default()).unwrap()
    }

    #[test]
    fn recovery_examples() {
        let tri = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = ints(&[1, 0, -1]);
        let rec = pipeline(&tri, &s);
        let p = primal_objective(&tri, &s, &rec.x().0).objective;
        assert!(p <= rational(-1, 2) + rational(1, 10_000));

        let zero = pipeline(&tri, &ints(&[0, 0, 0]));
        assert_eq!(zero.x().0, q(&[(0, 1), (0, 1), (0, 1)]));

        let path = unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap();
        let rec = pipeline(&path, &s);
        let p = primal_objective(&path, &s, &rec.x().0).objective;
        assert!(p <= rational(-1, 1) + rational(1, 10_000));
    }
}
