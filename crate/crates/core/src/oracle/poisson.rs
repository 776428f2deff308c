//! Reference Poisson optimum: projected subgradient with averaging, followed
//! by an exact polish that guesses the active face, solves the face Laplacian
//! exactly and proves optimality with a dual vector found by the simplex.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::linalg::laplacian_solve;
use super::simplex::{oracle_dense_simplex, LpOutcome, LpProblem, Relation};
use crate::dual::{dual_objective, DualVector};
use crate::dyadic::Dyadic;
use crate::hypergraph::{edge_range, primal_objective, project_to_weighted_mean_zero, Hypergraph};
use crate::regularized::{ground_augment, RegularizedError};
use crate::scalar::Scalar;

type Q = BigRational;

const PHASES: usize = 10;

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub iterations: usize,
    /// Step of the first phase; each later phase restarts from the best point
    /// with a quarter of the step. `None` picks `1 / (2 max_e w_e |e|)`.
    pub step: Option<f64>,
    /// Attempt the exact polish.
    pub polish: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            step: None,
            polish: true,
        }
    }
}

/// An exactly optimal primal-dual pair: `P(x) + D(η) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactOptimum {
    pub x: Vec<Q>,
    pub value: Q,
    pub eta: DualVector<Q>,
}

#[derive(Clone, Debug)]
pub struct PrimalOracle {
    /// Best subgradient point, shifted into `X_0`.
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value over the last 10% of iterations moved by at most `1e-6`.
    pub stabilized: bool,
    pub exact: Option<ExactOptimum>,
}

impl PrimalOracle {
    /// Exact optimum when the polish succeeded, otherwise the subgradient value.
    pub fn best_value(&self) -> f64 {
        self.exact.as_ref().map_or(self.value, |opt| opt.value.to_f64())
    }

    pub fn best_x(&self) -> Vec<f64> {
        self.exact
            .as_ref()
            .map_or_else(|| self.x.clone(), |opt| opt.x.iter().map(Scalar::to_f64).collect())
    }
}

fn subgradient(h: &Hypergraph, s: &[f64], x: &[f64], out: &mut [f64]) {
    for (o, sv) in out.iter_mut().zip(s) {
        *o = -sv;
    }
    for edge in h.edges() {
        let (mut hi, mut lo) = (edge.vertices[0], edge.vertices[0]);
        for &v in &edge.vertices {
            if x[v] > x[hi] {
                hi = v;
            }
            if x[v] < x[lo] {
                lo = v;
            }
        }
        let g = edge.weight.to_f64() * (x[hi] - x[lo]);
        out[hi] += g;
        out[lo] -= g;
    }
}

fn value(h: &Hypergraph, s: &[f64], x: &[f64]) -> f64 {
    let energy: f64 = h
        .edges()
        .iter()
        .map(|e| {
            let r = edge_range(x, &e.vertices);
            0.5 * e.weight.to_f64() * r * r
        })
        .sum();
    energy - s.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

fn shift_to_x0(h: &Hypergraph, x: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = h.degrees().iter().map(Dyadic::to_f64).collect();
    let mean = d.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / d.iter().sum::<f64>();
    x.iter().map(|v| v - mean).collect()
}

/// Reference value of `min_{x ∈ X_0} P(x)` for tiny instances.
pub fn oracle_primal_poisson(h: &Hypergraph, s: &[Dyadic], opts: &OracleOptions) -> PrimalOracle {
    let n = h.vertex_count();
    let sf: Vec<f64> = s.iter().map(Dyadic::to_f64).collect();
    let step = opts.step.unwrap_or_else(|| {
        let scale = h
            .edges()
            .iter()
            .map(|e| e.weight.to_f64() * e.vertices.len() as f64)
            .fold(0.0, f64::max);
        1.0 / (2.0 * scale.max(f64::MIN_POSITIVE))
    });
    let mut best_x = vec![0.0; n];
    let mut best = value(h, &sf, &best_x);
    let mut grad = vec![0.0; n];
    let phase_len = (opts.iterations / PHASES).max(1);
    let tail_start = opts.iterations - opts.iterations / 10;
    let mut best_at_tail = best;
    let mut k = 0;
    for phase in 0..PHASES {
        // restart from the best point with a smaller constant step
        let alpha = step * 0.25f64.powi(phase as i32);
        let mut x = best_x.clone();
        let mut avg = x.clone();
        for j in 1..=phase_len {
            subgradient(h, &sf, &x, &mut grad);
            for (xv, g) in x.iter_mut().zip(&grad) {
                *xv -= alpha * g;
            }
            for (a, xv) in avg.iter_mut().zip(&x) {
                *a += (xv - *a) / j as f64;
            }
            for candidate in [&x, &avg] {
                let v = value(h, &sf, candidate);
                if v < best {
                    best = v;
                    best_x.clone_from(candidate);
                }
            }
            k += 1;
            if k == tail_start {
                best_at_tail = best;
            }
        }
    }
    let x = shift_to_x0(h, &best_x);
    let exact = if opts.polish { polish(h, s, &x) } else { None };
    PrimalOracle {
        value: best,
        stabilized: best_at_tail - best <= 1e-6,
        x,
        exact,
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, v: usize) -> usize {
        let p = self.0[v];
        if p == v {
            return v;
        }
        let root = self.find(p);
        self.0[v] = root;
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Tries decreasing tie tolerances until a face guess is proven optimal.
pub fn polish(h: &Hypergraph, s: &[Dyadic], x: &[f64]) -> Option<ExactOptimum> {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1..=16)
        .map(|i| scale * 10f64.powf(-(i as f64) / 2.0))
        .find_map(|delta| polish_face(h, s, x, delta))
}

fn polish_face(h: &Hypergraph, s: &[Dyadic], x: &[f64], delta: f64) -> Option<ExactOptimum> {
    let n = h.vertex_count();
    let mut uf = UnionFind((0..n).collect());
    let mut links = Vec::new();
    for edge in h.edges() {
        let hi = edge.vertices.iter().map(|&v| x[v]).fold(f64::MIN, f64::max);
        let lo = edge.vertices.iter().map(|&v| x[v]).fold(f64::MAX, f64::min);
        let top: Vec<usize> = edge.vertices.iter().copied().filter(|&v| x[v] >= hi - delta).collect();
        let bottom: Vec<usize> = edge.vertices.iter().copied().filter(|&v| x[v] <= lo + delta).collect();
        if hi - lo <= delta {
            for &v in &edge.vertices {
                uf.union(edge.vertices[0], v);
            }
            continue;
        }
        for &v in &top {
            uf.union(top[0], v);
        }
        for &v in &bottom {
            uf.union(bottom[0], v);
        }
        links.push((top[0], bottom[0], edge.weight.to_rational()));
    }
    let mut class_demand = vec![Q::zero(); n];
    for (v, sv) in s.iter().enumerate() {
        class_demand[uf.find(v)] += sv.to_rational();
    }
    let class_links: Vec<(usize, usize, Q)> = links
        .into_iter()
        .map(|(a, b, w)| (uf.find(a), uf.find(b), w))
        .collect();
    let class_x = laplacian_solve(n, &class_links, &class_demand)?;
    let mut raw: Vec<Q> = (0..n).map(|v| class_x[uf.find(v)].clone()).collect();
    // each component of the face graph floats freely; pin it near the approximate point
    let mut parts = UnionFind((0..n).collect());
    for v in 0..n {
        let c = uf.find(v);
        parts.union(v, c);
    }
    for (a, b, _) in &class_links {
        parts.union(*a, *b);
    }
    let mut offset = vec![(0.0, 0usize); n];
    for v in 0..n {
        let root = parts.find(v);
        offset[root].0 += x[v] - raw[v].to_f64();
        offset[root].1 += 1;
    }
    for v in 0..n {
        let (total, count) = offset[parts.find(v)];
        let shift = Dyadic::from_f64(total / count as f64)?.round_to_grid(40);
        raw[v] += shift.to_rational();
    }
    let x = project_to_weighted_mean_zero(h, &raw).ok()?.0;
    let eta = restore_dual(h, s, &x)?;
    let value = primal_objective(h, s, &x).objective;
    if &value + dual_objective(h, &eta) != Q::zero() {
        return None;
    }
    Some(ExactOptimum { x, value, eta })
}

/// Finds `η_e = w_e R_e(x) (p_e - q_e)` with `p_e`, `q_e` distributions on the
/// exact argmax and argmin of `x` over `e` and `Bη = s`, by a feasibility LP.
pub fn restore_dual(h: &Hypergraph, s: &[Dyadic], x: &[Q]) -> Option<DualVector<Q>> {
    let mut columns = Vec::new();
    let mut scales = Vec::with_capacity(h.edge_count());
    for (e, edge) in h.edges().iter().enumerate() {
        let r = edge_range(x, &edge.vertices);
        let scale = edge.weight.to_rational() * &r;
        if !r.is_zero() {
            let hi = edge.vertices.iter().map(|&v| &x[v]).max()?;
            let lo = edge.vertices.iter().map(|&v| &x[v]).min()?;
            for (slot, &v) in edge.vertices.iter().enumerate() {
                if &x[v] == hi {
                    columns.push((e, slot, v, true));
                }
                if &x[v] == lo {
                    columns.push((e, slot, v, false));
                }
            }
        }
        scales.push(scale);
    }
    let mut lp = LpProblem::new(columns.len());
    for (e, _) in h.edges().iter().enumerate() {
        if scales[e].is_zero() {
            continue;
        }
        for side in [true, false] {
            let terms: Vec<(usize, Q)> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.0 == e && c.3 == side)
                .map(|(j, _)| (j, Q::one()))
                .collect();
            lp.add(&terms, Relation::Eq, Q::one());
        }
    }
    for (v, sv) in s.iter().enumerate() {
        let terms: Vec<(usize, Q)> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.2 == v)
            .map(|(j, c)| (j, if c.3 { scales[c.0].clone() } else { -scales[c.0].clone() }))
            .collect();
        lp.add(&terms, Relation::Eq, sv.to_rational());
    }
    let LpOutcome::Optimal { x: weights, .. } = oracle_dense_simplex(&lp) else {
        return None;
    };
    let mut eta = DualVector::<Q>::zeros(h);
    for ((e, slot, _, top), p) in columns.iter().zip(weights) {
        let delta = &scales[*e] * p;
        if *top {
            eta.values[*e][*slot] += delta;
        } else {
            eta.values[*e][*slot] -= delta;
        }
    }
    Some(eta)
}

#[derive(Clone, Debug)]
pub struct DualOracle {
    /// `D(η)` of the best known feasible `η`, an upper bound on `D*`.
    pub value: f64,
    /// `-P(x)` of the best known `x`, a lower bound on `D*`.
    pub lower: f64,
    pub exact: Option<ExactOptimum>,
}

/// Bracket on `D* = -OPT`; collapses to a point when the polish certifies optimality.
pub fn oracle_dual_optimum(h: &Hypergraph, s: &[Dyadic], opts: &OracleOptions) -> DualOracle {
    let primal = oracle_primal_poisson(h, s, opts);
    match primal.exact {
        Some(opt) => {
            let v = dual_objective(h, &opt.eta).to_f64();
            DualOracle {
                value: v,
                lower: -opt.value.to_f64(),
                exact: Some(opt),
            }
        }
        None => DualOracle {
            value: f64::INFINITY,
            lower: -primal.value,
            exact: None,
        },
    }
}

#[derive(Clone, Debug)]
pub struct RegularizedOracle {
    /// Minimizer of `P_λ` (ground coordinate removed).
    pub x: Vec<f64>,
    pub value: f64,
    pub exact: Option<Vec<Q>>,
}

/// Reference minimizer of the regularized objective via the augmented instance.
pub fn oracle_regularized(
    h: &Hypergraph,
    lambda: &Dyadic,
    s: &[Dyadic],
    opts: &OracleOptions,
) -> Result<RegularizedOracle, RegularizedError> {
    let r = ground_augment(h, lambda, s)?;
    let out = oracle_primal_poisson(&r.augmented, &r.augmented_demand, opts);
    let g = r.ground();
    let exact = out.exact.as_ref().map(|opt| {
        let base = opt.x[g].clone();
        opt.x[..g].iter().map(|v| v - &base).collect::<Vec<Q>>()
    });
    let x = match &exact {
        Some(xs) => xs.iter().map(Scalar::to_f64).collect(),
        None => out.x[..g].iter().map(|v| v - out.x[g]).collect(),
    };
    Ok(RegularizedOracle {
        x,
        value: out.best_value(),
        exact,
    })
}
