//! First stage: the quadratic-cost lifted flow problem solved by primal
//! barrier path-following.
//!
//! The centering problem at parameter `t` is
//! `min t·Σ_e y_e + Σ_a ψ_a(f_a, y_a)` subject to `A↑f = b↑`, where `y_e` is the
//! epigraph variable of the quadratic arc of `e`. Transport arcs carry no cost,
//! so their epigraph coordinate is pinned at `y = 1` and only the cap part of
//! their barrier is active. Quadratic arcs are tracked through the slack
//! `g = y - f²/(2w)` directly; `y` is always rebuilt from `(f, g)`.
//!
//! Newton systems eliminate `y` per arc and solve the node system
//! `A diag(1/h̃) Aᵀ ν = r + A (g̃/h̃)` with the stiffest node grounded, by dense Cholesky.

pub mod barrier;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{quadratic_mass_objective, DualVector, MassVector};
use crate::dyadic::Dyadic;
use crate::hypergraph::{edge_range, Hypergraph, SpanningTree};
use crate::lifted::{feasible_start, ArcKind, LiftedError, LiftedGraph};

pub use barrier::{evaluate_barrier, ArcClass, BarrierEval, BarrierSpec, OutOfDomain, NU};

#[derive(Debug, Error)]
pub enum DualSolveError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Start(#[from] LiftedError),
    #[error("iteration limit reached with gap {gap:.3e}", gap = output.gap)]
    MaxIterations { output: Box<FirstStageOutput> },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Requested bound on `q(μ) - LB`.
    pub epsilon: f64,
    /// Max absolute node residual of `A↑f - b↑`.
    pub feasibility_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Multiplier applied to `t` between centerings.
    pub long_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-9,
            feasibility_tol: 1e-10,
            max_outer: 200,
            max_newton: 400,
            long_step: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub t: f64,
    pub objective: f64,
    pub residual: f64,
    pub gap: f64,
    pub newton_steps: usize,
}

#[derive(Clone, Debug)]
pub struct FirstStageOutput {
    pub flow: Vec<f64>,
    /// `μ_e` = flow on the quadratic arc of `e`.
    pub masses: MassVector<f64>,
    /// `(η_e)_v = f(e⁺, v) - f(v, e⁻)`.
    pub induced_dual: DualVector<f64>,
    /// Vertex potentials that produced the lower bound.
    pub potentials: Vec<f64>,
    /// `q(μ)`.
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub residual: f64,
    pub trace: Vec<TraceRow>,
}

struct Direction {
    /// Centering part, computed with a zero residual.
    df: Vec<f64>,
    /// Linear part of the change of the quadratic-arc slack `g`.
    dg: Vec<f64>,
    /// Minimum-`h̃`-norm correction with `A↑ df_feas = r`.
    df_feas: Vec<f64>,
    dg_feas: Vec<f64>,
    nu: Vec<f64>,
    lambda2: f64,
}

#[derive(Clone)]
struct State {
    t: f64,
    f: Vec<f64>,
    g: Vec<f64>,
    nu: Vec<f64>,
}

struct Ipm<'a> {
    graph: &'a LiftedGraph,
    b: Vec<f64>,
    weights: Vec<f64>,
    cap: f64,
    quad_offset: usize,
}

struct NodeSystem<'a> {
    graph: &'a LiftedGraph,
    chol: Cholesky<f64, Dyn>,
    ground: usize,
    h_tilde: &'a [f64],
}

impl NodeSystem<'_> {
    /// Solves `A diag(1/h̃) Aᵀ ν = A (z/h̃) + r` and returns `(ν, (Aᵀν - z)/h̃)`,
    /// refining until the flow meets `A d = r`.
    fn solve(&self, z: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let arcs = self.graph.arcs();
        let nodes = self.graph.node_count();
        let slot = |u: usize| self.slot(u);
        let mut rhs = DVector::<f64>::zeros(nodes - 1);
        for u in 0..nodes {
            if let Some(i) = slot(u) {
                rhs[i] = r[u];
            }
        }
        for (a, arc) in arcs.iter().enumerate() {
            let v = z[a] / self.h_tilde[a];
            if let Some(i) = slot(arc.head) {
                rhs[i] += v;
            }
            if let Some(i) = slot(arc.tail) {
                rhs[i] -= v;
            }
        }
        let mut nu = vec![0.0; nodes];
        let mut d: Vec<f64> = z.iter().zip(self.h_tilde).map(|(za, ha)| -za / ha).collect();
        // refinement passes update d from the correction alone, since
        // differences of the full ν lose digits once ν is large
        for _ in 0..4 {
            let delta = self.chol.solve(&rhs);
            let mut step = vec![0.0; nodes];
            for u in 0..nodes {
                if let Some(i) = slot(u) {
                    step[u] = delta[i];
                    nu[u] += delta[i];
                }
            }
            for (a, arc) in arcs.iter().enumerate() {
                d[a] += (step[arc.head] - step[arc.tail]) / self.h_tilde[a];
            }
            let mut miss = r.to_vec();
            for (arc, da) in arcs.iter().zip(&d) {
                miss[arc.head] -= da;
                miss[arc.tail] += da;
            }
            miss[self.ground] = 0.0;
            let worst = miss.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            if worst <= 1e-16 {
                break;
            }
            for u in 0..nodes {
                if let Some(i) = slot(u) {
                    rhs[i] = miss[u];
                }
            }
        }
        (nu, d)
    }

    fn slot(&self, u: usize) -> Option<usize> {
        match u.cmp(&self.ground) {
            std::cmp::Ordering::Less => Some(u),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(u - 1),
        }
    }
}

impl Ipm<'_> {
    fn residual(&self, f: &[f64]) -> Vec<f64> {
        let mut r = self.b.clone();
        for (arc, &value) in self.graph.arcs().iter().zip(f) {
            r[arc.head] -= value;
            r[arc.tail] += value;
        }
        r
    }

    fn max_residual(&self, f: &[f64]) -> f64 {
        self.residual(f).iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    fn direction(&self, st: &State) -> Result<Direction, DualSolveError> {
        let arcs = self.graph.arcs();
        let m = arcs.len();
        let mut h_tilde = vec![0.0; m];
        let mut g_tilde = vec![0.0; m];
        let mut quad_terms = Vec::with_capacity(self.weights.len());
        for (a, arc) in arcs.iter().enumerate() {
            let f = st.f[a];
            let slack = self.cap - f;
            let cap_grad = -1.0 / f + 1.0 / slack;
            let cap_hess = 1.0 / (f * f) + 1.0 / (slack * slack);
            match arc.kind {
                ArcKind::Quadratic { edge } => {
                    let w = self.weights[edge];
                    let g = st.g[edge];
                    let y = f * f / (2.0 * w) + g;
                    let k = f / w;
                    let denom = 2.0 * g * g + y * y;
                    let gy = st.t - 2.0 / y - 1.0 / g;
                    h_tilde[a] = cap_hess + 1.0 / (w * g) + 2.0 * k * k / denom;
                    g_tilde[a] = cap_grad + k * (2.0 * g + st.t * y * y - 2.0 * y) / denom;
                    quad_terms.push((g, y, k, gy, denom));
                }
                _ => {
                    h_tilde[a] = cap_hess;
                    g_tilde[a] = cap_grad;
                }
            }
        }
        let nodes = self.graph.node_count();
        let mut diag = vec![0.0; nodes];
        for (a, arc) in arcs.iter().enumerate() {
            diag[arc.head] += 1.0 / h_tilde[a];
            diag[arc.tail] += 1.0 / h_tilde[a];
        }
        // ground the stiffest node so that rounding error lands where flows are large
        let ground = (0..nodes).fold(0, |best, u| if diag[u] > diag[best] { u } else { best });
        let slot = |u: usize| match u.cmp(&ground) {
            std::cmp::Ordering::Less => Some(u),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(u - 1),
        };
        let mut mat = DMatrix::<f64>::zeros(nodes - 1, nodes - 1);
        for (a, arc) in arcs.iter().enumerate() {
            let c = 1.0 / h_tilde[a];
            let (p, q) = (slot(arc.tail), slot(arc.head));
            if let Some(q) = q {
                mat[(q, q)] += c;
            }
            if let Some(p) = p {
                mat[(p, p)] += c;
            }
            if let (Some(p), Some(q)) = (p, q) {
                mat[(p, q)] -= c;
                mat[(q, p)] -= c;
            }
        }
        let system = NodeSystem {
            graph: self.graph,
            chol: factor_spd(mat)?,
            ground,
            h_tilde: &h_tilde,
        };
        let (nu, df) = system.solve(&g_tilde, &vec![0.0; nodes]);
        let (_, df_feas) = system.solve(&vec![0.0; m], &self.residual(&st.f));
        let mut lambda2: f64 = (0..m).map(|a| h_tilde[a] * df[a] * df[a]).sum();
        let mut dg = vec![0.0; self.weights.len()];
        let mut dg_feas = vec![0.0; self.weights.len()];
        for (e, &(g, y, k, gy, denom)) in quad_terms.iter().enumerate() {
            let a = self.quad_offset + e;
            dg[e] = -g * g * (gy * y * y + 2.0 * k * df[a]) / denom;
            dg_feas[e] = -g * g * 2.0 * k * df_feas[a] / denom;
            lambda2 += gy * gy * y * y * g * g / denom;
        }
        if !lambda2.is_finite() || df.iter().chain(&df_feas).any(|x| !x.is_finite()) {
            return Err(DualSolveError::NumericalBreakdown(
                "non-finite Newton direction".into(),
            ));
        }
        Ok(Direction {
            df,
            dg,
            df_feas,
            dg_feas,
            nu,
            lambda2,
        })
    }

    fn try_step(
        &self,
        st: &State,
        dir: &Direction,
        alpha: f64,
        beta: f64,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let step: Vec<f64> = dir
            .df
            .iter()
            .zip(&dir.df_feas)
            .map(|(c, r)| alpha * c + beta * r)
            .collect();
        let f: Vec<f64> = st.f.iter().zip(&step).map(|(f, d)| f + d).collect();
        if f.iter().any(|&x| !(x > 0.0 && x < self.cap)) {
            return None;
        }
        let mut g = Vec::with_capacity(st.g.len());
        for e in 0..st.g.len() {
            let d = step[self.quad_offset + e];
            let next = st.g[e] + alpha * dir.dg[e] + beta * dir.dg_feas[e]
                - d * d / (2.0 * self.weights[e]);
            if !(next > 0.0) {
                return None;
            }
            g.push(next);
        }
        Some((f, g))
    }

    /// Damped Newton until the decrement is negligible, then pure feasibility
    /// corrections until the residual meets the tolerance.
    fn center(&self, st: &mut State, opts: &SolverOptions) -> Result<usize, DualSolveError> {
        let mut last_lambda2 = f64::INFINITY;
        let mut polishing = 0usize;
        for step in 0..opts.max_newton {
            let dir = self.direction(st)?;
            st.nu = dir.nu.clone();
            let residual = self.max_residual(&st.f);
            // small, stalled at the rounding floor, or well inside the quadratic region after many steps
            let centered = polishing > 0
                || dir.lambda2 <= 1e-12
                || (dir.lambda2 <= 1e-8 && dir.lambda2 >= 0.5 * last_lambda2)
                || (step >= 40 && dir.lambda2 <= 1e-4);
            if centered && residual <= opts.feasibility_tol {
                return Ok(step);
            }
            last_lambda2 = dir.lambda2;
            let (mut alpha, mut beta) = if centered {
                polishing += 1;
                if polishing > 20 {
                    break;
                }
                (0.0, 1.0)
            } else {
                let lambda = dir.lambda2.sqrt();
                let damped = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
                (damped, damped)
            };
            let mut accepted = None;
            for _ in 0..60 {
                if let Some(next) = self.try_step(st, &dir, alpha, beta) {
                    accepted = Some(next);
                    break;
                }
                alpha *= 0.5;
                beta *= 0.5;
            }
            let Some((f, g)) = accepted else {
                return Err(DualSolveError::NumericalBreakdown(
                    "line search left the barrier domain".into(),
                ));
            };
            st.f = f;
            st.g = g;
        }
        Err(DualSolveError::NumericalBreakdown(format!(
            "centering did not converge at t = {:.3e}",
            st.t
        )))
    }
}

fn factor_spd(mat: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, DualSolveError> {
    if let Some(chol) = mat.clone().cholesky() {
        return Ok(chol);
    }
    let scale = mat.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shifted = mat;
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += scale * 1e-14;
    }
    shifted
        .cholesky()
        .ok_or_else(|| DualSolveError::NumericalBreakdown("Newton system is not positive definite".into()))
}

/// Lower bound on `D*` from vertex potentials: `-P(cφ)` is a valid bound for
/// every real `c` and is largest at `c = <s,φ>/(2E(φ))`, where it equals
/// `<s,φ>² / (4 E(φ))`. Returns the bound and `cφ`.
pub fn potential_lower_bound(h: &Hypergraph, s: &[f64], phi: &[f64]) -> (f64, Vec<f64>) {
    let energy: f64 = h
        .edges()
        .iter()
        .map(|edge| {
            let r = edge_range(phi, &edge.vertices);
            0.5 * edge.weight.to_f64() * r * r
        })
        .sum();
    let linear: f64 = s.iter().zip(phi).map(|(a, b)| a * b).sum();
    if energy > 0.0 {
        let c = linear / (2.0 * energy);
        (linear * linear / (4.0 * energy), phi.iter().map(|p| c * p).collect())
    } else {
        (0.0, vec![0.0; phi.len()])
    }
}

/// Solves the quadratic-cost lifted flow problem to additive gap `opts.epsilon`.
///
/// The instance is first rescaled by powers of two so that `max |s_v|` lies in
/// `[1, 2)` and the weights have geometric mean near one. Both tolerances are
/// absolute, except that the rescaled problem is never asked for a gap below
/// `1e-12` or a residual below `1e-13`.
pub fn solve_first_stage(
    h: &Hypergraph,
    g: &LiftedGraph,
    tree: &SpanningTree,
    s: &[Dyadic],
    opts: &SolverOptions,
) -> Result<FirstStageOutput, DualSolveError> {
    if !(opts.epsilon > 0.0) {
        return Err(DualSolveError::InvalidEpsilon(opts.epsilon));
    }
    let scaling = Scaling::for_instance(h, s);
    let scaled_h = scaling.hypergraph(h);
    let scaled_s: Vec<Dyadic> = s.iter().map(|v| v.mul_pow2(-scaling.demand_exp)).collect();
    let scaled_opts = SolverOptions {
        epsilon: (opts.epsilon * 2f64.powi(scaling.objective_exp())).max(GAP_FLOOR),
        feasibility_tol: (opts.feasibility_tol * 2f64.powi(-scaling.demand_exp as i32)).max(RESIDUAL_FLOOR),
        ..opts.clone()
    };
    match solve_scaled(&scaled_h, g, tree, &scaled_s, &scaled_opts) {
        Ok(out) => Ok(scaling.restore(out)),
        Err(DualSolveError::MaxIterations { output }) => Err(DualSolveError::MaxIterations {
            output: Box::new(scaling.restore(*output)),
        }),
        Err(other) => Err(other),
    }
}

/// Smallest gap and residual requested of the rescaled problem, where demands are of unit size.
const GAP_FLOOR: f64 = 1e-12;
const RESIDUAL_FLOOR: f64 = 1e-13;

/// `s' = 2^-k s`, `w' = 2^-j w`; objectives scale by `2^(j-2k)`.
struct Scaling {
    demand_exp: i64,
    weight_exp: i64,
}

impl Scaling {
    fn for_instance(h: &Hypergraph, s: &[Dyadic]) -> Self {
        let max_s = s.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        let demand_exp = if max_s > 0.0 { max_s.log2().floor() as i64 } else { 0 };
        let mean_log_w = h.edges().iter().map(|e| e.weight.to_f64().log2()).sum::<f64>()
            / h.edge_count().max(1) as f64;
        Self {
            demand_exp,
            weight_exp: mean_log_w.round() as i64,
        }
    }

    /// Exponent of `σ²/ω`, the factor from original to scaled objectives.
    fn objective_exp(&self) -> i32 {
        (self.weight_exp - 2 * self.demand_exp) as i32
    }

    fn hypergraph(&self, h: &Hypergraph) -> Hypergraph {
        let edges = h
            .edges()
            .iter()
            .map(|e| crate::hypergraph::Edge {
                vertices: e.vertices.clone(),
                weight: e.weight.mul_pow2(-self.weight_exp),
            })
            .collect();
        Hypergraph::new(h.vertex_count(), edges).expect("rescaling keeps the hypergraph valid")
    }

    fn restore(&self, out: FirstStageOutput) -> FirstStageOutput {
        let flow_scale = 2f64.powi(self.demand_exp as i32);
        let obj_scale = 2f64.powi(-self.objective_exp());
        let potential_scale = 2f64.powi((self.demand_exp - self.weight_exp) as i32);
        FirstStageOutput {
            flow: out.flow.iter().map(|f| f * flow_scale).collect(),
            masses: MassVector(out.masses.0.iter().map(|m| m * flow_scale).collect()),
            induced_dual: out.induced_dual.map(|v| v * flow_scale),
            potentials: out.potentials.iter().map(|p| p * potential_scale).collect(),
            objective: out.objective * obj_scale,
            lower_bound: out.lower_bound * obj_scale,
            gap: out.gap * obj_scale,
            residual: out.residual * flow_scale,
            trace: out
                .trace
                .into_iter()
                .map(|row| TraceRow {
                    objective: row.objective * obj_scale,
                    residual: row.residual * flow_scale,
                    gap: row.gap * obj_scale,
                    ..row
                })
                .collect(),
        }
    }
}

fn solve_scaled(
    h: &Hypergraph,
    g: &LiftedGraph,
    tree: &SpanningTree,
    s: &[Dyadic],
    opts: &SolverOptions,
) -> Result<FirstStageOutput, DualSolveError> {
    let start = feasible_start(h, g, tree, s)?;
    let s_f64: Vec<f64> = s.iter().map(Dyadic::to_f64).collect();
    let mut b = vec![0.0; g.node_count()];
    b[..s.len()].copy_from_slice(&s_f64);
    let weights: Vec<f64> = h.edges().iter().map(|e| e.weight.to_f64()).collect();
    let ipm = Ipm {
        graph: g,
        b,
        cap: start.cap.to_f64(),
        quad_offset: g.transport_arc_count(),
        weights,
    };
    let f: Vec<f64> = start.flow.iter().map(Dyadic::to_f64).collect();
    // keep t·Σy at most the arc count at the start so the first centering is short
    let start_cost: f64 = (0..h.edge_count())
        .map(|e| {
            let fe = f[g.quadratic_arc(e)];
            fe * fe / (2.0 * ipm.weights[e]) + 1.0
        })
        .sum();
    let mut st = State {
        t: (g.arc_count() as f64 / start_cost).min(1.0),
        f,
        g: vec![1.0; h.edge_count()],
        nu: vec![0.0; g.node_count()],
    };
    let short_step = 1.0 + 1.0 / (8.0 * (NU * g.arc_count() as f64).sqrt());
    let mut trace = Vec::new();
    let mut best_lb = f64::NEG_INFINITY;
    let mut best_phi = vec![0.0; h.vertex_count()];
    let mut newton_steps = ipm.center(&mut st, opts)?;
    for iteration in 0.. {
        let phi: Vec<f64> = st.nu[..h.vertex_count()].iter().map(|v| v / st.t).collect();
        let (lb, phi) = potential_lower_bound(h, &s_f64, &phi);
        if lb > best_lb {
            best_lb = lb;
            best_phi = phi;
        }
        let output = assemble(h, g, &ipm, &st, best_lb, &best_phi, &trace);
        trace.push(TraceRow {
            iteration,
            t: st.t,
            objective: output.objective,
            residual: output.residual,
            gap: output.gap,
            newton_steps,
        });
        if output.gap <= opts.epsilon && output.residual <= opts.feasibility_tol {
            return Ok(FirstStageOutput { trace, ..output });
        }
        if iteration + 1 >= opts.max_outer {
            return Err(DualSolveError::MaxIterations {
                output: Box::new(FirstStageOutput { trace, ..output }),
            });
        }
        let saved = st.clone();
        // the gap falls roughly like 1/t, so avoid overshooting the last step
        st.t = saved.t * (1.5 * output.gap / opts.epsilon).clamp(short_step, opts.long_step.max(short_step));
        newton_steps = match ipm.center(&mut st, opts) {
            Ok(steps) => steps,
            Err(_) => {
                st = saved.clone();
                st.t = saved.t * short_step;
                ipm.center(&mut st, opts)?
            }
        };
    }
    unreachable!()
}

fn assemble(
    h: &Hypergraph,
    g: &LiftedGraph,
    ipm: &Ipm<'_>,
    st: &State,
    lower_bound: f64,
    phi: &[f64],
    trace: &[TraceRow],
) -> FirstStageOutput {
    let masses = MassVector(
        (0..h.edge_count())
            .map(|e| st.f[g.quadratic_arc(e)])
            .collect(),
    );
    let induced_dual = DualVector {
        values: h
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let base = h.incidence_offset(e);
                (0..edge.vertices.len())
                    .map(|i| {
                        st.f[LiftedGraph::out_arc(base + i)] - st.f[LiftedGraph::in_arc(base + i)]
                    })
                    .collect()
            })
            .collect(),
    };
    let objective = quadratic_mass_objective(h, &masses);
    FirstStageOutput {
        flow: st.f.clone(),
        masses,
        induced_dual,
        potentials: phi.to_vec(),
        objective,
        lower_bound,
        gap: objective - lower_bound,
        residual: ipm.max_residual(&st.f),
        trace: trace.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{check_dual_feasible, dual_objective, mass_of};
    use crate::hypergraph::unit_hypergraph;
    use crate::lifted::build_lifted_graph;

    fn ints(values: &[i64]) -> Vec<Dyadic> {
        values.iter().map(|&v| Dyadic::from_int(v)).collect()
    }

    fn run(h: &Hypergraph, s: &[Dyadic], eps: f64) -> FirstStageOutput {
        let g = build_lifted_graph(h);
        let opts = SolverOptions {
            epsilon: eps,
            ..Default::default()
        };
        solve_first_stage(h, &g, &h.overlap_tree(), s, &opts).unwrap()
    }

    fn assert_monotone(out: &FirstStageOutput) {
        for pair in out.trace.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective * (1.0 + 1e-12) + 1e-15,
                "{pair:?}"
            );
        }
    }

    #[test]
    fn triangle() {
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let out = run(&h, &ints(&[1, 0, -1]), 1e-8);
        assert!(out.objective >= 0.5 - 1e-12 && out.objective <= 0.5 + 1e-8, "{}", out.objective);
        assert!((out.masses.0[0] - 1.0).abs() < 1e-6);
        assert!(out.lower_bound <= 0.5 + 1e-12);
        assert!(out.gap <= 1e-8);
        assert_monotone(&out);
        let report = check_dual_feasible(&h, &ints(&[1, 0, -1]), &out.induced_dual, 1e-9);
        assert!(report.feasible);
        let eta_mass = mass_of(&out.induced_dual);
        assert!(eta_mass.0[0] <= out.masses.0[0] + 1e-9);
        assert!(dual_objective(&h, &out.induced_dual) <= out.objective + 1e-9);
    }

    #[test]
    fn single_edge() {
        let h = unit_hypergraph(2, &[&[0, 1]]).unwrap();
        let out = run(&h, &ints(&[1, -1]), 1e-9);
        assert!((out.objective - 0.5).abs() < 1e-8);
        assert!((out.induced_dual.values[0][0] - 1.0).abs() < 1e-6);
        assert!((out.induced_dual.values[0][1] + 1.0).abs() < 1e-6);
        assert!((out.potentials[0] - out.potentials[1] - 1.0).abs() < 1e-4);
        assert_monotone(&out);
    }

    #[test]
    fn zero_demand() {
        let h = unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap();
        let out = run(&h, &ints(&[0, 0, 0]), 1e-9);
        assert!(out.objective <= 1e-9);
        assert!(out.masses.0.iter().all(|&m| m < 1e-4));
        assert_monotone(&out);
    }

    #[test]
    fn lower_bound_from_exact_potential() {
        let h = unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap();
        let (lb, x) = potential_lower_bound(&h, &[1.0, 0.0, -1.0], &[1.0, 0.0, -1.0]);
        assert!((lb - 1.0).abs() < 1e-15);
        assert_eq!(x, vec![1.0, 0.0, -1.0]);
        let (lb, x) = potential_lower_bound(&h, &[1.0, 0.0, -1.0], &[2.0, 0.0, -2.0]);
        assert!((lb - 1.0).abs() < 1e-15);
        assert_eq!(x, vec![1.0, 0.0, -1.0]);
    }
}
