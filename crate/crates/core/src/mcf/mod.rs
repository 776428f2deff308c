//! Exact integral min-cost flow by successive shortest paths, with
//! residual-potential duals.
//!
//! Conventions: `demand[u]` is inflow minus outflow at `u`; costs and
//! capacities are nonnegative integers.

pub mod dimacs;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum McfError {
    #[error("invalid min-cost flow instance: {0}")]
    InvalidInstance(String),
    #[error("demand cannot be routed: {routed} of {required} units")]
    Infeasible { routed: BigInt, required: BigInt },
    #[error("residual graph has a negative cycle; the flow is not optimal")]
    NegativeCycleDetected,
    #[error("potential certificate violated: {0}")]
    CertificateViolation(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McfArc {
    pub tail: usize,
    pub head: usize,
    pub capacity: BigInt,
    pub cost: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McfInstance {
    pub node_count: usize,
    pub arcs: Vec<McfArc>,
    pub demand: Vec<BigInt>,
}

impl McfInstance {
    pub fn validate(&self) -> Result<(), McfError> {
        if self.demand.len() != self.node_count {
            return Err(McfError::InvalidInstance(format!(
                "{} demands for {} nodes",
                self.demand.len(),
                self.node_count
            )));
        }
        if !self.demand.iter().sum::<BigInt>().is_zero() {
            return Err(McfError::InvalidInstance("demands do not sum to zero".into()));
        }
        for (idx, arc) in self.arcs.iter().enumerate() {
            if arc.tail >= self.node_count || arc.head >= self.node_count {
                return Err(McfError::InvalidInstance(format!("arc {idx} has an endpoint out of range")));
            }
            if arc.capacity.is_negative() || arc.cost.is_negative() {
                return Err(McfError::InvalidInstance(format!(
                    "arc {idx} has a negative capacity or cost"
                )));
            }
        }
        Ok(())
    }

    pub fn objective(&self, flow: &[BigInt]) -> BigInt {
        self.arcs.iter().zip(flow).map(|(a, f)| &a.cost * f).sum()
    }

    /// Inflow minus outflow per node.
    pub fn imbalance(&self, flow: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.node_count];
        for (arc, f) in self.arcs.iter().zip(flow) {
            out[arc.head] += f;
            out[arc.tail] -= f;
        }
        out
    }

    pub fn is_feasible(&self, flow: &[BigInt]) -> bool {
        flow.len() == self.arcs.len()
            && self
                .arcs
                .iter()
                .zip(flow)
                .all(|(a, f)| !f.is_negative() && f <= &a.capacity)
            && self.imbalance(flow) == self.demand
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McfSolution {
    pub flow: Vec<BigInt>,
    pub objective: BigInt,
}

/// Residual arc: original arc index and orientation.
#[derive(Clone, Copy)]
struct Residual {
    arc: usize,
    forward: bool,
}

struct Network {
    node_count: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    caps: Vec<BigInt>,
    costs: Vec<BigInt>,
    flow: Vec<BigInt>,
    adjacency: Vec<Vec<Residual>>,
}

impl Network {
    fn new(node_count: usize) -> Self {
        Self {
            node_count,
            tails: Vec::new(),
            heads: Vec::new(),
            caps: Vec::new(),
            costs: Vec::new(),
            flow: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
        }
    }

    fn add_arc(&mut self, tail: usize, head: usize, cap: BigInt, cost: BigInt) {
        let arc = self.tails.len();
        self.tails.push(tail);
        self.heads.push(head);
        self.caps.push(cap);
        self.costs.push(cost);
        self.flow.push(BigInt::zero());
        self.adjacency[tail].push(Residual { arc, forward: true });
        self.adjacency[head].push(Residual { arc, forward: false });
    }

    fn endpoints(&self, r: Residual) -> (usize, usize) {
        if r.forward {
            (self.tails[r.arc], self.heads[r.arc])
        } else {
            (self.heads[r.arc], self.tails[r.arc])
        }
    }

    fn residual_cap(&self, r: Residual) -> BigInt {
        if r.forward {
            &self.caps[r.arc] - &self.flow[r.arc]
        } else {
            self.flow[r.arc].clone()
        }
    }

    fn residual_cost(&self, r: Residual) -> BigInt {
        if r.forward {
            self.costs[r.arc].clone()
        } else {
            -&self.costs[r.arc]
        }
    }

    /// Dijkstra on reduced costs; ties keep the earlier label, arcs scanned by index.
    fn shortest_paths(&self, source: usize, pi: &[BigInt]) -> (Vec<Option<BigInt>>, Vec<Option<Residual>>) {
        let mut dist: Vec<Option<BigInt>> = vec![None; self.node_count];
        let mut pred: Vec<Option<Residual>> = vec![None; self.node_count];
        let mut done = vec![false; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(BigInt::zero());
        heap.push(Reverse((BigInt::zero(), source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let mut out = self.adjacency[u].clone();
            out.sort_by_key(|r| r.arc);
            for r in out {
                if !self.residual_cap(r).is_positive() {
                    continue;
                }
                let (_, v) = self.endpoints(r);
                if done[v] {
                    continue;
                }
                let nd = &d + self.residual_cost(r) + &pi[u] - &pi[v];
                if dist[v].as_ref().is_none_or(|old| &nd < old) {
                    dist[v] = Some(nd.clone());
                    pred[v] = Some(r);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        (dist, pred)
    }
}

/// Successive shortest paths from a super source to a super sink.
pub fn solve_mcf_exact(inst: &McfInstance) -> Result<McfSolution, McfError> {
    inst.validate()?;
    let n = inst.node_count;
    let (source, sink) = (n, n + 1);
    let mut net = Network::new(n + 2);
    for arc in &inst.arcs {
        net.add_arc(arc.tail, arc.head, arc.capacity.clone(), arc.cost.clone());
    }
    let mut required = BigInt::zero();
    for (u, d) in inst.demand.iter().enumerate() {
        if d.is_negative() {
            net.add_arc(source, u, -d, BigInt::zero());
        } else if d.is_positive() {
            net.add_arc(u, sink, d.clone(), BigInt::zero());
            required += d;
        }
    }
    let mut pi = vec![BigInt::zero(); n + 2];
    let mut routed = BigInt::zero();
    while routed < required {
        let (dist, pred) = net.shortest_paths(source, &pi);
        if dist[sink].is_none() {
            return Err(McfError::Infeasible { routed, required });
        }
        let reach_max = dist.iter().flatten().max().cloned().unwrap_or_default();
        for (p, d) in pi.iter_mut().zip(&dist) {
            *p += d.as_ref().unwrap_or(&reach_max);
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != source {
            let r = pred[v].expect("reachable node has a predecessor");
            path.push(r);
            v = net.endpoints(r).0;
        }
        let bottleneck = path
            .iter()
            .map(|&r| net.residual_cap(r))
            .min()
            .expect("nonempty path")
            .min(&required - &routed);
        for r in path {
            if r.forward {
                net.flow[r.arc] += &bottleneck;
            } else {
                net.flow[r.arc] -= &bottleneck;
            }
        }
        routed += bottleneck;
    }
    let flow: Vec<BigInt> = net.flow[..inst.arcs.len()].to_vec();
    Ok(McfSolution {
        objective: inst.objective(&flow),
        flow,
    })
}

/// Cancels directed cycles in the flow support; with nonnegative costs the
/// objective cannot increase.
pub fn make_acyclic(inst: &McfInstance, sol: &McfSolution) -> McfSolution {
    let mut flow = sol.flow.clone();
    while let Some(cycle) = find_support_cycle(inst, &flow) {
        let amount = cycle.iter().map(|&a| flow[a].clone()).min().expect("nonempty cycle");
        for a in cycle {
            flow[a] -= &amount;
        }
    }
    McfSolution {
        objective: inst.objective(&flow),
        flow,
    }
}

fn find_support_cycle(inst: &McfInstance, flow: &[BigInt]) -> Option<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); inst.node_count];
    for (a, arc) in inst.arcs.iter().enumerate() {
        if flow[a].is_positive() {
            out[arc.tail].push(a);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = finished
    let mut state = vec![0u8; inst.node_count];
    let mut via: Vec<Option<usize>> = vec![None; inst.node_count];
    for root in 0..inst.node_count {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < out[u].len() {
                let a = out[u][*next];
                *next += 1;
                let v = inst.arcs[a].head;
                match state[v] {
                    0 => {
                        state[v] = 1;
                        via[v] = Some(a);
                        stack.push((v, 0));
                    }
                    1 => {
                        let mut cycle = vec![a];
                        let mut w = u;
                        while w != v {
                            let b = via[w].expect("stack node has an entry arc");
                            cycle.push(b);
                            w = inst.arcs[b].tail;
                        }
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Node potentials `π` (min-normalized to 0) and upper-bound multipliers `λ⁺`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialCertificate {
    pub potentials: Vec<BigInt>,
    pub upper_multipliers: Vec<BigInt>,
}

impl PotentialCertificate {
    /// `σ_a = c_a - (π_head - π_tail) + λ⁺_a`.
    pub fn reduced_costs(&self, inst: &McfInstance) -> Vec<BigInt> {
        inst.arcs
            .iter()
            .zip(&self.upper_multipliers)
            .map(|(arc, lam)| &arc.cost - (&self.potentials[arc.head] - &self.potentials[arc.tail]) + lam)
            .collect()
    }

    pub fn dual_objective(&self, inst: &McfInstance) -> BigInt {
        let linear: BigInt = inst.demand.iter().zip(&self.potentials).map(|(b, p)| b * p).sum();
        let caps: BigInt = inst
            .arcs
            .iter()
            .zip(&self.upper_multipliers)
            .map(|(arc, lam)| &arc.capacity * lam)
            .sum();
        linear - caps
    }

    /// Dual feasibility, complementary slackness and strong duality, all exact.
    pub fn verify(&self, inst: &McfInstance, sol: &McfSolution) -> Result<(), McfError> {
        let fail = |msg: String| Err(McfError::CertificateViolation(msg));
        if !inst.is_feasible(&sol.flow) {
            return fail("flow is not feasible".into());
        }
        let sigma = self.reduced_costs(inst);
        for (a, arc) in inst.arcs.iter().enumerate() {
            let lam = &self.upper_multipliers[a];
            let f = &sol.flow[a];
            if lam.is_negative() || sigma[a].is_negative() {
                return fail(format!("arc {a} is dual infeasible"));
            }
            if !(&sigma[a] * f).is_zero() {
                return fail(format!("arc {a}: reduced cost times flow is nonzero"));
            }
            if !(lam * (&arc.capacity - f)).is_zero() {
                return fail(format!("arc {a}: multiplier times slack is nonzero"));
            }
        }
        if self.dual_objective(inst) != sol.objective || inst.objective(&sol.flow) != sol.objective {
            return fail("primal and dual objectives differ".into());
        }
        Ok(())
    }
}

/// Bellman–Ford from a zero-cost virtual source on the residual graph of `sol`.
pub fn extract_residual_potentials(
    inst: &McfInstance,
    sol: &McfSolution,
) -> Result<PotentialCertificate, McfError> {
    let n = inst.node_count;
    let mut residual: Vec<(usize, usize, BigInt)> = Vec::new();
    for (arc, f) in inst.arcs.iter().zip(&sol.flow) {
        if f < &arc.capacity {
            residual.push((arc.tail, arc.head, arc.cost.clone()));
        }
        if f.is_positive() {
            residual.push((arc.head, arc.tail, -&arc.cost));
        }
    }
    let mut dist = vec![BigInt::zero(); n];
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for (u, v, c) in &residual {
            let cand = &dist[*u] + c;
            if cand < dist[*v] {
                dist[*v] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        if rounds > n {
            return Err(McfError::NegativeCycleDetected);
        }
    }
    let min = dist.iter().min().cloned().unwrap_or_default();
    let potentials: Vec<BigInt> = dist.into_iter().map(|d| d - &min).collect();
    let upper_multipliers = inst
        .arcs
        .iter()
        .map(|arc| {
            let slope = &potentials[arc.head] - &potentials[arc.tail] - &arc.cost;
            if slope.is_positive() {
                slope
            } else {
                BigInt::zero()
            }
        })
        .collect();
    Ok(PotentialCertificate {
        potentials,
        upper_multipliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(tail: usize, head: usize, capacity: i64, cost: i64) -> McfArc {
        McfArc {
            tail,
            head,
            capacity: capacity.into(),
            cost: cost.into(),
        }
    }

    fn big(values: &[i64]) -> Vec<BigInt> {
        values.iter().map(|&v| v.into()).collect()
    }

    /// Lifted gadget of a single 2-edge: vertices 0,1; e⁻ = 2, e⁺ = 3.
    fn two_edge(demand: &[i64], cap: i64) -> McfInstance {
        McfInstance {
            node_count: 4,
            arcs: vec![
                arc(3, 0, cap, 0),
                arc(0, 2, cap, 0),
                arc(3, 1, cap, 0),
                arc(1, 2, cap, 0),
                arc(2, 3, cap, 1),
            ],
            demand: big(demand),
        }
    }

    #[test]
    fn two_edge_support_instance() {
        let inst = two_edge(&[1, -1, 0, 0], 2);
        let sol = solve_mcf_exact(&inst).unwrap();
        assert_eq!(sol.objective, 1.into());
        assert_eq!(sol.flow, big(&[1, 0, 0, 1, 1]));
        let cert = extract_residual_potentials(&inst, &sol).unwrap();
        let p = &cert.potentials;
        assert_eq!(&p[3] - &p[2], 1.into());
        assert_eq!(&p[0] - &p[1], 1.into());
        assert!(cert.upper_multipliers.iter().all(Zero::is_zero));
        cert.verify(&inst, &sol).unwrap();
    }

    #[test]
    fn zero_demand() {
        let inst = two_edge(&[0, 0, 0, 0], 2);
        let sol = solve_mcf_exact(&inst).unwrap();
        assert_eq!(sol.objective, 0.into());
        assert!(sol.flow.iter().all(Zero::is_zero));
        let cert = extract_residual_potentials(&inst, &sol).unwrap();
        assert!(cert.potentials.iter().all(Zero::is_zero));
        cert.verify(&inst, &sol).unwrap();
    }

    #[test]
    fn blocked_path_is_infeasible() {
        let mut inst = two_edge(&[1, -1, 0, 0], 2);
        inst.arcs[4].capacity = 0.into();
        assert!(matches!(solve_mcf_exact(&inst), Err(McfError::Infeasible { .. })));
    }

    #[test]
    fn saturated_arc_gets_multiplier() {
        // two parallel routes 0 → 1: cheap with cap 1, expensive with cap 5
        let inst = McfInstance {
            node_count: 2,
            arcs: vec![arc(0, 1, 1, 1), arc(0, 1, 5, 3)],
            demand: big(&[-3, 3]),
        };
        let sol = solve_mcf_exact(&inst).unwrap();
        assert_eq!(sol.flow, big(&[1, 2]));
        let cert = extract_residual_potentials(&inst, &sol).unwrap();
        assert_eq!(cert.upper_multipliers, big(&[2, 0]));
        cert.verify(&inst, &sol).unwrap();
    }

    #[test]
    fn suboptimal_flow_has_negative_cycle() {
        let inst = McfInstance {
            node_count: 2,
            arcs: vec![arc(0, 1, 5, 1), arc(0, 1, 5, 3)],
            demand: big(&[-2, 2]),
        };
        let bad = McfSolution {
            flow: big(&[0, 2]),
            objective: 6.into(),
        };
        assert_eq!(
            extract_residual_potentials(&inst, &bad),
            Err(McfError::NegativeCycleDetected)
        );
    }

    #[test]
    fn acyclic_cleanup() {
        let inst = two_edge(&[1, -1, 0, 0], 4);
        let mut sol = solve_mcf_exact(&inst).unwrap();
        // add the 2-cycle-free circulation 0 → e⁻ → e⁺ → 0
        for a in [0, 1, 4] {
            sol.flow[a] += 1;
        }
        sol.objective = inst.objective(&sol.flow);
        let clean = make_acyclic(&inst, &sol);
        assert_eq!(clean.flow, big(&[1, 0, 0, 1, 1]));
        assert_eq!(clean.objective, 1.into());
        assert_eq!(make_acyclic(&inst, &clean), clean);
    }

    #[test]
    fn invalid_instances() {
        let mut inst = two_edge(&[1, 0, 0, 0], 2);
        assert!(matches!(solve_mcf_exact(&inst), Err(McfError::InvalidInstance(_))));
        inst.demand = big(&[1, -1, 0, 0]);
        inst.arcs[0].cost = (-1).into();
        assert!(matches!(solve_mcf_exact(&inst), Err(McfError::InvalidInstance(_))));
    }
}
