//! The lifted directed graph built from one gadget per hyperedge.
//!
//! Node numbering: vertices `0..n`, then `e⁻ = n + 2e` and `e⁺ = n + 2e + 1`.
//! Arc numbering: incidence `i` (edge `e`, vertex `v`) owns arcs `2i = (e⁺, v)`
//! and `2i + 1 = (v, e⁻)`; the quadratic arc `(e⁻, e⁺)` of edge `e` is `2P + e`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::hypergraph::{Hypergraph, SpanningTree};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftedError {
    #[error("hypergraph is not connected; no start flow exists for every demand")]
    NotConnected,
    #[error("demand has {found} entries, expected {expected}")]
    DemandLength { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcKind {
    /// `(e⁺, v)`.
    TransportOut { edge: usize, vertex: usize },
    /// `(v, e⁻)`.
    TransportIn { edge: usize, vertex: usize },
    /// `(e⁻, e⁺)`.
    Quadratic { edge: usize },
}

impl ArcKind {
    pub fn edge(&self) -> usize {
        match *self {
            ArcKind::TransportOut { edge, .. }
            | ArcKind::TransportIn { edge, .. }
            | ArcKind::Quadratic { edge } => edge,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, ArcKind::Quadratic { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub kind: ArcKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedGraph {
    vertex_count: usize,
    edge_sizes: Vec<usize>,
    weights: Vec<Dyadic>,
    arcs: Vec<Arc>,
}

impl LiftedGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_sizes.len()
    }

    pub fn node_count(&self) -> usize {
        self.vertex_count + 2 * self.edge_sizes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn weight(&self, edge: usize) -> &Dyadic {
        &self.weights[edge]
    }

    pub fn transport_arc_count(&self) -> usize {
        self.arcs.len() - self.edge_sizes.len()
    }

    pub fn minus_node(&self, edge: usize) -> usize {
        self.vertex_count + 2 * edge
    }

    pub fn plus_node(&self, edge: usize) -> usize {
        self.vertex_count + 2 * edge + 1
    }

    pub fn quadratic_arc(&self, edge: usize) -> usize {
        self.transport_arc_count() + edge
    }

    /// Index of `(e⁺, v)` for incidence `i`.
    pub fn out_arc(incidence: usize) -> usize {
        2 * incidence
    }

    /// Index of `(v, e⁻)` for incidence `i`.
    pub fn in_arc(incidence: usize) -> usize {
        2 * incidence + 1
    }
}

pub fn build_lifted_graph(h: &Hypergraph) -> LiftedGraph {
    let n = h.vertex_count();
    let mut arcs = Vec::with_capacity(2 * h.incidence_size() + h.edge_count());
    for (e, edge) in h.edges().iter().enumerate() {
        let (minus, plus) = (n + 2 * e, n + 2 * e + 1);
        for &v in &edge.vertices {
            arcs.push(Arc {
                tail: plus,
                head: v,
                kind: ArcKind::TransportOut { edge: e, vertex: v },
            });
            arcs.push(Arc {
                tail: v,
                head: minus,
                kind: ArcKind::TransportIn { edge: e, vertex: v },
            });
        }
    }
    for e in 0..h.edge_count() {
        arcs.push(Arc {
            tail: n + 2 * e,
            head: n + 2 * e + 1,
            kind: ArcKind::Quadratic { edge: e },
        });
    }
    LiftedGraph {
        vertex_count: n,
        edge_sizes: h.edges().iter().map(|e| e.vertices.len()).collect(),
        weights: h.edges().iter().map(|e| e.weight.clone()).collect(),
        arcs,
    }
}

/// `b↑`: `s` on vertices, zero on gadget nodes.
pub fn lifted_demand<T: Scalar>(g: &LiftedGraph, s: &[Dyadic]) -> Vec<T> {
    let mut b = vec![T::zero(); g.node_count()];
    for (slot, sv) in b.iter_mut().zip(s) {
        *slot = T::from_dyadic(sv);
    }
    b
}

/// `(A↑f)_u` = inflow minus outflow.
pub fn node_imbalance<T: Scalar>(g: &LiftedGraph, f: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); g.node_count()];
    for (arc, value) in g.arcs().iter().zip(f) {
        out[arc.head] = out[arc.head].clone() + value.clone();
        out[arc.tail] = out[arc.tail].clone() - value.clone();
    }
    out
}

/// 1 on transport arcs, `|e|` on the quadratic arc of `e`.
pub fn positive_circulation(g: &LiftedGraph) -> Vec<Dyadic> {
    g.arcs()
        .iter()
        .map(|arc| match arc.kind {
            ArcKind::Quadratic { edge } => Dyadic::from_int(g.edge_sizes[edge] as i64),
            _ => Dyadic::one(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StartFlow {
    pub flow: Vec<Dyadic>,
    /// Power-of-two cap `Λ` with `Λ - f_a >= 1` on every arc.
    pub cap: Dyadic,
}

/// Strictly interior start: tree path flows for `s` plus the positive circulation.
///
/// The tree child `c` of `p` through edge `e` receives its subtree demand `t_c`
/// along `p → e⁻ → e⁺ → c` (or the reverse gadget path when `t_c < 0`).
pub fn feasible_start(
    h: &Hypergraph,
    g: &LiftedGraph,
    tree: &SpanningTree,
    s: &[Dyadic],
) -> Result<StartFlow, LiftedError> {
    if s.len() != h.vertex_count() {
        return Err(LiftedError::DemandLength {
            expected: h.vertex_count(),
            found: s.len(),
        });
    }
    if !tree.is_spanning() {
        return Err(LiftedError::NotConnected);
    }
    let mut flow = positive_circulation(g);
    let sums = tree.subtree_sums(s);
    let incidence = |e: usize, v: usize| {
        let pos = h.edge(e).vertices.iter().position(|&u| u == v).unwrap();
        h.incidence_offset(e) + pos
    };
    for child in 0..h.vertex_count() {
        let Some(link) = tree.parent[child] else {
            continue;
        };
        let t = &sums[child];
        if t.is_zero() {
            continue;
        }
        let amount = t.abs();
        let (from, to) = if t.is_positive() {
            (link.parent, child)
        } else {
            (child, link.parent)
        };
        for arc in [
            LiftedGraph::in_arc(incidence(link.edge, from)),
            g.quadratic_arc(link.edge),
            LiftedGraph::out_arc(incidence(link.edge, to)),
        ] {
            flow[arc] = &flow[arc] + &amount;
        }
    }
    let s_l1: Dyadic = s.iter().map(Dyadic::abs).sum();
    let max_arc = flow.iter().max().cloned().unwrap_or_else(Dyadic::zero);
    let target = (&s_l1 + &Dyadic::from_int((h.max_edge_size() + 2) as i64))
        .max(&max_arc + &Dyadic::one());
    Ok(StartFlow {
        flow,
        cap: power_of_two_at_least(&target),
    })
}

fn power_of_two_at_least(target: &Dyadic) -> Dyadic {
    let mut cap = Dyadic::one();
    while &cap < target {
        cap = &cap * &Dyadic::from_int(2);
    }
    cap
}

/// Graphviz dump of `G↑`, one line per arc tagged with its class.
pub fn to_dot(g: &LiftedGraph) -> String {
    let mut out = String::from("digraph lifted {\n");
    for v in 0..g.vertex_count() {
        let _ = writeln!(out, "  n{v} [label=\"v{v}\"];");
    }
    for e in 0..g.edge_count() {
        let _ = writeln!(out, "  n{} [label=\"e{e}-\", shape=box];", g.minus_node(e));
        let _ = writeln!(out, "  n{} [label=\"e{e}+\", shape=box];", g.plus_node(e));
    }
    for (idx, arc) in g.arcs().iter().enumerate() {
        let class = if arc.kind.is_quadratic() {
            "quadratic"
        } else {
            "transport"
        };
        let _ = writeln!(
            out,
            "  n{} -> n{} [id=\"a{idx}\", class=\"{class}\"];",
            arc.tail, arc.head
        );
    }
    out.push_str("}\n");
    out
}
