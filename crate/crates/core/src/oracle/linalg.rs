//! Exact dense linear algebra: Gaussian elimination and graph-Laplacian solves.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dyadic::Dyadic;
use crate::hypergraph::{project_to_weighted_mean_zero, Hypergraph};

type Q = BigRational;

/// Solves the square system `a x = b`; `None` when `a` is singular.
pub fn solve_dense(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        b[col] /= &p;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some(b)
}

/// Solves `L x = s` for the weighted graph on `n` nodes given by `(u, v, w)`
/// triples, fixing the lowest node of every component to zero. `None` when
/// `s` does not sum to zero on some component.
pub fn laplacian_solve(n: usize, edges: &[(usize, usize, Q)], s: &[Q]) -> Option<Vec<Q>> {
    let mut component = vec![usize::MAX; n];
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        component[root] = root;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for (a, b, _) in edges {
                for (p, q) in [(*a, *b), (*b, *a)] {
                    if p == u && component[q] == usize::MAX {
                        component[q] = root;
                        stack.push(q);
                    }
                }
            }
        }
    }
    let mut totals = vec![Q::zero(); n];
    for (v, sv) in s.iter().enumerate() {
        totals[component[v]] += sv;
    }
    if totals.iter().any(|t| !t.is_zero()) {
        return None;
    }
    let free: Vec<usize> = (0..n).filter(|&v| component[v] != v).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        index[v] = i;
    }
    let k = free.len();
    let mut a = vec![vec![Q::zero(); k]; k];
    for (u, v, w) in edges {
        if u == v {
            continue;
        }
        for (p, q) in [(*u, *v), (*v, *u)] {
            if index[p] != usize::MAX {
                a[index[p]][index[p]] += w;
                if index[q] != usize::MAX {
                    a[index[p]][index[q]] -= w;
                }
            }
        }
    }
    let b = free.iter().map(|&v| s[v].clone()).collect();
    let reduced = solve_dense(a, b)?;
    let mut x = vec![Q::zero(); n];
    for (&v, value) in free.iter().zip(reduced) {
        x[v] = value;
    }
    Some(x)
}

fn graph_edges(h: &Hypergraph) -> Option<Vec<(usize, usize, Q)>> {
    h.is_two_uniform().then(|| {
        h.edges()
            .iter()
            .map(|e| (e.vertices[0], e.vertices[1], e.weight.to_rational()))
            .collect()
    })
}

/// Exact Poisson solution `x* ∈ X_0` with `L x* = s` on a connected 2-uniform hypergraph.
pub fn exact_graph_poisson(h: &Hypergraph, s: &[Dyadic]) -> Option<Vec<Q>> {
    let edges = graph_edges(h)?;
    let s: Vec<Q> = s.iter().map(Dyadic::to_rational).collect();
    let x = laplacian_solve(h.vertex_count(), &edges, &s)?;
    project_to_weighted_mean_zero(h, &x).ok().map(|p| p.0)
}

/// `L x` on a 2-uniform hypergraph.
pub fn laplacian_apply(h: &Hypergraph, x: &[Q]) -> Option<Vec<Q>> {
    let edges = graph_edges(h)?;
    let mut out = vec![Q::zero(); h.vertex_count()];
    for (u, v, w) in edges {
        let flow = &w * (&x[u] - &x[v]);
        out[u] += &flow;
        out[v] -= &flow;
    }
    Some(out)
}

/// `(e_u - e_v)ᵀ L⁺ (e_u - e_v)` on a connected 2-uniform hypergraph.
pub fn effective_resistance(h: &Hypergraph, u: usize, v: usize) -> Option<Q> {
    let edges = graph_edges(h)?;
    let mut s = vec![Q::zero(); h.vertex_count()];
    s[u] += Q::one();
    s[v] -= Q::one();
    let x = laplacian_solve(h.vertex_count(), &edges, &s)?;
    Some(&x[u] - &x[v])
}
