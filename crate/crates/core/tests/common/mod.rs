#![allow(dead_code)]

use hgpoisson::{Demand, Dyadic, Edge, Hypergraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k · 2^-q` with `k ∈ [1, 16]`, `q ∈ [0, 3]`.
pub fn weight(rng: &mut ChaCha8Rng) -> Dyadic {
    Dyadic::new(rng.gen_range(1..=16), rng.gen_range(0..=3))
}

/// Zero-sum dyadic demand; entries `k · 2^-2` with `|k| <= 8`.
pub fn demand(rng: &mut ChaCha8Rng, n: usize) -> Demand {
    let mut s: Vec<Dyadic> = (0..n - 1)
        .map(|_| Dyadic::new(rng.gen_range(-8..=8), 2))
        .collect();
    let rest: Dyadic = s.iter().sum();
    s.push(-rest);
    s.shuffle(rng);
    Demand(s)
}

/// Connected hypergraph with `n <= max_n`, at most `max_edges` edges of size 2 to 5.
pub fn hypergraph(rng: &mut ChaCha8Rng, max_n: usize, max_edges: usize, max_size: usize) -> Hypergraph {
    loop {
        let n = rng.gen_range(2..=max_n);
        let m = rng.gen_range(1..=max_edges);
        let vertices: Vec<usize> = (0..n).collect();
        let edges = (0..m)
            .map(|_| {
                let size = rng.gen_range(2..=max_size.min(n));
                Edge {
                    vertices: vertices.choose_multiple(rng, size).copied().collect(),
                    weight: weight(rng),
                }
            })
            .collect();
        let h = Hypergraph::new(n, edges).expect("generated edges are valid");
        if h.overlap_tree().is_spanning() {
            return h;
        }
    }
}

/// Connected graph (all edges of size two) on at most `max_n` vertices.
pub fn graph(rng: &mut ChaCha8Rng, max_n: usize) -> Hypergraph {
    let n = rng.gen_range(2..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push(Edge { vertices: vec![u, v], weight: weight(rng) });
    }
    for _ in 0..rng.gen_range(0..=n) {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            edges.push(Edge { vertices: vec![u, v], weight: weight(rng) });
        }
    }
    Hypergraph::new(n, edges).expect("generated edges are valid")
}

pub fn instance(seed: u64) -> (Hypergraph, Demand) {
    let mut r = rng(seed);
    let h = hypergraph(&mut r, 10, 8, 5);
    let s = demand(&mut r, h.vertex_count());
    (h, s)
}
