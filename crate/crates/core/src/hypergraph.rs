//! Hypergraph instances, demands, the primal energy and instance validation.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::scalar::{self, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("hypergraph has no vertices")]
    NoVertices,
    #[error("edge {edge} has fewer than two distinct vertices")]
    EmptyEdge { edge: usize },
    #[error("edge {edge} references vertex {vertex}, outside [0, {n})")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("edge {edge} lists vertex {vertex} more than once")]
    DuplicateVertex { edge: usize, vertex: usize },
    #[error("edge {edge} has nonpositive weight {weight}")]
    NonpositiveWeight { edge: usize, weight: Dyadic },
    #[error("demand has {found} entries, expected {expected}")]
    DemandLengthMismatch { expected: usize, found: usize },
    #[error("demand does not sum to zero (sum = {sum})")]
    DemandNotZeroSum { sum: Dyadic },
    #[error("hypergraph is not connected ({components} components)")]
    NotConnected { components: usize },
    #[error("total weighted degree is zero")]
    ZeroTotalDegree,
    #[error("vertex {vertex} has zero weighted degree")]
    ZeroDegreeVertex { vertex: usize },
    #[error("polynomial bound violated: {0}")]
    BoundViolation(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub vertices: Vec<usize>,
    pub weight: Dyadic,
}

/// Weighted hypergraph `H = (V, E, w)` with `V = {0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
}

impl Hypergraph {
    /// Checks the structural invariants: every edge has at least two distinct
    /// in-range vertices and a positive weight.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::NoVertices);
        }
        for (idx, edge) in edges.iter().enumerate() {
            if let Some(&vertex) = edge.vertices.iter().find(|&&v| v >= n) {
                return Err(InstanceError::VertexOutOfRange { edge: idx, vertex, n });
            }
            let mut sorted = edge.vertices.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(InstanceError::DuplicateVertex { edge: idx, vertex: w[0] });
            }
            if sorted.len() < 2 {
                return Err(InstanceError::EmptyEdge { edge: idx });
            }
            if !edge.weight.is_positive() {
                return Err(InstanceError::NonpositiveWeight {
                    edge: idx,
                    weight: edge.weight.clone(),
                });
            }
        }
        let mut offsets = Vec::with_capacity(edges.len() + 1);
        offsets.push(0);
        for edge in &edges {
            offsets.push(offsets.last().unwrap() + edge.vertices.len());
        }
        Ok(Self { n, edges, offsets })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// `P = Σ_e |e|`.
    pub fn incidence_size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Index of the first incidence of edge `e`; incidences are numbered in edge order.
    pub fn incidence_offset(&self, e: usize) -> usize {
        self.offsets[e]
    }

    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(|e| e.vertices.len()).max().unwrap_or(0)
    }

    pub fn is_two_uniform(&self) -> bool {
        self.edges.iter().all(|e| e.vertices.len() == 2)
    }

    /// Weighted degrees `d_v = Σ_{e∋v} w_e`.
    pub fn degrees(&self) -> Vec<Dyadic> {
        let mut d = vec![Dyadic::zero(); self.n];
        for edge in &self.edges {
            for &v in &edge.vertices {
                d[v] = &d[v] + &edge.weight;
            }
        }
        d
    }

    /// BFS tree of the vertex-overlap graph rooted at vertex 0.
    ///
    /// Neighbours are visited in ascending vertex order and the tree edge of a
    /// vertex is the lowest-id hyperedge containing it and its parent.
    pub fn overlap_tree(&self) -> SpanningTree {
        let mut adjacency: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.n];
        for (idx, edge) in self.edges.iter().enumerate() {
            for &u in &edge.vertices {
                for &v in &edge.vertices {
                    if u != v {
                        adjacency[u].entry(v).or_insert(idx);
                    }
                }
            }
        }
        let mut parent = vec![None; self.n];
        let mut visited = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut queue = VecDeque::new();
        visited[0] = true;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for (&v, &edge) in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some(TreeLink { parent: u, edge });
                    queue.push_back(v);
                }
            }
        }
        let components = if order.len() == self.n {
            1
        } else {
            count_components(self.n, &adjacency)
        };
        SpanningTree {
            parent,
            order,
            components,
        }
    }
}

fn count_components(n: usize, adjacency: &[BTreeMap<usize, usize>]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &v in adjacency[u].keys() {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeLink {
    pub parent: usize,
    /// Lowest-id hyperedge containing both the vertex and its parent.
    pub edge: usize,
}

/// Rooted spanning tree (root 0) of the vertex-overlap graph; the connectivity witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub parent: Vec<Option<TreeLink>>,
    /// BFS order of the vertices reachable from the root.
    pub order: Vec<usize>,
    pub components: usize,
}

impl SpanningTree {
    pub fn is_spanning(&self) -> bool {
        self.components == 1
    }

    /// `t_v = Σ_{u in subtree(v)} values_u`, by one reverse-BFS pass.
    pub fn subtree_sums(&self, values: &[Dyadic]) -> Vec<Dyadic> {
        let mut sums = values.to_vec();
        for &v in self.order.iter().rev() {
            if let Some(link) = self.parent[v] {
                let child = sums[v].clone();
                sums[link.parent] = &sums[link.parent] + &child;
            }
        }
        sums
    }
}

/// Vertex demand `s`, one dyadic entry per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Demand(pub Vec<Dyadic>);

impl Demand {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Dyadic::zero(); n])
    }

    /// `e_u - e_v`.
    pub fn unit_pair(n: usize, u: usize, v: usize) -> Self {
        let mut s = Self::zeros(n);
        s.0[u] = Dyadic::one();
        s.0[v] = -&Dyadic::one();
        s
    }

    pub fn total(&self) -> Dyadic {
        self.0.iter().sum()
    }

    pub fn l1_norm(&self) -> Dyadic {
        self.0.iter().map(Dyadic::abs).sum()
    }

    pub fn to_rational(&self) -> Vec<BigRational> {
        self.0.iter().map(Dyadic::to_rational).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Dyadic::to_f64).collect()
    }
}

impl std::ops::Deref for Demand {
    type Target = [Dyadic];
    fn deref(&self) -> &[Dyadic] {
        &self.0
    }
}

/// Exact vertex potential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential(pub Vec<BigRational>);

impl Potential {
    pub fn zeros(n: usize) -> Self {
        Self(vec![BigRational::zero(); n])
    }

    /// Membership in `X_0`: `<Dx, 1> = 0`, checked exactly.
    pub fn is_normalized(&self, h: &Hypergraph) -> bool {
        weighted_sum(&h.degrees(), &self.0).is_zero()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }
}

impl std::ops::Deref for Potential {
    type Target = [BigRational];
    fn deref(&self) -> &[BigRational] {
        &self.0
    }
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub require_connected: bool,
    pub require_zero_sum: bool,
    /// `K_0` in `||s||_inf <= P^K0` and `P^-K0 <= w_e <= P^K0`.
    pub bound_exponent: u32,
    /// Turn bound violations into errors instead of warnings.
    pub enforce_bounds: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            require_connected: true,
            require_zero_sum: true,
            bound_exponent: 4,
            enforce_bounds: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidatedInstance {
    pub hypergraph: Hypergraph,
    pub demand: Demand,
    pub tree: SpanningTree,
    pub warnings: Vec<String>,
}

pub fn validate_instance(
    h: &Hypergraph,
    s: &Demand,
    options: &ValidationOptions,
) -> Result<ValidatedInstance, InstanceError> {
    if s.len() != h.vertex_count() {
        return Err(InstanceError::DemandLengthMismatch {
            expected: h.vertex_count(),
            found: s.len(),
        });
    }
    if options.require_zero_sum {
        let total = s.total();
        if !total.is_zero() {
            return Err(InstanceError::DemandNotZeroSum { sum: total });
        }
    }
    if h.degrees().iter().all(Dyadic::is_zero) {
        return Err(InstanceError::ZeroTotalDegree);
    }
    let tree = h.overlap_tree();
    if options.require_connected && !tree.is_spanning() {
        return Err(InstanceError::NotConnected {
            components: tree.components,
        });
    }
    let warnings = bound_warnings(h, s, options.bound_exponent);
    if options.enforce_bounds {
        if let Some(first) = warnings.first() {
            return Err(InstanceError::BoundViolation(first.clone()));
        }
    }
    Ok(ValidatedInstance {
        hypergraph: h.clone(),
        demand: s.clone(),
        tree,
        warnings,
    })
}

fn bound_warnings(h: &Hypergraph, s: &Demand, k0: u32) -> Vec<String> {
    let p = BigInt::from(h.incidence_size().max(2));
    let bound = Dyadic::from_int(num_traits::pow(p, k0 as usize));
    let mut out = Vec::new();
    for (v, sv) in s.iter().enumerate() {
        if sv.abs() > bound {
            out.push(format!("|s_{v}| = {} exceeds P^{k0}", sv.abs()));
        }
    }
    for (idx, edge) in h.edges().iter().enumerate() {
        if edge.weight > bound {
            out.push(format!("w_{idx} = {} exceeds P^{k0}", edge.weight));
        }
        if &edge.weight * &bound < Dyadic::one() {
            out.push(format!("w_{idx} = {} is below P^-{k0}", edge.weight));
        }
    }
    out
}

/// `R_e(x) = max_{u∈e} x_u - min_{v∈e} x_v`.
pub fn edge_range<T: Scalar>(x: &[T], vertices: &[usize]) -> T {
    let mut iter = vertices.iter().map(|&v| &x[v]);
    let Some(first) = iter.next() else {
        return T::zero();
    };
    let (mut lo, mut hi) = (first, first);
    for value in iter {
        if value < lo {
            lo = value;
        }
        if value > hi {
            hi = value;
        }
    }
    hi.clone() - lo.clone()
}

/// `E_H(x) = ½ Σ_e w_e R_e(x)²`.
pub fn energy<T: Scalar>(h: &Hypergraph, x: &[T]) -> T {
    let twice = scalar::sum(h.edges().iter().map(|edge| {
        let r = edge_range(x, &edge.vertices);
        T::from_dyadic(&edge.weight) * r.clone() * r
    }));
    twice / T::from_i64(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalValue<T> {
    pub energy: T,
    pub objective: T,
}

/// `P(x) = E_H(x) - <s, x>`.
pub fn primal_objective<T: Scalar>(h: &Hypergraph, s: &[Dyadic], x: &[T]) -> PrimalValue<T> {
    let energy = energy(h, x);
    let linear = scalar::sum(s.iter().zip(x).map(|(sv, xv)| T::from_dyadic(sv) * xv.clone()));
    PrimalValue {
        objective: energy.clone() - linear,
        energy,
    }
}

pub(crate) fn weighted_sum(weights: &[Dyadic], x: &[BigRational]) -> BigRational {
    weights
        .iter()
        .zip(x)
        .fold(BigRational::zero(), |acc, (w, xv)| acc + w.to_rational() * xv)
}

/// Subtract the `D`-weighted average so the result lies in `X_0`; exact.
pub fn project_to_weighted_mean_zero(
    h: &Hypergraph,
    x: &[BigRational],
) -> Result<Potential, InstanceError> {
    let degrees = h.degrees();
    let total: Dyadic = degrees.iter().sum();
    if total.is_zero() {
        return Err(InstanceError::ZeroTotalDegree);
    }
    let mean = weighted_sum(&degrees, x) / total.to_rational();
    Ok(Potential(x.iter().map(|xv| xv - &mean).collect()))
}

/// Convenience constructor for unit-weight hypergraphs, mostly for tests and examples.
pub fn unit_hypergraph(n: usize, edges: &[&[usize]]) -> Result<Hypergraph, InstanceError> {
    Hypergraph::new(
        n,
        edges
            .iter()
            .map(|vs| Edge {
                vertices: vs.to_vec(),
                weight: Dyadic::one(),
            })
            .collect(),
    )
}

#[cfg(test)]
pub(crate) fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(values: &[i64]) -> Demand {
        Demand(values.iter().map(|&v| Dyadic::from_int(v)).collect())
    }

    fn q(values: &[(i64, i64)]) -> Vec<BigRational> {
        values.iter().map(|&(a, b)| rational(a, b)).collect()
    }

    fn triangle() -> Hypergraph {
        unit_hypergraph(3, &[&[0, 1, 2]]).unwrap()
    }

    fn path() -> Hypergraph {
        unit_hypergraph(3, &[&[0, 1], &[1, 2]]).unwrap()
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            unit_hypergraph(3, &[&[0]]).unwrap_err(),
            InstanceError::EmptyEdge { edge: 0 }
        );
        assert!(matches!(
            unit_hypergraph(3, &[&[0, 3]]),
            Err(InstanceError::VertexOutOfRange { vertex: 3, .. })
        ));
        assert!(matches!(
            unit_hypergraph(3, &[&[0, 1, 0]]),
            Err(InstanceError::DuplicateVertex { vertex: 0, .. })
        ));
        let bad = Hypergraph::new(
            2,
            vec![Edge {
                vertices: vec![0, 1],
                weight: Dyadic::zero(),
            }],
        );
        assert!(matches!(bad, Err(InstanceError::NonpositiveWeight { .. })));
    }

    #[test]
    fn validate_examples() {
        let opts = ValidationOptions::default();
        let ok = validate_instance(&triangle(), &ints(&[1, 0, -1]), &opts).unwrap();
        assert!(ok.tree.is_spanning());
        assert!(ok.warnings.is_empty());

        let split = unit_hypergraph(4, &[&[0, 1], &[2, 3]]).unwrap();
        assert_eq!(
            validate_instance(&split, &ints(&[1, -1, 0, 0]), &opts).unwrap_err(),
            InstanceError::NotConnected { components: 2 }
        );
        let relaxed = ValidationOptions {
            require_connected: false,
            ..opts.clone()
        };
        assert!(validate_instance(&split, &ints(&[1, -1, 0, 0]), &relaxed).is_ok());

        assert!(matches!(
            validate_instance(&triangle(), &ints(&[1, 0, 0]), &opts),
            Err(InstanceError::DemandNotZeroSum { .. })
        ));
    }

    #[test]
    fn bound_check_warns_by_default() {
        let h = Hypergraph::new(
            2,
            vec![Edge {
                vertices: vec![0, 1],
                weight: Dyadic::pow2_neg(30),
            }],
        )
        .unwrap();
        let s = ints(&[1, -1]);
        let v = validate_instance(&h, &s, &ValidationOptions::default()).unwrap();
        assert_eq!(v.warnings.len(), 1);
        let strict = ValidationOptions {
            enforce_bounds: true,
            ..Default::default()
        };
        assert!(matches!(
            validate_instance(&h, &s, &strict),
            Err(InstanceError::BoundViolation(_))
        ));
    }

    #[test]
    fn overlap_tree_is_deterministic() {
        let h = unit_hypergraph(5, &[&[3, 4], &[0, 2, 3], &[0, 1], &[1, 2]]).unwrap();
        let tree = h.overlap_tree();
        assert_eq!(tree.order, vec![0, 1, 2, 3, 4]);
        assert_eq!(tree.parent[1], Some(TreeLink { parent: 0, edge: 2 }));
        assert_eq!(tree.parent[2], Some(TreeLink { parent: 0, edge: 1 }));
        assert_eq!(tree.parent[3], Some(TreeLink { parent: 0, edge: 1 }));
        assert_eq!(tree.parent[4], Some(TreeLink { parent: 3, edge: 0 }));
    }

    #[test]
    fn edge_range_examples() {
        let e = [0, 1, 2];
        assert_eq!(edge_range(&q(&[(0, 1), (1, 1), (3, 1)]), &e), rational(3, 1));
        assert_eq!(edge_range(&q(&[(5, 1), (5, 1), (5, 1)]), &e), rational(0, 1));
        // oracle: direct scan, max ½ minus min -½
        assert_eq!(edge_range(&q(&[(1, 2), (0, 1), (-1, 2)]), &e), rational(1, 1));
    }

    #[test]
    fn primal_objective_examples() {
        let s = ints(&[1, 0, -1]);
        // oracle: one-edge minimisation min_t ½t² - t at t = 1 gives -½
        let v = primal_objective(&triangle(), &s, &q(&[(1, 2), (0, 1), (-1, 2)]));
        assert_eq!(v.energy, rational(1, 2));
        assert_eq!(v.objective, rational(-1, 2));

        let zero = primal_objective(&triangle(), &s, &q(&[(0, 1), (0, 1), (0, 1)]));
        assert_eq!((zero.energy, zero.objective), (rational(0, 1), rational(0, 1)));

        // oracle: path Laplacian [[1,-1,0],[-1,2,-1],[0,-1,1]] x = s solved by x = (1,0,-1)
        let v = primal_objective(&path(), &s, &q(&[(1, 1), (0, 1), (-1, 1)]));
        assert_eq!(v.energy, rational(1, 1));
        assert_eq!(v.objective, rational(-1, 1));
    }

    #[test]
    fn projection_examples() {
        let edge = unit_hypergraph(2, &[&[0, 1]]).unwrap();
        let p = project_to_weighted_mean_zero(&edge, &q(&[(1, 1), (0, 1)])).unwrap();
        assert_eq!(p.0, q(&[(1, 2), (-1, 2)]));
        let again = project_to_weighted_mean_zero(&edge, &p).unwrap();
        assert_eq!(again, p);
        // degrees (1, 2, 1): weighted mean of (1, 0, -1) is 0
        let p = project_to_weighted_mean_zero(&path(), &q(&[(1, 1), (0, 1), (-1, 1)])).unwrap();
        assert_eq!(p.0, q(&[(1, 1), (0, 1), (-1, 1)]));
        assert!(p.is_normalized(&path()));
    }

    fn small_instance() -> impl Strategy<Value = (Hypergraph, Vec<BigRational>)> {
        (3usize..7).prop_flat_map(|n| {
            let edge = (proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(4)), 1i64..8, 0u32..3);
            (
                proptest::collection::vec(edge, 1..5),
                proptest::collection::vec((-20i64..20, 1i64..5), n),
            )
                .prop_map(move |(edges, xs)| {
                    let edges = edges
                        .into_iter()
                        .map(|(vertices, a, e)| Edge {
                            vertices,
                            weight: Dyadic::new(a, e),
                        })
                        .collect();
                    let h = Hypergraph::new(n, edges).unwrap();
                    let x = xs.into_iter().map(|(a, b)| rational(a, b)).collect();
                    (h, x)
                })
        })
    }

    proptest! {
        #[test]
        fn range_is_shift_invariant((h, x) in small_instance(), c in -10i64..10) {
            let shifted: Vec<_> = x.iter().map(|v| v + rational(c, 3)).collect();
            for edge in h.edges() {
                prop_assert_eq!(edge_range(&x, &edge.vertices), edge_range(&shifted, &edge.vertices));
            }
        }

        #[test]
        fn energy_is_two_homogeneous((h, x) in small_instance(), t in -5i64..5) {
            let t = rational(t, 2);
            let scaled: Vec<_> = x.iter().map(|v| v * &t).collect();
            prop_assert_eq!(energy(&h, &scaled), energy(&h, &x) * &t * &t);
        }

        #[test]
        fn projection_idempotent_and_range_preserving((h, x) in small_instance()) {
            let once = project_to_weighted_mean_zero(&h, &x).unwrap();
            let twice = project_to_weighted_mean_zero(&h, &once).unwrap();
            prop_assert!(once.is_normalized(&h));
            prop_assert_eq!(&once, &twice);
            for edge in h.edges() {
                prop_assert_eq!(edge_range(&x, &edge.vertices), edge_range(&once, &edge.vertices));
            }
        }

        #[test]
        fn objective_on_x0_ignores_degree_shift((h, x) in small_instance(), c in -4i64..4) {
            let x = project_to_weighted_mean_zero(&h, &x).unwrap();
            let n = h.vertex_count();
            let mut s = vec![Dyadic::zero(); n];
            s[0] = Dyadic::from_int(1);
            s[n - 1] = Dyadic::from_int(-1);
            let shifted: Vec<Dyadic> = s
                .iter()
                .zip(h.degrees())
                .map(|(sv, dv)| sv + &(&Dyadic::from_int(c) * &dv))
                .collect();
            prop_assert_eq!(
                primal_objective(&h, &s, &x).objective,
                primal_objective(&h, &shifted, &x).objective
            );
        }
    }
}
