mod common;

use hgpoisson::certificate::file::{verify, CertificateFile};
use hgpoisson::certificate::{bregman_gap, check_exact_feasibility};
use hgpoisson::dual::{
    dual_objective, dual_to_split, mass_of, quadratic_mass_objective, split_to_dual, MassVector, TransportSplit,
};
use hgpoisson::hypergraph::{edge_range, energy, primal_objective, project_to_weighted_mean_zero};
use hgpoisson::lifted::{build_lifted_graph, feasible_start, lifted_demand, node_imbalance, ArcKind};
use hgpoisson::mcf::{solve_mcf_exact, McfArc, McfInstance};
use hgpoisson::oracle::{mcf_lp, oracle_dense_simplex, oracle_primal_poisson, LpOutcome, OracleOptions};
use hgpoisson::regularized::{extend_to_ground, ground_augment, regularized_dual_objective, regularized_primal};
use hgpoisson::{solve_poisson, DualVector, Dyadic, Hypergraph, SolveParams};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn small_instance(seed: u64) -> (Hypergraph, Vec<Dyadic>) {
    let mut r = common::rng(seed);
    let h = common::hypergraph(&mut r, 7, 5, 4);
    let s = common::demand(&mut r, h.vertex_count()).0;
    (h, s)
}

fn rational_potential(seed: u64, n: usize) -> Vec<BigRational> {
    let mut r = common::rng(seed ^ 0x5eed);
    (0..n).map(|_| ratio(r.gen_range(-40..=40), r.gen_range(1..=12))).collect()
}

/// Zero-sum rational blocks, one per edge.
fn random_dual(seed: u64, h: &Hypergraph) -> DualVector<BigRational> {
    let mut r = common::rng(seed ^ 0xd0a1);
    let values = h
        .edges()
        .iter()
        .map(|edge| {
            let mut block: Vec<BigRational> = (1..edge.vertices.len())
                .map(|_| ratio(r.gen_range(-20..=20), r.gen_range(1..=6)))
                .collect();
            let rest: BigRational = block.iter().sum();
            block.push(-rest);
            block
        })
        .collect();
    DualVector { values }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_is_two_homogeneous(seed in any::<u64>(), num in -9i64..=9, den in 1i64..=7) {
        let (h, _) = small_instance(seed);
        let x = rational_potential(seed, h.vertex_count());
        let t = ratio(num, den);
        let scaled: Vec<BigRational> = x.iter().map(|v| &t * v).collect();
        prop_assert_eq!(energy(&h, &scaled), &t * &t * energy(&h, &x));
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), c in -6i64..=6) {
        let (h, s) = small_instance(seed);
        let x = rational_potential(seed, h.vertex_count());
        let p = project_to_weighted_mean_zero(&h, &x).unwrap();
        prop_assert!(p.is_normalized(&h));
        let again = project_to_weighted_mean_zero(&h, &p.0).unwrap();
        prop_assert_eq!(&again, &p);
        // the objective on X_0 ignores demand shifts along D1
        let shifted: Vec<Dyadic> = s
            .iter()
            .zip(h.degrees())
            .map(|(sv, d)| sv + &(&Dyadic::from_int(c) * &d))
            .collect();
        prop_assert_eq!(
            primal_objective(&h, &shifted, &p.0).objective,
            primal_objective(&h, &s, &p.0).objective
        );
    }

    #[test]
    fn split_round_trip_and_mass_bound(seed in any::<u64>(), extra in 0i64..=5) {
        let (h, _) = small_instance(seed);
        let eta = random_dual(seed, &h);
        let split = dual_to_split(&h, &eta, 0.0).unwrap();
        prop_assert_eq!(&split_to_dual(&h, &split, 0.0).unwrap(), &eta);
        prop_assert_eq!(quadratic_mass_objective(&h, &split.mass), dual_objective(&h, &eta));

        // spreading extra mass on both sides keeps η and can only raise q
        let pad = ratio(extra, 3);
        let size = |e: usize| BigRational::from_integer(BigInt::from(h.edge(e).vertices.len()));
        let padded = TransportSplit {
            positive: split.positive.iter().map(|b| b.iter().map(|p| p + &pad).collect()).collect(),
            negative: split.negative.iter().map(|b| b.iter().map(|n| n + &pad).collect()).collect(),
            mass: MassVector(split.mass.0.iter().enumerate().map(|(e, m)| m + &pad * size(e)).collect()),
        };
        let back = split_to_dual(&h, &padded, 0.0).unwrap();
        prop_assert_eq!(&back, &eta);
        prop_assert!(dual_objective(&h, &back) <= quadratic_mass_objective(&h, &padded.mass));
    }

    #[test]
    fn lifted_graph_shape_and_start(seed in any::<u64>()) {
        let (h, s) = small_instance(seed);
        let g = build_lifted_graph(&h);
        prop_assert_eq!(g.node_count(), h.vertex_count() + 2 * h.edge_count());
        prop_assert_eq!(g.arc_count(), 2 * h.incidence_size() + h.edge_count());
        let mut per_edge = vec![0usize; h.edge_count()];
        let mut quadratic = 0;
        for arc in g.arcs() {
            per_edge[arc.kind.edge()] += 1;
            if let ArcKind::Quadratic { edge } = arc.kind {
                quadratic += 1;
                prop_assert_eq!((arc.tail, arc.head), (g.minus_node(edge), g.plus_node(edge)));
            }
        }
        prop_assert_eq!(quadratic, h.edge_count());
        for (e, count) in per_edge.iter().enumerate() {
            prop_assert_eq!(*count, 2 * h.edge(e).vertices.len() + 1);
        }

        let start = feasible_start(&h, &g, &h.overlap_tree(), &s).unwrap();
        let flow: Vec<BigRational> = start.flow.iter().map(Dyadic::to_rational).collect();
        prop_assert_eq!(node_imbalance(&g, &flow), lifted_demand::<BigRational>(&g, &s));
        prop_assert!(start.flow.iter().all(|f| f.is_positive() && *f < start.cap));
    }

    #[test]
    fn regularized_reduction_is_exact(seed in any::<u64>(), k in 1i64..=16, q in 0u32..=3) {
        let mut r = common::rng(seed);
        let h = common::hypergraph(&mut r, 7, 5, 4);
        let s: Vec<Dyadic> = (0..h.vertex_count()).map(|_| Dyadic::new(r.gen_range(-8..=8), 2)).collect();
        let lambda = Dyadic::new(k, q);
        let aug = ground_augment(&h, &lambda, &s).unwrap();
        let x = rational_potential(seed, h.vertex_count());
        let mut lifted = x.clone();
        lifted.push(BigRational::zero());
        prop_assert_eq!(
            regularized_primal(&h, &lambda, &s, &x),
            primal_objective(&aug.augmented, &aug.augmented_demand.0, &lifted).objective
        );

        let eta = random_dual(seed, &h);
        let extended = extend_to_ground(&h, &s, &eta);
        check_exact_feasibility(&aug.augmented, &aug.augmented_demand.0, &extended).unwrap();
        let (value, _) = regularized_dual_objective(&h, &lambda, &s, &eta);
        prop_assert_eq!(value, dual_objective(&aug.augmented, &extended));
    }

    #[test]
    fn mcf_matches_simplex(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let node_count = r.gen_range(2..=5);
        let arcs: Vec<McfArc> = (0..r.gen_range(1..=8))
            .map(|_| McfArc {
                tail: r.gen_range(0..node_count),
                head: r.gen_range(0..node_count),
                capacity: BigInt::from(r.gen_range(0..=4)),
                cost: BigInt::from(r.gen_range(0..=6)),
            })
            .collect();
        // demand of a random capacity-feasible flow, so the instance is feasible
        let seed_flow: Vec<BigInt> = arcs
            .iter()
            .map(|a| BigInt::from(r.gen_range(0..=a.capacity.to_string().parse::<i64>().unwrap())))
            .collect();
        let mut inst = McfInstance { node_count, arcs, demand: vec![BigInt::zero(); node_count] };
        inst.demand = inst.imbalance(&seed_flow);
        let sol = solve_mcf_exact(&inst).unwrap();
        prop_assert!(inst.is_feasible(&sol.flow));
        match oracle_dense_simplex(&mcf_lp(&inst)) {
            LpOutcome::Optimal { value, .. } => {
                prop_assert_eq!(BigRational::from_integer(-sol.objective.clone()), value)
            }
            other => prop_assert!(false, "simplex returned {:?}", other),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn pipeline_invariants(seed in any::<u64>()) {
        let (h, s) = small_instance(seed);
        let params = SolveParams::default().with_epsilon(1e-8).with_grid_bits(20);
        let sol = solve_poisson(&h, &hgpoisson::Demand(s.clone()), &params).unwrap();

        let stage = &sol.first_stage;
        prop_assert!(stage.lower_bound <= stage.objective + 1e-9);
        let induced = mass_of(&stage.induced_dual);
        for (m, mu) in induced.0.iter().zip(&stage.masses.0) {
            prop_assert!(*m <= mu + 1e-6 * (1.0 + mu.abs()));
        }

        let x = sol.x();
        for (e, edge) in h.edges().iter().enumerate() {
            prop_assert!(edge_range(&x.0, &edge.vertices) <= sol.recovery.budgets[e].to_rational());
        }

        let eta = sol.certificate.to_rational();
        check_exact_feasibility(&h, &s, &eta).unwrap();
        for e in 0..h.edge_count() {
            prop_assert!(eta.edge_sum(e).is_zero());
        }
        prop_assert!(!sol.report.gap.is_negative());

        let file = CertificateFile::from_poisson(&sol, &params);
        let text = file.to_json();
        let parsed = CertificateFile::from_json(&text).unwrap();
        prop_assert_eq!(parsed.to_json(), text);
        let checked = verify(&parsed).unwrap();
        prop_assert_eq!(checked.gap, sol.report.gap.clone());

        // the gap splits into primal and dual suboptimality around the exact optimum
        let oracle = oracle_primal_poisson(&h, &s, &OracleOptions::default());
        if let Some(opt) = oracle.exact {
            prop_assert_eq!(dual_objective(&h, &opt.eta), -opt.value.clone());
            let primal_excess = &sol.report.primal - &opt.value;
            let dual_excess = &sol.report.dual + &opt.value;
            prop_assert!(!primal_excess.is_negative() && !dual_excess.is_negative());
            prop_assert_eq!(&primal_excess + &dual_excess, sol.report.gap.clone());
            let xi: Vec<BigRational> = opt.eta.aggregate(&h);
            let bregman = bregman_gap(&h, &s, &x.0, &opt.x, &xi).unwrap();
            prop_assert_eq!(bregman, primal_excess);
        }
    }
}
