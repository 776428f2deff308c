//! Dense two-phase simplex over exact rationals with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::dyadic::Dyadic;
use crate::hypergraph::Hypergraph;
use crate::mcf::McfInstance;

type Q = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpConstraint {
    pub coeffs: Vec<Q>,
    pub relation: Relation,
    pub rhs: Q,
}

/// `max <c, x>` subject to the constraints; `free[j]` lifts `x_j >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<Q>,
    pub constraints: Vec<LpConstraint>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Q, x: Vec<Q> },
    Infeasible,
    Unbounded,
}

impl LpProblem {
    pub fn new(vars: usize) -> Self {
        Self {
            objective: vec![Q::zero(); vars],
            constraints: Vec::new(),
            free: vec![false; vars],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, terms: &[(usize, Q)], relation: Relation, rhs: Q) {
        let mut coeffs = vec![Q::zero(); self.vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.constraints.push(LpConstraint { coeffs, relation, rhs });
    }

    /// Exact re-substitution of a candidate point.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        if x.len() != self.vars() || x.iter().zip(&self.free).any(|(v, &free)| !free && v.is_negative()) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs: Q = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
    }

    pub fn value(&self, x: &[Q]) -> Q {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let factor = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `<cost, x>` over the allowed columns; `false` when unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..cost.len()).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let reduced = &cost[j]
                        - self
                            .basis
                            .iter()
                            .zip(&self.rows)
                            .map(|(&b, row)| &cost[b] * &row[j])
                            .sum::<Q>();
                    reduced.is_positive()
                }
            });
            let Some(j) = entering else { return true };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][j].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][j];
                let better = match &best {
                    None => true,
                    Some((k, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*k]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, j);
        }
    }
}

/// Exact optimum of `lp` by the two-phase simplex method with Bland's rule.
pub fn oracle_dense_simplex(lp: &LpProblem) -> LpOutcome {
    // columns: split variables (x+ and, for free variables, x-), slacks/surplus, artificials
    let n = lp.vars();
    let mut col_of = Vec::with_capacity(n);
    let mut next = 0;
    for &free in &lp.free {
        col_of.push((next, free.then_some(next + 1)));
        next += if free { 2 } else { 1 };
    }
    let structural = next;
    let m = lp.constraints.len();
    let slack_count = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let art_start = structural + slack_count;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack = structural;
    let mut art = art_start;
    let mut art_rows = Vec::new();
    for c in &lp.constraints {
        let flip = c.rhs.is_negative();
        let sign = if flip { -Q::one() } else { Q::one() };
        let relation = match (c.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        };
        let mut row = vec![Q::zero(); art_start + m];
        for (j, a) in c.coeffs.iter().enumerate() {
            let (pos, neg) = col_of[j];
            row[pos] = &sign * a;
            if let Some(neg) = neg {
                row[neg] = -(&sign * a);
            }
        }
        match relation {
            Relation::Le => {
                row[slack] = Q::one();
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -Q::one();
                slack += 1;
                row[art] = Q::one();
                basis.push(art);
                art_rows.push(rows.len());
                art += 1;
            }
            Relation::Eq => {
                row[art] = Q::one();
                basis.push(art);
                art_rows.push(rows.len());
                art += 1;
            }
        }
        rows.push(row);
        rhs.push(&sign * &c.rhs);
    }
    let width = art;
    for row in rows.iter_mut() {
        row.truncate(width);
    }
    let mut t = Tableau { rows, rhs, basis };
    let is_art = |j: usize| j >= art_start;
    if width > art_start {
        let cost: Vec<Q> = (0..width).map(|j| if is_art(j) { -Q::one() } else { Q::zero() }).collect();
        t.optimize(&cost, &vec![true; width]);
        let infeasibility: Q = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| is_art(b))
            .map(|(_, v)| v.clone())
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }
        let mut i = 0;
        while i < t.rows.len() {
            if is_art(t.basis[i]) {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    let mut cost = vec![Q::zero(); width];
    for (j, c) in lp.objective.iter().enumerate() {
        let (pos, neg) = col_of[j];
        cost[pos] = c.clone();
        if let Some(neg) = neg {
            cost[neg] = -c;
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| !is_art(j)).collect();
    if !t.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut column_values = vec![Q::zero(); width];
    for (&b, v) in t.basis.iter().zip(&t.rhs) {
        column_values[b] = v.clone();
    }
    let x: Vec<Q> = col_of
        .iter()
        .map(|&(pos, neg)| match neg {
            Some(neg) => &column_values[pos] - &column_values[neg],
            None => column_values[pos].clone(),
        })
        .collect();
    LpOutcome::Optimal {
        value: lp.value(&x),
        x,
    }
}

/// `max <s, x>` over `x ∈ X_0` with `R_e(x) <= r_e`, in the variables `(x, u, ℓ)`:
/// `ℓ_e <= x_v <= u_e` for `v ∈ e` and `u_e - ℓ_e <= r_e`.
pub fn support_lp(h: &Hypergraph, s: &[Dyadic], budgets: &[Dyadic]) -> LpProblem {
    let n = h.vertex_count();
    let m = h.edge_count();
    let mut lp = LpProblem::new(n + 2 * m);
    lp.free = vec![true; n + 2 * m];
    for (v, sv) in s.iter().enumerate() {
        lp.objective[v] = sv.to_rational();
    }
    let degrees: Vec<(usize, Q)> = h.degrees().iter().enumerate().map(|(v, d)| (v, d.to_rational())).collect();
    lp.add(&degrees, Relation::Eq, Q::zero());
    for (e, edge) in h.edges().iter().enumerate() {
        let (u, l) = (n + e, n + m + e);
        for &v in &edge.vertices {
            lp.add(&[(v, Q::one()), (u, -Q::one())], Relation::Le, Q::zero());
            lp.add(&[(l, Q::one()), (v, -Q::one())], Relation::Le, Q::zero());
        }
        lp.add(&[(u, Q::one()), (l, -Q::one())], Relation::Le, budgets[e].to_rational());
    }
    lp
}

/// `max -<c, f>` subject to `0 <= f <= u` and inflow minus outflow equal to the demand.
pub fn mcf_lp(inst: &McfInstance) -> LpProblem {
    let mut lp = LpProblem::new(inst.arcs.len());
    let int = |v: &num_bigint::BigInt| Q::from_integer(v.clone());
    for (a, arc) in inst.arcs.iter().enumerate() {
        lp.objective[a] = -int(&arc.cost);
        lp.add(&[(a, Q::one())], Relation::Le, int(&arc.capacity));
    }
    for node in 0..inst.node_count {
        let terms: Vec<(usize, Q)> = inst
            .arcs
            .iter()
            .enumerate()
            .filter_map(|(a, arc)| {
                if arc.head == node && arc.tail != node {
                    Some((a, Q::one()))
                } else if arc.tail == node && arc.head != node {
                    Some((a, -Q::one()))
                } else {
                    None
                }
            })
            .collect();
        lp.add(&terms, Relation::Eq, int(&inst.demand[node]));
    }
    lp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{rational, unit_hypergraph};

    fn q(v: i64) -> Q {
        Q::from_integer(v.into())
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let mut lp = LpProblem::new(2);
        lp.objective = vec![q(3), q(5)];
        lp.add(&[(0, q(1))], Relation::Le, q(4));
        lp.add(&[(1, q(2))], Relation::Le, q(12));
        lp.add(&[(0, q(3)), (1, q(2))], Relation::Le, q(18));
        match oracle_dense_simplex(&lp) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, q(36));
                assert_eq!(x, vec![q(2), q(6)]);
                assert!(lp.is_feasible(&x));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LpProblem::new(1);
        lp.add(&[(0, q(1))], Relation::Ge, q(2));
        lp.add(&[(0, q(1))], Relation::Le, q(1));
        assert_eq!(oracle_dense_simplex(&lp), LpOutcome::Infeasible);
        let mut lp = LpProblem::new(2);
        lp.objective = vec![q(1), q(0)];
        lp.add(&[(0, q(1)), (1, q(-1))], Relation::Le, q(1));
        lp.free = vec![true, true];
        assert_eq!(oracle_dense_simplex(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // max -|x - 3/2| style: max t s.t. t <= x - 1, t <= 2 - x, x free, t free
        let mut lp = LpProblem::new(2);
        lp.free = vec![true, true];
        lp.objective = vec![q(0), q(1)];
        lp.add(&[(1, q(1)), (0, q(-1))], Relation::Le, q(-1));
        lp.add(&[(1, q(1)), (0, q(1))], Relation::Le, q(2));
        lp.add(&[(0, q(2))], Relation::Eq, q(3));
        match oracle_dense_simplex(&lp) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, rational(1, 2));
                assert_eq!(x[0], rational(3, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn support_lp_examples() {
        let h = unit_hypergraph(2, &[&[0, 1]]).unwrap();
        let s = vec![Dyadic::one(), -Dyadic::one()];
        match oracle_dense_simplex(&support_lp(&h, &s, &[Dyadic::one()])) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, q(1));
                assert_eq!(&x[..2], &[rational(1, 2), rational(-1, 2)]);
            }
            other => panic!("{other:?}"),
        }
        let h = unit_hypergraph(3, &[&[0, 1, 2]]).unwrap();
        let s = vec![Dyadic::one(), Dyadic::zero(), -Dyadic::one()];
        match oracle_dense_simplex(&support_lp(&h, &s, &[Dyadic::one()])) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(1)),
            other => panic!("{other:?}"),
        }
        match oracle_dense_simplex(&support_lp(&h, &s, &[Dyadic::zero()])) {
            LpOutcome::Optimal { value, .. } => assert!(value.is_zero()),
            other => panic!("{other:?}"),
        }
    }
}
