use rand::Rng;
use serde::{Deserialize, Serialize};

use super::explore::{bond_explore, BondOutcome};
use super::lattice::BlockLattice;
use super::params::RenormParams;
use crate::error::Result;
use crate::geometry::Vec2;
use crate::graph::DisjointSet;
use crate::pointfield::{PointField, TestedRegion};

/// First pair (in input indices) that coincides or lies closer than `sep`.
pub fn first_close_pair(points: &[Vec2<f64>], sep: f64) -> Option<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j].x - points[i].x > sep {
                break;
            }
            let d = points[i].dist(points[j]);
            if d < sep || points[i] == points[j] {
                return Some((i.min(j), i.max(j), d));
            }
        }
    }
    None
}

/// Independent re-check of the five conditions on a bond outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `P'` inside the middle square of the head and `|P'| <= n`.
    pub a: bool,
    /// `Q'` inside `S_x ∪ S_y`, at least `r` from its boundary, `|Q'| <= N`.
    pub b: bool,
    /// `P ∪ Q ∪ P' ∪ Q'` distinct and separated.
    pub c: bool,
    /// `P' ∪ Q'` avoids every annulus around `Q`.
    pub d: bool,
    /// Every point of `P'` joined to `P` through `Q'`.
    pub e: bool,
    pub violations: Vec<String>,
}

impl ConditionReport {
    pub fn ok(&self) -> bool {
        self.a && self.b && self.c && self.d && self.e
    }
}

pub fn verify_bond(
    outcome: &BondOutcome,
    field: &PointField<f64>,
    p: &[Vec2<f64>],
    q: &[Vec2<f64>],
    params: &RenormParams,
) -> ConditionReport {
    let mut rep = ConditionReport::default();
    let lattice = BlockLattice::new(params.big_r);
    let bond = outcome.bond;
    let a = &params.annulus;

    let head = lattice.middle(bond.to);
    rep.a = outcome.p_prime.len() <= params.n as usize;
    if !rep.a {
        rep.violations
            .push(format!("a: |P'| = {} > n", outcome.p_prime.len()));
    }
    for z in &outcome.p_prime {
        if !head.contains(*z) {
            rep.a = false;
            rep.violations.push(format!(
                "a: P' point {z:?} outside the middle square of {:?}",
                bond.to
            ));
        }
    }
    if outcome.open != (outcome.p_prime.len() == params.n as usize) && !outcome.trivially_open {
        rep.a = false;
        rep.violations
            .push("a: open flag disagrees with |P'| = n".into());
    }

    let union = lattice.union(bond);
    let r = params.r();
    rep.b = outcome.q_prime.len() as u64 <= params.budget;
    if !rep.b {
        rep.violations.push(format!(
            "b: |Q'| = {} exceeds N = {}",
            outcome.q_prime.len(),
            params.budget
        ));
    }
    for z in &outcome.q_prime {
        if union.depth(*z) < r * (1.0 - 1e-12) {
            rep.b = false;
            rep.violations
                .push(format!("b: Q' point {z:?} within r of the boundary"));
        }
    }

    let all: Vec<Vec2<f64>> = p
        .iter()
        .chain(q)
        .chain(&outcome.p_prime)
        .chain(&outcome.q_prime)
        .copied()
        .collect();
    rep.c = match first_close_pair(&all, params.separation()) {
        None => true,
        Some((i, j, d)) => {
            rep.violations.push(format!(
                "c: points {:?} and {:?} at distance {d}",
                all[i], all[j]
            ));
            false
        }
    };

    let mut q_annuli = TestedRegion::new(*a, 0.0);
    for (k, &z) in q.iter().enumerate() {
        q_annuli.add_annulus(z, k);
    }
    rep.d = true;
    for z in outcome.p_prime.iter().chain(&outcome.q_prime) {
        if q_annuli.query(*z) {
            rep.d = false;
            rep.violations
                .push(format!("d: {z:?} lies in an annulus around Q"));
        }
    }

    // components of P ∪ Q' under annulus adjacency
    let base: Vec<Vec2<f64>> = p.iter().chain(&outcome.q_prime).copied().collect();
    let mut dsu = DisjointSet::new(base.len());
    let neighbors = |z: Vec2<f64>| -> Vec<usize> {
        (0..base.len())
            .filter(|&k| a.contains(z - base[k]) && base[k] != z)
            .collect()
    };
    for (k, &z) in base.iter().enumerate() {
        for j in neighbors(z) {
            dsu.union(k, j);
        }
    }
    let p_roots: Vec<usize> = (0..p.len()).map(|k| dsu.find(k)).collect();
    rep.e = true;
    for z in &outcome.p_prime {
        let joined = neighbors(*z)
            .into_iter()
            .any(|k| p_roots.contains(&dsu.find(k)));
        if !joined {
            rep.e = false;
            rep.violations
                .push(format!("e: P' point {z:?} not joined to P through Q'"));
        }
    }

    for z in outcome.p_prime.iter().chain(&outcome.q_prime) {
        if field.find_exact(*z).is_none() {
            rep.c = false;
            rep.violations
                .push(format!("c: {z:?} is not a field point"));
        }
    }
    rep
}

/// The sub-field the outcome may depend on: points of `S_x ∪ S_y` inside
/// some annulus around `P ∪ Q'` and outside every annulus around `Q`.
pub fn locality_field(
    field: &PointField<f64>,
    outcome: &BondOutcome,
    p: &[Vec2<f64>],
    q: &[Vec2<f64>],
    params: &RenormParams,
) -> PointField<f64> {
    let union = BlockLattice::new(params.big_r).union(outcome.bond);
    let mut inside = TestedRegion::new(params.annulus, 0.0);
    for (k, &z) in p.iter().chain(&outcome.q_prime).enumerate() {
        inside.add_annulus(z, k);
    }
    let mut blocked = TestedRegion::new(params.annulus, 0.0);
    for (k, &z) in q.iter().enumerate() {
        blocked.add_annulus(z, k);
    }
    field.retain(|z| union.contains(z) && inside.query(z) && !blocked.query(z))
}

/// Rerun the bond on the locality sub-field with a fresh copy of the random
/// stream and report whether the outcome is identical.
pub fn locality_replay<R: Rng + Clone>(
    field: &PointField<f64>,
    outcome: &BondOutcome,
    p: &[Vec2<f64>],
    q: &[Vec2<f64>],
    params: &RenormParams,
    rng: &R,
) -> Result<bool> {
    let sub = locality_field(field, outcome, p, q, params);
    let again = bond_explore(&sub, outcome.bond, p, q, params, &mut rng.clone())?;
    Ok(again.open == outcome.open
        && again.p_prime == outcome.p_prime
        && again.q_prime == outcome.q_prime)
}
