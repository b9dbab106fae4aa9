use std::collections::HashSet;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{BlockLattice, Bond, Rect};
use super::params::RenormParams;
use super::verify::first_close_pair;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::pointfield::{PointField, TestedRegion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondOutcome {
    pub bond: Bond,
    pub open: bool,
    /// Set for bonds declared open only because their source is unreached.
    pub trivially_open: bool,
    pub p_prime: Vec<Vec2<f64>>,
    pub q_prime: Vec<Vec2<f64>>,
    /// Number of targets `x_i''` found in phase one.
    pub x_found: usize,
    /// Phase-one explorations alive after `T` generations.
    pub phase1_survivors: usize,
    /// Phase-two generations actually run.
    pub phase2_generations: u64,
    /// Size of the last `V_i`.
    pub last_layer: usize,
    /// Field points examined (nodes, bad candidates and cap removals).
    pub examined: usize,
    pub bad: usize,
    pub cap_removed: usize,
}

impl BondOutcome {
    pub fn trivial(bond: Bond) -> Self {
        Self {
            bond,
            open: true,
            trivially_open: true,
            p_prime: Vec::new(),
            q_prime: Vec::new(),
            x_found: 0,
            phase1_survivors: 0,
            phase2_generations: 0,
            last_layer: 0,
            examined: 0,
            bad: 0,
            cap_removed: 0,
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    pos: Vec2<f64>,
    owner: usize,
}

struct Explorer<'a> {
    field: &'a PointField<f64>,
    params: &'a RenormParams,
    inset: Rect,
    region: TestedRegion<f64>,
    consumed: Vec<bool>,
    examined: usize,
    bad: usize,
}

impl Explorer<'_> {
    /// Unexamined field points in the annulus around `u` and inside the
    /// inset rectangle, in lexicographic order of position.
    fn candidates(&self, u: Vec2<f64>) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .field
            .annulus_neighbors(u, &self.params.annulus)
            .into_iter()
            .filter(|&j| !self.consumed[j] && self.inset.contains(self.field.point(j)))
            .collect();
        c.sort_by(|&a, &b| self.field.point(a).lex_cmp(&self.field.point(b)));
        c
    }

    /// Examine the children of every node of `layer`; good children are
    /// registered in the tested region.
    fn expand(&mut self, layer: &[Node]) -> Vec<Node> {
        let mut next = Vec::new();
        for u in layer {
            for j in self.candidates(u.pos) {
                self.consumed[j] = true;
                self.examined += 1;
                let c = self.field.point(j);
                if self.region.query_excluding(c, Some(u.owner)) {
                    self.bad += 1;
                    continue;
                }
                let owner = self.region.add(c);
                next.push(Node { pos: c, owner });
            }
        }
        next
    }

    fn mark(&mut self, z: Vec2<f64>) {
        if let Some(i) = self.field.find_exact(z) {
            self.consumed[i] = true;
        }
    }
}

fn key(p: Vec2<f64>) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// Decide whether `bond` is open with respect to `p` and `q`.
///
/// Phase one runs, from each `x_i` in turn, a branching exploration of the
/// field capped at `K` nodes per generation for `T` generations; a candidate
/// is bad if it falls in the annulus or separation ball of any registered
/// point other than its parent. A uniformly chosen survivor of generation
/// `T` inside the target square becomes `x_i''`. Phase two grows layers
/// `V_0, V_1, ...` from the `x_i''` under the same rule for at most
/// `floor(R/r)` generations or until a layer has `n` points. `P'` is the
/// lexicographically first `n` points of the last layer, and `Q'` is every
/// new node except those of the last layer.
pub fn bond_explore<R: Rng + ?Sized>(
    field: &PointField<f64>,
    bond: Bond,
    p: &[Vec2<f64>],
    q: &[Vec2<f64>],
    params: &RenormParams,
    rng: &mut R,
) -> Result<BondOutcome> {
    if !bond.is_valid() {
        return Err(Error::InvalidParameter {
            name: "bond",
            reason: format!("{bond:?} is not a unit step up or right"),
        });
    }
    let lattice = BlockLattice::new(params.big_r);
    let middle = lattice.middle(bond.from);
    if let Some(z) = p.iter().find(|z| !middle.contains(**z)) {
        return Err(Error::InvalidParameter {
            name: "P",
            reason: format!("{z:?} outside the middle square of {:?}", bond.from),
        });
    }
    let sep = params.separation();
    let pq: Vec<Vec2<f64>> = p.iter().chain(q).copied().collect();
    if let Some((i, j, dist)) = first_close_pair(&pq, sep) {
        return Err(Error::SeparationViolated {
            i,
            j,
            dist,
            min: sep,
        });
    }

    let inset = lattice.union(bond).shrink(params.r());
    let target = lattice.target(bond.to);
    let mut ex = Explorer {
        field,
        params,
        inset,
        region: TestedRegion::new(params.annulus, sep),
        consumed: vec![false; field.len()],
        examined: 0,
        bad: 0,
    };
    for &z in q {
        ex.region.add(z);
        ex.mark(z);
    }
    let roots: Vec<Node> = p
        .iter()
        .map(|&z| {
            ex.mark(z);
            Node {
                pos: z,
                owner: ex.region.add(z),
            }
        })
        .collect();

    let cap = params.cap as usize;
    let mut new_points: Vec<Vec2<f64>> = Vec::new();
    let mut cap_removed = 0usize;
    let mut survivors = 0usize;
    let mut found: Vec<Node> = Vec::new();
    for root in &roots {
        let mut layer = vec![*root];
        let mut alive = true;
        for _ in 0..params.horizon {
            let mut next = ex.expand(&layer);
            if next.len() > cap {
                let mut keep = sample_indices(rng, next.len(), cap).into_vec();
                keep.sort_unstable();
                let mut kept = Vec::with_capacity(cap);
                let mut k = 0;
                for (i, node) in next.drain(..).enumerate() {
                    if k < keep.len() && keep[k] == i {
                        kept.push(node);
                        k += 1;
                    } else {
                        ex.region.remove(node.pos, node.owner);
                        cap_removed += 1;
                    }
                }
                next = kept;
            }
            new_points.extend(next.iter().map(|n| n.pos));
            if next.is_empty() {
                alive = false;
                break;
            }
            layer = next;
        }
        if alive && params.horizon > 0 {
            survivors += 1;
            let pick = layer[rng.random_range(0..layer.len())];
            if target.contains(pick.pos) {
                found.push(pick);
            }
        }
    }

    let x_found = found.len();
    let n = params.n as usize;
    let mut layer = found;
    let mut generations = 0u64;
    while !layer.is_empty() && layer.len() < n && generations < params.growth_steps {
        let next = ex.expand(&layer);
        generations += 1;
        new_points.extend(next.iter().map(|v| v.pos));
        layer = next;
    }

    let last: HashSet<(u64, u64)> = layer.iter().map(|v| key(v.pos)).collect();
    let q_prime: Vec<Vec2<f64>> = new_points
        .into_iter()
        .filter(|z| !last.contains(&key(*z)))
        .collect();
    let mut p_prime: Vec<Vec2<f64>> = Vec::new();
    if layer.len() >= n && n > 0 {
        let mut pts: Vec<Vec2<f64>> = layer.iter().map(|v| v.pos).collect();
        pts.sort_by(|a, b| a.lex_cmp(b));
        pts.truncate(n);
        p_prime = pts;
    }
    Ok(BondOutcome {
        bond,
        open: !p_prime.is_empty() && p_prime.len() == n,
        trivially_open: false,
        p_prime,
        q_prime,
        x_found,
        phase1_survivors: survivors,
        phase2_generations: generations,
        last_layer: layer.len(),
        examined: ex.examined,
        bad: ex.bad,
        cap_removed,
    })
}
