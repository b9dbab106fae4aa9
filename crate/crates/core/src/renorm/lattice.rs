use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::rng::{derive_seed, from_seed};
use crate::stats::Frequency;

pub type Site = (i64, i64);

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2<f64>,
    pub max: Vec2<f64>,
}

impl Rect {
    pub fn centered(c: Vec2<f64>, half: f64) -> Self {
        Self {
            min: Vec2::new(c.x - half, c.y - half),
            max: Vec2::new(c.x + half, c.y + half),
        }
    }

    pub fn contains(&self, p: Vec2<f64>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn shrink(&self, by: f64) -> Self {
        Self {
            min: Vec2::new(self.min.x + by, self.min.y + by),
            max: Vec2::new(self.max.x - by, self.max.y - by),
        }
    }

    pub fn hull(&self, other: &Rect) -> Self {
        Self {
            min: Vec2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Vec2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    /// Distance from an interior point to the boundary; negative outside.
    pub fn depth(&self, p: Vec2<f64>) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}

/// An oriented bond `x -> y` with `y = x + (1,0)` or `x + (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub from: Site,
    pub to: Site,
}

impl Bond {
    pub fn vertical(x: Site) -> Self {
        Self {
            from: x,
            to: (x.0, x.1 + 1),
        }
    }

    pub fn horizontal(x: Site) -> Self {
        Self {
            from: x,
            to: (x.0 + 1, x.1),
        }
    }

    pub fn is_valid(&self) -> bool {
        let d = (self.to.0 - self.from.0, self.to.1 - self.from.1);
        d == (1, 0) || d == (0, 1)
    }

    pub fn is_vertical(&self) -> bool {
        self.to.1 == self.from.1 + 1
    }

    pub fn meets(&self, z: Site) -> bool {
        self.from == z || self.to == z
    }
}

/// Block decomposition of the plane into `6R x 6R` squares `S_x = 6Rx + [-3R, 3R]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockLattice {
    pub big_r: f64,
}

impl BlockLattice {
    pub fn new(big_r: f64) -> Self {
        Self { big_r }
    }

    pub fn center(&self, x: Site) -> Vec2<f64> {
        Vec2::new(6.0 * self.big_r * x.0 as f64, 6.0 * self.big_r * x.1 as f64)
    }

    pub fn square(&self, x: Site) -> Rect {
        Rect::centered(self.center(x), 3.0 * self.big_r)
    }

    /// `6Rx + [-2R, 2R]^2`.
    pub fn middle(&self, x: Site) -> Rect {
        Rect::centered(self.center(x), 2.0 * self.big_r)
    }

    /// `6Ry + [-R, R]^2`.
    pub fn target(&self, y: Site) -> Rect {
        Rect::centered(self.center(y), self.big_r)
    }

    /// `S_x ∪ S_y`, a `6R x 12R` rectangle.
    pub fn union(&self, b: Bond) -> Rect {
        self.square(b.from).hull(&self.square(b.to))
    }

    /// Bonds whose source is at l1 distance `< depth`, ordered by distance
    /// and, within distance `k`, from `(0,k)` to `(k,0)` with the vertical
    /// bond of each source before the horizontal one.
    pub fn bonds(depth: u64) -> Vec<Bond> {
        let mut out = Vec::new();
        for k in 0..depth as i64 {
            for i in 0..=k {
                let x = (i, k - i);
                out.push(Bond::vertical(x));
                out.push(Bond::horizontal(x));
            }
        }
        out
    }
}

/// Survival frequency of independent oriented bond percolation on the
/// first quadrant: some site at l1 distance `depth` reached from the origin.
pub fn oriented_bond_percolation(p: f64, depth: u64, trials: usize, master_seed: u64) -> Frequency {
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = from_seed(derive_seed(master_seed, "oriented", t as u64));
            oriented_survives(p, depth, &mut rng)
        })
        .count();
    Frequency::new(hits as u64, trials as u64)
}

fn oriented_survives<R: Rng + ?Sized>(p: f64, depth: u64, rng: &mut R) -> bool {
    // layer[i] = site (i, k - i) reached
    let mut layer = vec![true];
    for k in 0..depth as usize {
        let mut next = vec![false; k + 2];
        let mut any = false;
        for (i, &on) in layer.iter().enumerate() {
            if !on {
                continue;
            }
            if rng.random::<f64>() < p {
                next[i] = true; // vertical: (i, k-i+1)
                any = true;
            }
            if rng.random::<f64>() < p {
                next[i + 1] = true;
                any = true;
            }
        }
        if !any {
            return false;
        }
        layer = next;
    }
    true
}
