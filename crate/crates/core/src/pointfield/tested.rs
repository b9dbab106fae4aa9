use std::collections::HashMap;

use crate::geometry::{Annulus, Vec2};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Annulus,
    Ball,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    kind: Kind,
    slot: u32,
    owner: usize,
}

/// Union of annuli and balls around registered centres, with a coarse hash
/// grid for candidate lookup.
///
/// Every registration carries an owner id so a query can ignore the
/// contributions of one owner (the parent of the point being examined).
#[derive(Debug, Clone)]
pub struct TestedRegion<S> {
    annulus: Annulus<S>,
    ball_radius: S,
    cell: S,
    annulus_centers: Vec<Vec2<S>>,
    ball_centers: Vec<Vec2<S>>,
    grid: HashMap<(i64, i64), Vec<Entry>>,
    next_owner: usize,
}

impl<S: Scalar> TestedRegion<S> {
    pub fn new(annulus: Annulus<S>, ball_radius: S) -> Self {
        let cell = annulus.euclidean_reach().max(ball_radius);
        Self {
            annulus,
            ball_radius: ball_radius.max(S::zero()),
            cell,
            annulus_centers: Vec::new(),
            ball_centers: Vec::new(),
            grid: HashMap::new(),
            next_owner: 0,
        }
    }

    /// Region with the default exclusion radius `r sqrt(eps)`.
    pub fn with_default_balls(annulus: Annulus<S>) -> Self {
        Self::new(annulus, annulus.ball_radius())
    }

    pub fn annulus(&self) -> &Annulus<S> {
        &self.annulus
    }

    pub fn ball_radius(&self) -> S {
        self.ball_radius
    }

    pub fn annulus_centers(&self) -> &[Vec2<S>] {
        &self.annulus_centers
    }

    pub fn ball_centers(&self) -> &[Vec2<S>] {
        &self.ball_centers
    }

    #[inline]
    fn key(&self, p: Vec2<S>) -> (i64, i64) {
        (
            (p.x / self.cell).floor().to_i64().unwrap_or(0),
            (p.y / self.cell).floor().to_i64().unwrap_or(0),
        )
    }

    /// Fresh owner id for callers that register annulus and ball separately.
    pub fn new_owner(&mut self) -> usize {
        self.next_owner += 1;
        self.next_owner - 1
    }

    fn push(&mut self, z: Vec2<S>, kind: Kind, owner: usize) {
        let slot = match kind {
            Kind::Annulus => {
                self.annulus_centers.push(z);
                self.annulus_centers.len() - 1
            }
            Kind::Ball => {
                self.ball_centers.push(z);
                self.ball_centers.len() - 1
            }
        } as u32;
        let key = self.key(z);
        self.grid
            .entry(key)
            .or_default()
            .push(Entry { kind, slot, owner });
    }

    /// Register both the annulus and the ball around `z`; returns the owner id.
    pub fn add(&mut self, z: Vec2<S>) -> usize {
        let owner = self.new_owner();
        self.push(z, Kind::Annulus, owner);
        self.push(z, Kind::Ball, owner);
        owner
    }

    pub fn add_annulus(&mut self, z: Vec2<S>, owner: usize) {
        self.push(z, Kind::Annulus, owner);
    }

    pub fn add_ball(&mut self, z: Vec2<S>, owner: usize) {
        self.push(z, Kind::Ball, owner);
    }

    /// Drop every registration of `owner` made at centre `z`. The centre
    /// lists keep the history; only queries are affected.
    pub fn remove(&mut self, z: Vec2<S>, owner: usize) {
        let key = self.key(z);
        if let Some(entries) = self.grid.get_mut(&key) {
            entries.retain(|e| e.owner != owner);
        }
    }

    pub fn query(&self, p: Vec2<S>) -> bool {
        self.query_excluding(p, None)
    }

    /// Whether `p` is covered by a registered annulus or ball whose owner is
    /// not `skip`.
    pub fn query_excluding(&self, p: Vec2<S>, skip: Option<usize>) -> bool {
        let (kx, ky) = self.key(p);
        let r2 = self.ball_radius * self.ball_radius;
        for gy in ky - 1..=ky + 1 {
            for gx in kx - 1..=kx + 1 {
                let Some(entries) = self.grid.get(&(gx, gy)) else {
                    continue;
                };
                for e in entries {
                    if Some(e.owner) == skip {
                        continue;
                    }
                    let hit = match e.kind {
                        Kind::Annulus => self
                            .annulus
                            .contains(p - self.annulus_centers[e.slot as usize]),
                        Kind::Ball => (p - self.ball_centers[e.slot as usize]).norm_sq() <= r2,
                    };
                    if hit {
                        return true;
                    }
                }
            }
        }
        false
    }
}
