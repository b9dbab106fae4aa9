use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Vec2};
use crate::rng::from_seed;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Hard,
    Torus,
}

/// Axis-aligned rectangle `[origin, origin + (width, height)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2<S> {
    pub origin: Vec2<S>,
    pub width: S,
    pub height: S,
    pub topology: Topology,
}

impl<S: Scalar> Box2<S> {
    pub fn new(origin: Vec2<S>, width: S, height: S, topology: Topology) -> Result<Self> {
        if !(width > S::zero() && height > S::zero() && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidBox {
                width: width.as_f64(),
                height: height.as_f64(),
            });
        }
        Ok(Self {
            origin,
            width,
            height,
            topology,
        })
    }

    /// Hard-walled square `[0, side]²`.
    pub fn square(side: S) -> Result<Self> {
        Self::new(Vec2::zero(), side, side, Topology::Hard)
    }

    /// Square `center + [-half, half]²`.
    pub fn centered(center: Vec2<S>, half: S, topology: Topology) -> Result<Self> {
        Self::new(
            center - Vec2::new(half, half),
            half + half,
            half + half,
            topology,
        )
    }

    pub fn area(&self) -> S {
        self.width * self.height
    }

    #[inline]
    pub fn max(&self) -> Vec2<S> {
        self.origin + Vec2::new(self.width, self.height)
    }

    #[inline]
    pub fn contains(&self, p: Vec2<S>) -> bool {
        let hi = self.max();
        p.x >= self.origin.x && p.x <= hi.x && p.y >= self.origin.y && p.y <= hi.y
    }

    /// Box enlarged by `margin` on every side (for boundary-safe sampling).
    pub fn expanded(&self, margin: S) -> Self {
        let two = S::lit(2.0);
        Self {
            origin: self.origin - Vec2::new(margin, margin),
            width: self.width + two * margin,
            height: self.height + two * margin,
            topology: self.topology,
        }
    }

    /// Shortest displacement from `from` to `to`, wrapping on a torus.
    #[inline]
    pub fn displacement(&self, from: Vec2<S>, to: Vec2<S>) -> Vec2<S> {
        let d = to - from;
        match self.topology {
            Topology::Hard => d,
            Topology::Torus => Vec2::new(
                d.x - self.width * (d.x / self.width).round(),
                d.y - self.height * (d.y / self.height).round(),
            ),
        }
    }

    /// Map a point into the box (identity on hard boxes).
    pub fn wrap(&self, p: Vec2<S>) -> Vec2<S> {
        match self.topology {
            Topology::Hard => p,
            Topology::Torus => {
                let fold = |v: S, o: S, len: S| {
                    let mut t = (v - o) % len;
                    if t < S::zero() {
                        t = t + len;
                    }
                    if t >= len {
                        t = S::zero();
                    }
                    o + t
                };
                Vec2::new(
                    fold(p.x, self.origin.x, self.width),
                    fold(p.y, self.origin.y, self.height),
                )
            }
        }
    }
}

/// Poisson count with mean `mean`; zero when `mean <= 0`.
pub fn sample_poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}

/// A realised point set plus a uniform grid of cells over its box.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField<S> {
    bx: Box2<S>,
    points: Vec<Vec2<S>>,
    cell_size: S,
    nx: usize,
    ny: usize,
    cell_w: S,
    cell_h: S,
    cell_start: Vec<u32>,
    cell_items: Vec<u32>,
    seed: Option<u64>,
    intensity: f64,
}

impl<S: Scalar> PointField<S> {
    /// Poisson process of the given intensity in `bx`, reproducible from `seed`.
    pub fn sample_poisson(bx: Box2<S>, intensity: f64, cell_size: S, seed: u64) -> Result<Self> {
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidParameter {
                name: "intensity",
                reason: format!("intensity must be finite and non-negative, got {intensity}"),
            });
        }
        let mut rng = from_seed(seed);
        let count = sample_poisson_count(intensity * bx.area().as_f64(), &mut rng);
        let (w, h) = (bx.width.as_f64(), bx.height.as_f64());
        let (ox, oy) = (bx.origin.x.as_f64(), bx.origin.y.as_f64());
        let points = (0..count)
            .map(|_| {
                let x = ox + w * rng.random::<f64>();
                let y = oy + h * rng.random::<f64>();
                Vec2::new(S::lit(x), S::lit(y))
            })
            .collect();
        let mut field = Self::from_points(bx, points, cell_size)?;
        field.seed = Some(seed);
        field.intensity = intensity;
        Ok(field)
    }

    /// Index an explicit point set. Points outside a hard box are rejected;
    /// on a torus they are wrapped.
    pub fn from_points(bx: Box2<S>, points: Vec<Vec2<S>>, cell_size: S) -> Result<Self> {
        if !(cell_size > S::zero()) {
            return Err(Error::InvalidParameter {
                name: "cell_size",
                reason: format!("cell size must be positive, got {cell_size}"),
            });
        }
        let points: Vec<Vec2<S>> = match bx.topology {
            Topology::Hard => {
                if let Some(p) = points.iter().find(|p| !bx.contains(**p)) {
                    return Err(Error::InvalidParameter {
                        name: "points",
                        reason: format!("point {p:?} lies outside the box"),
                    });
                }
                points
            }
            Topology::Torus => points.into_iter().map(|p| bx.wrap(p)).collect(),
        };
        let cells_along = |len: S| {
            let k = (len / cell_size).floor().to_usize().unwrap_or(1);
            k.clamp(1, 1 << 14)
        };
        let nx = cells_along(bx.width);
        let ny = cells_along(bx.height);
        let mut field = Self {
            bx,
            points,
            cell_size,
            nx,
            ny,
            cell_w: bx.width / S::lit(nx as f64),
            cell_h: bx.height / S::lit(ny as f64),
            cell_start: Vec::new(),
            cell_items: Vec::new(),
            seed: None,
            intensity: 0.0,
        };
        field.build_index();
        Ok(field)
    }

    fn build_index(&mut self) {
        let cells = self.nx * self.ny;
        let mut counts = vec![0u32; cells + 1];
        let ids: Vec<usize> = self.points.iter().map(|&p| self.cell_id(p)).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for c in 0..cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; self.points.len()];
        for (i, &c) in ids.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        self.cell_start = counts;
        self.cell_items = items;
    }

    #[inline]
    fn cell_coord(&self, p: Vec2<S>) -> (i64, i64) {
        let cx = ((p.x - self.bx.origin.x) / self.cell_w).floor();
        let cy = ((p.y - self.bx.origin.y) / self.cell_h).floor();
        (
            cx.to_i64().unwrap_or(i64::MIN / 4),
            cy.to_i64().unwrap_or(i64::MIN / 4),
        )
    }

    #[inline]
    fn cell_id(&self, p: Vec2<S>) -> usize {
        let (cx, cy) = self.cell_coord(p);
        let cx = cx.clamp(0, self.nx as i64 - 1) as usize;
        let cy = cy.clamp(0, self.ny as i64 - 1) as usize;
        cy * self.nx + cx
    }

    pub fn bx(&self) -> &Box2<S> {
        &self.bx
    }

    pub fn points(&self) -> &[Vec2<S>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vec2<S> {
        self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub(crate) fn set_provenance(&mut self, seed: Option<u64>, intensity: f64) {
        self.seed = seed;
        self.intensity = intensity;
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Indices stored in grid cell `(cx, cy)`.
    pub fn cell(&self, cx: usize, cy: usize) -> &[u32] {
        let c = cy * self.nx + cx;
        &self.cell_items[self.cell_start[c] as usize..self.cell_start[c + 1] as usize]
    }

    /// Cell that stores point `i`.
    pub fn cell_of(&self, i: usize) -> (usize, usize) {
        let c = self.cell_id(self.points[i]);
        (c % self.nx, c / self.nx)
    }

    #[inline]
    pub fn displacement(&self, from: Vec2<S>, to: Vec2<S>) -> Vec2<S> {
        self.bx.displacement(from, to)
    }

    fn axis_cells(&self, centre: i64, ring: i64, n: usize) -> Vec<usize> {
        let n = n as i64;
        match self.bx.topology {
            Topology::Torus => {
                if 2 * ring + 1 >= n {
                    (0..n as usize).collect()
                } else {
                    (centre - ring..=centre + ring)
                        .map(|c| c.rem_euclid(n) as usize)
                        .collect()
                }
            }
            Topology::Hard => {
                let lo = (centre - ring).max(0);
                let hi = (centre + ring).min(n - 1);
                if lo > hi {
                    Vec::new()
                } else {
                    (lo as usize..=hi as usize).collect()
                }
            }
        }
    }

    /// Call `visit(i)` for every point whose cell lies within Euclidean
    /// `reach` of the cell containing `center`. A superset of the points
    /// within `reach`; each index is visited once.
    pub fn for_each_candidate(&self, center: Vec2<S>, reach: S, mut visit: impl FnMut(usize)) {
        if self.points.is_empty() {
            return;
        }
        let c = match self.bx.topology {
            Topology::Torus => self.bx.wrap(center),
            Topology::Hard => center,
        };
        let (cx, cy) = self.cell_coord(c);
        let rx = (reach / self.cell_w).ceil().to_i64().unwrap_or(0).max(0);
        let ry = (reach / self.cell_h).ceil().to_i64().unwrap_or(0).max(0);
        let xs = self.axis_cells(cx, rx, self.nx);
        let ys = self.axis_cells(cy, ry, self.ny);
        for &gy in &ys {
            for &gx in &xs {
                for &i in self.cell(gx, gy) {
                    visit(i as usize);
                }
            }
        }
    }

    /// Points `p` with `p - center` in the annulus, excluding any point
    /// sitting exactly at `center`. Sorted by index.
    pub fn annulus_neighbors(&self, center: Vec2<S>, a: &Annulus<S>) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_candidate(center, a.euclidean_reach(), |i| {
            let d = self.displacement(center, self.points[i]);
            if d != Vec2::zero() && a.contains(d) {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// Annulus neighbours of point `i`, excluding `i` itself.
    pub fn neighbors_of(&self, i: usize, a: &Annulus<S>) -> Vec<usize> {
        let c = self.points[i];
        let mut out = Vec::new();
        self.for_each_candidate(c, a.euclidean_reach(), |j| {
            if j != i && a.contains(self.displacement(c, self.points[j])) {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }

    /// Index of a point at exactly `p`, if any.
    pub fn find_exact(&self, p: Vec2<S>) -> Option<usize> {
        let mut hit = None;
        self.for_each_candidate(p, S::zero(), |i| {
            if self.points[i] == p && hit.is_none_or(|h| i < h) {
                hit = Some(i);
            }
        });
        hit
    }

    /// The field with only the points selected by `keep` (same box and cell size).
    pub fn retain(&self, mut keep: impl FnMut(Vec2<S>) -> bool) -> Self {
        let pts = self.points.iter().copied().filter(|&p| keep(p)).collect();
        let mut f =
            Self::from_points(self.bx, pts, self.cell_size).expect("subset of a valid field");
        f.seed = self.seed;
        f.intensity = self.intensity;
        f
    }
}
