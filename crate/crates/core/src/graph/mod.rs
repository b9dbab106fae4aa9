//! The random graph `G_A`: components by union-find, finite-box cluster
//! observables, and the induced-path expectation estimator.

mod dsu;
mod paths;

pub use dsu::DisjointSet;
pub use paths::{induced_path_counts, induced_path_expectation, InducedPathSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Annulus;
use crate::pointfield::{PointField, Topology};
use crate::scalar::Scalar;

/// Component structure of `G_A` over one point field.
#[derive(Debug, Clone)]
pub struct PercGraph<'a, S> {
    field: &'a PointField<S>,
    annulus: Annulus<S>,
    roots: Vec<u32>,
    sizes: Vec<u32>,
    degrees: Vec<u32>,
    edges: u64,
}

/// Join every pair of points whose displacement lies in the annulus.
pub fn build_graph<'a, S: Scalar>(field: &'a PointField<S>, a: &Annulus<S>) -> PercGraph<'a, S> {
    let n = field.len();
    let mut dsu = DisjointSet::new(n);
    let mut degrees = vec![0u32; n];
    let mut edges = 0u64;
    let reach = a.euclidean_reach();
    for i in 0..n {
        let p = field.point(i);
        field.for_each_candidate(p, reach, |j| {
            if j > i && a.contains(field.displacement(p, field.point(j))) {
                dsu.union(i, j);
                degrees[i] += 1;
                degrees[j] += 1;
                edges += 1;
            }
        });
    }
    let roots: Vec<u32> = (0..n).map(|i| dsu.find(i) as u32).collect();
    let sizes = (0..n).map(|i| dsu.size_of(i) as u32).collect();
    PercGraph {
        field,
        annulus: *a,
        roots,
        sizes,
        degrees,
        edges,
    }
}

impl<'a, S: Scalar> PercGraph<'a, S> {
    pub fn field(&self) -> &'a PointField<S> {
        self.field
    }

    pub fn annulus(&self) -> &Annulus<S> {
        &self.annulus
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    #[inline]
    pub fn root(&self, i: usize) -> usize {
        self.roots[i] as usize
    }

    #[inline]
    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.roots[i] == self.roots[j]
    }

    pub fn component_size(&self, i: usize) -> usize {
        self.sizes[self.root(i)] as usize
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    pub fn component_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.root(i) == i).count()
    }

    /// Component label (root index) of every point.
    pub fn labels(&self) -> &[u32] {
        &self.roots
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            2.0 * self.edges as f64 / self.len() as f64
        }
    }

    fn largest(&self) -> usize {
        (0..self.len())
            .filter(|&i| self.root(i) == i)
            .map(|i| self.sizes[i] as usize)
            .max()
            .unwrap_or(0)
    }

    /// Component observables that make sense on any topology.
    pub fn component_stats(&self) -> ClusterStats {
        let largest = self.largest();
        ClusterStats {
            n_points: self.len(),
            components: self.component_count(),
            largest,
            largest_fraction: if self.is_empty() {
                0.0
            } else {
                largest as f64 / self.len() as f64
            },
            crossing_lr: false,
            crossing_bt: false,
            mean_degree: self.mean_degree(),
        }
    }

    /// Left-right and bottom-top crossing flags: some component has a point
    /// within `edge_margin` of each of the two opposite edges.
    pub fn crossings(&self, edge_margin: S) -> Result<(bool, bool)> {
        let bx = self.field.bx();
        if bx.topology == Topology::Torus {
            return Err(Error::CrossingOnTorus);
        }
        let lo = bx.origin;
        let hi = bx.max();
        // bit 0: left, 1: right, 2: bottom, 3: top
        let mut touch = vec![0u8; self.len()];
        for (i, p) in self.field.points().iter().enumerate() {
            let mut m = 0u8;
            if p.x - lo.x <= edge_margin {
                m |= 1;
            }
            if hi.x - p.x <= edge_margin {
                m |= 2;
            }
            if p.y - lo.y <= edge_margin {
                m |= 4;
            }
            if hi.y - p.y <= edge_margin {
                m |= 8;
            }
            touch[self.root(i)] |= m;
        }
        let lr = touch.iter().any(|&m| m & 3 == 3);
        let bt = touch.iter().any(|&m| m & 12 == 12);
        Ok((lr, bt))
    }
}

/// Finite-box cluster observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub n_points: usize,
    pub components: usize,
    pub largest: usize,
    pub largest_fraction: f64,
    pub crossing_lr: bool,
    pub crossing_bt: bool,
    pub mean_degree: f64,
}

/// Component statistics plus crossing flags; hard-walled boxes only.
pub fn cluster_stats<S: Scalar>(g: &PercGraph<'_, S>, edge_margin: S) -> Result<ClusterStats> {
    let (lr, bt) = g.crossings(edge_margin)?;
    Ok(ClusterStats {
        crossing_lr: lr,
        crossing_bt: bt,
        ..g.component_stats()
    })
}
