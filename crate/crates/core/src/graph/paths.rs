use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Vec2};
use crate::pointfield::{sample_poisson_count, Box2, PointField, Topology};
use crate::rng::{derive_seed, from_seed};
use crate::scalar::Scalar;
use crate::stats::{Estimate, Running};
use rand::Rng;

/// Number of induced paths of every length `1..=max_len` starting at a root
/// placed at the origin of one fresh Poisson field.
fn count_from_root<S: Scalar>(
    field: &PointField<S>,
    root: usize,
    a: &Annulus<S>,
    max_len: usize,
) -> Vec<u64> {
    let mut counts = vec![0u64; max_len + 1];
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut path = vec![root];
    extend(field, a, max_len, &mut path, &mut adjacency, &mut counts);
    counts
}

fn extend<S: Scalar>(
    field: &PointField<S>,
    a: &Annulus<S>,
    max_len: usize,
    path: &mut Vec<usize>,
    adjacency: &mut HashMap<usize, Vec<usize>>,
    counts: &mut [u64],
) {
    let tip = *path.last().expect("non-empty path");
    let next = adjacency
        .entry(tip)
        .or_insert_with(|| field.neighbors_of(tip, a))
        .clone();
    let depth = path.len();
    for c in next {
        if path.contains(&c) {
            continue;
        }
        let p = field.point(c);
        // induced: the new vertex may only touch the current tip
        if path[..depth - 1]
            .iter()
            .any(|&e| a.contains(p - field.point(e)))
        {
            continue;
        }
        counts[path.len()] += 1;
        if path.len() < max_len {
            path.push(c);
            extend(field, a, max_len, path, adjacency, counts);
            path.pop();
        }
    }
}

/// Per-trial induced-path counts for lengths `0..=max_len` (index 0 unused).
///
/// Each trial places a root at the origin of an independent Poisson field of
/// the given intensity on a square large enough to hold any path of
/// `max_len` steps. Trial `t` draws from stream `(master_seed, "induced", t)`.
pub fn induced_path_counts<S: Scalar>(
    a: &Annulus<S>,
    max_len: usize,
    intensity: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<Vec<u64>>> {
    let area = a.area().as_f64();
    if !(area < 2.0) {
        return Err(Error::AreaGuard { area });
    }
    if max_len == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "path length must be at least 1".into(),
        });
    }
    let half = a.euclidean_reach() * S::lit(max_len as f64 + 1.0);
    let bx = Box2::centered(Vec2::zero(), half, Topology::Hard)?;
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = from_seed(derive_seed(master_seed, "induced", t as u64));
            let count = sample_poisson_count(intensity * bx.area().as_f64(), &mut rng);
            let side = (half + half).as_f64();
            let lo = bx.origin;
            let mut points = Vec::with_capacity(count as usize + 1);
            points.push(Vec2::zero());
            for _ in 0..count {
                points.push(Vec2::new(
                    lo.x + S::lit(side * rng.random::<f64>()),
                    lo.y + S::lit(side * rng.random::<f64>()),
                ));
            }
            let field = PointField::from_points(bx, points, a.euclidean_reach())
                .expect("points inside box");
            count_from_root(&field, 0, a, max_len)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedPathSummary {
    /// `means[n-1]` estimates `E_n`.
    pub means: Vec<Estimate>,
    /// `ratios[n-1]` estimates `E_{n+1} / E_n` (delta method on paired trials).
    pub ratios: Vec<Estimate>,
}

/// Monte Carlo estimates of the expected number of induced paths of each
/// length up to `max_len` rooted at a fixed point of a unit-intensity field.
pub fn induced_path_expectation<S: Scalar>(
    a: &Annulus<S>,
    max_len: usize,
    trials: usize,
    master_seed: u64,
) -> Result<InducedPathSummary> {
    summarize(
        &induced_path_counts(a, max_len, 1.0, trials, master_seed)?,
        max_len,
    )
}

pub(crate) fn summarize(counts: &[Vec<u64>], max_len: usize) -> Result<InducedPathSummary> {
    let t = counts.len() as f64;
    let stat = |n: usize| counts.iter().map(|c| c[n] as f64).collect::<Running>();
    let means: Vec<Estimate> = (1..=max_len)
        .map(|n| {
            let s = stat(n);
            Estimate::new(s.mean(), s.stderr())
        })
        .collect();
    let ratios = (1..max_len)
        .map(|n| {
            let (lo, hi) = (stat(n), stat(n + 1));
            if lo.mean() == 0.0 {
                return Estimate::new(f64::NAN, f64::NAN);
            }
            let ratio = hi.mean() / lo.mean();
            let cov = counts
                .iter()
                .map(|c| (c[n] as f64 - lo.mean()) * (c[n + 1] as f64 - hi.mean()))
                .sum::<f64>()
                / (t - 1.0).max(1.0);
            let var = (hi.variance() + ratio * ratio * lo.variance() - 2.0 * ratio * cov)
                / (lo.mean() * lo.mean() * t);
            Estimate::new(ratio, var.max(0.0).sqrt())
        })
        .collect();
    Ok(InducedPathSummary { means, ratios })
}
