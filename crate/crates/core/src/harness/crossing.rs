use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Norm};
use crate::graph::{build_graph, cluster_stats};
use crate::pointfield::{Box2, PointField};
use crate::rng::derive_seed;
use crate::stats::Frequency;

/// One simulated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub area: f64,
    pub eps: f64,
    pub norm: Norm,
    /// Box side in units of `r`.
    pub l_over_r: f64,
    pub n_points: usize,
    pub largest_fraction: f64,
    pub crossing_lr: bool,
    pub mean_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub area: f64,
    pub eps: f64,
    pub norm: Norm,
    pub l_over_r: f64,
    pub frequency: Frequency,
}

/// Left-right crossing frequency of `G_A` in a hard `L x L` box at
/// intensity 1, with `L = l_over_r * r` and edge margin `r`. Trial `t`
/// samples its field from seed `(master, label, t)`.
pub fn crossing_trials(
    a: &Annulus<f64>,
    l_over_r: f64,
    trials: usize,
    master_seed: u64,
    label: &str,
) -> Result<Vec<TrialRow>> {
    if !(l_over_r >= 10.0) {
        return Err(Error::InvalidParameter {
            name: "L/r",
            reason: format!("box must be at least 10r wide, got {l_over_r}"),
        });
    }
    let side = l_over_r * a.r();
    let bx = Box2::square(side)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master_seed, label, t as u64);
            let field = PointField::sample_poisson(bx, 1.0, a.euclidean_reach(), seed)?;
            let g = build_graph(&field, a);
            let stats = cluster_stats(&g, a.r())?;
            Ok(TrialRow {
                seed,
                area: a.area(),
                eps: a.eps(),
                norm: a.norm(),
                l_over_r,
                n_points: stats.n_points,
                largest_fraction: stats.largest_fraction,
                crossing_lr: stats.crossing_lr,
                mean_degree: stats.mean_degree,
            })
        })
        .collect()
}

pub fn crossing_probability(
    a: &Annulus<f64>,
    l_over_r: f64,
    trials: usize,
    master_seed: u64,
    label: &str,
) -> Result<CrossingEstimate> {
    let rows = crossing_trials(a, l_over_r, trials, master_seed, label)?;
    Ok(summarize(a, l_over_r, &rows))
}

pub(crate) fn summarize(a: &Annulus<f64>, l_over_r: f64, rows: &[TrialRow]) -> CrossingEstimate {
    let hits = rows.iter().filter(|r| r.crossing_lr).count() as u64;
    CrossingEstimate {
        area: a.area(),
        eps: a.eps(),
        norm: a.norm(),
        l_over_r,
        frequency: Frequency::new(hits, rows.len() as u64),
    }
}
