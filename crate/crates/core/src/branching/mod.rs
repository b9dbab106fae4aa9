//! Galton–Watson processes with Poisson(1 + eta) offspring: plain, truncated
//! at `K` nodes per generation, and the spatial branching walk whose steps
//! are uniform in the annulus.

mod spatial;

pub use spatial::{
    estimate_event, spatial_branching_run, tilt_for_target, EventEstimate, SpatialConfig,
    SpatialNode, SpatialOutcome, SpatialTree,
};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Norm};
use crate::pointfield::sample_poisson_count;
use crate::rng::{derive_seed, from_seed};
use crate::scalar::Scalar;
use crate::stats::{Estimate, Frequency, Running};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwConfig {
    /// Offspring mean is `1 + eta`; requires `eta >= -1`.
    pub eta: f64,
    /// At most this many nodes survive each generation; `None` is untruncated.
    pub cap: Option<u64>,
    /// Number of generations `T`.
    pub horizon: u64,
    /// Use one Poisson(N_t (1 + eta)) draw per generation instead of one per node.
    pub count_only: bool,
    pub initial: u64,
}

impl GwConfig {
    pub fn new(eta: f64, horizon: u64) -> Self {
        Self {
            eta,
            cap: None,
            horizon,
            count_only: true,
            initial: 1,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn node_by_node(mut self) -> Self {
        self.count_only = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta >= -1.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!(
                    "offspring mean 1 + eta must be >= 0, got eta = {}",
                    self.eta
                ),
            });
        }
        if self.cap == Some(0) {
            return Err(Error::InvalidParameter {
                name: "K",
                reason: "cap must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GwTrace {
    /// `N_0, ..., N_T`.
    pub populations: Vec<u64>,
    pub survived: bool,
    /// `N_T >= (1 + eta)^T`.
    pub hit_target: bool,
}

/// Run one Galton–Watson process.
///
/// In node-by-node mode every node draws its own offspring count and, when a
/// generation exceeds the cap, a uniformly random subset of `K` children is
/// kept. Count-only mode uses the superposition shortcut and `min(N', K)`,
/// which has the same law for the counts.
pub fn gw_run<R: Rng + ?Sized>(cfg: &GwConfig, rng: &mut R) -> Result<GwTrace> {
    cfg.validate()?;
    let mean = 1.0 + cfg.eta;
    let per_node = (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean"));
    let mut populations = Vec::with_capacity(cfg.horizon as usize + 1);
    let mut n = cfg.initial;
    populations.push(n);
    for _ in 0..cfg.horizon {
        if n > 0 {
            n = if cfg.count_only {
                let next = sample_poisson_count(n as f64 * mean, rng);
                cfg.cap.map_or(next, |k| next.min(k))
            } else {
                // parent id of every child, in birth order
                let mut children: Vec<u64> = Vec::new();
                if let Some(dist) = &per_node {
                    for parent in 0..n {
                        let kids = dist.sample(rng) as u64;
                        children.extend(std::iter::repeat_n(parent, kids as usize));
                    }
                }
                match cfg.cap {
                    Some(k) if children.len() as u64 > k => {
                        let keep = sample_indices(rng, children.len(), k as usize);
                        keep.len() as u64
                    }
                    _ => children.len() as u64,
                }
            };
        }
        populations.push(n);
    }
    let last = *populations.last().expect("initial generation present");
    Ok(GwTrace {
        survived: last > 0,
        hit_target: last as f64 >= mean.powi(cfg.horizon as i32),
        populations,
    })
}

/// Run `runs` independent processes; run `i` uses stream `(master, label, i)`.
pub fn gw_batch(
    cfg: &GwConfig,
    runs: usize,
    master_seed: u64,
    label: &str,
) -> Result<Vec<GwTrace>> {
    cfg.validate()?;
    (0..runs)
        .into_par_iter()
        .map(|i| {
            gw_run(
                cfg,
                &mut from_seed(derive_seed(master_seed, label, i as u64)),
            )
        })
        .collect()
}

/// The positive root of `(1 - e^{-lambda})(1 + eta) = lambda`, by bisection
/// on `(0, 1 + eta]`.
pub fn solve_lambda<S: Scalar>(eta: S) -> Result<S> {
    if !(eta > S::zero()) || !eta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: format!("lambda needs eta > 0, got {eta}"),
        });
    }
    let mean = S::one() + eta;
    let f = |l: S| -(-l).exp_m1() * mean - l;
    let (mut lo, mut hi) = (S::zero(), mean);
    for _ in 0..400 {
        let mid = (lo + hi) / S::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / S::lit(2.0))
}

/// `|(1 - e^{-lambda})(1 + eta) - lambda|`.
pub fn lambda_residual(eta: f64, lambda: f64) -> f64 {
    (-(-lambda).exp_m1() * (1.0 + eta) - lambda).abs()
}

/// `e^{-lambda} + T e^{-lambda K}`, the bound on extinction by time `T`.
pub fn extinction_upper_bound(eta: f64, cap: u64, horizon: u64) -> Result<f64> {
    let lambda = solve_lambda(eta)?;
    Ok((-lambda).exp() + horizon as f64 * (-lambda * cap as f64).exp())
}

/// Largest horizon covered by the truncated survival bound: `e^{eta K} eta / 3`.
pub fn horizon_limit(eta: f64, cap: u64) -> f64 {
    (eta * cap as f64).exp() * eta / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub survival: Frequency,
    pub horizon_limit: f64,
    pub within_limit: bool,
}

/// Survival frequency at time `T` of the process truncated at `K` nodes.
///
/// Refuses horizons beyond `e^{eta K} eta / 3` unless `allow_long` is set.
pub fn truncated_survival(
    eta: f64,
    cap: u64,
    horizon: u64,
    runs: usize,
    master_seed: u64,
    allow_long: bool,
) -> Result<SurvivalEstimate> {
    let limit = horizon_limit(eta, cap);
    let within = horizon as f64 <= limit;
    if !within && !allow_long {
        return Err(Error::HorizonTooLong { horizon, limit });
    }
    let cfg = GwConfig::new(eta, horizon).with_cap(cap);
    let survived = gw_batch(&cfg, runs, master_seed, "truncated")?
        .iter()
        .filter(|t| t.survived)
        .count();
    Ok(SurvivalEstimate {
        survival: Frequency::new(survived as u64, runs as u64),
        horizon_limit: limit,
        within_limit: within,
    })
}

/// Monte Carlo `E[exp(-lambda N') | N_t = n]` for one untruncated step.
pub fn exp_moment_given<R: Rng + ?Sized>(
    n: u64,
    eta: f64,
    lambda: f64,
    samples: usize,
    rng: &mut R,
) -> Estimate {
    let acc: Running = (0..samples)
        .map(|_| (-lambda * sample_poisson_count(n as f64 * (1.0 + eta), rng) as f64).exp())
        .collect();
    Estimate::new(acc.mean(), acc.stderr())
}

/// Per-coordinate variance of a uniform step in the annulus:
/// `r^2 (1 + (1-eps)^2) / 4` (round), `r^2 (1 + (1-eps)^2) / 3` (square).
pub fn step_variance<S: Scalar>(a: &Annulus<S>) -> S {
    let q = S::one() - a.eps();
    let second = a.r() * a.r() * (S::one() + q * q);
    match a.norm() {
        Norm::Round => second / S::lit(4.0),
        Norm::Square => second / S::lit(3.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_in_annulus;

    fn stats(cfg: &GwConfig, runs: usize, seed: u64, t: usize) -> Running {
        gw_batch(cfg, runs, seed, "test")
            .unwrap()
            .iter()
            .map(|tr| tr.populations[t] as f64)
            .collect()
    }

    #[test]
    fn zero_mean_dies_immediately() {
        let cfg = GwConfig::new(-1.0, 5);
        for tr in gw_batch(&cfg, 100, 1, "z").unwrap() {
            assert_eq!(tr.populations[1], 0);
            assert!(!tr.survived);
        }
        let nodes = GwConfig::new(-1.0, 5).node_by_node();
        assert_eq!(gw_run(&nodes, &mut from_seed(0)).unwrap().populations[1], 0);
    }

    #[test]
    fn extinction_is_absorbing() {
        for tr in gw_batch(&GwConfig::new(0.2, 30).with_cap(10), 500, 3, "abs").unwrap() {
            assert_eq!(tr.populations[0], 1);
            for w in tr.populations.windows(2) {
                if w[0] == 0 {
                    assert_eq!(w[1], 0);
                }
                assert!(w[1] <= 10);
            }
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let s = stats(&GwConfig::new(1.0, 2), 100_000, 7, 2);
        assert!(
            (s.mean() - 4.0).abs() < 3.0 * s.stderr(),
            "mean {}",
            s.mean()
        );
        // Var N_2 = 2^2 (2^2 - 1) / 1 = 12
        assert!(
            (s.variance() - 12.0).abs() < 0.05 * 12.0,
            "var {}",
            s.variance()
        );
    }

    #[test]
    fn extinction_probability_monotone() {
        let eta = 0.3;
        let traces = gw_batch(&GwConfig::new(eta, 15), 20_000, 8, "mono").unwrap();
        let n = traces.len() as f64;
        let dead: Vec<f64> = (0..=15)
            .map(|t| traces.iter().filter(|tr| tr.populations[t] == 0).count() as f64 / n)
            .collect();
        for w in dead.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let p1 = (-(1.0 + eta)).exp();
        let sigma = (p1 * (1.0 - p1) / n).sqrt();
        assert!(dead[1] >= p1 - 3.0 * sigma);
    }

    #[test]
    fn lambda_root() {
        assert!(solve_lambda(0.0).is_err());
        assert!(solve_lambda(-0.5).is_err());
        let l = solve_lambda(0.1f64).unwrap();
        assert!(lambda_residual(0.1, l) < 1e-12);
        assert!((l - 0.1931).abs() < 1e-3, "{l}");
        for eta in [0.01, 0.1, 0.5] {
            assert!(solve_lambda(eta).unwrap() > eta);
        }
        assert!(solve_lambda(1e-9f64).unwrap() < 1e-8);
        let l32 = solve_lambda(0.1f32).unwrap();
        assert!((l32 as f64 - l).abs() < 1e-5);
    }

    #[test]
    fn martingale_identity() {
        let eta = 0.2;
        let lambda = solve_lambda(eta).unwrap();
        let mut rng = from_seed(10);
        for n in [1u64, 5, 20] {
            let e = exp_moment_given(n, eta, lambda, 200_000, &mut rng);
            let target = (-lambda * n as f64).exp();
            assert!(
                (e.value - target).abs() < 3.0 * e.stderr + 1e-12,
                "n={n}: {e:?} vs {target}"
            );
        }
    }

    #[test]
    fn count_only_matches_node_by_node() {
        // two-sample Kolmogorov–Smirnov on N_T
        let base = GwConfig::new(0.2, 10).with_cap(50);
        let mut a: Vec<u64> = gw_batch(&base, 10_000, 21, "ks")
            .unwrap()
            .iter()
            .map(|t| t.populations[10])
            .collect();
        let mut b: Vec<u64> = gw_batch(&base.node_by_node(), 10_000, 22, "ks")
            .unwrap()
            .iter()
            .map(|t| t.populations[10])
            .collect();
        a.sort_unstable();
        b.sort_unstable();
        let n = a.len() as f64;
        let mut d: f64 = 0.0;
        for v in 0..=50u64 {
            let fa = a.partition_point(|&x| x <= v) as f64 / n;
            let fb = b.partition_point(|&x| x <= v) as f64 / n;
            d = d.max((fa - fb).abs());
        }
        // 0.1% critical value for equal sample sizes: 1.95 sqrt(2 / n)
        assert!(d < 1.95 * (2.0 / n).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn single_node_chain_under_cap_one() {
        let eta = 2.0;
        let horizon = 6;
        let runs = 20_000;
        let got = truncated_survival(eta, 1, horizon, runs, 4, true).unwrap();
        let expected = (1.0 - (-(1.0 + eta)).exp()).powi(horizon as i32);
        assert!((got.survival.value - expected).abs() < 3.0 * got.survival.stderr.max(1e-3));
        assert!(!got.within_limit);
        assert!(matches!(
            truncated_survival(eta, 1, horizon, 10, 4, false),
            Err(Error::HorizonTooLong { .. })
        ));
    }

    #[test]
    fn step_variance_matches_sampling() {
        let mut rng = from_seed(6);
        for (norm, eps) in [
            (Norm::Round, 1.0),
            (Norm::Round, 0.5),
            (Norm::Round, 0.01),
            (Norm::Square, 0.3),
        ] {
            let a = Annulus::new(norm, 1.3, eps).unwrap();
            let (mut xs, mut ys, mut x2) = (Running::new(), Running::new(), Running::new());
            for _ in 0..1_000_000 {
                let s = sample_in_annulus(&a, &mut rng);
                xs.push(s.x);
                ys.push(s.y);
                x2.push(s.x * s.x);
            }
            let v = step_variance(&a);
            assert!(
                (x2.mean() - v).abs() < 3.0 * x2.stderr(),
                "{norm:?} {eps}: {} vs {v}",
                x2.mean()
            );
            assert!(xs.mean().abs() < 3.0 * xs.stderr());
            assert!(ys.mean().abs() < 3.0 * ys.stderr());
        }
        let disk = Annulus::<f64>::round(2.0, 1.0).unwrap();
        assert!((step_variance(&disk) - 1.0).abs() < 1e-15);
        let thin = Annulus::<f64>::round(2.0, 1e-9).unwrap();
        assert!((step_variance(&thin) - 2.0).abs() < 1e-8);
    }
}
