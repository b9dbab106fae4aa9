use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step_variance;
use crate::error::{Error, Result};
use crate::geometry::{sample_in_annulus, Annulus, Norm, Vec2};
use crate::rng::{derive_seed, from_seed};
use crate::stats::{Estimate, Frequency, Running};

/// Branching random walk with Poisson(1 + eta) offspring, steps uniform in
/// the annulus, at most `cap` nodes per generation.
///
/// With a nonzero `tilt` the steps are drawn from the exponentially tilted
/// law `q(s) ∝ exp(tilt · s)` on the annulus and every node carries the log
/// likelihood ratio of its ancestry, so weighted indicators stay unbiased.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub annulus: Annulus<f64>,
    pub eta: f64,
    pub cap: u64,
    pub horizon: u64,
    pub z0: Vec2<f64>,
    /// Block half-scale `R`.
    pub block: f64,
    pub tilt: Vec2<f64>,
    pub record: bool,
}

impl SpatialConfig {
    /// `T = (R/r)^2`, no tilt, root at the origin.
    pub fn new(annulus: Annulus<f64>, eta: f64, cap: u64, block: f64) -> Self {
        let ratio = block / annulus.r();
        Self {
            annulus,
            eta,
            cap,
            horizon: (ratio * ratio).round() as u64,
            z0: Vec2::zero(),
            block,
            tilt: Vec2::zero(),
            record: false,
        }
    }

    pub fn target_center(&self) -> Vec2<f64> {
        Vec2::new(0.0, 6.0 * self.block)
    }

    /// `(0, 6R) + [-R, R]^2`.
    pub fn in_target(&self, p: Vec2<f64>) -> bool {
        (p - self.target_center()).norm_inf() <= self.block
    }

    /// `[-3R + r, 3R - r] x [-3R + r, 9R - r]`.
    pub fn in_safe(&self, p: Vec2<f64>) -> bool {
        let (big, r) = (self.block, self.annulus.r());
        p.x.abs() <= 3.0 * big - r && p.y >= -3.0 * big + r && p.y <= 9.0 * big - r
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta >= -1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("offspring mean must be >= 0, got eta = {}", self.eta),
            });
        }
        if !(self.block > 0.0) {
            return Err(Error::InvalidParameter {
                name: "R",
                reason: format!("block scale must be positive, got {}", self.block),
            });
        }
        if self.z0.norm_inf() > 2.0 * self.block {
            return Err(Error::InvalidParameter {
                name: "z0",
                reason: format!("root {:?} outside [-2R, 2R]^2", self.z0),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialNode {
    pub position: Vec2<f64>,
    /// Index into the previous generation; `None` for the root.
    pub parent: Option<usize>,
    pub birth: u64,
}

/// Every generation of a recorded run, after truncation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialTree {
    pub generations: Vec<Vec<SpatialNode>>,
}

impl SpatialTree {
    /// Positions from the root down to node `idx` of the last generation.
    pub fn ancestry(&self, idx: usize) -> Vec<Vec2<f64>> {
        let mut out = Vec::with_capacity(self.generations.len());
        let mut cur = Some(idx);
        for gen in self.generations.iter().rev() {
            let Some(i) = cur else { break };
            out.push(gen[i].position);
            cur = gen[i].parent;
        }
        out.reverse();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialOutcome {
    pub survived: bool,
    pub event: bool,
    /// Log likelihood ratio of the chosen node's ancestry (0 without tilt).
    pub log_weight: f64,
    pub final_population: u64,
    /// Index of the uniformly chosen node in the last generation.
    pub chosen: Option<usize>,
    pub tree: Option<SpatialTree>,
}

impl SpatialOutcome {
    pub fn weighted_event(&self) -> f64 {
        if self.event {
            self.log_weight.exp()
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy)]
struct Walker {
    pos: Vec2<f64>,
    safe: bool,
    log_w: f64,
    parent: usize,
}

/// Tilted step sampler: rejection from the uniform law with acceptance
/// `exp(theta · s - max_A theta · s)`.
struct TiltedSteps {
    annulus: Annulus<f64>,
    theta: Vec2<f64>,
    reach: f64,
    log_z: f64,
}

impl TiltedSteps {
    fn new(annulus: Annulus<f64>, theta: Vec2<f64>) -> Self {
        let r = annulus.r();
        let reach = match annulus.norm() {
            Norm::Round => theta.norm() * r,
            Norm::Square => (theta.x.abs() + theta.y.abs()) * r,
        };
        Self {
            annulus,
            theta,
            reach,
            log_z: log_mgf(&annulus, theta),
        }
    }

    fn is_flat(&self) -> bool {
        self.theta.x == 0.0 && self.theta.y == 0.0
    }

    /// Returns the step and its log likelihood ratio `log p(s)/q(s)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec2<f64>, f64) {
        if self.is_flat() {
            return (sample_in_annulus(&self.annulus, rng), 0.0);
        }
        loop {
            let s = sample_in_annulus(&self.annulus, rng);
            let dot = self.theta.x * s.x + self.theta.y * s.y;
            if rng.random::<f64>() < (dot - self.reach).exp() {
                return (s, self.log_z - dot);
            }
        }
    }
}

fn bessel_i1(x: f64) -> f64 {
    let h = x / 2.0;
    let h2 = h * h;
    let mut term = h;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= h2 / (k * (k + 1.0));
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
    }
}

/// `log E[exp(theta · s)]` for `s` uniform in the annulus.
pub(crate) fn log_mgf(a: &Annulus<f64>, theta: Vec2<f64>) -> f64 {
    let (r, inner) = (a.r(), a.inner());
    match a.norm() {
        Norm::Round => {
            let t = theta.norm();
            if t == 0.0 {
                return 0.0;
            }
            // ∫ rho I0(t rho) drho = rho I1(t rho) / t
            let prim = |rho: f64| {
                if rho == 0.0 {
                    0.0
                } else {
                    rho * bessel_i1(t * rho)
                }
            };
            (2.0 * (prim(r) - prim(inner)) / (t * (r * r - inner * inner))).ln()
        }
        Norm::Square => {
            // ∫_{[-h,h]} e^{t x} dx, with the t = 0 limit
            let side = |t: f64, h: f64| {
                if t == 0.0 {
                    2.0 * h
                } else {
                    2.0 * (t * h).sinh() / t
                }
            };
            let full = side(theta.x, r) * side(theta.y, r);
            let hole = side(theta.x, inner) * side(theta.y, inner);
            ((full - hole) / a.area()).ln()
        }
    }
}

/// Tilt aimed at the point of the target square nearest the root: the
/// tilted mean step is exactly `(p - z0) / T`, found by bisection on the
/// directional derivative of the log moment generating function. Aiming at
/// the nearest point rather than the centre keeps the likelihood ratio
/// bounded on the event.
pub fn tilt_for_target(cfg: &SpatialConfig) -> Vec2<f64> {
    let c = cfg.target_center();
    let b = cfg.block;
    let near = Vec2::new(
        cfg.z0.x.clamp(c.x - b, c.x + b),
        cfg.z0.y.clamp(c.y - b, c.y + b),
    );
    let d = near - cfg.z0;
    let len = d.norm();
    if len == 0.0 || cfg.horizon == 0 {
        return Vec2::zero();
    }
    let dir = d * (1.0 / len);
    let want = len / cfg.horizon as f64;
    if want >= cfg.annulus.r() {
        return dir * (1.0 / step_variance(&cfg.annulus)) * want;
    }
    let slope = |t: f64| {
        let h = 1e-5 * t.max(1e-3);
        (log_mgf(&cfg.annulus, dir * (t + h)) - log_mgf(&cfg.annulus, dir * (t - h))) / (2.0 * h)
    };
    let (mut lo, mut hi) = (0.0, want / step_variance(&cfg.annulus));
    while slope(hi) < want {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dir * (0.5 * (lo + hi))
}

/// Run one spatial branching walk. Truncation keeps a uniformly random
/// subset of `cap` children, independent of their positions.
pub fn spatial_branching_run<R: Rng + ?Sized>(
    cfg: &SpatialConfig,
    rng: &mut R,
) -> Result<SpatialOutcome> {
    cfg.validate()?;
    let steps = TiltedSteps::new(cfg.annulus, cfg.tilt);
    let offspring =
        (1.0 + cfg.eta > 0.0).then(|| Poisson::new(1.0 + cfg.eta).expect("positive mean"));
    let mut tree = cfg.record.then(SpatialTree::default);
    let root = Walker {
        pos: cfg.z0,
        safe: cfg.in_safe(cfg.z0),
        log_w: 0.0,
        parent: usize::MAX,
    };
    let mut current = if cfg.cap == 0 { Vec::new() } else { vec![root] };
    if let Some(t) = tree.as_mut() {
        t.generations.push(
            current
                .iter()
                .map(|w| SpatialNode {
                    position: w.pos,
                    parent: None,
                    birth: 0,
                })
                .collect(),
        );
    }
    let mut next: Vec<Walker> = Vec::new();
    for gen in 1..=cfg.horizon {
        if current.is_empty() {
            break;
        }
        next.clear();
        if let Some(dist) = &offspring {
            for (pi, w) in current.iter().enumerate() {
                let kids = dist.sample(rng) as usize;
                for _ in 0..kids {
                    let (s, lw) = steps.draw(rng);
                    let pos = w.pos + s;
                    next.push(Walker {
                        pos,
                        safe: w.safe && cfg.in_safe(pos),
                        log_w: w.log_w + lw,
                        parent: pi,
                    });
                }
            }
        }
        if next.len() as u64 > cfg.cap {
            let mut keep: Vec<usize> = sample_indices(rng, next.len(), cfg.cap as usize).into_vec();
            keep.sort_unstable();
            let kept: Vec<Walker> = keep.iter().map(|&i| next[i]).collect();
            next = kept;
        }
        std::mem::swap(&mut current, &mut next);
        if let Some(t) = tree.as_mut() {
            t.generations.push(
                current
                    .iter()
                    .map(|w| SpatialNode {
                        position: w.pos,
                        parent: Some(w.parent),
                        birth: gen,
                    })
                    .collect(),
            );
        }
    }
    let survived = !current.is_empty();
    let (event, log_weight, chosen) = if survived {
        let i = rng.random_range(0..current.len());
        let w = current[i];
        (w.safe && cfg.in_target(w.pos), w.log_w, Some(i))
    } else {
        (false, 0.0, None)
    };
    Ok(SpatialOutcome {
        survived,
        event,
        log_weight,
        final_population: current.len() as u64,
        chosen,
        tree,
    })
}

/// `P(E | survival)` estimated from independent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub runs: u64,
    pub survival: Frequency,
    /// Unweighted frequency of the event among surviving runs, under the
    /// sampling law (the tilted one when `tilt` is nonzero).
    pub naive: Frequency,
    /// Likelihood-ratio weighted mean among surviving runs.
    pub weighted: Estimate,
}

/// Run batches until `surviving` runs have survived; run `i` uses stream
/// `(master, label, i)`, so the result does not depend on thread count.
pub fn estimate_event(
    cfg: &SpatialConfig,
    surviving: u64,
    master_seed: u64,
    label: &str,
) -> Result<EventEstimate> {
    cfg.validate()?;
    if cfg.cap == 0 || 1.0 + cfg.eta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: "process can never survive".into(),
        });
    }
    let batch = 1024u64;
    let mut next = 0u64;
    let mut outcomes: Vec<SpatialOutcome> = Vec::new();
    let mut alive = 0u64;
    while alive < surviving {
        let chunk: Vec<SpatialOutcome> = (next..next + batch)
            .into_par_iter()
            .map(|i| spatial_branching_run(cfg, &mut from_seed(derive_seed(master_seed, label, i))))
            .collect::<Result<_>>()?;
        next += batch;
        for o in chunk {
            if alive < surviving {
                alive += o.survived as u64;
                outcomes.push(o);
            }
        }
    }
    let runs = outcomes.len() as u64;
    let surv: Vec<&SpatialOutcome> = outcomes.iter().filter(|o| o.survived).collect();
    let hits = surv.iter().filter(|o| o.event).count() as u64;
    let acc: Running = surv.iter().map(|o| o.weighted_event()).collect();
    Ok(EventEstimate {
        runs,
        survival: Frequency::new(alive, runs),
        naive: Frequency::new(hits, alive),
        weighted: Estimate::new(acc.mean(), acc.stderr()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Annulus;

    fn base() -> SpatialConfig {
        SpatialConfig::new(Annulus::round(1.0, 0.5).unwrap(), 0.1, 40, 4.0)
    }

    #[test]
    fn cap_zero_never_survives() {
        let mut cfg = base();
        cfg.cap = 0;
        let mut rng = from_seed(1);
        for _ in 0..50 {
            assert!(!spatial_branching_run(&cfg, &mut rng).unwrap().survived);
        }
    }

    #[test]
    fn ancestry_increments_lie_in_the_annulus() {
        let mut cfg = base();
        cfg.record = true;
        cfg.eta = 1.0;
        let mut rng = from_seed(2);
        let mut checked = 0;
        for _ in 0..20 {
            let out = spatial_branching_run(&cfg, &mut rng).unwrap();
            let tree = out.tree.as_ref().unwrap();
            if out.survived {
                assert_eq!(tree.generations.len() as u64, cfg.horizon + 1);
            }
            for (g, gen) in tree.generations.iter().enumerate().skip(1) {
                assert!(gen.len() as u64 <= cfg.cap);
                for node in gen {
                    let parent = tree.generations[g - 1][node.parent.unwrap()].position;
                    assert!(cfg.annulus.contains(node.position - parent));
                    assert_eq!(node.birth, g as u64);
                }
            }
            if let Some(i) = out.chosen {
                let path = tree.ancestry(i);
                assert_eq!(path[0], cfg.z0);
                assert_eq!(path.len() as u64, cfg.horizon + 1);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn log_mgf_matches_quadrature_by_sampling() {
        let mut rng = from_seed(3);
        for a in [
            Annulus::round(1.0, 0.3).unwrap(),
            Annulus::square(0.7, 0.5).unwrap(),
        ] {
            let theta = Vec2::new(0.4f64, -1.1);
            let acc: Running = (0..400_000)
                .map(|_| {
                    let s = sample_in_annulus(&a, &mut rng);
                    (theta.x * s.x + theta.y * s.y).exp()
                })
                .collect();
            let z = log_mgf(&a, theta).exp();
            assert!(
                (acc.mean() - z).abs() < 3.0 * acc.stderr(),
                "{a:?}: {} vs {z}",
                acc.mean()
            );
        }
        assert_eq!(
            log_mgf(&Annulus::round(1.0, 0.3).unwrap(), Vec2::zero()),
            0.0
        );
    }

    #[test]
    fn tilted_estimator_is_unbiased_for_a_moderate_event() {
        // pure random walk (cap 1, no deaths at huge eta) over a short horizon
        let mut cfg = SpatialConfig::new(Annulus::round(1.0, 0.5).unwrap(), 30.0, 1, 1.0);
        cfg.horizon = 12;
        cfg.z0 = Vec2::new(0.0, 2.0);
        let plain = estimate_event(&cfg, 200_000, 4, "plain").unwrap();
        cfg.tilt = tilt_for_target(&cfg);
        let tilted = estimate_event(&cfg, 50_000, 5, "tilt").unwrap();
        let diff = (plain.naive.value - tilted.weighted.value).abs();
        let sigma = plain.naive.stderr.hypot(tilted.weighted.stderr);
        assert!(plain.naive.value > 0.0);
        assert!(diff < 3.0 * sigma, "{plain:?} vs {tilted:?}");
        assert!(tilted.weighted.stderr < plain.naive.stderr);
    }

    #[test]
    fn rejects_roots_outside_the_middle_square() {
        let mut cfg = base();
        cfg.z0 = Vec2::new(0.0, 2.5 * cfg.block);
        assert!(spatial_branching_run(&cfg, &mut from_seed(0)).is_err());
    }
}
