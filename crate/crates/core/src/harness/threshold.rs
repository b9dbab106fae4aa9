use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::crossing::crossing_probability;
use crate::error::{Error, Result};
use crate::geometry::{Annulus, Norm};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub area: f64,
    pub trials: u64,
    pub successes: u64,
}

impl Probe {
    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub eps: f64,
    pub norm: Norm,
    pub l_over_r: f64,
    pub trials: usize,
    pub nc_hat: f64,
    /// 95% parametric-bootstrap interval.
    pub ci: (f64, f64),
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Every probe, sorted by area.
    pub probes: Vec<Probe>,
}

impl ThresholdEstimate {
    pub fn ci_width(&self) -> f64 {
        self.ci.1 - self.ci.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcRequest {
    pub eps: f64,
    pub norm: Norm,
    pub l_over_r: f64,
    pub trials: usize,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub bootstrap: usize,
}

impl NcRequest {
    pub fn new(eps: f64, norm: Norm, l_over_r: f64, trials: usize, bracket: (f64, f64)) -> Self {
        Self {
            eps,
            norm,
            l_over_r,
            trials,
            bracket,
            tol: 0.01,
            bootstrap: 1000,
        }
    }
}

/// Weighted pool-adjacent-violators fit of a non-decreasing curve.
pub fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new(); // (mean, weight, len)
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((m1 * w1 + m2 * w2) / w, w, l1 + l2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

/// Area where the isotonic fit of the probe curve crosses 1/2, by linear
/// interpolation between neighbouring probes. Probes must be sorted.
pub fn half_crossing(probes: &[Probe]) -> Option<f64> {
    let freq: Vec<f64> = probes.iter().map(Probe::frequency).collect();
    let w: Vec<f64> = probes.iter().map(|p| p.trials as f64).collect();
    let fit = isotonic(&freq, &w);
    for k in 1..probes.len() {
        let (f0, f1) = (fit[k - 1], fit[k]);
        if f0 < 0.5 && f1 >= 0.5 {
            let (a0, a1) = (probes[k - 1].area, probes[k].area);
            return Some(a0 + (0.5 - f0) / (f1 - f0) * (a1 - a0));
        }
    }
    None
}

fn probe<F: FnMut(f64) -> Result<Probe>>(
    probes: &mut Vec<Probe>,
    area: f64,
    run: &mut F,
) -> Result<f64> {
    let p = run(area)?;
    probes.push(p);
    Ok(p.frequency())
}

/// Bisection on `|A|` for the 0.5 left-right crossing point at fixed `L/r`.
///
/// Probe `k` uses the stream label `nc:<norm>:<eps>:<k>` so every probe has
/// its own fields. `nc_hat` is where the isotonic fit of all probes crosses
/// 1/2; the interval comes from refitting binomial resamples of the probes.
pub fn estimate_nc(req: &NcRequest, master_seed: u64) -> Result<ThresholdEstimate> {
    let (lo0, hi0) = req.bracket;
    let label = |k: usize| format!("nc:{}:{}:{}", req.norm.name(), req.eps, k);
    let mut k = 0usize;
    let mut run = |area: f64| -> Result<Probe> {
        let a = Annulus::with_area(req.norm, req.eps, area)?;
        let est = crossing_probability(&a, req.l_over_r, req.trials, master_seed, &label(k))?;
        k += 1;
        Ok(Probe {
            area,
            trials: est.frequency.trials,
            successes: est.frequency.successes,
        })
    };
    let mut probes = Vec::new();
    let f_lo = probe(&mut probes, lo0, &mut run)?;
    let f_hi = probe(&mut probes, hi0, &mut run)?;
    if !(lo0 < hi0) || f_lo >= 0.5 || f_hi <= 0.5 {
        return Err(Error::InvalidBracket {
            lo: lo0,
            hi: hi0,
            f_lo,
            f_hi,
        });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > req.tol {
        let mid = 0.5 * (lo + hi);
        if probe(&mut probes, mid, &mut run)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    probes.sort_by(|a, b| a.area.total_cmp(&b.area));
    let nc_hat = half_crossing(&probes).unwrap_or(0.5 * (lo + hi));

    let mut rng = stream(
        master_seed,
        &format!("nc-bootstrap:{}:{}", req.norm.name(), req.eps),
        0,
    );
    let mut boot: Vec<f64> = (0..req.bootstrap)
        .map(|_| {
            let resampled: Vec<Probe> = probes
                .iter()
                .map(|p| Probe {
                    successes: resample(p, &mut rng),
                    ..*p
                })
                .collect();
            half_crossing(&resampled).unwrap_or(nc_hat)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let ci = if boot.is_empty() {
        (nc_hat, nc_hat)
    } else {
        let q = |f: f64| boot[((boot.len() - 1) as f64 * f).round() as usize];
        (q(0.025).min(nc_hat), q(0.975).max(nc_hat))
    };
    Ok(ThresholdEstimate {
        eps: req.eps,
        norm: req.norm,
        l_over_r: req.l_over_r,
        trials: req.trials,
        nc_hat,
        ci,
        bracket: (lo, hi),
        probes,
    })
}

fn resample<R: Rng + ?Sized>(p: &Probe, rng: &mut R) -> u64 {
    let f = p.frequency();
    if f <= 0.0 || f >= 1.0 {
        return p.successes;
    }
    Binomial::new(p.trials, f)
        .expect("valid binomial")
        .sample(rng)
}

/// Largest drop of the probe curve below its isotonic fit, in binomial
/// standard errors (0 for a monotone curve).
pub fn monotonicity_defect(probes: &[Probe]) -> f64 {
    let freq: Vec<f64> = probes.iter().map(Probe::frequency).collect();
    let w: Vec<f64> = probes.iter().map(|p| p.trials as f64).collect();
    let fit = isotonic(&freq, &w);
    probes
        .iter()
        .zip(fit)
        .map(|(p, f)| {
            let se = (f * (1.0 - f) / p.trials as f64)
                .sqrt()
                .max(0.5 / p.trials as f64);
            (p.frequency() - f).abs() / se
        })
        .fold(0.0, f64::max)
}
