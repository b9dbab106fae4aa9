use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::branching::{
    estimate_event, gw_batch, lambda_residual, solve_lambda, tilt_for_target, truncated_survival,
    EventEstimate, GwConfig, SpatialConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{
    cluster_overlap_area, interval_overlap_integral, lens_area, min_overlap_ratio,
    overlap_integral_mc, rigorous_square_bound, sup_overlap_scaled, three_step_functional, Annulus,
    Norm, Vec2,
};
use crate::renorm::{cap_for_horizon, min_ratio_for_growth, min_seed_count};
use crate::rng::stream;
use crate::stats::Running;

/// Every id accepted by [`lemma_check`], in report order.
pub const CHECK_IDS: [&str; 12] = [
    "lemma2",
    "lemma3",
    "lemma4",
    "lemma7",
    "lemma8",
    "lemma9",
    "lemma10",
    "lemma11",
    "thm5",
    "thm5-rigorous",
    "eq1-consistency",
    "eq6-worked",
];

/// Outcome of one named check. `slack` is positive exactly when the
/// statistic sits on the passing side of the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub id: String,
    pub statistic: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub detail: String,
}

impl LemmaReport {
    fn at_most(id: &str, statistic: f64, bound: f64, extra: bool, detail: String) -> Self {
        let slack = bound - statistic;
        Self {
            id: id.into(),
            statistic,
            bound,
            slack,
            pass: statistic <= bound && extra,
            detail,
        }
    }

    fn at_least(id: &str, statistic: f64, bound: f64, extra: bool, detail: String) -> Self {
        let slack = statistic - bound;
        Self {
            id: id.into(),
            statistic,
            bound,
            slack,
            pass: statistic >= bound && extra,
            detail,
        }
    }
}

fn scaled(full: usize, budget: f64) -> usize {
    ((full as f64 * budget).round() as usize).max(100)
}

/// Run the named check. `budget` scales every Monte Carlo sample count
/// (1.0 is the full size); the seed fixes all randomness.
pub fn lemma_check(id: &str, budget: f64, seed: u64) -> Result<LemmaReport> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidParameter {
            name: "budget",
            reason: format!("must be positive, got {budget}"),
        });
    }
    match id {
        "lemma2" => Ok(overlap_lower_bound()),
        "lemma3" => Ok(square_functional(scaled(1_000_000, budget), seed)),
        "lemma4" => Ok(interval_identity()),
        "lemma7" => growth_moments(scaled(100_000, budget), seed),
        "lemma8" => truncated_process(scaled(10_000, budget), seed),
        "lemma9" => {
            let s = event_stability(0.0, scaled(10_000, budget) as u64, seed)?;
            Ok(s.report("lemma9"))
        }
        "lemma10" => sup_overlap_scaling(),
        "lemma11" => cluster_overlap(100, scaled(1_000_000, budget), seed),
        "thm5" => Ok(square_overlap_integral(scaled(1_000_000, budget), seed)),
        "thm5-rigorous" => Ok(rigorous_square()),
        "eq1-consistency" => Ok(horizon_identity(seed)),
        "eq6-worked" => Ok(worked_parameters()),
        other => Err(Error::UnknownLemma(other.into())),
    }
}

fn overlap_lower_bound() -> LemmaReport {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for eps in [0.05, 0.1, 0.2, 0.4] {
        let a = Annulus::round(1.0, eps).expect("valid annulus");
        let m = min_overlap_ratio(&a, 512);
        let floor = eps / (std::f64::consts::PI * 3f64.sqrt());
        worst = worst.min(m.ratio - floor);
        parts.push(format!(
            "eps={eps}: min ratio {:.6} at d={:.6}, floor {floor:.6}",
            m.ratio, m.d
        ));
    }
    LemmaReport::at_least("lemma2", worst, -1e-9, true, parts.join("; "))
}

fn square_functional(samples: usize, seed: u64) -> LemmaReport {
    let a = Annulus::with_area(Norm::Square, 0.25, 1.014).expect("valid annulus");
    let f = three_step_functional(&a, samples, &mut stream(seed, "lemma3", 0));
    LemmaReport::at_most(
        "lemma3",
        f.value + 3.0 * f.stderr,
        1.0,
        true,
        format!(
            "square |A|=1.014 eps=0.25: functional {:.6} ± {:.2e} ({samples} samples)",
            f.value, f.stderr
        ),
    )
}

fn interval_identity() -> LemmaReport {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for c in [0.1, 1.0, 7.0] {
        let q = interval_overlap_integral(c);
        worst = worst.max(q.relative_error());
        parts.push(format!(
            "c={c}: closed {:.9} quadrature {:.9}",
            q.closed_form, q.quadrature
        ));
    }
    LemmaReport::at_most("lemma4", worst, 1e-6, true, parts.join("; "))
}

fn growth_moments(runs: usize, seed: u64) -> Result<LemmaReport> {
    let (eta, t) = (0.1, 20u64);
    let traces = gw_batch(&GwConfig::new(eta, t), runs, seed, "lemma7")?;
    let acc: Running = traces
        .iter()
        .map(|tr| tr.populations[t as usize] as f64)
        .collect();
    let m = (1.0 + eta).powi(t as i32);
    let var_exact = m * (m - 1.0) / eta;
    let z = (acc.mean() - m).abs() / acc.stderr();
    let var_rel = (acc.variance() - var_exact).abs() / var_exact;
    let hits = traces.iter().filter(|tr| tr.hit_target).count() as f64;
    let p = hits / runs as f64;
    let p_se = (p * (1.0 - p) / runs as f64).sqrt();
    let floor = eta * (-2.0 * (1.0 + eta)).exp();
    let tail_ok = p >= floor - 3.0 * p_se;
    Ok(LemmaReport::at_most(
        "lemma7",
        z,
        3.0,
        var_rel <= 0.05 && tail_ok,
        format!(
            "mean {:.4} vs {m:.4} ({z:.2} se); variance {:.2} vs {var_exact:.2} (rel {var_rel:.4}, limit 0.05); \
             P(N_t >= (1+eta)^t) = {p:.4} vs floor {floor:.4} - 3se",
            acc.mean(),
            acc.variance()
        ),
    ))
}

fn truncated_process(runs: usize, seed: u64) -> Result<LemmaReport> {
    let (eta, cap, horizon) = (0.1, 100u64, 734u64);
    let s = truncated_survival(eta, cap, horizon, runs, seed, false)?;
    let lambda = solve_lambda(eta)?;
    let residual = lambda_residual(eta, lambda);
    let bound = (-lambda).exp() + horizon as f64 * (-lambda * cap as f64).exp();
    let f = s.survival;
    let extinction = 1.0 - f.value;
    let ext_ok = extinction <= bound + 3.0 * f.stderr;
    Ok(LemmaReport::at_least(
        "lemma8",
        f.value + 3.0 * f.stderr,
        eta / 3.0,
        ext_ok && residual < 1e-12,
        format!(
            "survival {:.4} ± {:.4} over {runs} runs; extinction {extinction:.4} vs bound {bound:.4}; \
             lambda {lambda:.12} residual {residual:.1e}",
            f.value, f.stderr
        ),
    ))
}

/// `P(E | survival)` at `R/r = 20` and `R/r = 40` for the round annulus
/// with `eps = 0.5`, `eta = 0.1`, root at `(0, z0_over_r_big * R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStability {
    pub z0_over_big_r: f64,
    pub small: EventEstimate,
    pub large: EventEstimate,
    /// `|p20 - p40|` in combined standard errors.
    pub z: f64,
}

impl EventStability {
    pub fn agree(&self) -> bool {
        self.small.weighted.value > 0.0 && self.large.weighted.value > 0.0 && self.z <= 2.0
    }

    pub fn report(&self, id: &str) -> LemmaReport {
        let (s, l) = (&self.small, &self.large);
        LemmaReport::at_most(
            id,
            self.z,
            2.0,
            s.weighted.value > 0.0 && l.weighted.value > 0.0,
            format!(
                "z0=(0,{}R): R/r=20 {:.3e} ± {:.1e} (event in {}/{} survivors under the tilt); R/r=40 {:.3e} ± {:.1e} ({}/{})",
                self.z0_over_big_r,
                s.weighted.value,
                s.weighted.stderr,
                s.naive.successes,
                s.naive.trials,
                l.weighted.value,
                l.weighted.stderr,
                l.naive.successes,
                l.naive.trials
            ),
        )
    }
}

pub fn event_stability(z0_over_big_r: f64, surviving: u64, seed: u64) -> Result<EventStability> {
    let eta = 0.1;
    let run = |ratio: f64| -> Result<EventEstimate> {
        let cap = cap_for_horizon(eta, ratio).ceil() as u64;
        let mut cfg = SpatialConfig::new(Annulus::round(1.0, 0.5)?, eta, cap, ratio);
        cfg.z0 = Vec2::new(0.0, z0_over_big_r * ratio);
        cfg.tilt = tilt_for_target(&cfg);
        estimate_event(
            &cfg,
            surviving,
            seed,
            &format!("event:{ratio}:{z0_over_big_r}"),
        )
    };
    let small = run(20.0)?;
    let large = run(40.0)?;
    let se = small.weighted.stderr.hypot(large.weighted.stderr);
    let diff = (small.weighted.value - large.weighted.value).abs();
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(EventStability {
        z0_over_big_r,
        small,
        large,
        z,
    })
}

const SCALING_EPS: [f64; 3] = [0.04, 0.01, 0.0025];

/// Least-squares slope of `log ratio` on `log eps`.
fn log_slope(ratios: &[f64]) -> f64 {
    let xs: Vec<f64> = SCALING_EPS.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Scaled sup-overlaps `sup_d overlap / (|A| sqrt eps)` over [`SCALING_EPS`]
/// and their fitted exponents in `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapScaling {
    pub round: Vec<f64>,
    pub square: Vec<f64>,
    pub round_slope: f64,
    pub square_slope: f64,
}

pub fn overlap_scaling() -> Result<OverlapScaling> {
    let sweep = |norm: Norm| -> Result<Vec<f64>> {
        SCALING_EPS
            .iter()
            .map(|&eps| {
                let a = Annulus::new(norm, 1.0, eps)?;
                Ok(sup_overlap_scaled(&a, a.ball_radius(), 512)?.ratio)
            })
            .collect()
    };
    let round = sweep(Norm::Round)?;
    let square = sweep(Norm::Square)?;
    Ok(OverlapScaling {
        round_slope: log_slope(&round),
        square_slope: log_slope(&square),
        round,
        square,
    })
}

fn sup_overlap_scaling() -> Result<LemmaReport> {
    let s = overlap_scaling()?;
    Ok(LemmaReport::at_least(
        "lemma10",
        s.round_slope,
        -0.1,
        (s.square_slope + 0.5).abs() <= 0.1,
        format!(
            "round ratios {:?} slope {:.4} (bounded: > -0.1); square ratios {:?} slope {:.4} (target -0.5 ± 0.1)",
            s.round, s.round_slope, s.square, s.square_slope
        ),
    ))
}

/// Pairwise constant for the cluster-overlap bound: `c1 + cb` where `c1` is
/// the largest scaled annulus-annulus overlap at separation `>= r sqrt eps`
/// and `cb` the largest scaled annulus-ball overlap, both from exact kernels.
pub fn cluster_constant(eps: f64) -> Result<f64> {
    let a = Annulus::round(1.0, eps)?;
    let c1 = sup_overlap_scaled(&a, a.ball_radius(), 512)?.ratio;
    let rho = a.ball_radius();
    let scale = a.area() * eps.sqrt();
    let steps = 4096;
    let cb = (0..=steps)
        .map(|k| {
            let d = rho + a.r() * k as f64 / steps as f64;
            (lens_area(a.r(), rho, d) - lens_area(a.inner(), rho, d)) / scale
        })
        .fold(0.0, f64::max);
    Ok(c1 + cb)
}

/// Up to `k` centres uniform in the disk of radius `2r + r sqrt eps` around
/// the origin, pairwise `r sqrt eps` apart; centre 0 is the origin.
fn admissible_centers<R: Rng + ?Sized>(a: &Annulus<f64>, k: usize, rng: &mut R) -> Vec<Vec2<f64>> {
    let sep = a.ball_radius();
    let radius = 2.0 * a.r() + sep;
    let mut centers = vec![Vec2::zero()];
    while centers.len() < k {
        let p = crate::geometry::sample_disk(radius, rng);
        if centers.iter().all(|c| c.dist(p) >= sep) {
            centers.push(p);
        }
    }
    centers
}

fn cluster_overlap(configs: usize, samples: usize, seed: u64) -> Result<LemmaReport> {
    let (eps, k) = (0.05, 10usize);
    let a = Annulus::round(1.0, eps)?;
    let c2 = cluster_constant(eps)?;
    let bound = c2 * k as f64 * a.area() * eps.sqrt();
    let mut worst = f64::NEG_INFINITY;
    let mut largest: f64 = 0.0;
    for t in 0..configs {
        let mut rng = stream(seed, "lemma11", t as u64);
        let centers = admissible_centers(&a, k, &mut rng);
        let rep = cluster_overlap_area(&a, &centers, 0, samples, &mut rng)?;
        largest = largest.max(rep.area);
        worst = worst.max(rep.area - 3.0 * rep.mc_stderr);
    }
    Ok(LemmaReport::at_most(
        "lemma11",
        worst,
        bound,
        true,
        format!(
            "c2 = {c2:.6}; {configs} configurations of {k} centres, eps={eps}; largest estimate {largest:.5}, \
             bound c2 k |A| sqrt(eps) = {bound:.5}"
        ),
    ))
}

fn square_overlap_integral(samples: usize, seed: u64) -> LemmaReport {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for (i, eps) in [0.1, 0.3].into_iter().enumerate() {
        let a = Annulus::<f64>::square(1.0, eps).expect("valid annulus");
        let e = overlap_integral_mc(&a, samples, &mut stream(seed, "thm5", i as u64));
        let cube = a.area().powi(3);
        worst = worst.min((e.value + 3.0 * e.stderr) / cube);
        parts.push(format!(
            "eps={eps}: integral / |A|^3 = {:.5} ± {:.1e}",
            e.value / cube,
            e.stderr / cube
        ));
    }
    LemmaReport::at_least("thm5", worst, 1.0 / 24.0, true, parts.join("; "))
}

fn rigorous_square() -> LemmaReport {
    let area = BigRational::new(BigInt::from(1014), BigInt::from(1000));
    let value = rigorous_square_bound(area);
    let exact_pass = value < BigRational::from_integer(BigInt::from(1));
    let approx = 1.014f64.powi(3) * 23.0 / 24.0;
    LemmaReport::at_most(
        "thm5-rigorous",
        approx,
        1.0,
        exact_pass,
        format!("1.014^3 * 23/24 = {value} in exact rationals"),
    )
}

fn horizon_identity(seed: u64) -> LemmaReport {
    let mut rng = stream(seed, "eq1", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eta: f64 = rng.random_range(0.01..0.5);
        let ratio: f64 = rng.random_range(2.0..500.0);
        let k = cap_for_horizon(eta, ratio);
        let t = ratio * ratio;
        worst = worst.max(((eta * k).exp() * eta / 3.0 - t).abs() / t);
    }
    LemmaReport::at_most(
        "eq1-consistency",
        worst,
        1e-9,
        true,
        "max relative error of e^(eta K) eta / 3 = (R/r)^2 over 20 random (eta, R/r)".into(),
    )
}

fn worked_parameters() -> LemmaReport {
    let n_real = min_seed_count(0.1, 0.1);
    let n_round = n_real.round();
    let n_ceil = n_real.ceil();
    let ratio_round = min_ratio_for_growth(n_round, 0.1).ceil();
    let ratio_ceil = min_ratio_for_growth(n_ceil, 0.1).ceil();
    LemmaReport::at_least(
        "eq6-worked",
        ratio_round,
        257.0,
        n_round == 276_310.0 && ratio_round == 257.0 && ratio_ceil == 257.0,
        format!(
            "c0 = eta = 0.1: n >= {n_real:.3} (rounded {n_round}, smallest integer {n_ceil}); \
             R/r >= {ratio_round} (with n = {n_ceil}: {ratio_ceil})"
        ),
    )
}
