use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_in_annulus, Annulus, Norm, Vec2};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::Running;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport<S> {
    /// Separation between the two centres.
    pub d: S,
    pub area: S,
    pub method: OverlapMethod,
    /// Zero for exact reports.
    pub mc_stderr: S,
}

/// Area of the intersection of two disks with radii `a`, `b` whose centres are `d` apart.
pub fn lens_area<S: Scalar>(a: S, b: S, d: S) -> S {
    let zero = S::zero();
    if a <= zero || b <= zero || d >= a + b {
        return zero;
    }
    if d <= (a - b).abs() {
        let m = a.min(b);
        return S::PI() * m * m;
    }
    let two = S::lit(2.0);
    let one = S::one();
    let tol = S::clamp_tol();
    let clamp = |c: S| {
        if c > one - tol {
            c.min(one)
        } else if c < -one + tol {
            c.max(-one)
        } else {
            c
        }
    };
    let ca = clamp((d * d + a * a - b * b) / (two * d * a));
    let cb = clamp((d * d + b * b - a * a) / (two * d * b));
    let k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b);
    let area = a * a * ca.acos() + b * b * cb.acos() - k.max(zero).sqrt() / two;
    area.max(zero)
}

/// Overlap of two axis-aligned squares with half-sides `h1`, `h2` whose centres
/// differ by `(dx, dy)`.
pub fn rect_overlap<S: Scalar>(h1: S, h2: S, dx: S, dy: S) -> S {
    let along = |delta: S| {
        let hi = h1.min(delta + h2);
        let lo = (-h1).max(delta - h2);
        (hi - lo).max(S::zero())
    };
    along(dx) * along(dy)
}

/// Exact `|A(x) ∩ A(x + v)|` by inclusion–exclusion over the outer and inner
/// disks (or squares).
pub fn intersection_area_at<S: Scalar>(a: &Annulus<S>, v: Vec2<S>) -> S {
    let outer = a.r();
    let inner = a.inner();
    let area = match a.norm() {
        Norm::Round => {
            let d = v.norm();
            lens_area(outer, outer, d) - S::lit(2.0) * lens_area(outer, inner, d)
                + lens_area(inner, inner, d)
        }
        Norm::Square => {
            let (dx, dy) = (v.x.abs(), v.y.abs());
            rect_overlap(outer, outer, dx, dy)
                - rect_overlap(outer, inner, dx, dy)
                - rect_overlap(inner, outer, dx, dy)
                + rect_overlap(inner, inner, dx, dy)
        }
    };
    area.max(S::zero()).min(a.area())
}

/// Exact overlap at separation `d`. Square annuli are displaced along a
/// coordinate axis, the direction in which the overlap is largest near
/// `d = r(2 - eps)`.
pub fn intersection_area<S: Scalar>(a: &Annulus<S>, d: S) -> OverlapReport<S> {
    OverlapReport {
        d,
        area: intersection_area_at(a, Vec2::new(d, S::zero())),
        method: OverlapMethod::Exact,
        mc_stderr: S::zero(),
    }
}

/// Hit-or-miss estimate of `|A(x) ∩ A(x + v)|`: uniform samples in `A(x)`
/// tested for membership in the translate.
pub fn intersection_area_mc<S: Scalar, R: Rng + ?Sized>(
    a: &Annulus<S>,
    v: Vec2<S>,
    samples: usize,
    rng: &mut R,
) -> OverlapReport<S> {
    let hits = (0..samples)
        .filter(|_| a.contains(sample_in_annulus(a, rng) - v))
        .count();
    let area = a.area().as_f64();
    let p = hits as f64 / samples.max(1) as f64;
    OverlapReport {
        d: a.norm().length(v),
        area: S::lit(area * p),
        method: OverlapMethod::MonteCarlo,
        mc_stderr: S::lit(area * (p * (1.0 - p) / samples.max(1) as f64).sqrt()),
    }
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
fn golden_min<S: Scalar>(mut lo: S, mut hi: S, iters: usize, f: impl Fn(S) -> S) -> (S, S) {
    let g = S::lit(0.618_033_988_749_894_9);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Uniform grid over `[lo, hi]` followed by a golden-section refinement in
/// the bracket around the best grid point. Returns `(grid_best, refined_best)`
/// as `(argument, value)` pairs.
fn sweep_min<S: Scalar>(lo: S, hi: S, steps: usize, f: impl Fn(S) -> S) -> ((S, S), (S, S)) {
    let steps = steps.max(2);
    let h = (hi - lo) / S::lit((steps - 1) as f64);
    let at = |k: usize| {
        if k + 1 == steps {
            hi
        } else {
            lo + h * S::lit(k as f64)
        }
    };
    let (mut best_k, mut best) = (0, f(lo));
    for k in 1..steps {
        let v = f(at(k));
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let grid = (at(best_k), best);
    let a = at(best_k.saturating_sub(1));
    let b = at((best_k + 1).min(steps - 1));
    let refined = golden_min(a, b, 80, &f);
    if refined.1 < grid.1 {
        (grid, refined)
    } else {
        (grid, grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinOverlap<S> {
    /// Minimum over the uniform grid.
    pub grid_ratio: S,
    pub grid_d: S,
    /// Minimum after refinement; never above the grid value.
    pub ratio: S,
    pub d: S,
}

/// Minimum of `overlap(d) / |A|` over `d` in `[r(1-eps), r]`.
pub fn min_overlap_ratio<S: Scalar>(a: &Annulus<S>, grid_steps: usize) -> MinOverlap<S> {
    let total = a.area();
    let ratio = |d: S| intersection_area(a, d).area / total;
    let ((grid_d, grid_ratio), (d, r)) = sweep_min(a.inner(), a.r(), grid_steps, ratio);
    MinOverlap {
        grid_ratio,
        grid_d,
        ratio: r,
        d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupOverlap<S> {
    /// `sup overlap / (|A| sqrt(eps))`.
    pub ratio: S,
    pub d: S,
}

/// Supremum of `overlap(d) / (|A| sqrt(eps))` over `d` in `[d_min, 2r]`.
/// Requires `d_min >= r sqrt(eps)` (up to rounding).
pub fn sup_overlap_scaled<S: Scalar>(
    a: &Annulus<S>,
    d_min: S,
    grid_steps: usize,
) -> Result<SupOverlap<S>> {
    let floor = a.ball_radius();
    if d_min < floor * (S::one() - S::lit(1e-9)) {
        return Err(Error::InvalidParameter {
            name: "d_min",
            reason: format!("d_min = {d_min} is below r sqrt(eps) = {floor}"),
        });
    }
    let top = S::lit(2.0) * a.r();
    if d_min >= top {
        return Ok(SupOverlap {
            ratio: S::zero(),
            d: d_min,
        });
    }
    let scale = a.area() * a.eps().sqrt();
    let neg = |d: S| -intersection_area(a, d).area / scale;
    let (_, (d, v)) = sweep_min(d_min, top, grid_steps, neg);
    Ok(SupOverlap { ratio: -v, d })
}

/// Monte Carlo estimate of `|A_i ∩ ⋃_{j≠i} (A_j ∪ B_j)|` where `B_j` is the
/// Euclidean ball of radius `r sqrt(eps)` around centre `j`.
///
/// Centres must be pairwise at least `r sqrt(eps)` apart.
pub fn cluster_overlap_area<S: Scalar, R: Rng + ?Sized>(
    a: &Annulus<S>,
    centers: &[Vec2<S>],
    i: usize,
    mc_samples: usize,
    rng: &mut R,
) -> Result<OverlapReport<S>> {
    if i >= centers.len() {
        return Err(Error::InvalidParameter {
            name: "i",
            reason: format!("index {i} out of range for {} centres", centers.len()),
        });
    }
    let sep = a.ball_radius();
    for (p, &cp) in centers.iter().enumerate() {
        for (q, &cq) in centers.iter().enumerate().skip(p + 1) {
            let dist = cp.dist(cq);
            if dist < sep {
                return Err(Error::SeparationViolated {
                    i: p,
                    j: q,
                    dist: dist.as_f64(),
                    min: sep.as_f64(),
                });
            }
        }
    }
    let xi = centers[i];
    let reach = S::lit(2.0) * a.euclidean_reach() + sep;
    let others: Vec<Vec2<S>> = centers
        .iter()
        .enumerate()
        .filter(|&(j, c)| j != i && c.dist(xi) <= reach)
        .map(|(_, &c)| c)
        .collect();
    let d = others
        .iter()
        .map(|c| c.dist(xi))
        .fold(S::infinity(), S::min);
    if others.is_empty() {
        return Ok(OverlapReport {
            d,
            area: S::zero(),
            method: OverlapMethod::MonteCarlo,
            mc_stderr: S::zero(),
        });
    }
    let mut acc = Running::new();
    for _ in 0..mc_samples {
        let p = xi + sample_in_annulus(a, rng);
        let hit = others
            .iter()
            .any(|&c| a.contains(p - c) || (p - c).norm() <= sep);
        acc.push(if hit { 1.0 } else { 0.0 });
    }
    let area = a.area().as_f64();
    Ok(OverlapReport {
        d,
        area: S::lit(area * acc.mean()),
        method: OverlapMethod::MonteCarlo,
        mc_stderr: S::lit(area * acc.stderr()),
    })
}
