use num_traits::{FromPrimitive, Num};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{intersection_area_at, sample_in_annulus, Annulus};
use crate::scalar::Scalar;
use crate::stats::{Estimate, Running};

/// `1 + eps / (pi sqrt 3)`, the rigorous lower bound on the critical area.
pub fn lower_bound_nc<S: Scalar>(eps: S) -> S {
    S::one() + eps / (S::PI() * S::lit(3.0).sqrt())
}

/// `area^3 (1 - 1/24)`, the upper estimate of the three-step functional for
/// the square annulus. Generic so it can be evaluated in exact rationals.
pub fn rigorous_square_bound<T: Num + Clone + FromPrimitive>(area: T) -> T {
    let n23 = T::from_u32(23).expect("23 representable");
    let n24 = T::from_u32(24).expect("24 representable");
    area.clone() * area.clone() * area * n23 / n24
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalIntegral<S> {
    pub closed_form: S,
    pub quadrature: S,
}

impl<S: Scalar> IntervalIntegral<S> {
    pub fn relative_error(&self) -> S {
        if self.closed_form == S::zero() {
            (self.quadrature - self.closed_form).abs()
        } else {
            ((self.quadrature - self.closed_form) / self.closed_form).abs()
        }
    }
}

// 5-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn gauss_legendre<S: Scalar>(lo: S, hi: S, panels: usize, f: impl Fn(S) -> S) -> S {
    if hi <= lo {
        return S::zero();
    }
    let h = (hi - lo) / S::lit(panels as f64);
    let half = h / S::lit(2.0);
    let mut total = S::zero();
    for p in 0..panels {
        let mid = lo + h * S::lit(p as f64) + half;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            total = total + S::lit(w) * f(mid + half * S::lit(*x));
        }
    }
    total * half
}

/// `∫∫_{[0,c]²} |(x + I) ∩ (y + I)| dx dy` for `I = [0, c]`, both in closed
/// form `(2/3) c³` and by iterated Gauss–Legendre quadrature with the inner
/// integral split at the kink `x = y`.
pub fn interval_overlap_integral<S: Scalar>(c: S) -> IntervalIntegral<S> {
    let closed_form = S::lit(2.0) / S::lit(3.0) * c * c * c;
    let panels = 8;
    let kernel = |x: S, y: S| (c - (x - y).abs()).max(S::zero());
    let inner = |y: S| {
        gauss_legendre(S::zero(), y, panels, |x| kernel(x, y))
            + gauss_legendre(y, c, panels, |x| kernel(x, y))
    };
    let quadrature = gauss_legendre(S::zero(), c, panels, inner);
    IntervalIntegral {
        closed_form,
        quadrature,
    }
}

/// Monte Carlo estimate of `∫_{A×A} |(x + A) ∩ (y + A)| dx dy`.
pub fn overlap_integral_mc<S: Scalar, R: Rng + ?Sized>(
    a: &Annulus<S>,
    mc_samples: usize,
    rng: &mut R,
) -> Estimate {
    let mut acc = Running::new();
    for _ in 0..mc_samples {
        let x = sample_in_annulus(a, rng);
        let y = sample_in_annulus(a, rng);
        acc.push(intersection_area_at(a, x - y).as_f64());
    }
    let area = a.area().as_f64();
    Estimate::new(area * area * acc.mean(), area * area * acc.stderr())
}

/// Monte Carlo estimate of `|A|³ - ∫_{A×A} |(x + A) ∩ (y + A)| dx dy`; a
/// value below one certifies that no infinite component exists.
pub fn three_step_functional<S: Scalar, R: Rng + ?Sized>(
    a: &Annulus<S>,
    mc_samples: usize,
    rng: &mut R,
) -> Estimate {
    let area = a.area().as_f64();
    let integral = overlap_integral_mc(a, mc_samples, rng);
    Estimate::new(area.powi(3) - integral.value, integral.stderr)
}
