//! Annulus geometry: membership, areas, exact and Monte Carlo overlap areas,
//! and the integral functionals used by the subcriticality arguments.

mod integrals;
mod overlap;
mod sample;
mod vec2;

pub use integrals::{
    interval_overlap_integral, lower_bound_nc, overlap_integral_mc, rigorous_square_bound,
    three_step_functional, IntervalIntegral,
};
pub use overlap::{
    cluster_overlap_area, intersection_area, intersection_area_at, intersection_area_mc, lens_area,
    min_overlap_ratio, rect_overlap, sup_overlap_scaled, MinOverlap, OverlapMethod, OverlapReport,
    SupOverlap,
};
pub use sample::{sample_disk, sample_in_annulus};
pub use vec2::Vec2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which norm measures the step length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Euclidean (L2) annulus.
    Round,
    /// L∞ "square" annulus.
    Square,
}

impl Norm {
    #[inline]
    pub fn length<S: Scalar>(self, v: Vec2<S>) -> S {
        match self {
            Norm::Round => v.norm(),
            Norm::Square => v.norm_inf(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Round => "round",
            Norm::Square => "square",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "round" | "l2" => Ok(Norm::Round),
            "square" | "linf" => Ok(Norm::Square),
            other => Err(Error::InvalidParameter {
                name: "norm",
                reason: format!("unknown norm `{other}`"),
            }),
        }
    }
}

/// The connection region `{v : r(1-eps) <= |v| <= r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus<S> {
    norm: Norm,
    r: S,
    eps: S,
}

impl<S: Scalar> Annulus<S> {
    /// Requires `r > 0` and `0 < eps <= 1`.
    pub fn new(norm: Norm, r: S, eps: S) -> Result<Self> {
        let ok = r.is_finite() && r > S::zero() && eps > S::zero() && eps <= S::one();
        if !ok {
            return Err(Error::InvalidAnnulus {
                r: r.as_f64(),
                eps: eps.as_f64(),
            });
        }
        Ok(Self { norm, r, eps })
    }

    pub fn round(r: S, eps: S) -> Result<Self> {
        Self::new(Norm::Round, r, eps)
    }

    pub fn square(r: S, eps: S) -> Result<Self> {
        Self::new(Norm::Square, r, eps)
    }

    /// Annulus with thinness `eps` scaled so that its area is `area`.
    pub fn with_area(norm: Norm, eps: S, area: S) -> Result<Self> {
        let unit = Self::new(norm, S::one(), eps)?;
        if !(area > S::zero()) {
            return Err(Error::InvalidParameter {
                name: "area",
                reason: format!("area must be positive, got {area}"),
            });
        }
        Self::new(norm, (area / unit.area()).sqrt(), eps)
    }

    #[inline]
    pub fn norm(&self) -> Norm {
        self.norm
    }

    #[inline]
    pub fn r(&self) -> S {
        self.r
    }

    #[inline]
    pub fn eps(&self) -> S {
        self.eps
    }

    #[inline]
    pub fn inner(&self) -> S {
        self.r * (S::one() - self.eps)
    }

    /// `pi r^2 eps (2 - eps)` for the round annulus, `4 r^2 eps (2 - eps)` for the square one.
    pub fn area(&self) -> S {
        let shape = match self.norm {
            Norm::Round => S::PI(),
            Norm::Square => S::lit(4.0),
        };
        shape * self.r * self.r * self.eps * (S::lit(2.0) - self.eps)
    }

    /// Closed on both boundaries.
    #[inline]
    pub fn contains(&self, v: Vec2<S>) -> bool {
        let len = self.norm.length(v);
        len >= self.inner() && len <= self.r
    }

    /// Farthest reach of the annulus in the Euclidean norm.
    #[inline]
    pub fn euclidean_reach(&self) -> S {
        match self.norm {
            Norm::Round => self.r,
            Norm::Square => self.r * S::SQRT_2(),
        }
    }

    /// Radius `r sqrt(eps)` of the exclusion balls around tested points.
    #[inline]
    pub fn ball_radius(&self) -> S {
        self.r * self.eps.sqrt()
    }

    pub fn with_r(&self, r: S) -> Result<Self> {
        Self::new(self.norm, r, self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn area_closed_forms() {
        let disk = Annulus::round(1.0, 1.0).unwrap();
        assert_relative_eq!(disk.area(), std::f64::consts::PI, epsilon = 1e-15);
        let sq = Annulus::square(1.0, 1.0).unwrap();
        assert_relative_eq!(sq.area(), 4.0, epsilon = 1e-15);

        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let eps = 0.5f64.powi(k);
            let a = Annulus::round(1.0, eps).unwrap().area();
            assert!(a > 0.0 && a < last);
            last = a;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Annulus::round(0.0, 0.5).is_err());
        assert!(Annulus::round(1.0, 0.0).is_err());
        assert!(Annulus::round(1.0, 1.5).is_err());
        assert!(Annulus::square(-1.0, 0.5).is_err());
        assert!(Annulus::round(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn membership_examples() {
        let a = Annulus::round(1.0, 0.5).unwrap();
        assert!(a.contains(Vec2::new(0.75, 0.0)));
        assert!(!a.contains(Vec2::new(0.0, 0.0)));
        assert!(a.contains(Vec2::new(1.0, 0.0)));
        assert!(a.contains(Vec2::new(0.5, 0.0)));
        let s = Annulus::square(1.0, 0.1).unwrap();
        assert!(s.contains(Vec2::new(0.95, 0.95)));
        assert!(!s.contains(Vec2::new(0.5, 0.5)));
    }

    #[test]
    fn with_area_inverts_area() {
        for norm in [Norm::Round, Norm::Square] {
            let a = Annulus::with_area(norm, 0.3, 1.0364).unwrap();
            assert_relative_eq!(a.area(), 1.0364, max_relative = 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Annulus::<f32>::round(2.0, 0.25).unwrap();
        assert!((a.area() - std::f32::consts::PI * 4.0 * 0.25 * 1.75).abs() < 1e-5);
        assert!(a.contains(Vec2::new(0.0, 1.8)));
    }
}
