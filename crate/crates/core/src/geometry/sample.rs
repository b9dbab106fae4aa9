use rand::Rng;

use super::{Annulus, Norm, Vec2};
use crate::scalar::Scalar;

/// Uniform draw from the annulus centred at the origin.
///
/// Round: polar inversion, `rho = r sqrt(u (1 - (1-eps)^2) + (1-eps)^2)`.
/// Square: pick one of four rectangles by area, then uniform inside it.
pub fn sample_in_annulus<S: Scalar, R: Rng + ?Sized>(a: &Annulus<S>, rng: &mut R) -> Vec2<S> {
    let r = a.r().as_f64();
    let q = 1.0 - a.eps().as_f64();
    match a.norm() {
        Norm::Round => {
            let u: f64 = rng.random();
            let rho = r * (u * (1.0 - q * q) + q * q).sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            Vec2::new(S::lit(rho * c), S::lit(rho * s))
        }
        Norm::Square => {
            let inner = r * q;
            let band = r - inner;
            // top/bottom strips span the full width, side strips only the hole height
            let strip = 2.0 * r * band;
            let side = 2.0 * inner * band;
            let pick = rng.random::<f64>() * 2.0 * (strip + side);
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let (x, y) = if pick < strip {
                (-r + 2.0 * r * u, inner + band * v)
            } else if pick < 2.0 * strip {
                (-r + 2.0 * r * u, -r + band * v)
            } else if pick < 2.0 * strip + side {
                (inner + band * u, -inner + 2.0 * inner * v)
            } else {
                (-r + band * u, -inner + 2.0 * inner * v)
            };
            Vec2::new(S::lit(x), S::lit(y))
        }
    }
}

/// Uniform draw from the Euclidean disk of radius `radius` at the origin.
pub fn sample_disk<S: Scalar, R: Rng + ?Sized>(radius: S, rng: &mut R) -> Vec2<S> {
    let rho = radius.as_f64() * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    let (s, c) = theta.sin_cos();
    Vec2::new(S::lit(rho * c), S::lit(rho * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn samples_land_in_the_annulus() {
        let mut rng = from_seed(11);
        for (norm, eps) in [
            (Norm::Round, 0.05),
            (Norm::Round, 1.0),
            (Norm::Square, 0.1),
            (Norm::Square, 1.0),
        ] {
            let a = Annulus::new(norm, 1.7, eps).unwrap();
            for _ in 0..20_000 {
                let p = sample_in_annulus(&a, &mut rng);
                let len = norm.length(p);
                assert!(
                    len >= a.inner() - 1e-12 && len <= a.r() + 1e-12,
                    "{norm:?} {eps} {p:?}"
                );
            }
        }
    }

    #[test]
    fn square_sampler_is_uniform_across_quadrants_and_bands() {
        // fraction in the hole-height side strips must equal their area share
        let a = Annulus::<f64>::square(1.0, 0.3).unwrap();
        let mut rng = from_seed(5);
        let n = 200_000;
        let inner = a.inner();
        let side = (0..n)
            .filter(|_| sample_in_annulus(&a, &mut rng).y.abs() < inner)
            .count() as f64
            / n as f64;
        let expected = 2.0 * (2.0 * inner * 0.3) / a.area();
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (side - expected).abs() < 4.0 * sigma,
            "{side} vs {expected}"
        );
    }
}
