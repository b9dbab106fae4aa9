use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Norm};

/// Unquantified constants of the bond-open argument. All default to 1,
/// which is arbitrary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Lower bound on the probability that a surviving walk reaches the target.
    pub c0: f64,
    /// Cluster overlap constant: overlap of `k` separated annuli <= c2 k |A| sqrt(eps).
    pub c2: f64,
    /// `n = c3 / eta^2`.
    pub c3: f64,
    /// `R/r = c4 |log eta| / eta`.
    pub c4: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub c0: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub n: Option<u64>,
    /// `R/r`.
    pub ratio: Option<f64>,
    /// Integer branching cap; defaults to the ceiling of the real `K`.
    pub cap: Option<u64>,
}

/// Which of the sufficient conditions of the bond-open argument hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFlags {
    /// `|e^{eta K} eta / 3 - (R/r)^2| / (R/r)^2` for the real `K`.
    pub horizon_rel_err: f64,
    pub horizon_consistent: bool,
    /// `(R/r)^2 c2 (3N + n + nK(R/r)^2) sqrt(eps) <= c0 / 2`.
    pub path_defects_small: bool,
    /// `c2 (3N + n + nK(R/r)^2 + n R/r) sqrt(eps) <= eta / 2`.
    pub growth_defects_small: bool,
    /// `N = nK(R/r)^2 + n R/r` with the real `K`.
    pub budget_formula: f64,
    /// `n <= (1 + eta/2)^{R/r}`.
    pub growth_reaches_n: bool,
    /// `c0 n eta^2 / 120 >= log 10`.
    pub enough_seeds: bool,
}

impl ConstraintFlags {
    pub fn all(&self) -> bool {
        self.horizon_consistent
            && self.path_defects_small
            && self.growth_defects_small
            && self.growth_reaches_n
            && self.enough_seeds
    }

    /// Names of the conditions that fail.
    pub fn failing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (ok, name) in [
            (self.horizon_consistent, "horizon_consistent"),
            (self.path_defects_small, "path_defects_small"),
            (self.growth_defects_small, "growth_defects_small"),
            (self.growth_reaches_n, "growth_reaches_n"),
            (self.enough_seeds, "enough_seeds"),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormParams {
    pub annulus: Annulus<f64>,
    /// `|A| - 1`.
    pub eta: f64,
    /// `R/r`.
    pub ratio: f64,
    /// Block half-scale `R`; squares are `6R x 6R`.
    pub big_r: f64,
    pub n: u64,
    /// `(1/eta) log(3 R^2 / (eta r^2))`; NaN when `eta <= 0`.
    pub k_real: f64,
    /// Integer branching cap `K`.
    pub cap: u64,
    /// Phase-one horizon `T = (R/r)^2`, rounded.
    pub horizon: u64,
    /// Phase-two generations, `floor(R/r)`.
    pub growth_steps: u64,
    /// Per-bond tested-point budget `N = n K T + n floor(R/r)` with the integer cap.
    pub budget: u64,
    pub constants: Constants,
    pub flags: ConstraintFlags,
}

/// `K = (1/eta) log(3 (R/r)^2 / eta)`.
pub fn cap_for_horizon(eta: f64, ratio: f64) -> f64 {
    (3.0 * ratio * ratio / eta).ln() / eta
}

/// Smallest real `n` with `c0 n eta^2 / 120 >= log 10`.
pub fn min_seed_count(c0: f64, eta: f64) -> f64 {
    120.0 * std::f64::consts::LN_10 / (c0 * eta * eta)
}

/// Smallest real `R/r` with `n <= (1 + eta/2)^{R/r}`.
pub fn min_ratio_for_growth(n: f64, eta: f64) -> f64 {
    n.ln() / (0.5 * eta).ln_1p()
}

fn evaluate_flags(
    eta: f64,
    eps: f64,
    n: f64,
    ratio: f64,
    k: f64,
    c: &Constants,
) -> ConstraintFlags {
    let t = ratio * ratio;
    let budget = n * k * t + n * ratio;
    let horizon_rel_err = ((eta * k).exp() * eta / 3.0 - t).abs() / t;
    let se = eps.sqrt();
    let tested = 3.0 * budget + n + n * k * t;
    ConstraintFlags {
        horizon_rel_err,
        horizon_consistent: horizon_rel_err < 1e-9,
        path_defects_small: t * c.c2 * tested * se <= c.c0 / 2.0,
        growth_defects_small: c.c2 * (tested + n * ratio) * se <= eta / 2.0,
        budget_formula: budget,
        growth_reaches_n: n <= ((0.5 * eta).ln_1p() * ratio).exp() * (1.0 + 1e-12),
        enough_seeds: c.c0 * n * eta * eta / 120.0 >= std::f64::consts::LN_10,
    }
}

impl RenormParams {
    /// Parameters at intensity 1 with `|A| = 1 + eta`: `n = ceil(c3 / eta^2)`,
    /// `R/r = ceil(c4 |log eta| / eta)`, `K` from the horizon identity.
    pub fn derive(norm: Norm, eps: f64, eta: f64, ov: Overrides) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("must be positive, got {eta}"),
            });
        }
        let annulus = Annulus::with_area(norm, eps, 1.0 + eta)?;
        let constants = Constants {
            c0: ov.c0.unwrap_or(1.0),
            c2: ov.c2.unwrap_or(1.0),
            c3: ov.c3.unwrap_or(1.0),
            c4: ov.c4.unwrap_or(1.0),
        };
        let n =
            ov.n.unwrap_or_else(|| (constants.c3 / (eta * eta)).ceil() as u64);
        let ratio = ov
            .ratio
            .unwrap_or_else(|| (constants.c4 * eta.ln().abs() / eta).ceil().max(1.0));
        Self::assemble(annulus, n, ratio, ov.cap, constants)
    }

    /// Explicit desk-scale parameters; `eta = |A| - 1` may be non-positive,
    /// in which case the cap must be given.
    pub fn explicit(
        annulus: Annulus<f64>,
        n: u64,
        ratio: f64,
        cap: Option<u64>,
        constants: Constants,
    ) -> Result<Self> {
        Self::assemble(annulus, n, ratio, cap, constants)
    }

    fn assemble(
        annulus: Annulus<f64>,
        n: u64,
        ratio: f64,
        cap: Option<u64>,
        constants: Constants,
    ) -> Result<Self> {
        if !(ratio >= 1.0) || !ratio.is_finite() {
            return Err(Error::InvalidParameter {
                name: "R/r",
                reason: format!("must be >= 1, got {ratio}"),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be at least 1".into(),
            });
        }
        let eta = annulus.area() - 1.0;
        let k_real = if eta > 0.0 {
            cap_for_horizon(eta, ratio)
        } else {
            f64::NAN
        };
        let cap = match cap {
            Some(k) => k,
            None if k_real.is_finite() && k_real > 0.0 => k_real.ceil() as u64,
            None => {
                return Err(Error::InvalidParameter {
                    name: "K",
                    reason: format!("no cap given and the horizon identity gives {k_real}"),
                })
            }
        };
        if cap == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                reason: "cap must be at least 1".into(),
            });
        }
        let horizon = (ratio * ratio).round() as u64;
        let growth_steps = ratio.floor() as u64;
        let budget = n * cap * horizon + n * growth_steps;
        let flags = evaluate_flags(eta, annulus.eps(), n as f64, ratio, k_real, &constants);
        Ok(Self {
            annulus,
            eta,
            ratio,
            big_r: ratio * annulus.r(),
            n,
            k_real,
            cap,
            horizon,
            growth_steps,
            budget,
            constants,
            flags,
        })
    }

    pub fn r(&self) -> f64 {
        self.annulus.r()
    }

    /// Minimum distance between retained points: `r min(sqrt(eps), 1 - eps)`.
    ///
    /// Equal to `r sqrt(eps)` for `eps <= (3 - sqrt 5)/2`; above that an
    /// annulus step can be shorter than `r sqrt(eps)`, so the separation is
    /// capped at the inner radius to keep every step admissible.
    pub fn separation(&self) -> f64 {
        let eps = self.annulus.eps();
        self.r() * eps.sqrt().min(1.0 - eps)
    }

    /// Error if any sufficient condition fails.
    pub fn require_all(&self) -> Result<()> {
        if self.flags.all() {
            Ok(())
        } else {
            Err(Error::StrictConstraints(self.flags.failing().join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_reproduces_the_horizon() {
        let k = cap_for_horizon(0.1, 10.0);
        assert!((k - 10.0 * 3000f64.ln()).abs() < 1e-12);
        assert!((k - 80.06).abs() < 5e-3);
        assert!(((0.1 * k).exp() * 0.1 / 3.0 - 100.0).abs() / 100.0 < 1e-12);
    }

    #[test]
    fn derived_defaults() {
        let p = RenormParams::derive(Norm::Round, 0.01, 0.1, Overrides::default()).unwrap();
        assert_eq!(p.n, 100);
        assert_eq!(p.ratio, 24.0);
        assert!((p.annulus.area() - 1.1).abs() < 1e-12);
        assert!(p.flags.horizon_consistent);
        assert_eq!(p.horizon, 576);
        assert_eq!(p.budget, p.n * p.cap * 576 + p.n * 24);
        assert!(RenormParams::derive(Norm::Round, 0.5, 0.0, Overrides::default()).is_err());
        assert!(RenormParams::derive(Norm::Round, 0.5, -0.2, Overrides::default()).is_err());
    }

    #[test]
    fn disk_fails_the_defect_conditions() {
        for eta in [0.05, 0.5, 9.0] {
            for ratio in [2.0, 6.0, 20.0] {
                let ov = Overrides {
                    n: Some(3),
                    ratio: Some(ratio),
                    ..Default::default()
                };
                let p = RenormParams::derive(Norm::Round, 1.0, eta, ov).unwrap();
                assert!(!p.flags.path_defects_small);
                assert!(!p.flags.growth_defects_small);
                assert!(p.require_all().is_err());
            }
        }
    }

    #[test]
    fn seed_count_and_growth_ratio() {
        let n = min_seed_count(0.1, 0.1);
        assert!((n - 276_310.2).abs() < 0.05, "{n}");
        assert_eq!(n.round(), 276_310.0);
        assert_eq!(n.ceil(), 276_311.0);
        assert_eq!(min_ratio_for_growth(276_310.0, 0.1).ceil(), 257.0);
        assert_eq!(min_ratio_for_growth(276_311.0, 0.1).ceil(), 257.0);
    }

    #[test]
    fn separation_switches_at_the_golden_point() {
        let small = RenormParams::explicit(
            Annulus::round(2.0, 0.04).unwrap(),
            3,
            6.0,
            Some(5),
            Constants::default(),
        )
        .unwrap();
        assert!((small.separation() - 0.4).abs() < 1e-12);
        let disk = RenormParams::explicit(
            Annulus::round(2.0, 1.0).unwrap(),
            3,
            6.0,
            Some(5),
            Constants::default(),
        )
        .unwrap();
        assert_eq!(disk.separation(), 0.0);
    }
}
