//! Viscosity/pressure laws and every scalar function the scheme derives from
//! them.
//!
//! All kernels work with the power-law viscosity `mu(rho) = rho^alpha` and the
//! gamma-law pressure `P(rho) = a rho^gamma`, `gamma > 1`. The derived
//! functions are fixed antiderivatives (no additive normalization) of
//! combinations of `mu`:
//!
//! ```text
//!   phi'(rho) = mu(rho)/rho^2        phi(rho) = rho^(alpha-1)/(alpha-1),  ln(rho) if alpha = 1
//!   psi'(rho) = mu(rho)/rho          psi(rho) = rho^alpha/alpha
//!   Xi'(rho)  = sqrt(rho^gamma mu(rho))/rho^2
//!   G'(rho)   = mu(rho)/rho^(3/2)
//! ```
//!
//! together with the potential energy density
//! `e(rho) = rho^(gamma-1)/(gamma-1) + 1/rho - gamma/(gamma-1)` (vanishing at
//! the far-field density 1) and `pi(rho) = rho e(rho)`. On the
//! specific-volume side, `Phi(tau) = -phi(1/tau)` and `Lambda(tau) = tau^alpha
//! = 1/mu(1/tau)`.
//!
//! The gradient penalization of strength `c ∈ [0, 1/4]` enters through the
//! roots `r0 <= r1` of `r² - r + c = 0` ([`CapillarityRoots`]): the effective
//! velocities `v_i = u + r_i ∂_m psi(rho)` each satisfy a second-order
//! drift-diffusion equation with viscosity factor `(1 - r_i)`.
//!
//! [`LawBundle::check_hypotheses`] classifies a law by seven structural
//! conditions (growth of `mu` at large density, two-sided comparability of
//! `psi` and `mu`, pressure-dominated growth of `mu`, divergence of `phi` at
//! vacuum, divergence of `Xi` at large density, quadratic control of `Lambda`
//! by `1 + Phi`, and sub-square-root growth of `tau^(1/2)` against
//! `(1 + Phi)^(1-eta)`). Each condition is decided twice — in closed form from
//! the exponents, and by sampling over twelve decades of density — and the
//! report states which estimate suites (plain viscous, capillary, and the
//! vanishing-capillarity limit) the law supports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Number of sample points used by the hypothesis checker.
const SAMPLE_POINTS: usize = 10_000;
/// Sampling range for both `rho` and `tau`: twelve decades around 1.
const SAMPLE_LO: f64 = 1e-6;
const SAMPLE_HI: f64 = 1e6;
/// A quantity is considered bounded at an endpoint of the sampling range if
/// it grows by less than 1% over the outermost decade.
const TREND_GROWTH: f64 = 1.01;
/// Decade increments of a primitive must be non-decreasing (up to round-off)
/// toward an endpoint for the primitive to be considered divergent there.
const TREND_SLACK: f64 = 0.999;

/// Power-law viscosity/pressure bundle: `mu(rho) = rho^alpha`,
/// `P(rho) = a rho^gamma`.
///
/// `eta ∈ (0, 1)` is the exponent margin used by the seventh structural
/// hypothesis (`tau^(1/2) <= d5 (1 + Phi(tau))^(1-eta)`); it only affects
/// [`Self::check_hypotheses`], never the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawBundle {
    /// Viscosity exponent, `alpha > 0`.
    pub alpha: f64,
    /// Adiabatic pressure exponent, `gamma > 1`.
    pub gamma: f64,
    /// Pressure coefficient, `a > 0`.
    pub a: f64,
    /// Margin in the sub-square-root growth condition, `0 < eta < 1`.
    pub eta: f64,
}

impl LawBundle {
    /// Validates and builds a law bundle.
    ///
    /// Requirements: `alpha > 0`, `gamma > 1`, `a > 0`, `0 < eta < 1`, all
    /// finite.
    pub fn new(alpha: f64, gamma: f64, a: f64, eta: f64) -> Result<Self, CoreError> {
        let check = |field: &'static str, value: f64, ok: bool, constraint: &str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(CoreError::InvalidParameter {
                    field,
                    message: format!("{constraint}, got {value}"),
                })
            }
        };
        check("alpha", alpha, alpha > 0.0, "must be > 0")?;
        check("gamma", gamma, gamma > 1.0, "must be > 1")?;
        check("a", a, a > 0.0, "must be > 0")?;
        check("eta", eta, eta > 0.0 && eta < 1.0, "must lie in (0, 1)")?;
        Ok(Self {
            alpha,
            gamma,
            a,
            eta,
        })
    }

    /// Viscosity `mu(rho) = rho^alpha`.
    #[inline]
    pub fn mu(&self, rho: f64) -> f64 {
        rho.powf(self.alpha)
    }

    /// `mu'(rho) = alpha rho^(alpha-1)`.
    #[inline]
    pub fn mu_prime(&self, rho: f64) -> f64 {
        self.alpha * rho.powf(self.alpha - 1.0)
    }

    /// The product `rho * mu(rho) = rho^(1+alpha)`, the diffusion coefficient
    /// of the mass-Lagrangian momentum equation.
    #[inline]
    pub fn rho_mu(&self, rho: f64) -> f64 {
        rho.powf(1.0 + self.alpha)
    }

    /// Antiderivative of `mu(rho)/rho^2`: `rho^(alpha-1)/(alpha-1)`, or
    /// `ln(rho)` when `alpha = 1`.
    #[inline]
    pub fn phi(&self, rho: f64) -> f64 {
        if self.alpha == 1.0 {
            rho.ln()
        } else {
            rho.powf(self.alpha - 1.0) / (self.alpha - 1.0)
        }
    }

    /// `phi'(rho) = rho^(alpha-2)`.
    #[inline]
    pub fn phi_prime(&self, rho: f64) -> f64 {
        rho.powf(self.alpha - 2.0)
    }

    /// Antiderivative of `mu(rho)/rho`: `rho^alpha/alpha`.
    #[inline]
    pub fn psi(&self, rho: f64) -> f64 {
        rho.powf(self.alpha) / self.alpha
    }

    /// `psi'(rho) = rho^(alpha-1)`.
    #[inline]
    pub fn psi_prime(&self, rho: f64) -> f64 {
        rho.powf(self.alpha - 1.0)
    }

    /// Antiderivative of `sqrt(rho^gamma mu(rho))/rho^2 = rho^(s-1)` with
    /// `s = (gamma+alpha)/2 - 1`: `rho^s/s`, or `ln(rho)` when `s = 0`.
    #[inline]
    pub fn xi(&self, rho: f64) -> f64 {
        let s = 0.5 * (self.gamma + self.alpha) - 1.0;
        if s == 0.0 {
            rho.ln()
        } else {
            rho.powf(s) / s
        }
    }

    /// `Xi'(rho) = rho^((gamma+alpha)/2 - 2)`.
    #[inline]
    pub fn xi_prime(&self, rho: f64) -> f64 {
        rho.powf(0.5 * (self.gamma + self.alpha) - 2.0)
    }

    /// Antiderivative of `mu(rho)/rho^(3/2)`: `rho^(alpha-1/2)/(alpha-1/2)`,
    /// or `ln(rho)` when `alpha = 1/2`.
    #[inline]
    pub fn g(&self, rho: f64) -> f64 {
        let p = self.alpha - 0.5;
        if p == 0.0 {
            rho.ln()
        } else {
            rho.powf(p) / p
        }
    }

    /// `G'(rho) = rho^(alpha-3/2)`.
    #[inline]
    pub fn g_prime(&self, rho: f64) -> f64 {
        rho.powf(self.alpha - 1.5)
    }

    /// Potential energy density relative to the far-field density 1:
    /// `e(rho) = rho^(gamma-1)/(gamma-1) + 1/rho - gamma/(gamma-1)`.
    ///
    /// Nonnegative, strictly convex in `1/rho`, and zero exactly at
    /// `rho = 1` — the grouping below makes that hold in floating point
    /// too, so unperturbed far-field cells contribute an exact zero. The
    /// pressure coefficient `a` is *not* included here; energy reports
    /// scale by `a` where appropriate.
    #[inline]
    pub fn e(&self, rho: f64) -> f64 {
        (rho.powf(self.gamma - 1.0) - 1.0) / (self.gamma - 1.0) + (1.0 / rho - 1.0)
    }

    /// `e'(rho) = rho^(gamma-2) - rho^(-2)`.
    #[inline]
    pub fn e_prime(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 2.0) - 1.0 / (rho * rho)
    }

    /// `pi(rho) = rho e(rho) = (rho^gamma - 1 - gamma (rho - 1))/(gamma - 1)`.
    ///
    /// Strictly decreasing on `[0, 1]` from `pi(0) = 1` to `pi(1) = 0`;
    /// used to certify that a mass window contains a point of
    /// not-too-small density.
    #[inline]
    pub fn pi(&self, rho: f64) -> f64 {
        (rho.powf(self.gamma) - 1.0 - self.gamma * (rho - 1.0)) / (self.gamma - 1.0)
    }

    /// Pressure `P(rho) = a rho^gamma`.
    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    /// Sound speed `sqrt(P'(rho)) = sqrt(a gamma rho^(gamma-1))`.
    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        (self.a * self.gamma * rho.powf(self.gamma - 1.0)).sqrt()
    }

    /// Specific-volume form of `phi`: `Phi(tau) = -phi(1/tau)`, i.e.
    /// `tau^(1-alpha)/(1-alpha)` for `alpha != 1` and `ln(tau)` for
    /// `alpha = 1`.
    #[inline]
    pub fn big_phi(&self, tau: f64) -> f64 {
        -self.phi(1.0 / tau)
    }

    /// Specific-volume form of the inverse viscosity:
    /// `Lambda(tau) = 1/mu(1/tau) = tau^alpha`.
    #[inline]
    pub fn lambda(&self, tau: f64) -> f64 {
        tau.powf(self.alpha)
    }

    /// Evaluates the whole family of derived scalars at one density.
    ///
    /// Errors if `rho <= 0` or is not finite.
    pub fn derived(&self, rho: f64) -> Result<DerivedValues, CoreError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CoreError::InvalidParameter {
                field: "rho",
                message: format!("must be a positive finite density, got {rho}"),
            });
        }
        Ok(DerivedValues {
            mu: self.mu(rho),
            phi: self.phi(rho),
            psi: self.psi(rho),
            xi: self.xi(rho),
            g: self.g(rho),
            e: self.e(rho),
            pi: self.pi(rho),
        })
    }

    /// Evaluates the specific-volume forms `Phi` and `Lambda` at one volume.
    ///
    /// Errors if `tau <= 0` or is not finite.
    pub fn volume_forms(&self, tau: f64) -> Result<VolumeForms, CoreError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CoreError::InvalidParameter {
                field: "tau",
                message: format!("must be a positive finite specific volume, got {tau}"),
            });
        }
        Ok(VolumeForms {
            big_phi: self.big_phi(tau),
            lambda: self.lambda(tau),
        })
    }

    /// The unique `rho* ∈ (0, 1)` with `pi(rho*) = 1/2`, found by bisection
    /// to an interval of width below 1e-15.
    ///
    /// `pi` decreases strictly from `pi(0) = 1` to `pi(1) = 0`, so the root
    /// exists and is simple. For `gamma = 2`, `pi(rho) = (rho - 1)^2` gives
    /// `rho* = 1 - 1/sqrt(2)`.
    pub fn pi_inverse_half(&self) -> f64 {
        let mut lo = 0.0_f64; // pi(0) = 1 > 1/2
        let mut hi = 1.0_f64; // pi(1) = 0 < 1/2
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.pi(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Checks the seven structural hypotheses both in closed form (from the
    /// exponents) and by sampling twelve decades of density, and reports the
    /// estimate suites this law supports.
    ///
    /// Pure and deterministic. For power laws the two decisions agree except
    /// within ~1e-3 of an exponent threshold, where the finite sampling range
    /// cannot distinguish bounded from slowly-divergent behaviour.
    pub fn check_hypotheses(&self) -> HypothesisReport {
        let closed = ClosedFlags {
            h1: self.alpha > 0.0,
            h2: self.alpha > 0.0,
            h3: self.alpha <= self.gamma,
            h4: self.alpha <= 1.0,
            h5: self.alpha + self.gamma >= 2.0,
            h6: self.alpha <= 2.0 / 3.0,
            h7: self.alpha < 0.5,
        };
        let (sampled, constants) = self.sampled_flags();
        let agrees = closed.h1 == sampled.h1
            && closed.h2 == sampled.h2
            && closed.h3 == sampled.h3
            && closed.h4 == sampled.h4
            && closed.h5 == sampled.h5
            && closed.h6 == sampled.h6
            && closed.h7 == sampled.h7;
        let applicability = Applicability {
            viscous_estimates: closed.h1 && closed.h2 && closed.h3 && closed.h4 && closed.h6 && closed.h7,
            capillary_estimates: closed.h1
                && closed.h2
                && closed.h3
                && closed.h4
                && closed.h5
                && closed.h6
                && closed.h7,
            capillarity_limit: closed.h1
                && closed.h2
                && closed.h3
                && closed.h4
                && closed.h5
                && closed.h6,
        };
        HypothesisReport {
            h1: closed.h1,
            h2: closed.h2,
            h3: closed.h3,
            h4: closed.h4,
            h5: closed.h5,
            h6: closed.h6,
            h7: closed.h7,
            sampled,
            agrees,
            constants,
            applicability,
        }
    }

    /// Sampling side of the hypothesis checker; see `check_hypotheses`.
    fn sampled_flags(&self) -> (ClosedFlags, BTreeMap<String, f64>) {
        let n = SAMPLE_POINTS;
        let grid = log_grid(SAMPLE_LO, SAMPLE_HI, n);
        // Number of grid steps spanning one decade (the grid covers 12).
        let dec = (n - 1) / 12;
        let top = n - 1;

        // h1: mu diverges at large density — it must still be growing across
        // the outermost decade.
        let s1 = self.mu(grid[top]) > self.mu(grid[top - dec]) * TREND_GROWTH;

        // h2: psi and mu comparable on (0, inf) — the ratio must be flat at
        // both ends; d1 is the largest two-sided ratio seen.
        let two_sided = |rho: f64| {
            let m = self.mu(rho);
            let p = self.psi(rho);
            (p / m).max(m / p)
        };
        let d1 = grid.iter().copied().map(two_sided).fold(0.0, f64::max);
        let s2 = two_sided(grid[top]) <= two_sided(grid[top - dec]) * TREND_GROWTH
            && two_sided(grid[0]) <= two_sided(grid[dec]) * TREND_GROWTH;

        // h3: mu <= d2 (1 + rho^gamma) — the ratio must be flat at the top
        // (it always tends to 0 at the bottom since mu(0+) = 0 < 1).
        let q3 = |rho: f64| self.mu(rho) / (1.0 + rho.powf(self.gamma));
        let d2 = grid.iter().copied().map(q3).fold(0.0, f64::max);
        let s3 = q3(grid[top]) <= q3(grid[top - dec]) * TREND_GROWTH;

        // h4: phi strictly increasing and divergent at vacuum — decade
        // increments toward rho -> 0 must be positive and non-decreasing.
        let inc0 = self.phi(grid[dec]) - self.phi(grid[0]);
        let inc1 = self.phi(grid[2 * dec]) - self.phi(grid[dec]);
        let s4 = inc0 > 0.0 && inc1 > 0.0 && inc0 >= inc1 * TREND_SLACK;

        // h5: Xi divergent at large density — decade increments toward
        // rho -> inf must be positive and non-decreasing.
        let xinc0 = self.xi(grid[top]) - self.xi(grid[top - dec]);
        let xinc1 = self.xi(grid[top - dec]) - self.xi(grid[top - 2 * dec]);
        let s5 = xinc0 > 0.0 && xinc1 > 0.0 && xinc0 >= xinc1 * TREND_SLACK;

        // h6: Lambda <= d4 (1 + Phi)^2 on the tau axis. Requires 1 + Phi > 0
        // throughout; the ratio must be flat at the large-volume end.
        let q6 = |tau: f64| {
            let p = 1.0 + self.big_phi(tau);
            if p > 0.0 {
                Some(self.lambda(tau) / (p * p))
            } else {
                None
            }
        };
        let (s6, d4) = trend_bounded(&grid, dec, q6);

        // h7: tau^(1/2) <= d5 (1 + Phi)^(1-eta), same structure as h6.
        let pow7 = 1.0 - self.eta;
        let q7 = |tau: f64| {
            let p = 1.0 + self.big_phi(tau);
            if p > 0.0 {
                Some(tau.sqrt() / p.powf(pow7))
            } else {
                None
            }
        };
        let (s7, d5) = trend_bounded(&grid, dec, q7);

        let mut constants = BTreeMap::new();
        constants.insert("d1".to_string(), d1);
        constants.insert("d2".to_string(), d2);
        if let Some(d4) = d4 {
            constants.insert("d4".to_string(), d4);
        }
        if let Some(d5) = d5 {
            constants.insert("d5".to_string(), d5);
        }

        (
            ClosedFlags {
                h1: s1,
                h2: s2,
                h3: s3,
                h4: s4,
                h5: s5,
                h6: s6,
                h7: s7,
            },
            constants,
        )
    }
}

/// Sup of `q` over the grid together with a top-end flatness test; `q`
/// returning `None` anywhere (denominator not positive) fails the test and
/// yields no constant.
fn trend_bounded<F: Fn(f64) -> Option<f64>>(
    grid: &[f64],
    dec: usize,
    q: F,
) -> (bool, Option<f64>) {
    let mut sup = 0.0_f64;
    for &x in grid {
        match q(x) {
            Some(v) => sup = sup.max(v),
            None => return (false, None),
        }
    }
    let top = grid.len() - 1;
    // Both values exist: the scan above would have bailed otherwise.
    let flat = q(grid[top]).unwrap() <= q(grid[top - dec]).unwrap() * TREND_GROWTH;
    (flat, Some(sup))
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let l0 = lo.ln();
    let dl = (hi.ln() - l0) / (n - 1) as f64;
    (0..n).map(|k| (l0 + k as f64 * dl).exp()).collect()
}

/// All derived scalars at one density; see [`LawBundle::derived`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedValues {
    pub mu: f64,
    pub phi: f64,
    pub psi: f64,
    pub xi: f64,
    pub g: f64,
    pub e: f64,
    pub pi: f64,
}

/// Specific-volume forms at one volume; see [`LawBundle::volume_forms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeForms {
    pub big_phi: f64,
    pub lambda: f64,
}

/// The seven structural flags, used for both the closed-form and the sampled
/// decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFlags {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
    pub h5: bool,
    pub h6: bool,
    pub h7: bool,
}

/// Which a priori estimate suites a law supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Applicability {
    /// Plain viscous system (`c = 0`): global rough-data estimates.
    /// Needs h1–h4, h6, h7 (not h5).
    pub viscous_estimates: bool,
    /// Capillary system (`c > 0`): the full estimate suite. Needs h1–h7.
    pub capillary_estimates: bool,
    /// Stability of the vanishing-capillarity limit `c -> 0`.
    /// Needs h1–h6.
    pub capillarity_limit: bool,
}

/// Result of [`LawBundle::check_hypotheses`].
///
/// `h1..h7` are the closed-form decisions (authoritative for power laws);
/// `sampled` holds the independent sampling decisions and `agrees` their
/// exact agreement. `constants` maps `"d1"`, `"d2"`, `"d4"`, `"d5"` to the
/// smallest constant validating the corresponding inequality on the sample
/// (entries are omitted when the inequality's denominator is not positive
/// throughout the range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
    pub h5: bool,
    pub h6: bool,
    pub h7: bool,
    pub sampled: ClosedFlags,
    pub agrees: bool,
    pub constants: BTreeMap<String, f64>,
    pub applicability: Applicability,
}

/// Roots `r0 <= r1` of `r² - r + c = 0` for a capillarity strength
/// `c ∈ [0, 1/4]`.
///
/// Computed in the catastrophic-cancellation-free form
/// `r1 = (1 + sqrt(1 - 4c))/2`, `r0 = c/r1`, so that `r0 + r1 = 1` and
/// `r0 r1 = c` hold to round-off even as `c -> 0` (where `r0 ~ c` and
/// `r1 -> 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapillarityRoots {
    pub c: f64,
    pub r0: f64,
    pub r1: f64,
}

impl CapillarityRoots {
    /// Errors unless `c ∈ [0, 1/4]`.
    pub fn new(c: f64) -> Result<Self, CoreError> {
        if !(c.is_finite() && (0.0..=0.25).contains(&c)) {
            return Err(CoreError::InvalidParameter {
                field: "c",
                message: format!("must lie in [0, 0.25], got {c}"),
            });
        }
        let r1 = 0.5 * (1.0 + (1.0 - 4.0 * c).sqrt());
        let r0 = c / r1;
        Ok(Self { c, r0, r1 })
    }
}
