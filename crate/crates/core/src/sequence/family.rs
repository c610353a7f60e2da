//! Zero-mean marginal families and their closed-form truncated second moments.
//!
//! Each family is described through its unit-variance member at index `j`; the
//! term `X_j` is `σ_j` times that member. Truncated moments
//! `E[X² 1{|X| ≥ c}]` for `Var X = v`:
//!
//! * Gaussian: `v · (2 u φ(u) + erfc(u/√2))` with `u = c/√v`.
//! * Scaled Rademacher (`X = ±√v`): `v` when `√v ≥ c`, else 0.
//! * Centered uniform on `[−w, w]`, `w = √(3v)`: `(w³ − c³)/(3w)` for `0 ≤ c < w`.
//! * Gaussian mixture outlier: with probability `q_j = κ/(κ + j)` the draw is
//!   `N(0, s·v/q_j)`, otherwise `N(0, (1 − s)·v/(1 − q_j))`. The outlier share `s`
//!   of the variance never vanishes and the outlier scale grows like `√j`, which
//!   breaks the geometric Lindeberg condition while keeping `Var X_j = v` exact.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalFamily {
    Gaussian,
    ScaledRademacher,
    CenteredUniform,
    GaussianMixtureOutlier {
        /// `κ > 0` in the outlier probability `q_j = κ/(κ + j)`.
        rate: f64,
        /// Fraction `s ∈ (0, 1)` of the variance carried by the outlier component.
        share: f64,
    },
}

/// `E[X² 1{|X| ≥ c}]` for `X ~ N(0, var)`.
pub fn gaussian_truncated_second_moment(var: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return var;
    }
    let u = c / var.sqrt();
    let density = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    var * (2.0 * u * density + erfc(u / std::f64::consts::SQRT_2))
}

impl MarginalFamily {
    pub fn validate(&self) -> Result<()> {
        if let MarginalFamily::GaussianMixtureOutlier { rate, share } = *self {
            if !(rate.is_finite() && rate > 0.0) {
                return domain(format!("outlier rate must be positive, got {rate}"));
            }
            if !(share > 0.0 && share < 1.0) {
                return domain(format!("outlier share must lie in (0, 1), got {share}"));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            MarginalFamily::Gaussian => "gaussian",
            MarginalFamily::ScaledRademacher => "scaled_rademacher",
            MarginalFamily::CenteredUniform => "centered_uniform",
            MarginalFamily::GaussianMixtureOutlier { .. } => "gaussian_mixture_outlier",
        }
    }

    /// Mixture parameters at index `j`: `(q_j, outlier variance, inlier variance)` per unit variance.
    fn mixture_at(rate: f64, share: f64, j: u64) -> (f64, f64, f64) {
        let q = rate / (rate + j as f64);
        (q, share / q, (1.0 - share) / (1.0 - q))
    }

    /// One draw of the unit-variance, zero-mean member at index `j`.
    #[inline]
    pub fn draw_standard<R: Rng + ?Sized>(&self, j: u64, rng: &mut R) -> f64 {
        match *self {
            MarginalFamily::Gaussian => StandardNormal.sample(rng),
            MarginalFamily::ScaledRademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MarginalFamily::CenteredUniform => {
                (2.0 * rng.random::<f64>() - 1.0) * 3.0f64.sqrt()
            }
            MarginalFamily::GaussianMixtureOutlier { rate, share } => {
                let (q, v_out, v_in) = Self::mixture_at(rate, share, j);
                let g: f64 = StandardNormal.sample(rng);
                if rng.random::<f64>() < q {
                    g * v_out.sqrt()
                } else {
                    g * v_in.sqrt()
                }
            }
        }
    }

    /// Largest attainable `|X|` for variance `var`, when the support is bounded.
    pub fn support_bound(&self, var: f64) -> Option<f64> {
        match self {
            MarginalFamily::ScaledRademacher => Some(var.sqrt()),
            MarginalFamily::CenteredUniform => Some((3.0 * var).sqrt()),
            _ => None,
        }
    }

    /// `E[X_j² 1{|X_j| ≥ c}]` where `Var X_j = var`.
    pub fn truncated_second_moment(&self, j: u64, var: f64, c: f64) -> f64 {
        match *self {
            MarginalFamily::Gaussian => gaussian_truncated_second_moment(var, c),
            MarginalFamily::ScaledRademacher => {
                if var.sqrt() >= c {
                    var
                } else {
                    0.0
                }
            }
            MarginalFamily::CenteredUniform => {
                let w = (3.0 * var).sqrt();
                if c <= 0.0 {
                    var
                } else if c >= w {
                    0.0
                } else {
                    (w * w * w - c * c * c) / (3.0 * w)
                }
            }
            MarginalFamily::GaussianMixtureOutlier { rate, share } => {
                let (q, v_out, v_in) = Self::mixture_at(rate, share, j);
                q * gaussian_truncated_second_moment(var * v_out, c)
                    + (1.0 - q) * gaussian_truncated_second_moment(var * v_in, c)
            }
        }
    }
}
