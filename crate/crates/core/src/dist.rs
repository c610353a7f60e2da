//! Univariate asymmetric Laplace law.
//!
//! The canonical parameterization is `AL(m, a, σ)` with characteristic function
//!
//! ```text
//! φ(t) = exp(i m t) / (1 − i a t + σ² t² / 2)
//! ```
//!
//! The equivalent rate form `(m, α, β)` has density `αβ/(α+β)·exp(−α(x−m))` to the
//! right of the mode and `αβ/(α+β)·exp(−β(m−x))` to the left, linked by
//! `a = 1/α − 1/β` and `σ² = 2/(αβ)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `AL(m, a, σ)`: mode, asymmetry and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAl", into = "RawAl")]
pub struct AlParams {
    m: f64,
    a: f64,
    sigma: f64,
}

/// Rate form: mode plus right-tail rate `alpha` and left-tail rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAb", into = "RawAb")]
pub struct AbParams {
    m: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawAl {
    #[serde(default)]
    m: f64,
    a: f64,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawAb {
    #[serde(default)]
    m: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawAl> for AlParams {
    type Error = crate::Error;
    fn try_from(r: RawAl) -> Result<Self> {
        AlParams::new(r.m, r.a, r.sigma)
    }
}

impl From<AlParams> for RawAl {
    fn from(p: AlParams) -> Self {
        RawAl {
            m: p.m,
            a: p.a,
            sigma: p.sigma,
        }
    }
}

impl TryFrom<RawAb> for AbParams {
    type Error = crate::Error;
    fn try_from(r: RawAb) -> Result<Self> {
        AbParams::new(r.m, r.alpha, r.beta)
    }
}

impl From<AbParams> for RawAb {
    fn from(p: AbParams) -> Self {
        RawAb {
            m: p.m,
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

/// First two moments and the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub mode: f64,
    pub variance: f64,
}

impl AbParams {
    pub fn new(m: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !m.is_finite() {
            return domain(format!("mode must be finite, got {m}"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("alpha must be positive and finite, got {alpha}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        Ok(AbParams { m, alpha, beta })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `(m, α, β) ↦ (m, 1/α − 1/β, sqrt(2/(αβ)))`.
pub fn ab_to_al(p: AbParams) -> AlParams {
    AlParams {
        m: p.m,
        a: 1.0 / p.alpha - 1.0 / p.beta,
        sigma: (2.0 / (p.alpha * p.beta)).sqrt(),
    }
}

/// Inverse of [`ab_to_al`].
///
/// With `s = sqrt(a² + 2σ²)`, `1/α = (a + s)/2` and `1/β = (s − a)/2`. The
/// smaller of the two is recovered from the product `σ²/2` to avoid cancellation.
pub fn al_to_ab(p: AlParams) -> AbParams {
    let s = p.a.hypot(std::f64::consts::SQRT_2 * p.sigma);
    let half_var = 0.5 * p.sigma * p.sigma;
    let (inv_alpha, inv_beta) = if p.a >= 0.0 {
        let inv_alpha = 0.5 * (p.a + s);
        (inv_alpha, half_var / inv_alpha)
    } else {
        let inv_beta = 0.5 * (s - p.a);
        (half_var / inv_beta, inv_beta)
    };
    AbParams {
        m: p.m,
        alpha: 1.0 / inv_alpha,
        beta: 1.0 / inv_beta,
    }
}

impl AlParams {
    pub fn new(m: f64, a: f64, sigma: f64) -> Result<Self> {
        if !m.is_finite() || !a.is_finite() {
            return domain(format!("mode and asymmetry must be finite, got m={m}, a={a}"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be positive and finite, got {sigma}"));
        }
        Ok(AlParams { m, a, sigma })
    }

    /// Symmetric Laplace `L(m, σ)` with standard deviation `σ`.
    pub fn symmetric(m: f64, sigma: f64) -> Result<Self> {
        Self::new(m, 0.0, sigma)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rates(&self) -> AbParams {
        al_to_ab(*self)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let AbParams { m, alpha, beta } = self.rates();
        let norm = alpha * beta / (alpha + beta);
        if x >= m {
            norm * (-alpha * (x - m)).exp()
        } else {
            norm * (-beta * (m - x)).exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let AbParams { m, alpha, beta } = self.rates();
        if x < m {
            alpha / (alpha + beta) * (beta * (x - m)).exp()
        } else {
            1.0 - beta / (alpha + beta) * (-alpha * (x - m)).exp()
        }
    }

    /// Closed-form inverse of [`cdf`](Self::cdf) on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {u}"));
        }
        let AbParams { m, alpha, beta } = self.rates();
        let left_mass = alpha / (alpha + beta);
        Ok(if u < left_mass {
            m + (u / left_mass).ln() / beta
        } else {
            m - ((1.0 - u) * (alpha + beta) / beta).ln() / alpha
        })
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        let numer = Complex64::new(0.0, self.m * t).exp();
        let denom = Complex64::new(1.0 + 0.5 * self.sigma * self.sigma * t * t, -self.a * t);
        numer / denom
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.m + self.a,
            mode: self.m,
            variance: self.a * self.a + self.sigma * self.sigma,
        }
    }

    /// Exact draw `m + E₁/α − E₂/β` with `E₁, E₂` independent unit exponentials.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let AbParams { m, alpha, beta } = self.rates();
        let e1: f64 = Exp1.sample(rng);
        let e2: f64 = Exp1.sample(rng);
        m + e1 / alpha - e2 / beta
    }
}

impl Distribution<f64> for AlParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        AlParams::sample(self, rng)
    }
}
