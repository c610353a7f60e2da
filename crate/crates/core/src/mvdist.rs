//! Multivariate asymmetric Laplace law `AL_d(m, a, Σ)`, defined by its
//! characteristic function `exp(i m·t) / (1 − i a·t + t'Σt/2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::AlParams;
use crate::error::{domain, Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Lower Cholesky factor of a symmetric positive-definite matrix given as rows.
///
/// Fails on asymmetric (relative tolerance 1e−12), non-square or non-PD input.
pub fn cholesky_lower(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 {
        return domain("matrix must have dimension >= 1");
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::NotPositiveDefinite(format!("matrix is not {d}x{d}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite entry".into()));
    }
    let scale = rows.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let asymmetric = (0..d).flat_map(|i| (0..i).map(move |j| (i, j)));
    for (i, j) in asymmetric {
        if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL * scale {
            return Err(Error::NotPositiveDefinite(format!(
                "entries ({i},{j}) and ({j},{i}) differ"
            )));
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))
}

#[derive(Serialize, Deserialize)]
struct RawMvAl {
    m: Vec<f64>,
    a: Vec<f64>,
    sigma: Vec<Vec<f64>>,
}

/// Mode vector, asymmetry vector and positive-definite scale matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMvAl", into = "RawMvAl")]
pub struct MvAlParams {
    m: DVector<f64>,
    a: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl TryFrom<RawMvAl> for MvAlParams {
    type Error = Error;
    fn try_from(r: RawMvAl) -> Result<Self> {
        MvAlParams::new(r.m, r.a, r.sigma)
    }
}

impl From<MvAlParams> for RawMvAl {
    fn from(p: MvAlParams) -> Self {
        RawMvAl {
            m: p.m.iter().copied().collect(),
            a: p.a.iter().copied().collect(),
            sigma: p.sigma_rows(),
        }
    }
}

impl MvAlParams {
    pub fn new(m: Vec<f64>, a: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let d = sigma.len();
        if d == 0 {
            return domain("dimension must be >= 1");
        }
        if m.len() != d || a.len() != d {
            return domain(format!(
                "dimension mismatch: m has {}, a has {}, sigma is {d}x{d}",
                m.len(),
                a.len()
            ));
        }
        if m.iter().chain(&a).any(|v| !v.is_finite()) {
            return domain("m and a must be finite");
        }
        let chol = cholesky_lower(&sigma)?;
        Ok(MvAlParams {
            m: DVector::from_vec(m),
            a: DVector::from_vec(a),
            sigma: DMatrix::from_fn(d, d, |i, j| sigma[i][j]),
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        self.m.as_slice()
    }

    pub fn a(&self) -> &[f64] {
        self.a.as_slice()
    }

    pub fn sigma_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.sigma[(i, j)]).collect())
            .collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (&self.m + &self.a).iter().copied().collect()
    }

    /// `Σ + a a'`
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let c = &self.sigma + &self.a * self.a.transpose();
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| c[(i, j)]).collect())
            .collect()
    }

    /// Law of coordinate `k`: `AL(m_k, a_k, sqrt(Σ_kk))`.
    pub fn marginal(&self, k: usize) -> AlParams {
        AlParams::new(self.m[k], self.a[k], self.sigma[(k, k)].sqrt())
            .expect("diagonal of a PD matrix is positive")
    }

    pub fn cf(&self, t: &[f64]) -> Result<Complex64> {
        if t.len() != self.dim() {
            return domain(format!("t has length {}, expected {}", t.len(), self.dim()));
        }
        let t = DVector::from_column_slice(t);
        let quad = (t.transpose() * &self.sigma * &t)[(0, 0)];
        let numer = Complex64::new(0.0, self.m.dot(&t)).exp();
        Ok(numer / Complex64::new(1.0 + 0.5 * quad, -self.a.dot(&t)))
    }

    /// Draw `m + a W + sqrt(W) L G` with `W ~ Exp(1)`, `G ~ N(0, I)` and `L L' = Σ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let w: f64 = Exp1.sample(rng);
        let g = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        let x = &self.m + &self.a * w + (&self.chol * g) * w.sqrt();
        x.iter().copied().collect()
    }
}

impl Distribution<Vec<f64>> for MvAlParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        MvAlParams::sample(self, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::substream;

    fn example() -> MvAlParams {
        MvAlParams::new(vec![0.0, 0.0], vec![0.5, 0.0], vec![vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap()
    }

    #[test]
    fn rejects_bad_sigma() {
        let bad = MvAlParams::new(vec![0.0; 2], vec![0.0; 2], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(bad, Err(Error::NotPositiveDefinite(_))));
        let asym = MvAlParams::new(vec![0.0; 2], vec![0.0; 2], vec![vec![1.0, 0.2], vec![0.1, 1.0]]);
        assert!(matches!(asym, Err(Error::NotPositiveDefinite(_))));
        assert!(MvAlParams::new(vec![], vec![], vec![]).is_err());
        assert!(MvAlParams::new(vec![0.0], vec![0.0, 1.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn cf_examples() {
        let p = example();
        assert_eq!(p.cf(&[0.0, 0.0]).unwrap(), Complex64::new(1.0, 0.0));
        let id = MvAlParams::new(vec![0.0; 2], vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = id.cf(&[1.0, 1.0]).unwrap();
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(p.cf(&[1.0]).is_err());
    }

    #[test]
    fn one_dimensional_reduces_to_univariate() {
        let (m, a, s) = (0.3, -0.8, 1.7);
        let mv = MvAlParams::new(vec![m], vec![a], vec![vec![s * s]]).unwrap();
        let uv = AlParams::new(m, a, s).unwrap();
        for i in -50..=50 {
            let t = i as f64 * 0.2;
            let d = mv.cf(&[t]).unwrap() - uv.cf(t);
            assert!(d.norm() <= 4.0 * f64::EPSILON, "t={t}: {d}");
        }
        assert_eq!(mv.marginal(0), uv);
    }

    #[test]
    fn sampler_moments_and_cf() {
        let p = example();
        let n = 1_000_000usize;
        let mut rng = substream(21, 0);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let mean: Vec<f64> = (0..2)
            .map(|k| draws.iter().map(|x| x[k]).sum::<f64>() / n as f64)
            .collect();
        let cov = p.covariance();
        for k in 0..2 {
            let se = (cov[k][k] / n as f64).sqrt();
            assert!((mean[k] - p.mean()[k]).abs() < 5.0 * se, "mean[{k}] = {}", mean[k]);
        }
        for i in 0..2 {
            for j in 0..2 {
                let c = draws.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>()
                    / (n - 1) as f64;
                assert!((c - cov[i][j]).abs() < 0.02, "cov[{i}][{j}] = {c}");
            }
        }
        let mut worst = 0.0f64;
        for i in 0..5 {
            for j in 0..5 {
                let t = [-2.0 + i as f64, -2.0 + j as f64];
                let ecf = draws
                    .iter()
                    .map(|x| Complex64::new(0.0, t[0] * x[0] + t[1] * x[1]).exp())
                    .sum::<Complex64>()
                    / n as f64;
                worst = worst.max((ecf - p.cf(&t).unwrap()).norm());
            }
        }
        assert!(worst < 0.01, "sup cf error {worst}");
    }

    #[test]
    fn serde_round_trip() {
        let p = example();
        let s = serde_json::to_string(&p).unwrap();
        let q: MvAlParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
