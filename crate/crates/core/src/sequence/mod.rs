//! Declarative i.n.i.d. sequences `{X_j}` with drift profiles `{a_j}`, and
//! evaluators for the three convergence hypotheses on them.

mod family;
mod hypotheses;
mod profile;

pub use family::{gaussian_truncated_second_moment, MarginalFamily};
pub use hypotheses::{
    check_growth_condition, hypothesis_report, lindeberg_sum, CesaroEstimate, GrowthCheck,
    GrowthVerdict, HypothesisVerdicts, LimitVerdict, LindebergRow, LindebergValue,
    LindebergVerdict, TruncationPolicy, DEFAULT_ALPHA_GRID,
};
pub use profile::{DriftProfile, Profile, VarianceProfile};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Result};
use crate::mvdist::cholesky_lower;

/// Variance and drift profiles of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSpec {
    pub variance: VarianceProfile,
    #[serde(default = "DriftProfile::zero")]
    pub drift: DriftProfile,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    marginal: MarginalFamily,
    coordinates: Vec<CoordinateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correlation: Option<Vec<Vec<f64>>>,
}

/// A sequence of independent, zero-mean terms in `R^d`.
///
/// Term `j` is `X_j = D_j L ξ_j` where `ξ_j` has i.i.d. unit-variance coordinates
/// from the marginal family, `L L' = R` is the Cholesky factor of the correlation
/// matrix and `D_j = diag(σ_{j,1}, …, σ_{j,d})`. Hence `Var X_j = D_j R D_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SequenceSpec {
    marginal: MarginalFamily,
    coordinates: Vec<CoordinateSpec>,
    correlation: Option<Vec<Vec<f64>>>,
    chol: Option<DMatrix<f64>>,
}

impl TryFrom<RawSpec> for SequenceSpec {
    type Error = crate::Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        SequenceSpec::new(r.marginal, r.coordinates, r.correlation)
    }
}

impl From<SequenceSpec> for RawSpec {
    fn from(s: SequenceSpec) -> Self {
        RawSpec {
            marginal: s.marginal,
            coordinates: s.coordinates,
            correlation: s.correlation,
        }
    }
}

impl SequenceSpec {
    pub fn new(
        marginal: MarginalFamily,
        coordinates: Vec<CoordinateSpec>,
        correlation: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        marginal.validate()?;
        if coordinates.is_empty() {
            return domain("sequence needs at least one coordinate");
        }
        for c in &coordinates {
            c.variance.validate()?;
            c.drift.validate()?;
        }
        let d = coordinates.len();
        let chol = match &correlation {
            None => None,
            Some(r) => {
                if r.len() != d {
                    return domain(format!("correlation must be {d}x{d}"));
                }
                if (0..d).any(|i| r[i].len() != d || (r[i][i] - 1.0).abs() > 1e-12) {
                    return domain("correlation matrix must be square with unit diagonal");
                }
                Some(cholesky_lower(r)?)
            }
        };
        Ok(SequenceSpec {
            marginal,
            coordinates,
            correlation,
            chol,
        })
    }

    pub fn univariate(
        marginal: MarginalFamily,
        variance: VarianceProfile,
        drift: DriftProfile,
    ) -> Result<Self> {
        Self::new(marginal, vec![CoordinateSpec { variance, drift }], None)
    }

    /// Standard i.i.d. `N(0, σ²)` sequence without drift.
    pub fn iid_gaussian(variance: f64) -> Result<Self> {
        Self::univariate(
            MarginalFamily::Gaussian,
            VarianceProfile::Constant { value: variance },
            DriftProfile::zero(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn marginal(&self) -> &MarginalFamily {
        &self.marginal
    }

    pub fn coordinates(&self) -> &[CoordinateSpec] {
        &self.coordinates
    }

    pub fn correlation(&self) -> Option<&[Vec<f64>]> {
        self.correlation.as_deref()
    }

    fn correlation_entry(&self, i: usize, k: usize) -> f64 {
        match &self.correlation {
            Some(r) => r[i][k],
            None => f64::from(u8::from(i == k)),
        }
    }

    /// `Var X_j`, row major.
    pub fn covariance_at(&self, j: u64) -> Vec<Vec<f64>> {
        let sd: Vec<f64> = self
            .coordinates
            .iter()
            .map(|c| c.variance.value(j).sqrt())
            .collect();
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|k| sd[i] * sd[k] * self.correlation_entry(i, k))
                    .collect()
            })
            .collect()
    }

    /// The scalar sequence formed by coordinate `k`, when it has a law from the
    /// same family: always for Gaussian terms, otherwise only without correlation.
    pub fn coordinate_spec(&self, k: usize) -> Option<SequenceSpec> {
        let independent = self.correlation.as_ref().is_none_or(|r| {
            (0..self.dim()).all(|i| (0..self.dim()).all(|l| i == l || r[i][l] == 0.0))
        });
        if k >= self.dim() || !(independent || self.marginal == MarginalFamily::Gaussian) {
            return None;
        }
        let c = &self.coordinates[k];
        SequenceSpec::univariate(self.marginal.clone(), c.variance.clone(), c.drift.clone()).ok()
    }

    /// Hex SHA-256 of the canonical JSON form; binds sample batches to their spec.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(json))
    }

    /// One draw of scalar `X_j` (coordinate 0).
    #[inline]
    pub fn sample_scalar<R: Rng + ?Sized>(&self, j: u64, rng: &mut R) -> f64 {
        self.coordinates[0].variance.value(j).sqrt() * self.marginal.draw_standard(j, rng)
    }

    /// One draw of `X_j` written into `out` (length `dim`).
    pub fn sample_term_into<R: Rng + ?Sized>(&self, j: u64, rng: &mut R, out: &mut [f64]) {
        debug_assert!(j >= 1 && out.len() == self.dim());
        for o in out.iter_mut() {
            *o = self.marginal.draw_standard(j, rng);
        }
        if let Some(l) = &self.chol {
            for i in (0..self.dim()).rev() {
                let mut acc = 0.0;
                for k in 0..=i {
                    acc += l[(i, k)] * out[k];
                }
                out[i] = acc;
            }
        }
        for (o, c) in out.iter_mut().zip(&self.coordinates) {
            *o *= c.variance.value(j).sqrt();
        }
    }

    pub fn sample_term<R: Rng + ?Sized>(&self, j: u64, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_term_into(j, rng, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::substream;

    #[test]
    fn gaussian_constant_variance_monte_carlo() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let mut rng = substream(1, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.sample_term(17, &mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn periodic_profile_targets_per_index_variance() {
        let spec = SequenceSpec::univariate(
            MarginalFamily::CenteredUniform,
            VarianceProfile::Periodic { values: vec![0.5, 1.5] },
            DriftProfile::zero(),
        )
        .unwrap();
        let n = 400_000;
        for (j, target) in [(1u64, 0.5), (2, 1.5)] {
            let mut rng = substream(2, j);
            let var = (0..n).map(|_| spec.sample_scalar(j, &mut rng).powi(2)).sum::<f64>() / n as f64;
            // uniform: Var(X²) = 4/5 σ⁴
            let se = (0.8 * target * target / n as f64).sqrt();
            assert!((var - target).abs() < 5.0 * se, "j={j}: {var}");
        }
    }

    #[test]
    fn scalar_and_vector_paths_agree() {
        let spec = SequenceSpec::univariate(
            MarginalFamily::ScaledRademacher,
            VarianceProfile::Periodic { values: vec![4.0, 9.0] },
            DriftProfile::zero(),
        )
        .unwrap();
        let mut a = substream(4, 0);
        let mut b = substream(4, 0);
        for j in 1..100 {
            assert_eq!(spec.sample_scalar(j, &mut a), spec.sample_term(j, &mut b)[0]);
        }
    }

    #[test]
    fn correlated_terms_have_requested_covariance() {
        let spec = SequenceSpec::new(
            MarginalFamily::ScaledRademacher,
            vec![
                CoordinateSpec {
                    variance: VarianceProfile::Constant { value: 2.0 },
                    drift: DriftProfile::zero(),
                },
                CoordinateSpec {
                    variance: VarianceProfile::Constant { value: 0.5 },
                    drift: DriftProfile::zero(),
                },
            ],
            Some(vec![vec![1.0, -0.6], vec![-0.6, 1.0]]),
        )
        .unwrap();
        let target = spec.covariance_at(3);
        let n = 500_000;
        let mut rng = substream(9, 0);
        let mut acc = [[0.0; 2]; 2];
        for _ in 0..n {
            let x = spec.sample_term(3, &mut rng);
            for i in 0..2 {
                for k in 0..2 {
                    acc[i][k] += x[i] * x[k];
                }
            }
        }
        for i in 0..2 {
            for k in 0..2 {
                assert!((acc[i][k] / n as f64 - target[i][k]).abs() < 0.01);
            }
        }
        assert!(spec.coordinate_spec(0).is_none());
    }

    #[test]
    fn invalid_specs_rejected() {
        let coord = CoordinateSpec {
            variance: VarianceProfile::Constant { value: 1.0 },
            drift: DriftProfile::zero(),
        };
        assert!(SequenceSpec::new(MarginalFamily::Gaussian, vec![], None).is_err());
        assert!(SequenceSpec::new(
            MarginalFamily::Gaussian,
            vec![coord.clone(), coord.clone()],
            Some(vec![vec![1.0, 1.5], vec![1.5, 1.0]])
        )
        .is_err());
        assert!(SequenceSpec::new(
            MarginalFamily::Gaussian,
            vec![coord.clone(), coord],
            Some(vec![vec![2.0, 0.0], vec![0.0, 2.0]])
        )
        .is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = SequenceSpec::iid_gaussian(1.0).unwrap();
        let b = SequenceSpec::iid_gaussian(2.0).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn serde_round_trip() {
        let json = r#"{
            "marginal": {"kind": "gaussian_mixture_outlier", "rate": 0.2, "share": 0.9},
            "coordinates": [{"variance": {"kind": "periodic", "values": [0.5, 1.5]},
                             "drift": {"kind": "periodic", "values": [2.0, 0.0]}}]
        }"#;
        let spec: SequenceSpec = serde_json::from_str(json).unwrap();
        let back: SequenceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let bad = json.replace("0.5, 1.5", "0.5, -1.5");
        assert!(serde_json::from_str::<SequenceSpec>(&bad).is_err());
    }
}
