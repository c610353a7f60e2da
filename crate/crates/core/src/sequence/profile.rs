//! Deterministic per-index profiles: variances `σ_j²` and drifts `a_j`, `j ≥ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A real sequence indexed from 1.
pub trait Profile {
    fn value(&self, j: u64) -> f64;

    /// Length of the repeating block, when the profile is periodic (constants have period 1).
    fn period(&self) -> Option<u64> {
        None
    }

    /// `(1/n) Σ_{j=1}^n value(j)`; `n` must be at least 1.
    fn cesaro_mean(&self, n: u64) -> f64 {
        assert!(n >= 1, "Cesàro mean needs n >= 1");
        (1..=n).map(|j| self.value(j)).sum::<f64>() / n as f64
    }
}

/// Variance profile `σ_j²`; every variant is strictly positive for all `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceProfile {
    Constant { value: f64 },
    /// `values[(j − 1) mod len]`
    Periodic { values: Vec<f64> },
    /// `base · (1 + coeff · j^(−exponent))`
    PowerDecayPerturbed { base: f64, coeff: f64, exponent: f64 },
    /// Table for `j = 1..=len`; the last entry is held for larger `j`.
    Custom { values: Vec<f64> },
}

/// Drift profile `a_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftProfile {
    Constant { value: f64 },
    Periodic { values: Vec<f64> },
    /// Table for `j = 1..=len`; the last entry is held for larger `j`.
    Custom { values: Vec<f64> },
}

fn periodic_value(values: &[f64], j: u64) -> f64 {
    values[((j - 1) % values.len() as u64) as usize]
}

fn held_value(values: &[f64], j: u64) -> f64 {
    let i = (j - 1).min(values.len() as u64 - 1);
    values[i as usize]
}

/// Exact period average at multiples of the period; full periods are never re-summed.
fn periodic_cesaro(values: &[f64], n: u64) -> f64 {
    let len = values.len() as u64;
    let period_mean = values.iter().sum::<f64>() / len as f64;
    let (q, r) = (n / len, n % len);
    if r == 0 {
        return period_mean;
    }
    let partial: f64 = values[..r as usize].iter().sum();
    period_mean * ((q * len) as f64 / n as f64) + partial / n as f64
}

fn check_table(name: &str, values: &[f64], positive: bool) -> Result<()> {
    if values.is_empty() {
        return domain(format!("{name}: table must be nonempty"));
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || (positive && *v <= 0.0) {
            return domain(format!(
                "{name}: entry {i} must be {}finite, got {v}",
                if positive { "positive and " } else { "" }
            ));
        }
    }
    Ok(())
}

impl VarianceProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            VarianceProfile::Constant { value } => check_table("constant variance", &[*value], true),
            VarianceProfile::Periodic { values } => check_table("periodic variance", values, true),
            VarianceProfile::Custom { values } => check_table("custom variance", values, true),
            VarianceProfile::PowerDecayPerturbed {
                base,
                coeff,
                exponent,
            } => {
                check_table("power-decay base", &[*base], true)?;
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return domain(format!("power-decay exponent must be positive, got {exponent}"));
                }
                // j^(−γ) ≤ 1, so positivity for all j reduces to j = 1
                if !(coeff.is_finite() && 1.0 + coeff > 0.0) {
                    return domain(format!("power-decay coeff must exceed -1, got {coeff}"));
                }
                Ok(())
            }
        }
    }

    /// `sup_{k ≥ j} σ_k²`
    pub fn sup_from(&self, j: u64) -> f64 {
        match self {
            VarianceProfile::Constant { value } => *value,
            VarianceProfile::Periodic { values } => values.iter().copied().fold(f64::MIN, f64::max),
            VarianceProfile::PowerDecayPerturbed { base, coeff, .. } => {
                if *coeff >= 0.0 {
                    self.value(j)
                } else {
                    *base
                }
            }
            VarianceProfile::Custom { values } => {
                let start = ((j.max(1) - 1) as usize).min(values.len() - 1);
                values[start..].iter().copied().fold(f64::MIN, f64::max)
            }
        }
    }

    /// `inf_{k ≥ 1} σ_k²`
    pub fn infimum(&self) -> f64 {
        match self {
            VarianceProfile::Constant { value } => *value,
            VarianceProfile::Periodic { values } | VarianceProfile::Custom { values } => {
                values.iter().copied().fold(f64::MAX, f64::min)
            }
            VarianceProfile::PowerDecayPerturbed { base, coeff, .. } => base * (1.0 + coeff.min(0.0)),
        }
    }
}

impl Profile for VarianceProfile {
    fn period(&self) -> Option<u64> {
        match self {
            VarianceProfile::Constant { .. } => Some(1),
            VarianceProfile::Periodic { values } => Some(values.len() as u64),
            _ => None,
        }
    }

    fn value(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        match self {
            VarianceProfile::Constant { value } => *value,
            VarianceProfile::Periodic { values } => periodic_value(values, j),
            VarianceProfile::PowerDecayPerturbed {
                base,
                coeff,
                exponent,
            } => base * (1.0 + coeff * (j as f64).powf(-exponent)),
            VarianceProfile::Custom { values } => held_value(values, j),
        }
    }

    fn cesaro_mean(&self, n: u64) -> f64 {
        assert!(n >= 1, "Cesàro mean needs n >= 1");
        match self {
            VarianceProfile::Constant { value } => *value,
            VarianceProfile::Periodic { values } => periodic_cesaro(values, n),
            _ => (1..=n).map(|j| self.value(j)).sum::<f64>() / n as f64,
        }
    }
}

impl DriftProfile {
    pub fn zero() -> Self {
        DriftProfile::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftProfile::Constant { value } => check_table("constant drift", &[*value], false),
            DriftProfile::Periodic { values } => check_table("periodic drift", values, false),
            DriftProfile::Custom { values } => check_table("custom drift", values, false),
        }
    }

    /// `Σ_{j=1}^n a_j`, in O(period) time for constant and periodic drifts.
    pub fn prefix_sum(&self, n: u64) -> f64 {
        match self {
            DriftProfile::Constant { value } => value * n as f64,
            DriftProfile::Periodic { values } => {
                let len = values.len() as u64;
                let full: f64 = values.iter().sum();
                full * (n / len) as f64 + values[..(n % len) as usize].iter().sum::<f64>()
            }
            DriftProfile::Custom { values } => {
                let len = values.len() as u64;
                let head = n.min(len) as usize;
                values[..head].iter().sum::<f64>() + values[values.len() - 1] * n.saturating_sub(len) as f64
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DriftProfile::Constant { value } => *value == 0.0,
            DriftProfile::Periodic { values } | DriftProfile::Custom { values } => {
                values.iter().all(|v| *v == 0.0)
            }
        }
    }
}

impl Profile for DriftProfile {
    fn period(&self) -> Option<u64> {
        match self {
            DriftProfile::Constant { .. } => Some(1),
            DriftProfile::Periodic { values } => Some(values.len() as u64),
            DriftProfile::Custom { .. } => None,
        }
    }

    fn value(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        match self {
            DriftProfile::Constant { value } => *value,
            DriftProfile::Periodic { values } => periodic_value(values, j),
            DriftProfile::Custom { values } => held_value(values, j),
        }
    }

    fn cesaro_mean(&self, n: u64) -> f64 {
        assert!(n >= 1, "Cesàro mean needs n >= 1");
        match self {
            DriftProfile::Constant { value } => *value,
            DriftProfile::Periodic { values } => periodic_cesaro(values, n),
            DriftProfile::Custom { .. } => (1..=n).map(|j| self.value(j)).sum::<f64>() / n as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cesaro_examples() {
        let c = VarianceProfile::Constant { value: 2.5 };
        assert_eq!(c.cesaro_mean(1), 2.5);
        assert_eq!(c.cesaro_mean(12345), 2.5);
        let p = VarianceProfile::Periodic { values: vec![0.5, 1.5] };
        for k in 1..50 {
            assert_eq!(p.cesaro_mean(2 * k), 1.0);
        }
        assert!((p.cesaro_mean(3) - 5.0 / 6.0).abs() < 1e-15);
        let brute: f64 = (1..=3).map(|j| p.value(j)).sum::<f64>() / 3.0;
        assert!((p.cesaro_mean(3) - brute).abs() < 1e-15);
    }

    #[test]
    fn periodic_drift_mean() {
        let d = DriftProfile::Periodic { values: vec![1.0, -1.0, 3.0] };
        assert_eq!(d.cesaro_mean(3), 1.0);
        assert_eq!(d.cesaro_mean(300), 1.0);
        assert_eq!(d.value(4), 1.0);
        assert_eq!(d.value(6), 3.0);
    }

    #[test]
    fn drift_prefix_sums() {
        for d in [
            DriftProfile::Constant { value: -0.25 },
            DriftProfile::Periodic { values: vec![2.0, 0.0, 1.0] },
            DriftProfile::Custom { values: vec![1.0, 5.0, -2.0] },
        ] {
            for n in [0u64, 1, 2, 3, 7, 31] {
                let direct: f64 = (1..=n).map(|j| d.value(j)).sum();
                assert!((d.prefix_sum(n) - direct).abs() < 1e-12, "{d:?} n={n}");
            }
        }
    }

    #[test]
    fn custom_holds_last_entry() {
        let v = VarianceProfile::Custom { values: vec![1.0, 2.0, 3.0] };
        assert_eq!(v.value(3), 3.0);
        assert_eq!(v.value(1000), 3.0);
        assert_eq!(v.sup_from(2), 3.0);
        assert_eq!(v.infimum(), 1.0);
    }

    #[test]
    fn power_decay() {
        let v = VarianceProfile::PowerDecayPerturbed {
            base: 2.0,
            coeff: 0.5,
            exponent: 1.0,
        };
        assert_eq!(v.value(1), 3.0);
        assert_eq!(v.value(2), 2.5);
        assert_eq!(v.sup_from(2), 2.5);
        assert_eq!(v.infimum(), 2.0);
        let bad = VarianceProfile::PowerDecayPerturbed {
            base: 1.0,
            coeff: -1.0,
            exponent: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn validation() {
        assert!(VarianceProfile::Constant { value: 0.0 }.validate().is_err());
        assert!(VarianceProfile::Periodic { values: vec![] }.validate().is_err());
        assert!(VarianceProfile::Periodic { values: vec![1.0, -1.0] }.validate().is_err());
        assert!(DriftProfile::Periodic { values: vec![1.0, -1.0] }.validate().is_ok());
        assert!(DriftProfile::Constant { value: f64::NAN }.validate().is_err());
    }

    #[test]
    fn serde_tags() {
        let v: VarianceProfile = serde_json::from_str(r#"{"kind":"periodic","values":[0.5,1.5]}"#).unwrap();
        assert_eq!(v, VarianceProfile::Periodic { values: vec![0.5, 1.5] });
    }

    proptest! {
        #[test]
        fn periodic_cesaro_matches_direct_sum(
            values in prop::collection::vec(0.01..10.0f64, 1..7),
            n in 1u64..500,
        ) {
            let p = VarianceProfile::Periodic { values: values.clone() };
            let direct = (1..=n).map(|j| p.value(j)).sum::<f64>() / n as f64;
            prop_assert!((p.cesaro_mean(n) - direct).abs() <= 1e-12 * direct);
            let k = values.len() as u64 * (1 + n % 5);
            prop_assert_eq!(p.cesaro_mean(k), values.iter().sum::<f64>() / values.len() as f64);
        }
    }
}
