//! Finite-horizon evaluators for the three hypotheses behind convergence of geometric sums:
//!
//! 1. `n^(−α) σ_n² → 0` for some `α ∈ (0, 1)`, and the Cesàro limit `σ²` of `σ_j²` exists and is positive;
//! 2. the Cesàro limit `a` of the drifts `a_j` exists;
//! 3. the geometric Lindeberg sum `Σ_j (1−p)^(j−1) p E[X_j² 1{|X_j| ≥ ε p^(−1/2)}]` vanishes as `p → 0`.
//!
//! The Lindeberg sum is evaluated deterministically from closed-form truncated
//! moments. The limit verdicts are advisory: no finite computation proves a limit.

use serde::{Deserialize, Serialize};

use super::profile::{Profile, VarianceProfile};
use super::SequenceSpec;
use crate::error::{domain, Error, Result};
use crate::mvdist::cholesky_lower;

pub const DEFAULT_ALPHA_GRID: [f64; 4] = [0.25, 0.5, 0.75, 0.9];

/// Trend criterion shared by the growth and Lindeberg verdicts.
const TREND_FACTOR: f64 = 0.1;
const CESARO_STABILITY: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub alpha: f64,
    pub n_max: u64,
    /// `(n, n^(−α) σ_n²)` on a log-spaced grid.
    pub grid: Vec<(u64, f64)>,
    pub first_decade_max: f64,
    pub last_decade_max: f64,
    pub pass: bool,
    pub advisory: bool,
}

fn log_grid(n_max: u64, per_decade: u32) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..=n_max.min(10)).collect();
    let decades = (n_max as f64).log10();
    let steps = (decades * per_decade as f64).ceil() as u32;
    for s in 0..=steps {
        let n = 10f64.powf(s as f64 / per_decade as f64).round() as u64;
        if n > 10 && n <= n_max {
            grid.push(n);
        }
    }
    grid.push(n_max);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Samples `n^(−α) σ_n²` up to `n_max` and passes when the maximum over the last
/// decade is below a tenth of the maximum over `n ≤ 10`.
pub fn check_growth_condition(profile: &VarianceProfile, alpha: f64, n_max: u64) -> Result<GrowthCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("growth exponent must lie in (0, 1), got {alpha}"));
    }
    if n_max < 100 {
        return domain(format!("growth check needs n_max >= 100, got {n_max}"));
    }
    let grid: Vec<(u64, f64)> = log_grid(n_max, 20)
        .into_iter()
        .map(|n| (n, (n as f64).powf(-alpha) * profile.value(n)))
        .collect();
    let max_over = |lo: u64, hi: u64| {
        grid.iter()
            .filter(|(n, _)| (lo..=hi).contains(n))
            .map(|(_, v)| *v)
            .fold(f64::MIN, f64::max)
    };
    let first_decade_max = max_over(1, 10);
    let last_decade_max = max_over(n_max / 10, n_max);
    Ok(GrowthCheck {
        alpha,
        n_max,
        pass: last_decade_max < TREND_FACTOR * first_decade_max,
        first_decade_max,
        last_decade_max,
        grid,
        advisory: true,
    })
}

/// Where to cut the infinite Lindeberg series and how large a tail bound is tolerated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Number of terms; `ceil(40/p)` when unset.
    pub horizon: Option<u64>,
    pub tolerance: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            horizon: None,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindebergValue {
    pub value: f64,
    pub terms: u64,
    /// Bound on the omitted tail `sup_{j > J} σ_j² · (1 − p)^J`.
    pub tail_bound: f64,
    /// Untruncated weighted variance `Σ_{j ≤ J} (1−p)^(j−1) p σ_j²`, the `ε → 0` limit.
    pub weighted_variance: f64,
}

/// Geometric Lindeberg sum for a scalar sequence.
pub fn lindeberg_sum(
    spec: &SequenceSpec,
    p: f64,
    epsilon: f64,
    policy: &TruncationPolicy,
) -> Result<LindebergValue> {
    if spec.dim() != 1 {
        return Err(Error::Unsupported(
            "Lindeberg sum is defined per scalar sequence; use SequenceSpec::coordinate_spec".into(),
        ));
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    let variance = &spec.coordinates()[0].variance;
    let family = spec.marginal();
    let horizon = policy.horizon.unwrap_or_else(|| (40.0 / p).ceil() as u64).max(1);
    let threshold = epsilon / p.sqrt();
    let ratio = 1.0 - p;

    let mut weight = p;
    let mut value = 0.0;
    let mut weighted_variance = 0.0;
    for j in 1..=horizon {
        let var = variance.value(j);
        value += weight * family.truncated_second_moment(j, var, threshold);
        weighted_variance += weight * var;
        weight *= ratio;
    }
    let tail_bound = variance.sup_from(horizon + 1) * (horizon as f64 * (-p).ln_1p()).exp();
    if tail_bound > policy.tolerance {
        return Err(Error::Truncation {
            terms: horizon,
            tail_bound,
            requested: policy.tolerance,
        });
    }
    Ok(LindebergValue {
        value,
        terms: horizon,
        tail_bound,
        weighted_variance,
    })
}

/// Cesàro mean at `n_max` together with a `c(n) ≈ L + B/n` extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroEstimate {
    pub n_max: u64,
    pub raw: f64,
    pub extrapolated: f64,
    pub stable: bool,
}

fn checkpoints(n_max: u64, period: Option<u64>) -> Vec<u64> {
    let lo = (n_max / 100).max(1) as f64;
    let mut pts: Vec<u64> = (0..16)
        .map(|i| {
            let n = (lo * (n_max as f64 / lo).powf(i as f64 / 15.0)).round() as u64;
            match period {
                Some(per) if n >= per => n - n % per,
                _ => n,
            }
        })
        .collect();
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn extrapolate(points: &[(u64, f64)]) -> CesaroEstimate {
    let (n_max, raw) = *points.last().expect("nonempty checkpoints");
    let k = points.len() as f64;
    let mx = points.iter().map(|(n, _)| 1.0 / *n as f64).sum::<f64>() / k;
    let my = points.iter().map(|(_, c)| *c).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|(n, _)| (1.0 / *n as f64 - mx).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(n, c)| (1.0 / *n as f64 - mx) * (c - my))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let extrapolated = my - slope * mx;
    CesaroEstimate {
        n_max,
        raw,
        extrapolated,
        stable: (extrapolated - raw).abs() <= CESARO_STABILITY * extrapolated.abs().max(1.0),
    }
}

fn cesaro_estimate<P: Profile>(profile: &P, n_max: u64) -> CesaroEstimate {
    let pts: Vec<(u64, f64)> = checkpoints(n_max, profile.period())
        .into_iter()
        .map(|n| (n, profile.cesaro_mean(n)))
        .collect();
    extrapolate(&pts)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cesàro estimate of `σ_{j,i} σ_{j,k}` by a single prefix-sum pass.
fn cross_cesaro(a: &VarianceProfile, b: &VarianceProfile, n_max: u64) -> CesaroEstimate {
    let period = match (a.period(), b.period()) {
        (Some(x), Some(y)) => Some(x / gcd(x, y) * y),
        _ => None,
    };
    let cps = checkpoints(n_max, period);
    let mut pts = Vec::with_capacity(cps.len());
    let mut acc = 0.0;
    let mut next = 0;
    for j in 1..=n_max {
        acc += (a.value(j) * b.value(j)).sqrt();
        if next < cps.len() && cps[next] == j {
            pts.push((j, acc / j as f64));
            next += 1;
        }
    }
    extrapolate(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    /// One row of checks (one per α) for each coordinate.
    pub per_coordinate: Vec<Vec<GrowthCheck>>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    /// Per-coordinate Cesàro estimates (diagonal entries for variances).
    pub estimates: Vec<CesaroEstimate>,
    /// Limit matrix for variances (row major); for drifts a single row.
    pub limit: Vec<Vec<f64>>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindebergRow {
    pub coordinate: usize,
    pub epsilon: f64,
    pub p: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub weighted_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindebergTrend {
    pub coordinate: usize,
    pub epsilon: f64,
    /// Value at the largest p.
    pub first: f64,
    /// Value at the smallest p.
    pub last: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindebergVerdict {
    pub evaluated: bool,
    pub note: Option<String>,
    pub rows: Vec<LindebergRow>,
    pub trends: Vec<LindebergTrend>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdicts {
    pub dim: usize,
    pub growth: GrowthVerdict,
    pub variance: LimitVerdict,
    pub drift: LimitVerdict,
    pub lindeberg: LindebergVerdict,
    /// Estimated `σ̂²` (scalar case) or `Σ̂` diagonal.
    pub sigma2_hat: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub advisory: bool,
    pub pass: bool,
}

impl HypothesisVerdicts {
    /// `Σ̂` row major.
    pub fn sigma_hat(&self) -> &[Vec<f64>] {
        &self.variance.limit
    }
}

/// Bundles the growth, Cesàro-limit and Lindeberg checks into one verdict.
pub fn hypothesis_report(
    spec: &SequenceSpec,
    p_grid: &[f64],
    epsilon_grid: &[f64],
    alpha_grid: &[f64],
    n_max: u64,
) -> Result<HypothesisVerdicts> {
    if p_grid.is_empty() || epsilon_grid.is_empty() || alpha_grid.is_empty() {
        return domain("hypothesis report needs nonempty p, epsilon and alpha grids");
    }
    let d = spec.dim();
    let coords = spec.coordinates();

    let per_coordinate = coords
        .iter()
        .map(|c| {
            alpha_grid
                .iter()
                .map(|&alpha| check_growth_condition(&c.variance, alpha, n_max))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let growth = GrowthVerdict {
        pass: per_coordinate.iter().all(|row| row.iter().any(|g| g.pass)),
        per_coordinate,
    };

    let var_estimates: Vec<CesaroEstimate> = coords
        .iter()
        .map(|c| cesaro_estimate(&c.variance, n_max))
        .collect();
    let mut sigma = vec![vec![0.0; d]; d];
    let mut cross_stable = true;
    for i in 0..d {
        sigma[i][i] = var_estimates[i].extrapolated;
        for k in 0..i {
            let r = spec.correlation().map_or(0.0, |r| r[i][k]);
            if r != 0.0 {
                let est = cross_cesaro(&coords[i].variance, &coords[k].variance, n_max);
                cross_stable &= est.stable;
                sigma[i][k] = r * est.extrapolated;
                sigma[k][i] = sigma[i][k];
            }
        }
    }
    let variance = LimitVerdict {
        pass: cross_stable
            && var_estimates.iter().all(|e| e.stable && e.extrapolated > 0.0)
            && cholesky_lower(&sigma).is_ok(),
        estimates: var_estimates,
        limit: sigma,
    };

    let drift_estimates: Vec<CesaroEstimate> = coords
        .iter()
        .map(|c| cesaro_estimate(&c.drift, n_max))
        .collect();
    let drift = LimitVerdict {
        pass: drift_estimates.iter().all(|e| e.stable),
        limit: vec![drift_estimates.iter().map(|e| e.extrapolated).collect()],
        estimates: drift_estimates,
    };

    let lindeberg = lindeberg_verdict(spec, p_grid, epsilon_grid)?;

    Ok(HypothesisVerdicts {
        dim: d,
        sigma2_hat: (0..d).map(|i| variance.limit[i][i]).collect(),
        a_hat: drift.limit[0].clone(),
        pass: growth.pass && variance.pass && drift.pass && lindeberg.pass,
        growth,
        variance,
        drift,
        lindeberg,
        advisory: true,
    })
}

fn lindeberg_verdict(spec: &SequenceSpec, p_grid: &[f64], epsilon_grid: &[f64]) -> Result<LindebergVerdict> {
    let mut ps = p_grid.to_vec();
    ps.sort_by(|a, b| b.total_cmp(a));
    let scalar: Option<Vec<SequenceSpec>> = (0..spec.dim()).map(|k| spec.coordinate_spec(k)).collect();
    let Some(scalar) = scalar else {
        return Ok(LindebergVerdict {
            evaluated: false,
            note: Some(format!(
                "coordinates of correlated {} terms have no closed-form truncated moments",
                spec.marginal().name()
            )),
            rows: vec![],
            trends: vec![],
            pass: true,
        });
    };
    let policy = TruncationPolicy::default();
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    for (k, s) in scalar.iter().enumerate() {
        for &eps in epsilon_grid {
            let values = ps
                .iter()
                .map(|&p| lindeberg_sum(s, p, eps, &policy))
                .collect::<Result<Vec<_>>>()?;
            for (&p, v) in ps.iter().zip(&values) {
                rows.push(LindebergRow {
                    coordinate: k,
                    epsilon: eps,
                    p,
                    value: v.value,
                    tail_bound: v.tail_bound,
                    weighted_variance: v.weighted_variance,
                });
            }
            let first = values[0].value;
            let last_v = values[values.len() - 1];
            let pass = last_v.value <= TREND_FACTOR * first
                || last_v.value <= 1e-10 * last_v.weighted_variance;
            trends.push(LindebergTrend {
                coordinate: k,
                epsilon: eps,
                first,
                last: last_v.value,
                pass,
            });
        }
    }
    Ok(LindebergVerdict {
        evaluated: true,
        note: None,
        pass: trends.iter().all(|t| t.pass),
        rows,
        trends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{CoordinateSpec, DriftProfile, MarginalFamily};
    use crate::testutil::substream;
    use proptest::prelude::*;

    fn outlier_spec() -> SequenceSpec {
        SequenceSpec::univariate(
            MarginalFamily::GaussianMixtureOutlier {
                rate: 0.2,
                share: 0.9,
            },
            VarianceProfile::Constant { value: 1.0 },
            DriftProfile::zero(),
        )
        .unwrap()
    }

    #[test]
    fn growth_examples() {
        let c = check_growth_condition(&VarianceProfile::Constant { value: 1.0 }, 0.5, 1_000_000).unwrap();
        assert!(c.pass && c.advisory);
        for (n, v) in &c.grid {
            assert!((v - (*n as f64).powf(-0.5)).abs() < 1e-15);
        }
        let linear = VarianceProfile::Custom {
            values: (1..=100_000).map(|n| n as f64).collect(),
        };
        assert!(!check_growth_condition(&linear, 0.5, 100_000).unwrap().pass);
        let periodic = VarianceProfile::Periodic { values: vec![0.5, 1.5] };
        assert!(check_growth_condition(&periodic, 0.9, 1_000_000).unwrap().pass);
        assert!(check_growth_condition(&periodic, 1.0, 1000).is_err());
        assert!(check_growth_condition(&periodic, 0.5, 50).is_err());
    }

    #[test]
    fn bounded_family_above_threshold_is_zero() {
        // |X| ≤ 2 while ε p^(−1/2) = 0.5 / 0.1 = 5
        let spec = SequenceSpec::univariate(
            MarginalFamily::ScaledRademacher,
            VarianceProfile::Constant { value: 4.0 },
            DriftProfile::zero(),
        )
        .unwrap();
        let v = lindeberg_sum(&spec, 0.01, 0.5, &TruncationPolicy::default()).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.tail_bound <= 1e-12);
    }

    #[test]
    fn iid_gaussian_decreases_toward_zero() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let vals: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&p| lindeberg_sum(&spec, p, 0.1, &TruncationPolicy::default()).unwrap().value)
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] > 0.0, "{vals:?}");
        // i.i.d. terms: the sum collapses to E[X² 1{|X| ≥ ε/√p}] for a single N(0, 1)
        for (p, v) in [1e-1f64, 1e-2, 1e-3].iter().zip(&vals) {
            let expect = crate::sequence::gaussian_truncated_second_moment(1.0, 0.1 / p.sqrt());
            assert!((v - expect).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn gaussian_value_cross_checked_by_monte_carlo() {
        // Draw J ~ geometric(p), X ~ N(0, σ_J²) and average X² 1{|X| ≥ c}.
        let spec = SequenceSpec::univariate(
            MarginalFamily::Gaussian,
            VarianceProfile::Periodic { values: vec![0.5, 1.5] },
            DriftProfile::zero(),
        )
        .unwrap();
        let (p, eps) = (0.01, 0.15);
        let exact = lindeberg_sum(&spec, p, eps, &TruncationPolicy::default()).unwrap().value;
        let mut rng = substream(77, 0);
        let n = 1_000_000;
        let c = eps / p.sqrt();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let j = crate::engine::geometric_sample(p, &mut rng).unwrap();
            let x = spec.sample_scalar(j, &mut rng);
            let y = if x.abs() >= c { x * x } else { 0.0 };
            s += y;
            s2 += y * y;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 5.0 * se, "{mean} vs {exact}");
    }

    #[test]
    fn outlier_family_stays_bounded_away_from_zero() {
        let spec = outlier_spec();
        for eps in [0.1, 0.5, 1.0] {
            for p in [1e-1, 1e-2, 1e-3, 1e-4] {
                let v = lindeberg_sum(&spec, p, eps, &TruncationPolicy::default()).unwrap();
                assert!(v.value > 0.1 * v.weighted_variance, "eps={eps} p={p}: {v:?}");
            }
        }
    }

    #[test]
    fn truncation_error_when_horizon_too_short() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let policy = TruncationPolicy {
            horizon: Some(10),
            tolerance: 1e-12,
        };
        assert!(matches!(
            lindeberg_sum(&spec, 0.01, 0.1, &policy),
            Err(Error::Truncation { terms: 10, .. })
        ));
    }

    #[test]
    fn bounded_family_below_support_gives_full_series() {
        let spec = SequenceSpec::univariate(
            MarginalFamily::ScaledRademacher,
            VarianceProfile::Periodic { values: vec![0.5, 1.5, 1.0] },
            DriftProfile::zero(),
        )
        .unwrap();
        let p = 0.02;
        // ε p^(−1/2) below min |X| = √0.5
        let v = lindeberg_sum(&spec, p, 0.05, &TruncationPolicy::default()).unwrap();
        let brute: f64 = (1..=20_000u64)
            .map(|j| (1.0 - p).powi(j as i32 - 1) * p * spec.coordinates()[0].variance.value(j))
            .sum();
        assert!((v.value - brute).abs() < 1e-12, "{} vs {brute}", v.value);
        assert_eq!(v.value, v.weighted_variance);
    }

    #[test]
    fn report_iid_gaussian() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let r = hypothesis_report(&spec, &[1e-1, 1e-2, 1e-3], &[0.1, 0.5, 1.0], &DEFAULT_ALPHA_GRID, 1_000_000)
            .unwrap();
        assert!(r.pass, "{r:#?}");
        assert!((r.sigma2_hat[0] - 1.0).abs() < 1e-3);
        assert_eq!(r.a_hat[0], 0.0);
    }

    #[test]
    fn report_periodic_profiles() {
        let spec = SequenceSpec::univariate(
            MarginalFamily::Gaussian,
            VarianceProfile::Periodic { values: vec![0.5, 1.5] },
            DriftProfile::Periodic { values: vec![1.0, -1.0, 3.0] },
        )
        .unwrap();
        let r = hypothesis_report(&spec, &[1e-1, 1e-2, 1e-3], &[0.5], &[0.5], 100_000).unwrap();
        assert!(r.pass);
        assert!((r.sigma2_hat[0] - 1.0).abs() < 1e-12);
        assert!((r.a_hat[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_flags_lindeberg_violation_only() {
        let r = hypothesis_report(&outlier_spec(), &[1e-1, 1e-2, 1e-3], &[0.1, 0.5, 1.0], &DEFAULT_ALPHA_GRID, 100_000)
            .unwrap();
        assert!(r.growth.pass && r.variance.pass && r.drift.pass);
        assert!(!r.lindeberg.pass && !r.pass);
    }

    #[test]
    fn report_multivariate_gaussian() {
        let spec = SequenceSpec::new(
            MarginalFamily::Gaussian,
            vec![
                CoordinateSpec {
                    variance: VarianceProfile::Periodic { values: vec![0.5, 1.5] },
                    drift: DriftProfile::Constant { value: 0.5 },
                },
                CoordinateSpec {
                    variance: VarianceProfile::Constant { value: 1.0 },
                    drift: DriftProfile::zero(),
                },
            ],
            Some(vec![vec![1.0, 0.3], vec![0.3, 1.0]]),
        )
        .unwrap();
        let r = hypothesis_report(&spec, &[1e-1, 1e-3], &[0.5], &[0.5], 100_000).unwrap();
        assert!(r.pass && r.lindeberg.evaluated);
        // Σ̂_12 = 0.3 · mean(√0.5, √1.5)
        let expect = 0.3 * 0.5 * (0.5f64.sqrt() + 1.5f64.sqrt());
        assert!((r.sigma_hat()[0][1] - expect).abs() < 1e-6);
        assert_eq!(r.a_hat, vec![0.5, 0.0]);
    }

    #[test]
    fn correlated_non_gaussian_skips_lindeberg() {
        let coord = CoordinateSpec {
            variance: VarianceProfile::Constant { value: 1.0 },
            drift: DriftProfile::zero(),
        };
        let spec = SequenceSpec::new(
            MarginalFamily::ScaledRademacher,
            vec![coord.clone(), coord],
            Some(vec![vec![1.0, 0.5], vec![0.5, 1.0]]),
        )
        .unwrap();
        let r = hypothesis_report(&spec, &[1e-2], &[0.5], &[0.5], 1000).unwrap();
        assert!(!r.lindeberg.evaluated && r.lindeberg.note.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nonincreasing_in_epsilon(
            fam in 0usize..4, p in 0.005..0.5f64, e1 in 0.01..3.0f64, e2 in 0.01..3.0f64,
        ) {
            let marginal = [
                MarginalFamily::Gaussian,
                MarginalFamily::ScaledRademacher,
                MarginalFamily::CenteredUniform,
                MarginalFamily::GaussianMixtureOutlier { rate: 0.5, share: 0.5 },
            ][fam].clone();
            let spec = SequenceSpec::univariate(
                marginal,
                VarianceProfile::PowerDecayPerturbed { base: 1.0, coeff: 0.8, exponent: 0.5 },
                DriftProfile::zero(),
            ).unwrap();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let pol = TruncationPolicy::default();
            let a = lindeberg_sum(&spec, p, lo, &pol).unwrap().value;
            let b = lindeberg_sum(&spec, p, hi, &pol).unwrap().value;
            prop_assert!(b <= a + 1e-15);
        }
    }
}
