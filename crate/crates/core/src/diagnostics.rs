//! Distances between simulated batches and their asymmetric Laplace limits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dist::AlParams;
use crate::engine::{simulate, SampleBatch, SimConfig};
use crate::error::{domain, Error, Result};
use crate::mvdist::MvAlParams;
use crate::sequence::SequenceSpec;

/// Asymptotic one-sample KS coefficient at significance 0.001.
pub const KS_COEFF_0_001: f64 = 1.949;

fn sorted_finite(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return domain("sample is empty");
    }
    if let Some(i) = sample.iter().position(|x| x.is_nan()) {
        return Err(Error::NaN(i));
    }
    let mut xs = sample.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    Ok(xs)
}

/// One-sample Kolmogorov–Smirnov statistic `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted_finite(sample)?;
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// Two-sample KS statistic `sup_x |F_n(x) − G_m(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let xa = sorted_finite(a)?;
    let xb = sorted_finite(b)?;
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Critical values at significance 0.001 for sample sizes `n` (and `m`).
pub fn ks_critical_one_sample(n: usize) -> f64 {
    KS_COEFF_0_001 / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    KS_COEFF_0_001 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// `(1/n) Σ_k exp(i t Z_k)` for each `t`.
pub fn empirical_cf(sample: &[f64], t_grid: &[f64]) -> Result<Vec<Complex64>> {
    if sample.is_empty() {
        return domain("sample is empty");
    }
    let n = sample.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let (c, s) = sample.iter().fold((0.0, 0.0), |(c, s), &z| {
                let (sin, cos) = (t * z).sin_cos();
                (c + cos, s + sin)
            });
            Complex64::new(c / n, s / n)
        })
        .collect())
}

/// Vector version of [`empirical_cf`] over the rows of a batch.
pub fn empirical_cf_vector(batch: &SampleBatch, t_grid: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    if batch.trials() == 0 {
        return domain("batch is empty");
    }
    let n = batch.trials() as f64;
    t_grid
        .iter()
        .map(|t| {
            if t.len() != batch.dim {
                return domain(format!("grid point has dimension {}, batch has {}", t.len(), batch.dim));
            }
            let (c, s) = batch.rows().fold((0.0, 0.0), |(c, s), z| {
                let phase: f64 = t.iter().zip(z).map(|(a, b)| a * b).sum();
                let (sin, cos) = phase.sin_cos();
                (c + cos, s + sin)
            });
            Ok(Complex64::new(c / n, s / n))
        })
        .collect()
}

/// Tail to fit with the Hill estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub index: f64,
    pub stderr: f64,
    pub k: usize,
}

/// Minimum order statistics used by any Hill fit.
pub const MIN_TAIL_POINTS: usize = 100;

/// Hill estimator `k / Σ_{i<k} ln(x_(i) / x_(k))` on positive data, `x_(0)` the largest.
pub fn hill_estimator(data: &[f64], k: usize) -> Result<HillEstimate> {
    if data.iter().any(|x| !(*x > 0.0)) {
        return domain("Hill estimator needs positive data");
    }
    let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    hill_from_logs(logs, k)
}

fn hill_from_logs(mut logs: Vec<f64>, k: usize) -> Result<HillEstimate> {
    if k < MIN_TAIL_POINTS || k >= logs.len() {
        return Err(Error::InsufficientTail {
            needed: MIN_TAIL_POINTS,
            got: k.min(logs.len().saturating_sub(1)),
        });
    }
    if let Some(i) = logs.iter().position(|x| x.is_nan()) {
        return Err(Error::NaN(i));
    }
    // descending; only the top k + 1 need ordering
    logs.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = logs[k];
    let excess: f64 = logs[..k].iter().map(|l| l - threshold).sum();
    if !(excess > 0.0) {
        return domain("tail is degenerate (all top order statistics equal)");
    }
    let index = k as f64 / excess;
    Ok(HillEstimate {
        index,
        stderr: index / (k as f64).sqrt(),
        k,
    })
}

/// Hill index of the `side` tail of `exp(Z)` from a sample of `Z`, using the top
/// `k = ceil(tail_fraction · n)` order statistics. For `Z ~ AL(0, a, σ)` the right
/// index targets `α` and the left index targets `β`.
pub fn hill_tail_index(log_sample: &[f64], side: Side, tail_fraction: f64) -> Result<HillEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction < 0.5) {
        return domain(format!("tail fraction must lie in (0, 0.5), got {tail_fraction}"));
    }
    let k = (tail_fraction * log_sample.len() as f64).ceil() as usize;
    let logs = match side {
        Side::Right => log_sample.to_vec(),
        Side::Left => log_sample.iter().map(|z| -z).collect(),
    };
    hill_from_logs(logs, k)
}

/// Grid of CF evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CfGrid {
    /// `points` equispaced values in `[min, max]` (scalar batches).
    Line { min: f64, max: f64, points: usize },
    /// Tensor product of the same line in every coordinate.
    Tensor { min: f64, max: f64, points: usize },
}

impl CfGrid {
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            CfGrid::Line {
                min: -5.0,
                max: 5.0,
                points: 41,
            }
        } else {
            CfGrid::Tensor {
                min: -3.0,
                max: 3.0,
                points: 9,
            }
        }
    }

    fn axis(min: f64, max: f64, points: usize) -> Vec<f64> {
        if points == 1 {
            return vec![min];
        }
        (0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect()
    }

    /// Points of the grid in dimension `dim`.
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let (min, max, points) = match *self {
            CfGrid::Line { min, max, points } | CfGrid::Tensor { min, max, points } => (min, max, points),
        };
        let axis = Self::axis(min, max, points);
        let d = if matches!(self, CfGrid::Line { .. }) { 1 } else { dim };
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&t| {
                        let mut v = prefix.clone();
                        v.push(t);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let (min, max, points) = match *self {
            CfGrid::Line { min, max, points } | CfGrid::Tensor { min, max, points } => (min, max, points),
        };
        if points == 0 || !(min.is_finite() && max.is_finite()) || min > max {
            return domain("CF grid needs finite min <= max and at least one point");
        }
        if matches!(self, CfGrid::Line { .. }) && dim != 1 {
            return domain("a line CF grid only applies to scalar batches");
        }
        Ok(())
    }
}

/// The law a batch is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Univariate(AlParams),
    Multivariate(MvAlParams),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Univariate(_) => 1,
            Target::Multivariate(m) => m.dim(),
        }
    }

    fn marginal(&self, k: usize) -> AlParams {
        match self {
            Target::Univariate(p) => *p,
            Target::Multivariate(m) => m.marginal(k),
        }
    }

    fn mean(&self) -> Vec<f64> {
        match self {
            Target::Univariate(p) => vec![p.moments().mean],
            Target::Multivariate(m) => m.mean(),
        }
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        match self {
            Target::Univariate(p) => vec![vec![p.moments().variance]],
            Target::Multivariate(m) => m.covariance(),
        }
    }

    fn cf(&self, t: &[f64]) -> Complex64 {
        match self {
            Target::Univariate(p) => p.cf(t[0]),
            Target::Multivariate(m) => m.cf(t).expect("grid matches dimension"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    #[serde(default)]
    pub cf_grid: Option<CfGrid>,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "default_sensitivity")]
    pub sensitivity_fractions: Vec<f64>,
}

fn default_tail_fraction() -> f64 {
    0.01
}

fn default_sensitivity() -> Vec<f64> {
    vec![0.005, 0.02]
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions {
            cf_grid: None,
            tail_fraction: default_tail_fraction(),
            sensitivity_fractions: default_sensitivity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillPair {
    pub tail_fraction: f64,
    pub right: HillEstimate,
    pub left: HillEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillReport {
    pub primary: HillPair,
    pub sensitivity: Vec<HillPair>,
    /// `(α, β)` of the target law.
    pub target_right: f64,
    pub target_left: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub p: f64,
    pub trials: usize,
    pub batch_fingerprint: String,
    pub target: Target,
    /// Largest per-coordinate KS distance against the target marginals.
    pub ks_distance: f64,
    pub ks_per_coordinate: Vec<f64>,
    pub ks_critical: f64,
    pub cf_grid: CfGrid,
    pub cf_sup_error: f64,
    pub sample_mean: Vec<f64>,
    pub mean_error: f64,
    pub sample_covariance: Vec<Vec<f64>>,
    pub variance_error: f64,
    pub hill: Option<HillReport>,
    pub hill_note: Option<String>,
}

fn hill_pair(z: &[f64], fraction: f64) -> Result<HillPair> {
    Ok(HillPair {
        tail_fraction: fraction,
        right: hill_tail_index(z, Side::Right, fraction)?,
        left: hill_tail_index(z, Side::Left, fraction)?,
    })
}

/// Compares a batch with `target`: KS, CF sup error, first two moments, Hill tails.
pub fn diagnose_batch(batch: &SampleBatch, target: &Target, opts: &DiagnosticOptions) -> Result<DiagnosticsReport> {
    if batch.dim != target.dim() {
        return domain(format!("batch dimension {} != target dimension {}", batch.dim, target.dim()));
    }
    let d = batch.dim;
    let n = batch.trials();
    let grid = opts.cf_grid.clone().unwrap_or_else(|| CfGrid::default_for(d));
    grid.validate(d)?;

    let columns: Vec<Vec<f64>> = (0..d).map(|k| batch.column(k)).collect();
    let ks_per_coordinate = columns
        .iter()
        .enumerate()
        .map(|(k, col)| {
            let m = target.marginal(k);
            ks_statistic(col, |x| m.cdf(x))
        })
        .collect::<Result<Vec<_>>>()?;

    let points = grid.points(d);
    let ecf = if d == 1 {
        let ts: Vec<f64> = points.iter().map(|t| t[0]).collect();
        empirical_cf(&columns[0], &ts)?
    } else {
        empirical_cf_vector(batch, &points)?
    };
    let cf_sup_error = points
        .iter()
        .zip(&ecf)
        .map(|(t, e)| (e - target.cf(t)).norm())
        .fold(0.0, f64::max);

    let sample_mean: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let target_mean = target.mean();
    let mean_error = sample_mean
        .iter()
        .zip(&target_mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let denom = (n.max(2) - 1) as f64;
    let sample_covariance: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    columns[i]
                        .iter()
                        .zip(&columns[k])
                        .map(|(x, y)| (x - sample_mean[i]) * (y - sample_mean[k]))
                        .sum::<f64>()
                        / denom
                })
                .collect()
        })
        .collect();
    let target_cov = target.covariance();
    let variance_error = (0..d)
        .flat_map(|i| (0..d).map(move |k| (i, k)))
        .map(|(i, k)| (sample_covariance[i][k] - target_cov[i][k]).abs())
        .fold(0.0, f64::max);

    let (hill, hill_note) = match target {
        Target::Multivariate(_) => (None, Some("tail indices are fitted for scalar batches only".into())),
        Target::Univariate(t) => {
            let fits = hill_pair(&columns[0], opts.tail_fraction).and_then(|primary| {
                let sensitivity = opts
                    .sensitivity_fractions
                    .iter()
                    .map(|&f| hill_pair(&columns[0], f))
                    .collect::<Result<Vec<_>>>()?;
                Ok((primary, sensitivity))
            });
            match fits {
                Ok((primary, sensitivity)) => {
                    let rates = t.rates();
                    (
                        Some(HillReport {
                            primary,
                            sensitivity,
                            target_right: rates.alpha(),
                            target_left: rates.beta(),
                        }),
                        None,
                    )
                }
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };

    Ok(DiagnosticsReport {
        p: batch.p,
        trials: n,
        batch_fingerprint: batch.fingerprint.clone(),
        target: target.clone(),
        ks_distance: ks_per_coordinate.iter().copied().fold(0.0, f64::max),
        ks_per_coordinate,
        ks_critical: ks_critical_one_sample(n),
        cf_grid: grid,
        cf_sup_error,
        sample_mean,
        mean_error,
        sample_covariance,
        variance_error,
        hill,
        hill_note,
    })
}

/// Simulates `spec` at each `p` (strictly decreasing) and diagnoses every batch
/// against `target`. `sim.p` is ignored.
pub fn convergence_sweep(
    spec: &SequenceSpec,
    p_grid: &[f64],
    sim: &SimConfig,
    target: &Target,
    opts: &DiagnosticOptions,
) -> Result<Vec<DiagnosticsReport>> {
    if p_grid.is_empty() {
        return domain("p grid is empty");
    }
    if p_grid.windows(2).any(|w| w[1] >= w[0]) {
        return domain("p grid must be strictly decreasing");
    }
    p_grid
        .iter()
        .map(|&p| {
            let cfg = SimConfig { p, ..sim.clone() };
            let batch = simulate(spec, &cfg)?;
            diagnose_batch(&batch, target, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::substream;

    fn al_draws(p: &AlParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, 0);
        (0..n).map(|_| p.sample(&mut rng)).collect()
    }

    #[test]
    fn ks_plugin_sample() {
        let p = AlParams::new(0.0, 0.4, 1.2).unwrap();
        let n = 999;
        let xs: Vec<f64> = (1..=n).map(|i| p.quantile(i as f64 / (n + 1) as f64).unwrap()).collect();
        let d = ks_statistic(&xs, |x| p.cdf(x)).unwrap();
        assert!((d - 1.0 / (n + 1) as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn ks_single_point_at_median() {
        let p = AlParams::symmetric(1.0, 2.0).unwrap();
        assert!((ks_statistic(&[1.0], |x| p.cdf(x)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_rejects_nan_and_empty() {
        assert!(matches!(ks_statistic(&[0.0, f64::NAN], |x| x), Err(Error::NaN(1))));
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn ks_own_draws_below_critical_value() {
        let p = AlParams::new(0.0, -0.3, 0.9).unwrap();
        let xs = al_draws(&p, 1_000_000, 12);
        let d = ks_statistic(&xs, |x| p.cdf(x)).unwrap();
        assert!(d < ks_critical_one_sample(xs.len()), "{d}");
    }

    #[test]
    fn ks_invariant_under_increasing_transform() {
        let p = AlParams::new(0.2, 0.5, 1.0).unwrap();
        let xs = al_draws(&p, 5000, 3);
        let d1 = ks_statistic(&xs, |x| p.cdf(x)).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let d2 = ks_statistic(&ys, |y| p.cdf(y.ln())).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        let p = AlParams::symmetric(0.0, 1.0).unwrap();
        let d = ks_two_sample(&al_draws(&p, 20000, 1), &al_draws(&p, 30000, 2)).unwrap();
        assert!(d < ks_critical_two_sample(20000, 30000));
    }

    #[test]
    fn ecf_properties() {
        let p = AlParams::new(0.0, 0.5, 1.0).unwrap();
        let xs = al_draws(&p, 100_000, 4);
        let ts: Vec<f64> = (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect();
        let ecf = empirical_cf(&xs, &ts).unwrap();
        assert_eq!(ecf[20], Complex64::new(1.0, 0.0));
        let mut worst = 0.0f64;
        for (t, e) in ts.iter().zip(&ecf) {
            assert!(e.norm() <= 1.0 + 1e-12);
            worst = worst.max((e - p.cf(*t)).norm());
        }
        assert!(worst < 3.0 / (xs.len() as f64).sqrt(), "{worst}");
        for i in 0..20 {
            assert_eq!(ecf[i], ecf[40 - i].conj());
        }
    }

    #[test]
    fn hill_on_pareto() {
        // Pareto(α = 2) by inversion: x = U^(−1/2)
        let mut rng = substream(31, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| (1.0 - rand::Rng::random::<f64>(&mut rng)).powf(-0.5))
            .collect();
        let k = 2000;
        let h = hill_estimator(&xs, k).unwrap();
        assert!((h.index - 2.0).abs() < 2.0 * 2.0 / (k as f64).sqrt(), "{h:?}");
        let scaled: Vec<f64> = xs.iter().map(|x| 7.5 * x).collect();
        let hs = hill_estimator(&scaled, k).unwrap();
        assert!((hs.index - h.index).abs() < 1e-9 * h.index);
    }

    #[test]
    fn hill_on_exp_symmetric_laplace() {
        let p = AlParams::symmetric(0.0, std::f64::consts::SQRT_2).unwrap();
        let z = al_draws(&p, 1_000_000, 8);
        for side in [Side::Right, Side::Left] {
            let h = hill_tail_index(&z, side, 0.01).unwrap();
            assert!((h.index - 1.0).abs() < 0.1, "{side:?}: {h:?}");
        }
    }

    #[test]
    fn hill_recovers_asymmetric_rates() {
        let p = AlParams::new(0.0, 0.5, 1.0).unwrap();
        let rates = p.rates();
        let z = al_draws(&p, 1_000_000, 9);
        let r = hill_tail_index(&z, Side::Right, 0.01).unwrap();
        let l = hill_tail_index(&z, Side::Left, 0.01).unwrap();
        assert!((r.index - rates.alpha()).abs() < 3.0 * r.stderr, "{r:?} vs {}", rates.alpha());
        assert!((l.index - rates.beta()).abs() < 3.0 * l.stderr, "{l:?} vs {}", rates.beta());
    }

    #[test]
    fn hill_needs_enough_tail_points() {
        let z: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        assert!(matches!(
            hill_tail_index(&z, Side::Right, 0.01),
            Err(Error::InsufficientTail { .. })
        ));
        assert!(hill_tail_index(&z, Side::Right, 0.6).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(CfGrid::default_for(1).points(1).len(), 41);
        let g = CfGrid::default_for(2).points(2);
        assert_eq!(g.len(), 81);
        assert_eq!(g[0], vec![-3.0, -3.0]);
        assert_eq!(g[80], vec![3.0, 3.0]);
        assert!(CfGrid::default_for(1).validate(2).is_err());
    }

    #[test]
    fn sweep_rejects_unordered_grid() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let target = Target::Univariate(AlParams::symmetric(0.0, 1.0).unwrap());
        let sim = SimConfig::new(0.1, 10, 1);
        let opts = DiagnosticOptions::default();
        assert!(convergence_sweep(&spec, &[0.01, 0.1], &sim, &target, &opts).is_err());
        assert!(convergence_sweep(&spec, &[], &sim, &target, &opts).is_err());
    }

    #[test]
    fn sweep_is_reproducible() {
        let spec = SequenceSpec::iid_gaussian(1.0).unwrap();
        let target = Target::Univariate(AlParams::symmetric(0.0, 1.0).unwrap());
        let sim = SimConfig::new(0.1, 20_000, 77);
        let opts = DiagnosticOptions::default();
        let a = convergence_sweep(&spec, &[0.1, 0.05], &sim, &target, &opts).unwrap();
        let b = convergence_sweep(&spec, &[0.1, 0.05], &sim.clone().with_workers(3), &target, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a[0].hill.is_some());
        for r in &a {
            assert!((0.0..=1.0).contains(&r.ks_distance) && r.cf_sup_error >= 0.0);
        }
    }
}
