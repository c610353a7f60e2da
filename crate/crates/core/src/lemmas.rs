//! Exact geometric-weight series and numeric checks of the elementary inequalities
//! used in the convergence argument for geometric sums.
//!
//! Every series value carries a rigorous truncation bound: past index `N` the terms
//! are dominated by a geometric sequence with ratio `(1−p)e^{−p x̄} < 1`, where `x̄`
//! is a lower bound on the real part of the exponent.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::sequence::{DriftProfile, Profile, VarianceProfile};

/// Safety cap on summed terms.
pub const MAX_TERMS: u64 = 2_000_000_000;
const CHECK_EVERY: u64 = 256;

/// `z_n` in `Σ_{n≥1} (1−p)^{n−1} p e^{−p n z_n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComplexSeriesSpec {
    /// `z_n = z`
    ConstantZ { z: Complex64 },
    /// `z_n = z + coeff · n^(−power)`, `power > 0`
    ConvergentZn { z: Complex64, coeff: Complex64, power: f64 },
}

impl ComplexSeriesSpec {
    pub fn z(&self) -> Complex64 {
        match *self {
            ComplexSeriesSpec::ConstantZ { z } | ComplexSeriesSpec::ConvergentZn { z, .. } => z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.z();
        if !(z.re.is_finite() && z.im.is_finite()) || z.re <= -1.0 {
            return domain(format!("Re z must exceed -1, got z = {z}"));
        }
        if let ComplexSeriesSpec::ConvergentZn { coeff, power, .. } = *self {
            if !(coeff.re.is_finite() && coeff.im.is_finite()) || !(power > 0.0 && power.is_finite()) {
                return domain("perturbation needs a finite coefficient and a positive power");
            }
        }
        Ok(())
    }

    fn z_n(&self, n: u64) -> Complex64 {
        match *self {
            ComplexSeriesSpec::ConstantZ { z } => z,
            ComplexSeriesSpec::ConvergentZn { z, coeff, power } => z + coeff * (n as f64).powf(-power),
        }
    }

    /// Lower bound on `Re z_n` for all `n > big_n`.
    fn re_lower_after(&self, big_n: u64) -> f64 {
        match *self {
            ComplexSeriesSpec::ConstantZ { z } => z.re,
            ComplexSeriesSpec::ConvergentZn { z, coeff, power } => {
                z.re - coeff.norm() * ((big_n + 1) as f64).powf(-power)
            }
        }
    }

    /// `lim_{p→0} S(p) = 1/(1 + z)`.
    pub fn limit(&self) -> Complex64 {
        1.0 / (1.0 + self.z())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub terms: u64,
    /// Certified bound on `|value − exact|` from truncation.
    pub tail_bound: f64,
}

/// `Σ_{n>N} (1−p)^{n−1} p e^{−p n x} = (p/(1−p)) r^{N+1}/(1−r)` with `r = (1−p)e^{−px}`;
/// infinite when `r ≥ 1`.
pub fn geometric_tail_bound(p: f64, x: f64, big_n: u64) -> f64 {
    let ln_r = (-p).ln_1p() - p * x;
    if ln_r >= 0.0 {
        return f64::INFINITY;
    }
    (p.ln() - (-p).ln_1p() + (big_n + 1) as f64 * ln_r - (-ln_r.exp_m1()).ln()).exp()
}

fn check_p_tol(p: f64, tol: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

/// Neumaier-compensated complex accumulator.
#[derive(Default)]
struct Accumulator {
    sum: Complex64,
    comp: Complex64,
}

impl Accumulator {
    fn add(&mut self, x: Complex64) {
        fn step(s: &mut f64, c: &mut f64, x: f64) {
            let t = *s + x;
            *c += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
            *s = t;
        }
        step(&mut self.sum.re, &mut self.comp.re, x.re);
        step(&mut self.sum.im, &mut self.comp.im, x.im);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Sums `Σ_n (1−p)^{n−1} p e^{−exponent(n)}` until the tail bound for a real-part
/// floor `floor(N)` drops below `tol`.
fn certified_sum(
    p: f64,
    tol: f64,
    mut exponent: impl FnMut(u64) -> Complex64,
    floor: impl Fn(u64) -> f64,
) -> Result<SeriesValue> {
    let ln_q = (-p).ln_1p();
    let mut acc = Accumulator::default();
    let mut n = 0u64;
    let mut tail = f64::INFINITY;
    while n < MAX_TERMS {
        n += 1;
        let w = Complex64::new((n - 1) as f64 * ln_q, 0.0) - exponent(n);
        acc.add(p * w.exp());
        if n.is_multiple_of(CHECK_EVERY) {
            tail = geometric_tail_bound(p, floor(n), n);
            if tail < tol {
                return Ok(SeriesValue {
                    value: acc.total(),
                    terms: n,
                    tail_bound: tail,
                });
            }
        }
    }
    Err(Error::Truncation {
        terms: n,
        tail_bound: tail,
        requested: tol,
    })
}

/// `S(p) = Σ_{n≥1} (1−p)^{n−1} p e^{−p n z_n}` with certified truncation below `tol`.
pub fn geometric_exp_series(spec: &ComplexSeriesSpec, p: f64, tol: f64) -> Result<SeriesValue> {
    spec.validate()?;
    check_p_tol(p, tol)?;
    certified_sum(p, tol, |n| p * n as f64 * spec.z_n(n), |n| spec.re_lower_after(n))
}

/// `e^w − 1` without cancellation near `w = 0`.
fn complex_exp_m1(w: Complex64) -> Complex64 {
    let half_sin = (0.5 * w.im).sin();
    Complex64::new(
        w.re.exp_m1() * w.im.cos() - 2.0 * half_sin * half_sin,
        w.re.exp() * w.im.sin(),
    )
}

/// Closed form `T(p) = p e^{−pz} / (1 − (1−p) e^{−pz})` of the constant-`z` series.
pub fn closed_form_t(z: Complex64, p: f64) -> Result<Complex64> {
    ComplexSeriesSpec::ConstantZ { z }.validate()?;
    check_p_tol(p, 1.0)?;
    let w = Complex64::new((-p).ln_1p(), 0.0) - p * z;
    Ok(p * (-p * z).exp() / -complex_exp_m1(w))
}

/// Characteristic function at `t` of `√p Σ_{j≤ν} Y_j + p Σ_{j≤ν} a_j` with independent
/// `Y_j ~ N(0, σ_j²)` and `ν` geometric:
/// `Σ_n (1−p)^{n−1} p exp(i t p b_n − p t² τ_n² / 2)`, with `b_n = Σ_{j≤n} a_j` and
/// `τ_n² = Σ_{j≤n} σ_j²`.
pub fn gaussian_geom_cf(
    variance: &VarianceProfile,
    drift: &DriftProfile,
    p: f64,
    t: f64,
    tol: f64,
) -> Result<SeriesValue> {
    variance.validate()?;
    drift.validate()?;
    check_p_tol(p, tol)?;
    if !t.is_finite() {
        return domain(format!("t must be finite, got {t}"));
    }
    if t == 0.0 {
        return Ok(SeriesValue {
            value: Complex64::new(1.0, 0.0),
            terms: 0,
            tail_bound: 0.0,
        });
    }
    let floor = 0.5 * t * t * variance.infimum();
    let (mut b, mut tau2) = (0.0, 0.0);
    certified_sum(
        p,
        tol,
        |n| {
            b += drift.value(n);
            tau2 += variance.value(n);
            Complex64::new(0.5 * p * t * t * tau2, -t * p * b)
        },
        |_| floor,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBoundRow {
    pub p: f64,
    /// `Σ_{n≥1} (1−p)^n n^α`
    pub sum: f64,
    pub terms: u64,
    pub tail_bound: f64,
    /// `C p^(−α−1)`
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBoundTable {
    pub alpha: f64,
    pub constant: f64,
    pub rows: Vec<SumBoundRow>,
    pub pass: bool,
}

/// `C = Γ(α+1)` for `α ≤ 0`, `α^(α+1) + Γ(α+1)` for `α > 0`.
pub fn sum_bound_constant(alpha: f64) -> f64 {
    if alpha <= 0.0 {
        gamma(alpha + 1.0)
    } else {
        alpha.powf(alpha + 1.0) + gamma(alpha + 1.0)
    }
}

fn power_geometric_sum(alpha: f64, p: f64) -> Result<(f64, u64, f64)> {
    let ln_q = (-p).ln_1p();
    let term = |n: u64| (n as f64 * ln_q + alpha * (n as f64).ln()).exp();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut n = 0u64;
    let mut tail = f64::INFINITY;
    while n < MAX_TERMS {
        n += 1;
        let x = term(n);
        let t = sum + x;
        comp += if sum >= x { (sum - t) + x } else { (x - t) + sum };
        sum = t;
        if n.is_multiple_of(CHECK_EVERY) {
            // successive ratios past N are at most (1−p)(1 + 1/(N+1))^α
            let rho = if alpha <= 0.0 {
                (ln_q).exp()
            } else {
                (ln_q + alpha * (1.0 / (n + 1) as f64).ln_1p()).exp()
            };
            if rho < 1.0 {
                tail = term(n + 1) / (1.0 - rho);
                if tail < 1e-13 * (sum + comp) {
                    return Ok((sum + comp, n, tail));
                }
            }
        }
    }
    Err(Error::Truncation {
        terms: n,
        tail_bound: tail,
        requested: 1e-13,
    })
}

/// Ratios `Σ_{n≥1} (1−p)^n n^α / (C p^(−α−1))` for each `p`; all must be `≤ 1`.
pub fn check_sum_bound(alpha: f64, p_grid: &[f64]) -> Result<SumBoundTable> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return domain(format!("alpha must exceed -1, got {alpha}"));
    }
    let constant = sum_bound_constant(alpha);
    let rows = p_grid
        .iter()
        .map(|&p| {
            check_p_tol(p, 1.0)?;
            let (sum, terms, tail_bound) = power_geometric_sum(alpha, p)?;
            let bound = constant * p.powf(-alpha - 1.0);
            // the certified upper value of the sum is what must respect the bound
            let ratio = (sum + tail_bound) / bound;
            Ok(SumBoundRow {
                p,
                sum,
                terms,
                tail_bound,
                bound,
                ratio,
                pass: ratio <= 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SumBoundTable {
        alpha,
        constant,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

/// Outcome of checking one inequality `lhs ≤ rhs` over a grid; slack is `rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub max_slack: f64,
}

impl InequalityCheck {
    fn new(name: impl Into<String>) -> Self {
        InequalityCheck {
            name: name.into(),
            points: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
        }
    }

    /// Records `lhs ≤ rhs` up to an absolute rounding allowance `round`.
    fn record(&mut self, lhs: f64, rhs: f64, round: f64) {
        let slack = rhs - lhs;
        self.points += 1;
        if !(slack >= -round) {
            self.violations += 1;
        }
        self.min_slack = self.min_slack.min(slack);
        self.max_slack = self.max_slack.max(slack);
    }

    pub fn pass(&self) -> bool {
        self.violations == 0 && self.points > 0
    }
}

/// Sample grids for [`check_elementary_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryGrid {
    /// Radii (all `≤ 10`) and angle count of the polar grid for `|e^z − 1| ≤ |z| e^{|z|}`.
    pub radii: Vec<f64>,
    pub angles: usize,
    /// `(p, x)` grid for `0 < (1−p) e^{−px} < 1`, `x ≥ −1`.
    pub p_values: Vec<f64>,
    pub x_values: Vec<f64>,
    /// Taylor remainder grid: frequencies `t`, points `x`, steps `h`.
    pub frequencies: Vec<f64>,
    pub taylor_x: Vec<f64>,
    pub steps: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.log10(), hi.log10(), n).into_iter().map(|e| 10f64.powf(e)).collect()
}

impl Default for ElementaryGrid {
    fn default() -> Self {
        let mut steps = logspace(1e-3, 10.0, 41);
        steps.extend(steps.clone().iter().map(|h| -h));
        let mut p_values = logspace(1e-4, 0.5, 30);
        p_values.extend([0.9, 0.99, 0.999]);
        ElementaryGrid {
            radii: linspace(0.0, 10.0, 41),
            angles: 64,
            p_values,
            x_values: linspace(-1.0, 50.0, 103),
            frequencies: vec![1.0, 2.0],
            taylor_x: linspace(-5.0, 5.0, 101),
            steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryReport {
    pub exp_difference: InequalityCheck,
    pub contraction: InequalityCheck,
    /// One check per test function `cos(tx)`, `sin(tx)`.
    pub taylor: Vec<InequalityCheck>,
    pub pass: bool,
}

/// `K` for a function whose first three derivatives are bounded by `m[0..4]`,
/// switching from the cubic to the quadratic bound at `|h| = 1`.
pub fn taylor_constant(m: [f64; 4]) -> f64 {
    let b = 1.0;
    (m[3] / 6.0).max(2.0 * m[0] + m[1] + m[2] / 2.0).max(m[3] / 6.0 * b)
}

/// Checks three inequalities over `grid`:
/// `|e^z − 1| ≤ |z| e^{|z|}`; `0 < (1−p) e^{−px} < 1` for `x ≥ −1`; and
/// `|f(x+h) − f(x) − f'(x)h − f''(x)h²/2| ≤ K min(h², |h|³)` for `f ∈ {cos tx, sin tx}`.
pub fn check_elementary_bounds(grid: &ElementaryGrid) -> Result<ElementaryReport> {
    if grid.radii.iter().any(|r| !(0.0..=10.0).contains(r)) || grid.angles == 0 {
        return domain("radii must lie in [0, 10] and angles must be positive");
    }
    if grid.p_values.iter().any(|p| !(*p > 0.0 && *p < 1.0)) || grid.x_values.iter().any(|x| !(*x >= -1.0)) {
        return domain("contraction grid needs p in (0, 1) and x >= -1");
    }

    let mut a1 = InequalityCheck::new("|e^z - 1| <= |z| e^|z|");
    for &r in &grid.radii {
        for k in 0..grid.angles {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / grid.angles as f64);
            let lhs = complex_exp_m1(z).norm();
            let rhs = r * r.exp();
            a1.record(lhs, rhs, 8.0 * f64::EPSILON * rhs);
        }
    }

    // checked in log space: the strict upper inequality is ln(1−p) − px < 0
    let mut a2 = InequalityCheck::new("0 < (1-p) e^(-px) < 1");
    for &p in &grid.p_values {
        for &x in &grid.x_values {
            let ln_r = (-p).ln_1p() - p * x;
            let value = ln_r.exp();
            a2.points += 1;
            if !(ln_r < 0.0 && value > 0.0) {
                a2.violations += 1;
            }
            let slack = -ln_r.exp_m1();
            a2.min_slack = a2.min_slack.min(slack);
            a2.max_slack = a2.max_slack.max(slack);
        }
    }

    let mut taylor = Vec::new();
    for &t in &grid.frequencies {
        let m = [1.0, t.abs(), t * t, t.abs().powi(3)];
        let k = taylor_constant(m);
        type Derivs = fn(f64) -> [f64; 3];
        let families: [(&str, Derivs); 2] = [
            ("cos", |y| [y.cos(), -y.sin(), -y.cos()]),
            ("sin", |y| [y.sin(), y.cos(), -y.sin()]),
        ];
        for (name, f) in families {
            let mut check = InequalityCheck::new(format!("taylor remainder {name}({t}x)"));
            for &x in &grid.taylor_x {
                let [f0, f1, f2] = f(t * x);
                for &h in &grid.steps {
                    let value = f(t * (x + h))[0];
                    let remainder = value - f0 - t * f1 * h - 0.5 * t * t * f2 * h * h;
                    let rhs = k * (h * h).min(h.abs().powi(3));
                    let round = 16.0 * f64::EPSILON * (1.0 + (t * h).abs() + (t * h).powi(2));
                    check.record(remainder.abs(), rhs, round);
                }
            }
            taylor.push(check);
        }
    }

    let pass = a1.pass() && a2.pass() && taylor.iter().all(InequalityCheck::pass);
    Ok(ElementaryReport {
        exp_difference: a1,
        contraction: a2,
        taylor,
        pass,
    })
}

pub const DEFAULT_SUM_ALPHAS: [f64; 4] = [-0.5, 0.5, 1.0, 2.5];
pub const DEFAULT_SUM_PS: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const DEFAULT_SERIES_PS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const DEFAULT_CF_TS: [f64; 3] = [0.5, 1.0, 2.0];
pub const SERIES_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub z: Complex64,
    pub p: f64,
    /// Series with `z_n = z + 1/n`.
    pub perturbed: SeriesValue,
    pub limit_error: f64,
    /// Series with `z_n = z` against its closed form.
    pub constant: SeriesValue,
    pub closed_form: Complex64,
    pub closed_form_gap: f64,
    pub closed_form_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfRow {
    pub t: f64,
    pub p: f64,
    pub series: SeriesValue,
    pub limit: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub sum_bounds: Vec<SumBoundTable>,
    pub elementary: ElementaryReport,
    pub series: Vec<SeriesRow>,
    pub series_pass: bool,
    pub gaussian_cf: Vec<CfRow>,
    pub gaussian_cf_pass: bool,
    pub pass: bool,
}

/// Errors `|value − limit|` must not grow along a decreasing `p` grid (up to rounding).
pub fn nonincreasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

/// Default verification sweep. `series_ps` must be decreasing.
pub fn run_lemmas(alphas: &[f64], sum_ps: &[f64], series_ps: &[f64]) -> Result<LemmaReport> {
    let sum_bounds = alphas
        .iter()
        .map(|&a| check_sum_bound(a, sum_ps))
        .collect::<Result<Vec<_>>>()?;
    let elementary = check_elementary_bounds(&ElementaryGrid::default())?;

    let zs = [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-0.5, 2.0),
    ];
    let mut series = Vec::new();
    for z in zs {
        let perturbed_spec = ComplexSeriesSpec::ConvergentZn {
            z,
            coeff: Complex64::new(1.0, 0.0),
            power: 1.0,
        };
        for &p in series_ps {
            let perturbed = geometric_exp_series(&perturbed_spec, p, SERIES_TOL)?;
            let constant = geometric_exp_series(&ComplexSeriesSpec::ConstantZ { z }, p, SERIES_TOL)?;
            let closed_form = closed_form_t(z, p)?;
            let gap = (constant.value - closed_form).norm();
            // certified tail plus summation and closed-form rounding
            let allowance = constant.tail_bound + 1e-12;
            series.push(SeriesRow {
                z,
                p,
                limit_error: (perturbed.value - perturbed_spec.limit()).norm(),
                perturbed,
                constant,
                closed_form,
                closed_form_gap: gap,
                closed_form_ok: gap <= allowance,
            });
        }
    }
    let series_pass = series.iter().all(|r| r.closed_form_ok)
        && zs.iter().all(|z| {
            let errs: Vec<f64> = series.iter().filter(|r| r.z == *z).map(|r| r.limit_error).collect();
            nonincreasing(&errs)
        });

    let variance = VarianceProfile::Constant { value: 1.0 };
    let drift = DriftProfile::zero();
    let mut gaussian_cf = Vec::new();
    for t in DEFAULT_CF_TS {
        let limit = Complex64::new(1.0 / (1.0 + 0.5 * t * t), 0.0);
        for &p in series_ps {
            let s = gaussian_geom_cf(&variance, &drift, p, t, SERIES_TOL)?;
            gaussian_cf.push(CfRow {
                t,
                p,
                error: (s.value - limit).norm(),
                series: s,
                limit,
            });
        }
    }
    let gaussian_cf_pass = DEFAULT_CF_TS.iter().all(|&t| {
        let errs: Vec<f64> = gaussian_cf.iter().filter(|r| r.t == t).map(|r| r.error).collect();
        nonincreasing(&errs)
    });

    let pass = sum_bounds.iter().all(|t| t.pass) && elementary.pass && series_pass && gaussian_cf_pass;
    Ok(LemmaReport {
        sum_bounds,
        elementary,
        series,
        series_pass,
        gaussian_cf,
        gaussian_cf_pass,
        pass,
    })
}
