//! Human-readable text forms of the CLI reports.

use std::fmt::Write;

use geosum_core::diagnostics::Target;
use geosum_core::lemmas::{InequalityCheck, SumBoundTable};

use crate::commands::{DiagnoseReport, LemmaOutput, SimulateManifest, TailFit, WealthReport};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn simulate(m: &SimulateManifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config fingerprint {}", m.config_fingerprint);
    let _ = writeln!(s, "resolved config    {}", m.resolved_config.display());
    for f in &m.files {
        let _ = writeln!(s, "p = {:<8} {:>9} trials  {}", f.p, f.trials, f.path.display());
    }
    s
}

fn describe_target(t: &Target) -> String {
    match t {
        Target::Univariate(p) => format!("AL(m = {}, a = {:.6}, sigma = {:.6})", p.m(), p.a(), p.sigma()),
        Target::Multivariate(m) => format!("AL_d(m = {:?}, a = {:?}, Sigma = {:?})", m.m(), m.a(), m.sigma_rows()),
    }
}

pub fn diagnose(r: &DiagnoseReport) -> String {
    let mut s = String::new();
    let h = &r.hypotheses;
    let _ = writeln!(s, "config fingerprint {}", r.config_fingerprint);
    let _ = writeln!(s, "spec fingerprint   {}", r.spec_fingerprint);
    let _ = writeln!(s, "target ({:?}): {}", r.target_source, describe_target(&r.target));
    let _ = writeln!(s, "a_hat = {:?}, sigma2_hat = {:?}", h.a_hat, h.sigma2_hat);
    let _ = writeln!(s);
    let _ = writeln!(s, "hypotheses (finite-horizon, advisory)");
    let _ = writeln!(s, "  growth      {}", verdict(h.growth.pass));
    for (k, row) in h.growth.per_coordinate.iter().enumerate() {
        for g in row {
            let _ = writeln!(
                s,
                "    coord {k} alpha {:<5} first-decade max {:.3e}  last-decade max {:.3e}  {}",
                g.alpha,
                g.first_decade_max,
                g.last_decade_max,
                verdict(g.pass)
            );
        }
    }
    let _ = writeln!(s, "  variance    {}", verdict(h.variance.pass));
    let _ = writeln!(s, "  drift       {}", verdict(h.drift.pass));
    let _ = writeln!(s, "  lindeberg   {}", verdict(h.lindeberg.pass));
    if let Some(note) = &h.lindeberg.note {
        let _ = writeln!(s, "    note: {note}");
    }
    for row in &h.lindeberg.rows {
        let _ = writeln!(
            s,
            "    coord {} eps {:<5} p {:<8} value {:.4e}  (weighted variance {:.4})",
            row.coordinate, row.epsilon, row.p, row.value, row.weighted_variance
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "convergence sweep");
    let _ = writeln!(
        s,
        "  {:<8} {:>9} {:>8} {:>8} {:>9} {:>10} {:>10} {:>9} {:>9}",
        "p", "trials", "KS", "KS crit", "CF err", "mean err", "cov err", "Hill R", "Hill L"
    );
    for d in &r.sweep {
        let (hr, hl) = d
            .hill
            .as_ref()
            .map(|h| (format!("{:.3}", h.primary.right.index), format!("{:.3}", h.primary.left.index)))
            .unwrap_or_else(|| ("-".into(), "-".into()));
        let _ = writeln!(
            s,
            "  {:<8} {:>9} {:>8.4} {:>8.4} {:>9.4} {:>10.4} {:>10.4} {:>9} {:>9}",
            d.p, d.trials, d.ks_distance, d.ks_critical, d.cf_sup_error, d.mean_error, d.variance_error, hr, hl
        );
    }
    let c = &r.convergence;
    let _ = writeln!(
        s,
        "  KS {:.4} -> {:.4}, CF {:.4} -> {:.4}: {}",
        c.ks_first,
        c.ks_last,
        c.cf_first,
        c.cf_last,
        verdict(c.pass)
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "overall {}", verdict(r.pass));
    s
}

fn sum_bound_tables(s: &mut String, tables: &[SumBoundTable]) {
    let _ = writeln!(s, "power-geometric sum bound  sum_n (1-p)^n n^alpha <= C p^(-alpha-1)");
    let _ = writeln!(s, "  {:>6} {:>10} {:>8} {:>14} {:>14} {:>8}", "alpha", "C", "p", "sum", "bound", "ratio");
    for t in tables {
        for r in &t.rows {
            let _ = writeln!(
                s,
                "  {:>6} {:>10.4} {:>8} {:>14.6e} {:>14.6e} {:>8.4} {}",
                t.alpha,
                t.constant,
                r.p,
                r.sum,
                r.bound,
                r.ratio,
                verdict(r.pass)
            );
        }
    }
}

fn inequality(s: &mut String, c: &InequalityCheck) {
    let _ = writeln!(
        s,
        "  {:<32} points {:>6}  violations {:>3}  slack [{:.3e}, {:.3e}]  {}",
        c.name,
        c.points,
        c.violations,
        c.min_slack,
        c.max_slack,
        verdict(c.pass())
    );
}

pub fn lemmas(out: &LemmaOutput) -> String {
    let mut s = String::new();
    match out {
        LemmaOutput::SumBound { tables, pass } => {
            sum_bound_tables(&mut s, tables);
            let _ = writeln!(s, "overall {}", verdict(*pass));
        }
        LemmaOutput::Full(r) => {
            sum_bound_tables(&mut s, &r.sum_bounds);
            let _ = writeln!(s);
            let _ = writeln!(s, "elementary inequalities");
            inequality(&mut s, &r.elementary.exp_difference);
            inequality(&mut s, &r.elementary.contraction);
            for c in &r.elementary.taylor {
                inequality(&mut s, c);
            }
            let _ = writeln!(s);
            let _ = writeln!(s, "geometric exponential series  S(p) with z_n = z + 1/n, T(p) with z_n = z");
            let _ = writeln!(
                s,
                "  {:>10} {:>8} {:>12} {:>10} {:>12} {:>10}",
                "z", "p", "|S-1/(1+z)|", "terms", "|sum-T|", "tail bound"
            );
            for row in &r.series {
                let _ = writeln!(
                    s,
                    "  {:>10} {:>8} {:>12.3e} {:>10} {:>12.3e} {:>10.1e}",
                    row.z.to_string(),
                    row.p,
                    row.limit_error,
                    row.perturbed.terms,
                    row.closed_form_gap,
                    row.constant.tail_bound
                );
            }
            let _ = writeln!(s, "  {}", verdict(r.series_pass));
            let _ = writeln!(s);
            let _ = writeln!(s, "exact Gaussian geometric-sum CF vs 1/(1 + t^2/2)");
            let _ = writeln!(s, "  {:>5} {:>8} {:>12} {:>10}", "t", "p", "error", "tail bound");
            for row in &r.gaussian_cf {
                let _ = writeln!(
                    s,
                    "  {:>5} {:>8} {:>12.3e} {:>10.1e}",
                    row.t, row.p, row.error, row.series.tail_bound
                );
            }
            let _ = writeln!(s, "  {}", verdict(r.gaussian_cf_pass));
            let _ = writeln!(s);
            let _ = writeln!(s, "overall {}", verdict(r.pass));
        }
    }
    s
}

fn tail(s: &mut String, name: &str, t: &Option<TailFit>) {
    if let Some(t) = t {
        let expected = t.expected.map_or_else(|| "-".to_string(), |e| format!("{e:.4}"));
        let _ = writeln!(
            s,
            "  {name:<5} index {:.4} ± {:.4} (k = {}), expected {expected}, wealth-level index {:.4e}",
            t.normalized.index, t.normalized.stderr, t.normalized.k, t.level_index
        );
    }
}

pub fn wealth(r: &WealthReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config fingerprint {}", r.config_fingerprint);
    let _ = writeln!(s, "wealth levels      {}", r.csv.display());
    let _ = writeln!(
        s,
        "p = {}, trials = {}, w0 = {}, seed = {}",
        r.options.p, r.options.trials, r.options.w0, r.options.seed
    );
    if let Some(l) = &r.limit {
        let rates = l.rates();
        let _ = writeln!(
            s,
            "limit AL(0, {:.4}, {:.4}): alpha = {:.4}, beta = {:.4}",
            l.a(),
            l.sigma(),
            rates.alpha(),
            rates.beta()
        );
    }
    if r.degenerate {
        let _ = writeln!(s, "degenerate: every trial ended at the same wealth");
    }
    let _ = writeln!(s, "Hill tail indices of exp(Z), Z normalized log wealth:");
    tail(&mut s, "right", &r.right);
    tail(&mut s, "left", &r.left);
    if let Some(z) = r.asymmetry_z {
        let _ = writeln!(s, "  right - left = {z:.2} standard errors");
    }
    if let Some(n) = &r.note {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
