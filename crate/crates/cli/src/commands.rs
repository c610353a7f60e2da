use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use geosum_core::diagnostics::{
    convergence_sweep, hill_tail_index, DiagnosticOptions, DiagnosticsReport, HillEstimate, Side, Target,
};
use geosum_core::engine::{self, simulate_wealth, GrowthSpec, SimConfig, WealthBatch};
use geosum_core::lemmas::{
    check_sum_bound, run_lemmas, LemmaReport, SumBoundTable, DEFAULT_SERIES_PS, DEFAULT_SUM_ALPHAS, DEFAULT_SUM_PS,
};
use geosum_core::sequence::{hypothesis_report, HypothesisVerdicts, Profile, SequenceSpec};
use geosum_core::{AlParams, MvAlParams};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{BatchFormat, ExperimentConfig};
use crate::render;
use crate::{Globals, LemmaArgs, WealthArgs};

/// Version of every JSON document the CLI emits.
pub const SCHEMA_VERSION: u32 = 1;

pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn load(path: &Path, g: &Globals) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path, &g.overrides).map_err(usage)?;
    cfg.resolve();
    cfg.prepare_out_dir().map_err(usage)?;
    Ok(cfg)
}

/// Writes the resolved config next to the outputs.
fn echo_config(cfg: &ExperimentConfig, fingerprint: &str) -> anyhow::Result<PathBuf> {
    let path = cfg.output.dir.join("resolved_config.toml");
    let text = format!("# config_fingerprint: {fingerprint}\n{}", cfg.to_toml());
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit<T: Serialize>(g: &Globals, value: &T, text: impl FnOnce() -> String) -> anyhow::Result<()> {
    if g.json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BatchFile {
    pub p: f64,
    pub format: BatchFormat,
    pub path: PathBuf,
    pub trials: usize,
    pub spec_fingerprint: String,
}

#[derive(Debug, Serialize)]
pub struct SimulateManifest {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub resolved_config: PathBuf,
    pub files: Vec<BatchFile>,
}

pub fn simulate(path: &Path, g: &Globals) -> Result<bool, Failure> {
    let cfg = load(path, g)?;
    let fingerprint = cfg.fingerprint();
    let resolved_config = echo_config(&cfg, &fingerprint)?;
    let mut files = Vec::new();
    for (i, &p) in cfg.p_grid.iter().enumerate() {
        let batch = engine::simulate(&cfg.spec, &cfg.sim_config(p)).with_context(|| format!("simulating p = {p}"))?;
        for &format in &cfg.output.formats {
            let ext = match format {
                BatchFormat::Csv => "csv",
                BatchFormat::Binary => "bin",
            };
            let out = cfg.output.dir.join(format!("batch_{i}_p{p}.{ext}"));
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            match format {
                BatchFormat::Csv => batch.write_csv(&mut w, &[("config_fingerprint", fingerprint.clone())])?,
                BatchFormat::Binary => batch.write_binary(&mut w)?,
            }
            files.push(BatchFile {
                p,
                format,
                path: out,
                trials: batch.trials(),
                spec_fingerprint: batch.fingerprint.clone(),
            });
        }
    }
    let manifest = SimulateManifest {
        schema_version: SCHEMA_VERSION,
        config_fingerprint: fingerprint,
        resolved_config,
        files,
    };
    write_json(&cfg.output.dir.join("manifest.json"), &manifest)?;
    emit(g, &manifest, || render::simulate(&manifest))?;
    Ok(true)
}

#[derive(Debug, Serialize)]
pub struct ConvergenceVerdict {
    pub ks_first: f64,
    pub ks_last: f64,
    pub cf_first: f64,
    pub cf_last: f64,
    /// KS and CF distances at the smallest p do not exceed those at the largest p.
    pub pass: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSource {
    Config,
    CesaroEstimate,
}

#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub spec_fingerprint: String,
    pub target: Target,
    pub target_source: TargetSource,
    pub hypotheses: HypothesisVerdicts,
    pub sweep: Vec<DiagnosticsReport>,
    pub convergence: ConvergenceVerdict,
    pub pass: bool,
}

fn estimated_target(h: &HypothesisVerdicts) -> anyhow::Result<Target> {
    if h.dim == 1 {
        let s2 = h.sigma2_hat[0];
        if !(s2 > 0.0) {
            return Err(anyhow!("estimated limit variance {s2} is not positive"));
        }
        Ok(Target::Univariate(AlParams::new(0.0, h.a_hat[0], s2.sqrt())?))
    } else {
        Ok(Target::Multivariate(MvAlParams::new(
            vec![0.0; h.dim],
            h.a_hat.clone(),
            h.sigma_hat().to_vec(),
        )?))
    }
}

pub fn diagnose(path: &Path, g: &Globals) -> Result<bool, Failure> {
    let cfg = load(path, g)?;
    let fingerprint = cfg.fingerprint();
    echo_config(&cfg, &fingerprint)?;
    let hypotheses = hypothesis_report(&cfg.spec, &cfg.p_grid, &cfg.epsilon_grid, &cfg.alpha_grid, cfg.n_max)?;
    let (target, target_source) = match &cfg.target {
        Some(t) => (t.clone(), TargetSource::Config),
        None => (
            estimated_target(&hypotheses).context("building the limit law from the Cesàro estimates")?,
            TargetSource::CesaroEstimate,
        ),
    };
    let opts = DiagnosticOptions {
        cf_grid: cfg.cf_grid.clone(),
        tail_fraction: cfg.tail_fraction,
        ..DiagnosticOptions::default()
    };
    let sweep = convergence_sweep(&cfg.spec, &cfg.p_grid, &cfg.sim_config(cfg.p_grid[0]), &target, &opts)?;
    let (first, last) = (&sweep[0], &sweep[sweep.len() - 1]);
    let convergence = ConvergenceVerdict {
        ks_first: first.ks_distance,
        ks_last: last.ks_distance,
        cf_first: first.cf_sup_error,
        cf_last: last.cf_sup_error,
        pass: last.ks_distance <= first.ks_distance && last.cf_sup_error <= first.cf_sup_error,
    };
    let report = DiagnoseReport {
        schema_version: SCHEMA_VERSION,
        config_fingerprint: fingerprint,
        spec_fingerprint: cfg.spec.fingerprint(),
        target,
        target_source,
        pass: hypotheses.pass && convergence.pass,
        hypotheses,
        sweep,
        convergence,
    };
    let text = render::diagnose(&report);
    write_json(&cfg.output.dir.join("report.json"), &report)?;
    std::fs::write(cfg.output.dir.join("report.txt"), &text)?;
    emit(g, &report, || text)?;
    Ok(report.pass || !g.strict)
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LemmaOutput {
    Full(LemmaReport),
    SumBound { tables: Vec<SumBoundTable>, pass: bool },
}

#[derive(Debug, Serialize)]
pub struct LemmaDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub output: LemmaOutput,
}

pub fn lemmas(args: &LemmaArgs, g: &Globals) -> Result<bool, Failure> {
    for a in &args.alpha {
        if !(*a > -1.0 && a.is_finite()) {
            return Err(usage(anyhow!("--alpha must exceed -1, got {a}")));
        }
    }
    for p in &args.p {
        if !(*p > 0.0 && *p < 1.0) {
            return Err(usage(anyhow!("--p must lie in (0, 1), got {p}")));
        }
    }
    let output = if args.alpha.is_empty() && args.p.is_empty() {
        LemmaOutput::Full(run_lemmas(&DEFAULT_SUM_ALPHAS, &DEFAULT_SUM_PS, &DEFAULT_SERIES_PS)?)
    } else {
        let alphas = if args.alpha.is_empty() { DEFAULT_SUM_ALPHAS.to_vec() } else { args.alpha.clone() };
        let ps = if args.p.is_empty() { DEFAULT_SUM_PS.to_vec() } else { args.p.clone() };
        let tables = alphas
            .iter()
            .map(|&a| check_sum_bound(a, &ps))
            .collect::<geosum_core::Result<Vec<_>>>()?;
        LemmaOutput::SumBound {
            pass: tables.iter().all(|t| t.pass),
            tables,
        }
    };
    let pass = match &output {
        LemmaOutput::Full(r) => r.pass,
        LemmaOutput::SumBound { pass, .. } => *pass,
    };
    let doc = LemmaDocument {
        schema_version: SCHEMA_VERSION,
        output,
    };
    if let Some(dir) = &g.overrides.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| usage(anyhow!("output dir {}: {e}", dir.display())))?;
        write_json(&dir.join("lemmas.json"), &doc)?;
    }
    emit(g, &doc, || render::lemmas(&doc.output))?;
    Ok(pass)
}

#[derive(Debug, Clone, Serialize)]
pub struct WealthOptions {
    pub growth: GrowthSpec,
    pub w0: f64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub tail_fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct TailFit {
    /// Hill index of `exp(Z)`, where `Z` is the normalized log wealth.
    pub normalized: HillEstimate,
    /// Implied index of the wealth level itself: `normalized · p^(1/2)`.
    pub level_index: f64,
    /// Index implied by the limit law, when known.
    pub expected: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct WealthReport {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub batch_fingerprint: String,
    pub options: WealthOptions,
    pub degenerate: bool,
    /// `AL(0, â, σ̂)` implied by the shock profiles.
    pub limit: Option<AlParams>,
    pub right: Option<TailFit>,
    pub left: Option<TailFit>,
    /// `(right − left) / sqrt(se_right² + se_left²)` on the normalized scale.
    pub asymmetry_z: Option<f64>,
    pub note: Option<String>,
    pub csv: PathBuf,
}

/// Number of terms used for the Cesàro estimates of the shock profiles.
const CESARO_TERMS: u64 = 100_000;

fn implied_limit(growth: &GrowthSpec) -> anyhow::Result<Option<AlParams>> {
    let GrowthSpec::LogShocks { spec } = growth else {
        return Ok(None);
    };
    let c = &spec.coordinates()[0];
    let var = c.variance.cesaro_mean(CESARO_TERMS);
    let a = c.drift.cesaro_mean(CESARO_TERMS);
    Ok(Some(AlParams::new(0.0, a, var.sqrt())?))
}

fn write_wealth_csv(path: &Path, w: &WealthBatch, fingerprint: &str, opts: &WealthOptions) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "# geosum wealth batch v1")?;
    writeln!(out, "# config_fingerprint: {fingerprint}")?;
    writeln!(out, "# growth_fingerprint: {}", w.normalized_log.fingerprint)?;
    writeln!(out, "# seed: {}", opts.seed)?;
    writeln!(out, "# p: {}", opts.p)?;
    writeln!(out, "# w0: {}", opts.w0)?;
    writeln!(out, "trial,nu,log_wealth,wealth,normalized_log")?;
    for (i, ((nu, lw), z)) in w
        .normalized_log
        .nu
        .iter()
        .zip(&w.log_levels)
        .zip(&w.normalized_log.values)
        .enumerate()
    {
        writeln!(out, "{i},{nu},{lw},{},{z}", lw.exp())?;
    }
    out.flush()?;
    Ok(())
}

pub fn wealth_demo(args: &WealthArgs, g: &Globals) -> Result<bool, Failure> {
    if !(args.p > 0.0 && args.p < 1.0) {
        return Err(usage(anyhow!("--p must lie in (0, 1), got {}", args.p)));
    }
    if args.trials == 0 {
        return Err(usage(anyhow!("--trials must be positive")));
    }
    if !(args.tail_fraction > 0.0 && args.tail_fraction < 0.5) {
        return Err(usage(anyhow!("--tail-fraction must lie in (0, 0.5), got {}", args.tail_fraction)));
    }
    let growth = if let Some(gr) = args.constant_growth {
        GrowthSpec::Constant { growth: gr }
    } else if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
        let spec: SequenceSpec = toml::from_str(&text).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
        GrowthSpec::LogShocks { spec }
    } else {
        if !(args.shock_sd > 0.0 && args.shock_sd.is_finite()) {
            return Err(usage(anyhow!("--shock-sd must be positive, got {}", args.shock_sd)));
        }
        let spec = SequenceSpec::univariate(
            geosum_core::MarginalFamily::Gaussian,
            geosum_core::VarianceProfile::Constant {
                value: args.shock_sd * args.shock_sd,
            },
            geosum_core::DriftProfile::Constant { value: args.drift },
        )
        .map_err(usage)?;
        GrowthSpec::LogShocks { spec }
    };
    growth.validate().map_err(usage)?;
    if !(args.w0 > 0.0 && args.w0.is_finite()) {
        return Err(usage(anyhow!("--w0 must be positive, got {}", args.w0)));
    }
    let opts = WealthOptions {
        growth,
        w0: args.w0,
        p: args.p,
        trials: args.trials,
        seed: g.overrides.seed.unwrap_or(1),
        tail_fraction: args.tail_fraction,
    };
    let fingerprint = hex::encode(Sha256::digest(serde_json::to_vec(&opts)?));
    let dir = g.overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("geosum-out"));
    std::fs::create_dir_all(&dir).map_err(|e| usage(anyhow!("output dir {}: {e}", dir.display())))?;

    let sim = SimConfig::new(opts.p, opts.trials, opts.seed).with_workers(g.overrides.workers.unwrap_or(1));
    let batch = simulate_wealth(&opts.growth, opts.w0, &sim)?;
    let limit = implied_limit(&opts.growth)?;
    let csv = dir.join("wealth.csv");
    write_wealth_csv(&csv, &batch, &fingerprint, &opts)?;

    let sqrt_p = opts.p.sqrt();
    let (right, left, note) = if batch.degenerate {
        (None, None, Some("all trials ended at the same wealth; no tail fit attempted".to_string()))
    } else {
        let z = &batch.normalized_log.values;
        let fit = |side| -> anyhow::Result<TailFit> {
            let h = hill_tail_index(z, side, opts.tail_fraction)?;
            let expected = limit.map(|l| {
                let r = l.rates();
                if side == Side::Right {
                    r.alpha()
                } else {
                    r.beta()
                }
            });
            Ok(TailFit {
                normalized: h,
                level_index: h.index * sqrt_p,
                expected,
            })
        };
        match (fit(Side::Right), fit(Side::Left)) {
            (Ok(r), Ok(l)) => (Some(r), Some(l), None),
            (Err(e), _) | (_, Err(e)) => (None, None, Some(format!("tail fit failed: {e}"))),
        }
    };
    let asymmetry_z = match (&right, &left) {
        (Some(r), Some(l)) => Some(
            (r.normalized.index - l.normalized.index) / r.normalized.stderr.hypot(l.normalized.stderr),
        ),
        _ => None,
    };
    let report = WealthReport {
        schema_version: SCHEMA_VERSION,
        config_fingerprint: fingerprint,
        batch_fingerprint: batch.normalized_log.fingerprint.clone(),
        options: opts,
        degenerate: batch.degenerate,
        limit,
        right,
        left,
        asymmetry_z,
        note,
        csv,
    };
    write_json(&dir.join("wealth_report.json"), &report)?;
    emit(g, &report, || render::wealth(&report))?;
    Ok(true)
}
