//! Multiplicative wealth under a geometric lifetime.
//!
//! `W_ν = W₀ Π_{j ≤ ν} G_j`, so `log W_ν − log W₀ = Σ_{j ≤ ν} log G_j`. With
//! `log G_j = X_j + p^(1/2) a_j`, the normalized log wealth `p^(1/2)(log W_ν − log W₀)`
//! is exactly the geometric sum `Z_p` of the induced sequence.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{run_chunks, simulate, SampleBatch, SimConfig, TrialRunner};
use crate::error::{domain, Result};
use crate::sequence::SequenceSpec;

/// Law of the per-period growth factors `G_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthSpec {
    /// `G_j ≡ growth`.
    Constant { growth: f64 },
    /// `log G_j = X_j + p^(1/2) a_j` for the given scalar sequence.
    LogShocks { spec: SequenceSpec },
}

impl GrowthSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthSpec::Constant { growth } if !(growth.is_finite() && *growth > 0.0) => {
                domain(format!("growth factor must be positive, got {growth}"))
            }
            GrowthSpec::LogShocks { spec } if spec.dim() != 1 => {
                domain("wealth shocks must be scalar")
            }
            _ => Ok(()),
        }
    }

    pub fn fingerprint(&self) -> String {
        match self {
            GrowthSpec::LogShocks { spec } => spec.fingerprint(),
            other => hex::encode(Sha256::digest(serde_json::to_vec(other).expect("serializes"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthBatch {
    pub w0: f64,
    /// `log W_ν` per trial.
    pub log_levels: Vec<f64>,
    /// `p^(1/2)(log W_ν − log W₀)`, one column.
    pub normalized_log: SampleBatch,
    /// All trials ended at the same wealth; no tail can be fitted.
    pub degenerate: bool,
}

impl WealthBatch {
    /// `W_ν`; may overflow to infinity for extreme trials, which `log_levels` avoids.
    pub fn levels(&self) -> Vec<f64> {
        self.log_levels.iter().map(|l| l.exp()).collect()
    }
}

pub fn simulate_wealth(growth: &GrowthSpec, w0: f64, cfg: &SimConfig) -> Result<WealthBatch> {
    if !(w0.is_finite() && w0 > 0.0) {
        return domain(format!("initial wealth must be positive, got {w0}"));
    }
    growth.validate()?;
    cfg.validate()?;
    let normalized_log = match growth {
        GrowthSpec::LogShocks { spec } => simulate(spec, cfg)?,
        GrowthSpec::Constant { growth } => {
            // Only ν is random; reuse the per-trial lifetime draw of the engine.
            let probe = SequenceSpec::iid_gaussian(1.0)?;
            let runner = TrialRunner::new(&probe, cfg);
            let log_g = growth.ln();
            let sqrt_p = cfg.p.sqrt();
            let (nu, values) = run_chunks(cfg.trials, 1, cfg.workers, |k, out, _| {
                let mut rng = crate::rng::substream(cfg.seed, k);
                let nu = runner.lifetime(k, &mut rng)?;
                out[0] = sqrt_p * nu as f64 * log_g;
                Ok(nu)
            })?;
            SampleBatch {
                dim: 1,
                p: cfg.p,
                seed: cfg.seed,
                fingerprint: growth_fingerprint(*growth),
                nu,
                values,
            }
        }
    };
    let scale = cfg.p.sqrt().recip();
    let log_w0 = w0.ln();
    let log_levels: Vec<f64> = normalized_log.values.iter().map(|z| log_w0 + z * scale).collect();
    let degenerate = log_levels.windows(2).all(|w| w[0] == w[1]);
    Ok(WealthBatch {
        w0,
        log_levels,
        normalized_log,
        degenerate,
    })
}

fn growth_fingerprint(growth: f64) -> String {
    GrowthSpec::Constant { growth }.fingerprint()
}
