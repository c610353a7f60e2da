//! Deterministic parallel generation of normalized geometric sums
//!
//! ```text
//! Z_p = p^(1/2) Σ_{j=1}^{ν_p} (X_j + p^(1/2) a_j),   P(ν_p = n) = (1 − p)^(n−1) p
//! ```
//!
//! Trial `k` draws everything from [`substream`]`(seed, k)`, so a batch is a pure
//! function of `(spec, p, seed, trials)`; the worker count only affects throughput.

mod io;
mod wealth;

pub use io::{read_binary, BINARY_MAGIC, BINARY_VERSION};
pub use wealth::{simulate_wealth, GrowthSpec, WealthBatch};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{substream, Stream};
use crate::sequence::{Profile, SequenceSpec, VarianceProfile};

/// Trials handled per parallel task.
const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Cap on `ν_p`; `ceil(200/p)` when unset. Exceeding it is an error.
    #[serde(default)]
    pub max_lifetime: Option<u64>,
}

fn default_workers() -> usize {
    1
}

impl SimConfig {
    pub fn new(p: f64, trials: u64, seed: u64) -> Self {
        SimConfig {
            p,
            trials,
            seed,
            workers: 1,
            max_lifetime: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return domain(format!("p must lie in (0, 1), got {}", self.p));
        }
        if self.trials == 0 {
            return domain("trials must be >= 1");
        }
        if self.workers == 0 {
            return domain("workers must be >= 1");
        }
        if self.max_lifetime == Some(0) {
            return domain("max_lifetime must be >= 1");
        }
        Ok(())
    }

    pub fn resolved_max_lifetime(&self) -> u64 {
        self.max_lifetime
            .unwrap_or_else(|| (200.0 / self.p).ceil() as u64)
    }
}

/// Simulated trials with provenance. `values` is row major, `trials × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub dim: usize,
    pub p: f64,
    pub seed: u64,
    pub fingerprint: String,
    pub nu: Vec<u64>,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn trials(&self) -> usize {
        self.nu.len()
    }

    pub fn row(&self, trial: usize) -> &[f64] {
        &self.values[trial * self.dim..(trial + 1) * self.dim]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        assert!(k < self.dim);
        self.values.iter().skip(k).step_by(self.dim).copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

/// `ν` with `P(ν = n) = (1 − p)^(n−1) p`, by inversion.
pub fn geometric_sample<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    Ok(geometric_by_inversion((-p).ln_1p(), rng))
}

/// `ceil(ln U / ln(1 − p))` with `U` uniform on `(0, 1]`.
#[inline]
fn geometric_by_inversion<R: Rng + ?Sized>(log_q: f64, rng: &mut R) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    let n = (u.ln() / log_q).ceil();
    if n < 1.0 {
        1
    } else {
        n as u64
    }
}

/// Per-index standard deviations with the common profiles precomputed.
enum Scale<'a> {
    Fixed(f64),
    Cycle(Vec<f64>),
    Profile(&'a VarianceProfile),
}

impl<'a> Scale<'a> {
    fn new(profile: &'a VarianceProfile) -> Self {
        match profile {
            VarianceProfile::Constant { value } => Scale::Fixed(value.sqrt()),
            VarianceProfile::Periodic { values } => Scale::Cycle(values.iter().map(|v| v.sqrt()).collect()),
            other => Scale::Profile(other),
        }
    }

    #[inline]
    fn at(&self, j: u64) -> f64 {
        match self {
            Scale::Fixed(s) => *s,
            Scale::Cycle(s) => s[((j - 1) % s.len() as u64) as usize],
            Scale::Profile(p) => p.value(j).sqrt(),
        }
    }
}

/// Draws `ν` for trial `trial` and fills `out` with `Z_p`.
struct TrialRunner<'a> {
    spec: &'a SequenceSpec,
    scale: Scale<'a>,
    p: f64,
    sqrt_p: f64,
    log_q: f64,
    seed: u64,
    max_lifetime: u64,
}

impl<'a> TrialRunner<'a> {
    fn new(spec: &'a SequenceSpec, cfg: &SimConfig) -> Self {
        TrialRunner {
            spec,
            scale: Scale::new(&spec.coordinates()[0].variance),
            p: cfg.p,
            sqrt_p: cfg.p.sqrt(),
            log_q: (-cfg.p).ln_1p(),
            seed: cfg.seed,
            max_lifetime: cfg.resolved_max_lifetime(),
        }
    }

    fn lifetime(&self, trial: u64, rng: &mut Stream) -> Result<u64> {
        let nu = geometric_by_inversion(self.log_q, rng);
        if nu > self.max_lifetime {
            return Err(Error::LifetimeExceeded {
                trial,
                nu,
                max_lifetime: self.max_lifetime,
            });
        }
        Ok(nu)
    }

    fn run(&self, trial: u64, out: &mut [f64], term: &mut [f64]) -> Result<u64> {
        let mut rng = substream(self.seed, trial);
        let nu = self.lifetime(trial, &mut rng)?;
        let family = self.spec.marginal();
        if self.spec.dim() == 1 {
            let mut s = 0.0;
            for j in 1..=nu {
                s += self.scale.at(j) * family.draw_standard(j, &mut rng);
            }
            out[0] = s;
        } else {
            out.fill(0.0);
            for j in 1..=nu {
                self.spec.sample_term_into(j, &mut rng, term);
                for (o, t) in out.iter_mut().zip(term.iter()) {
                    *o += t;
                }
            }
        }
        for (o, c) in out.iter_mut().zip(self.spec.coordinates()) {
            *o = self.sqrt_p * *o + self.p * c.drift.prefix_sum(nu);
        }
        Ok(nu)
    }
}

fn run_chunks<F>(trials: u64, dim: usize, workers: usize, fill: F) -> Result<(Vec<u64>, Vec<f64>)>
where
    F: Fn(u64, &mut [f64], &mut [f64]) -> Result<u64> + Sync,
{
    let n = usize::try_from(trials).map_err(|_| Error::Domain("trial count exceeds memory".into()))?;
    let mut nu = vec![0u64; n];
    let mut values = vec![0.0f64; n * dim];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<()>> = pool.install(|| {
        nu.par_chunks_mut(CHUNK)
            .zip(values.par_chunks_mut(CHUNK * dim))
            .enumerate()
            .map(|(c, (nu_chunk, val_chunk))| {
                let mut term = vec![0.0; dim];
                let base = (c * CHUNK) as u64;
                for (i, (nu_slot, out)) in nu_chunk.iter_mut().zip(val_chunk.chunks_exact_mut(dim)).enumerate() {
                    *nu_slot = fill(base + i as u64, out, &mut term)?;
                }
                Ok(())
            })
            .collect()
    });
    // chunks are in trial order, so the first error is the lowest failing trial
    outcomes.into_iter().collect::<Result<()>>()?;
    Ok((nu, values))
}

/// Simulates `cfg.trials` independent copies of `Z_p` for `spec`.
pub fn simulate(spec: &SequenceSpec, cfg: &SimConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let runner = TrialRunner::new(spec, cfg);
    let (nu, values) = run_chunks(cfg.trials, spec.dim(), cfg.workers, |k, out, term| {
        runner.run(k, out, term)
    })?;
    Ok(SampleBatch {
        dim: spec.dim(),
        p: cfg.p,
        seed: cfg.seed,
        fingerprint: spec.fingerprint(),
        nu,
        values,
    })
}
