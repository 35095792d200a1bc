//! TOML run configuration.
//!
//! ```toml
//! m = 200
//! pi = "binomial(0.1)"      # binomial(p[,n]) | geometric(p) | delta(k) | explicit(k:p,...)
//! alpha = "k+2"
//! rho = 0.7                 # or lambda = total request rate
//! c = 10.0                  # or chunk_dist = "exponential(10)" | "uniform(a,b)" | "fixed(c)"
//! mu = 1.0
//! policies = ["WF", "BS", "BR"]   # or policy = "BR"
//! iters = 100000
//! seed = 1
//! ```

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use crate::dist::{FileSizeDistribution, SizeLaw};
use crate::engine::ExperimentConfig;
use crate::policy::PolicyKind;
use crate::types::{ChunkLaw, SystemParams};

pub const DEFAULT_ITERATIONS: u64 = 100_000;

/// The config document as written; every key is optional so that documents
/// can be layered (preset defaults, then the user's file, then flags).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub m: Option<usize>,
    pub mu: Option<f64>,
    pub c: Option<f64>,
    pub chunk_dist: Option<String>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub pi: Option<String>,
    pub alpha: Option<String>,
    pub policy: Option<String>,
    pub policies: Option<Vec<String>>,
    pub iters: Option<u64>,
    pub warmup: Option<u64>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub coupling: Option<String>,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub k_grid: Option<Vec<u64>>,
    pub m_grid: Option<Vec<usize>>,
    pub a_grid: Option<Vec<u64>>,
    pub redundancy_grid: Option<Vec<u64>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {}", e.message()))
    }

    /// Keys set in `top` replace those in `self`. Over-determined pairs
    /// (rho/lambda, c/chunk_dist, policy/policies) are replaced as a unit.
    pub fn overlay(mut self, top: RawConfig) -> Self {
        if top.rho.is_some() || top.lambda.is_some() {
            self.rho = None;
            self.lambda = None;
        }
        if top.c.is_some() || top.chunk_dist.is_some() {
            self.c = None;
            self.chunk_dist = None;
        }
        if top.policy.is_some() || top.policies.is_some() {
            self.policy = None;
            self.policies = None;
        }
        overlay!(
            self, top, m, mu, c, chunk_dist, lambda, rho, pi, alpha, policy, policies, iters, warmup, seed, mode,
            coupling, out, preset, k_grid, m_grid, a_grid, redundancy_grid
        );
        self
    }
}

/// File-size law before the server count is known (`binomial(p)` means
/// `binomial(p, m)`).
#[derive(Debug, Clone, PartialEq)]
pub enum SizeSpec {
    Binomial { p: f64, trials: Option<u64> },
    Geometric(f64),
    Delta(u64),
    Explicit(Vec<(u64, f64)>),
}

impl SizeSpec {
    pub fn build(&self, m: usize, redundancy: u64) -> crate::Result<FileSizeDistribution> {
        let law = match self {
            SizeSpec::Binomial { p, trials } => SizeLaw::Binomial { p: *p, trials: trials.unwrap_or(m as u64) },
            SizeSpec::Geometric(p) => SizeLaw::Geometric { p: *p },
            SizeSpec::Delta(k) => SizeLaw::Delta(*k),
            SizeSpec::Explicit(t) => SizeLaw::Explicit(t.clone()),
        };
        FileSizeDistribution::new(law, Default::default())?.with_redundancy(redundancy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    Rho(f64),
    Lambda(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub m: usize,
    pub mu: f64,
    pub chunk: ChunkLaw,
    pub load: Load,
    pub pi: SizeSpec,
    pub redundancy: u64,
    pub policies: Vec<PolicyKind>,
    pub iterations: u64,
    pub warmup: u64,
    pub seed: u64,
    pub coupled: bool,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub k_grid: Vec<u64>,
    pub m_grid: Vec<usize>,
    pub a_grid: Vec<u64>,
    pub redundancy_grid: Vec<u64>,
}

pub fn parse_config(text: &str) -> Result<RunSpec> {
    RunSpec::from_raw(RawConfig::from_toml(text)?)
}

impl RunSpec {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let m = raw.m.ok_or_else(|| anyhow!("missing key `m`"))?;
        let seed = raw.seed.ok_or_else(|| anyhow!("missing key `seed`: runs must be seeded"))?;
        let mu = raw.mu.unwrap_or(1.0);
        let chunk = match (raw.c, raw.chunk_dist.as_deref()) {
            (Some(_), Some(_)) => bail!("keys `c` and `chunk_dist` are mutually exclusive"),
            (Some(c), None) => match raw.mode.as_deref() {
                Some("random") => ChunkLaw::Exponential { mean: c },
                _ => ChunkLaw::Fixed(c),
            },
            (None, Some(text)) => parse_chunk(text).context("key `chunk_dist`")?,
            (None, None) => ChunkLaw::Fixed(1.0),
        };
        match raw.mode.as_deref() {
            None => {}
            Some("fixed") if chunk.is_fixed() => {}
            Some("random") if !chunk.is_fixed() => {}
            Some(mode @ ("fixed" | "random")) => {
                bail!("key `mode`: {mode} contradicts chunk law {chunk:?}")
            }
            Some(other) => bail!("key `mode`: expected fixed or random, got {other:?}"),
        }
        let load = match (raw.rho, raw.lambda) {
            (Some(_), Some(_)) => bail!("keys `rho` and `lambda` are mutually exclusive"),
            (Some(r), None) => Load::Rho(r),
            (None, Some(l)) => Load::Lambda(l),
            (None, None) => bail!("missing key `rho` (or `lambda`)"),
        };
        let pi = parse_size(raw.pi.as_deref().ok_or_else(|| anyhow!("missing key `pi`"))?).context("key `pi`")?;
        let redundancy = match raw.alpha.as_deref() {
            None => 0,
            Some(a) => parse_alpha(a).context("key `alpha`")?,
        };
        let policies = match (raw.policy, raw.policies) {
            (Some(_), Some(_)) => bail!("keys `policy` and `policies` are mutually exclusive"),
            (Some(p), None) => vec![p.parse::<PolicyKind>().context("key `policy`")?],
            (None, Some(ps)) => {
                let mut out = ps
                    .iter()
                    .map(|p| p.parse::<PolicyKind>())
                    .collect::<crate::Result<Vec<_>>>()
                    .context("key `policies`")?;
                out.sort();
                out.dedup();
                out
            }
            (None, None) => PolicyKind::ALL.to_vec(),
        };
        let iterations = raw.iters.unwrap_or(DEFAULT_ITERATIONS);
        let warmup = raw.warmup.unwrap_or(iterations / 10);
        let coupled = match raw.coupling.as_deref() {
            None | Some("coupled") => true,
            Some("independent") => false,
            Some(other) => bail!("key `coupling`: expected coupled or independent, got {other:?}"),
        };
        let spec = RunSpec {
            m,
            mu,
            chunk,
            load,
            pi,
            redundancy,
            policies,
            iterations,
            warmup,
            seed,
            coupled,
            out: raw.out,
            preset: raw.preset,
            k_grid: raw.k_grid.unwrap_or_default(),
            m_grid: raw.m_grid.unwrap_or_default(),
            a_grid: raw.a_grid.unwrap_or_default(),
            redundancy_grid: raw.redundancy_grid.unwrap_or_default(),
        };
        spec.experiment()?;
        Ok(spec)
    }

    /// The experiment at the configured server count and redundancy.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        self.experiment_at(self.m, self.redundancy, self.seed)
    }

    pub fn experiment_at(&self, m: usize, redundancy: u64, seed: u64) -> Result<ExperimentConfig> {
        let dist = self.pi.build(m, redundancy)?;
        let params = match self.load {
            Load::Rho(rho) => SystemParams::with_load(m, self.mu, self.chunk, rho, &dist)?,
            Load::Lambda(lambda) => SystemParams::new(m, self.mu, self.chunk, lambda)?,
        };
        let mut cfg = ExperimentConfig::new(params, dist, self.policies.clone(), self.iterations, seed)?;
        cfg.warmup = self.warmup;
        cfg.coupled = self.coupled;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Splits `name(a,b,...)` into the name and its trimmed arguments.
fn call(text: &str) -> Result<(&str, Vec<&str>)> {
    let text = text.trim();
    let open = text.find('(').ok_or_else(|| anyhow!("expected name(args), got {text:?}"))?;
    let inner = text[open + 1..].strip_suffix(')').ok_or_else(|| anyhow!("missing ')' in {text:?}"))?;
    let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
    Ok((text[..open].trim(), args))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(|_| anyhow!("not a number: {s:?}"))
}

pub fn parse_size(text: &str) -> Result<SizeSpec> {
    let (name, args) = call(text)?;
    Ok(match (name, args.as_slice()) {
        ("binomial", [p]) => SizeSpec::Binomial { p: num(p)?, trials: None },
        ("binomial", [p, n]) => SizeSpec::Binomial { p: num(p)?, trials: Some(num(n)?) },
        ("geometric", [p]) => SizeSpec::Geometric(num(p)?),
        ("delta", [k]) => SizeSpec::Delta(num(k)?),
        ("explicit", atoms) if !atoms.is_empty() => SizeSpec::Explicit(
            atoms
                .iter()
                .map(|a| {
                    let (k, p) = a.split_once(':').ok_or_else(|| anyhow!("expected k:p, got {a:?}"))?;
                    Ok((num(k.trim())?, num(p.trim())?))
                })
                .collect::<Result<_>>()?,
        ),
        _ => bail!("unknown file-size law {text:?}"),
    })
}

pub fn parse_chunk(text: &str) -> Result<ChunkLaw> {
    let (name, args) = call(text)?;
    let law = match (name, args.as_slice()) {
        ("fixed", [c]) => ChunkLaw::Fixed(num(c)?),
        ("exponential", [mean]) => ChunkLaw::Exponential { mean: num(mean)? },
        ("uniform", [lo, hi]) => ChunkLaw::Uniform { low: num(lo)?, high: num(hi)? },
        _ => bail!("unknown chunk law {text:?}"),
    };
    law.validate()?;
    Ok(law)
}

/// `k` or `k+r`, returning r.
pub fn parse_alpha(text: &str) -> Result<u64> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    match compact.strip_prefix('k') {
        Some("") => Ok(0),
        Some(rest) => rest
            .strip_prefix('+')
            .ok_or_else(|| anyhow!("expected k or k+r, got {text:?}"))
            .and_then(num),
        None => bail!("expected k or k+r, got {text:?}"),
    }
}
