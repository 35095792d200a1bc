//! Named experiments. Each returns its CSV as a string; the same merged
//! config and seed always give the same bytes.

use anyhow::{bail, Result};
use rayon::prelude::*;

use super::config::{RawConfig, RunSpec};
use super::{csv_string, fmt_f64, grid_seed};
use crate::analytics::{chunk_scaling_bound, log_bound};
use crate::engine::{run, run_policy, strata};
use crate::policy::PolicyKind;
use crate::stats::batch_means_ci;
use crate::types::ChunkLaw;

pub const PRESETS: [&str; 3] = ["filesize", "codingrate", "chunkscaling"];

const BATCHES: usize = 20;

/// Defaults of a preset, to be overlaid by the user's config.
pub fn defaults(name: &str) -> Result<RawConfig> {
    let text = match name {
        "filesize" => {
            r#"
            m = 200
            pi = "binomial(0.1)"
            alpha = "k+2"
            rho = 0.7
            c = 10.0
            mu = 1.0
            policies = ["BS", "BR"]
            "#
        }
        "codingrate" => {
            r#"
            m = 200
            pi = "binomial(0.5)"
            lambda = 0.1
            c = 14.0
            mu = 1.0
            policy = "BS"
            m_grid = [10, 20, 50, 100, 200]
            redundancy_grid = [0, 1, 2, 4]
            "#
        }
        "chunkscaling" => {
            r#"
            lambda = 0.05
            c = 10.0
            k_grid = [10, 100, 1000]
            a_grid = [1, 2, 4, 8, 16]
            "#
        }
        other => bail!("unknown preset {other:?}; available: {}", PRESETS.join(", ")),
    };
    RawConfig::from_toml(text)
}

pub fn run_preset(name: &str, raw: RawConfig) -> Result<String> {
    match name {
        "filesize" => filesize(&RunSpec::from_raw(raw)?),
        "codingrate" => codingrate(&RunSpec::from_raw(raw)?),
        "chunkscaling" => chunkscaling(&raw),
        other => bail!("unknown preset {other:?}; available: {}", PRESETS.join(", ")),
    }
}

/// Conditional mean delay per chunk count for each policy, next to the
/// log bound. Columns: k, policy, mean_delay, ci, bound_log.
pub fn filesize(spec: &RunSpec) -> Result<String> {
    let cfg = spec.experiment()?;
    let out = run(&cfg)?;
    let rho = cfg.rho();
    let bound_for = |k: u64| -> Result<Option<f64>> {
        match cfg.params.chunk {
            ChunkLaw::Fixed(c) if out.summary.stable => Ok(Some(log_bound(k, rho, c, cfg.params.mu)?.value)),
            _ => Ok(None),
        }
    };
    let mut rows = Vec::new();
    for policy_run in &out.runs {
        for (k, est) in strata(&policy_run.records) {
            rows.push((k, policy_run.policy, est));
        }
    }
    rows.sort_by_key(|(k, p, _)| (*k, *p));
    let mut body = vec![vec!["k".into(), "policy".into(), "mean_delay".into(), "ci".into(), "bound_log".into()]];
    for (k, policy, est) in rows {
        body.push(vec![
            k.to_string(),
            policy.label().into(),
            fmt_f64(est.mean),
            fmt_f64(est.ci_half_width),
            bound_for(k)?.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    csv_string(&body)
}

/// Mean delay of the first configured policy over a grid of server counts
/// and redundancies. Columns: m, redundancy, mean_delay, ci.
pub fn codingrate(spec: &RunSpec) -> Result<String> {
    let m_grid = if spec.m_grid.is_empty() { vec![spec.m] } else { spec.m_grid.clone() };
    let r_grid = if spec.redundancy_grid.is_empty() { vec![spec.redundancy] } else { spec.redundancy_grid.clone() };
    let policy = *spec.policies.first().unwrap_or(&PolicyKind::BatchSampling);
    let points: Vec<(usize, u64)> = m_grid.iter().flat_map(|&m| r_grid.iter().map(move |&r| (m, r))).collect();
    let results = points
        .par_iter()
        .map(|&(m, r)| {
            let cfg = spec.experiment_at(m, r, grid_seed(spec.seed, &[m as u64, r]))?;
            let delays = run_policy(&cfg, policy)?.delays();
            let est = batch_means_ci(&delays, BATCHES)
                .ok_or_else(|| anyhow::anyhow!("too few delays at m = {m}, redundancy = {r}"))?;
            Ok((m, r, est))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut body = vec![vec!["m".into(), "redundancy".into(), "mean_delay".into(), "ci".into()]];
    for (m, r, est) in results {
        body.push(vec![m.to_string(), r.to_string(), fmt_f64(est.mean), fmt_f64(est.ci_half_width)]);
    }
    csv_string(&body)
}

/// Delay bound when chunks are split `a` ways, exact and large-a forms.
/// `lambda` is read as the per-server chunk rate. Columns: k, a, exact,
/// approx, relative_gap.
pub fn chunkscaling(raw: &RawConfig) -> Result<String> {
    let lambda_p = raw.lambda.unwrap_or(0.05);
    let c = raw.c.unwrap_or(10.0);
    let k_grid = raw.k_grid.clone().unwrap_or_else(|| vec![10, 100, 1000]);
    let a_grid = raw.a_grid.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let mut body = vec![vec!["k".into(), "a".into(), "exact".into(), "approx".into(), "relative_gap".into()]];
    for &k in &k_grid {
        for &a in &a_grid {
            let b = chunk_scaling_bound(k, a, lambda_p, c)?;
            body.push(vec![
                k.to_string(),
                a.to_string(),
                fmt_f64(b.exact.value),
                fmt_f64(b.approx.value),
                fmt_f64(b.relative_gap),
            ]);
        }
    }
    csv_string(&body)
}
