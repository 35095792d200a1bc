//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every function returns a flat `Float64Array`; the row layout is given in
//! each doc comment.

use ecdelay::analytics::{log_bound, md1_tail_exponent};
use ecdelay::engine::strata;
use ecdelay::placement::sample_placement;
use ecdelay::{run, ChunkLaw, ExperimentConfig, FileSizeDistribution, PolicyKind, SystemParams, WorkloadVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn js(e: ecdelay::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Coupled run of all three policies with Binomial(p, m) file sizes and
/// `k + redundancy` stored blocks.
///
/// Rows of five: `k, mean WF, mean BS, mean BR, log bound`. Strata with
/// fewer than `min_count` samples are dropped; missing cells are NaN.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn delay_curves(
    m: usize,
    p: f64,
    redundancy: u64,
    rho: f64,
    chunk: f64,
    iterations: u64,
    seed: u64,
    min_count: usize,
) -> Result<Vec<f64>, JsError> {
    let dist = FileSizeDistribution::binomial(p, m as u64).and_then(|d| d.with_redundancy(redundancy)).map_err(js)?;
    let params = SystemParams::with_load(m, 1.0, ChunkLaw::Fixed(chunk), rho, &dist).map_err(js)?;
    let cfg = ExperimentConfig::new(params, dist, PolicyKind::ALL.to_vec(), iterations, seed).map_err(js)?;
    let out = run(&cfg).map_err(js)?;
    let per_policy: Vec<_> = PolicyKind::ALL
        .iter()
        .map(|&policy| out.policy(policy).map(|r| strata(&r.records)).unwrap_or_default())
        .collect();
    let br = &per_policy[2];
    let mut rows = Vec::new();
    for (&k, est) in br {
        if est.count < min_count {
            continue;
        }
        rows.push(k as f64);
        for table in &per_policy {
            rows.push(table.get(&k).map_or(f64::NAN, |e| e.mean));
        }
        let bound = if out.summary.stable { log_bound(k, rho, chunk, 1.0).map(|b| b.value).unwrap_or(f64::NAN) } else { f64::NAN };
        rows.push(bound);
    }
    Ok(rows)
}

/// Tail exponent of an M/D/1 queue with service `sigma` over `points`
/// loads spread evenly in (0, 1). Rows of two: `load, q`.
#[wasm_bindgen]
pub fn tail_exponent_curve(sigma: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let mut rows = Vec::with_capacity(2 * points);
    for i in 1..=points {
        let load = i as f64 / (points + 1) as f64;
        rows.push(load);
        rows.push(md1_tail_exponent(load / sigma, sigma).map_err(js)?);
    }
    Ok(rows)
}

/// One arrival of `k` blocks on random workloads in `[0, spread)`, routed by
/// each policy from the same state. Returns `4 m` values: the workloads
/// before routing, then after WF, BS and BR.
#[wasm_bindgen]
pub fn routing_snapshot(m: usize, k: u64, redundancy: u64, spread: f64, chunk: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let before: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * spread).collect();
    let w = WorkloadVector::new(before.clone()).map_err(js)?;
    let a = sample_placement(k, k + redundancy, m, &mut rng).map_err(js)?;
    let ties = ChaCha8Rng::seed_from_u64(rng.random());
    let mut rows = before;
    for policy in PolicyKind::ALL {
        let s = policy.route(&a, k, &w, chunk, &mut ties.clone()).map_err(js)?;
        rows.extend(w.loaded_with(&s, chunk));
    }
    Ok(rows)
}
