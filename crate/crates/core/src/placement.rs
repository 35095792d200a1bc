//! Random dissemination of a file's coded blocks over the servers.
//!
//! Placement is drawn afresh for every arrival: given kappa = k, each of the
//! feasible balanced placements of alpha_k blocks is equally likely.

use rand::Rng;

use crate::dist::FileSizeDistribution;
use crate::error::{argument, Result};
use crate::types::PlacementVector;

pub fn sample_chunk_count<R: Rng + ?Sized>(dist: &FileSizeDistribution, rng: &mut R) -> u64 {
    dist.sample(rng)
}

/// Moves a uniformly random `r`-subset of `pool` into `pool[..r]`
/// (partial Fisher–Yates).
pub(crate) fn choose_prefix<T, R: Rng + ?Sized>(pool: &mut [T], r: usize, rng: &mut R) {
    let n = pool.len();
    debug_assert!(r <= n);
    for t in 0..r {
        let j = rng.random_range(t..n);
        pool.swap(t, j);
    }
}

/// Every server gets `floor(alpha/m)` blocks and `alpha mod m` servers,
/// chosen uniformly, get one more.
pub fn sample_placement<R: Rng + ?Sized>(
    k: u64,
    alpha: u64,
    m: usize,
    rng: &mut R,
) -> Result<PlacementVector> {
    if m == 0 {
        return argument("placement needs m >= 1");
    }
    if k == 0 {
        return argument("placement needs k >= 1");
    }
    if alpha < k {
        return argument(format!("alpha_k = {alpha} is smaller than k = {k}"));
    }
    let base = alpha / m as u64;
    let extra = (alpha - base * m as u64) as usize;
    let base = u32::try_from(base).map_err(|_| crate::Error::Argument("alpha too large".into()))?;
    let mut entries = vec![base; m];
    let mut servers: Vec<usize> = (0..m).collect();
    choose_prefix(&mut servers, extra, rng);
    for &i in &servers[..extra] {
        entries[i] += 1;
    }
    PlacementVector::new(entries)
}
