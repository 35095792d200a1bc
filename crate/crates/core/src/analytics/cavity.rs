//! The cavity queue: the single-server M/GI/1 queue whose workload has the
//! same law as one server's workload under Balanced Random.
//!
//! Each cluster arrival brings `l` blocks to a given server with probability
//! `pi~(l c)`. The cavity queue sees every cluster arrival, so its Poisson
//! rate is the total request rate of the cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::dist::FileSizeDistribution;
use crate::error::{argument, domain, Result};
use crate::types::ChunkLaw;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CavityPmf {
    /// `atoms[l]` = probability that an arrival brings `l` blocks.
    atoms: Vec<f64>,
    cumulative: Vec<f64>,
    pub arrival_rate: f64,
    pub chunk: f64,
}

impl CavityPmf {
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn prob(&self, l: usize) -> f64 {
        self.atoms.get(l).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().sum()
    }

    /// Mean number of blocks per arrival.
    pub fn mean_blocks(&self) -> f64 {
        self.atoms.iter().enumerate().map(|(l, p)| l as f64 * p).sum()
    }

    pub fn second_moment_blocks(&self) -> f64 {
        self.atoms.iter().enumerate().map(|(l, p)| (l * l) as f64 * p).sum()
    }

    /// Mean service requirement in bits.
    pub fn mean_service_bits(&self) -> f64 {
        self.chunk * self.mean_blocks()
    }

    /// Utilisation of the cavity queue at service rate `mu`.
    pub fn load(&self, mu: f64) -> f64 {
        self.arrival_rate * self.mean_service_bits() / mu
    }

    /// `E[exp(-s sigma)]` of the service time `sigma = l c / mu`.
    pub fn service_lst(&self, mu: f64) -> impl Fn(f64) -> f64 + '_ {
        let unit = self.chunk / mu;
        move |s| self.atoms.iter().enumerate().map(|(l, p)| p * (-s * unit * l as f64).exp()).sum()
    }

    /// Number of blocks brought by one arrival.
    pub fn sample_blocks<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
    }
}

/// Service pmf of the cavity queue, with `total_arrival_rate` the request
/// rate of the whole cluster:
///
/// `pi~(0) = 1 - sum_{k=1}^{m} (k/m) pi_k - sum_{k>m} pi_k` and, for l >= 1,
/// `pi~(l c) = sum_{k=(l-1)m+1}^{lm} (k/m - l + 1) pi_k
///           + sum_{k=lm+1}^{(l+1)m-1} (1 - k/m + l) pi_k`.
pub fn cavity_pmf(pi: &FileSizeDistribution, m: usize, c: f64, total_arrival_rate: f64) -> Result<CavityPmf> {
    if m == 0 || !(c > 0.0) || !(total_arrival_rate > 0.0) {
        return argument("cavity pmf needs m >= 1, c > 0 and a positive arrival rate");
    }
    let mass: f64 = pi.table().iter().map(|(_, p)| p).sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return argument(format!("file-size pmf sums to {mass}, expected 1"));
    }
    let mu = m as u64;
    let mf = m as f64;
    let kmax = pi.max_support();
    let lmax = (kmax / mu + 1) as usize;
    let mut atoms = vec![0.0; lmax + 1];

    let head: f64 = pi
        .table()
        .iter()
        .map(|&(k, p)| if k == 0 { 0.0 } else if k <= mu { k as f64 / mf * p } else { p })
        .sum();
    atoms[0] = (1.0 - head).max(0.0);

    for (l, slot) in atoms.iter_mut().enumerate().skip(1) {
        let lu = l as u64;
        let lf = l as f64;
        let rising: f64 = (((lu - 1) * mu + 1)..=(lu * mu)).map(|k| (k as f64 / mf - lf + 1.0) * pi.pmf(k)).sum();
        let falling: f64 = ((lu * mu + 1)..((lu + 1) * mu)).map(|k| (1.0 - k as f64 / mf + lf) * pi.pmf(k)).sum();
        *slot = rising + falling;
    }
    while atoms.len() > 1 && *atoms.last().unwrap() == 0.0 {
        atoms.pop();
    }
    let mut acc = 0.0;
    let cumulative = atoms
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(CavityPmf { atoms, cumulative, arrival_rate: total_arrival_rate, chunk: c })
}

/// Lindley recursion `w' = max(w + x - mu tau, 0)` for the cavity queue,
/// started empty. Returns `n` workload-at-arrival samples (bits) after
/// discarding the first `n / 10`.
pub fn simulate_cavity_queue(pmf: &CavityPmf, mu: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    simulate(pmf, mu, n, 1, seed, None)
}

/// Runs the same chain for `n` post-warmup steps but keeps only every
/// `stride`-th sample.
pub fn simulate_cavity_queue_thinned(pmf: &CavityPmf, mu: f64, n: usize, stride: usize, seed: u64) -> Result<Vec<f64>> {
    simulate(pmf, mu, n, stride, seed, None)
}

/// Modified cavity queue: the service requirement is `l * Z` with a fresh
/// chunk size `Z` drawn from `chunk` per arrival.
pub fn simulate_modified_cavity_queue(
    pmf: &CavityPmf,
    mu: f64,
    n: usize,
    seed: u64,
    chunk: ChunkLaw,
) -> Result<Vec<f64>> {
    chunk.validate()?;
    simulate(pmf, mu, n, 1, seed, Some(chunk))
}

/// Thinned variant of [`simulate_modified_cavity_queue`].
pub fn simulate_modified_cavity_queue_thinned(
    pmf: &CavityPmf,
    mu: f64,
    n: usize,
    stride: usize,
    seed: u64,
    chunk: ChunkLaw,
) -> Result<Vec<f64>> {
    chunk.validate()?;
    simulate(pmf, mu, n, stride, seed, Some(chunk))
}

fn simulate(pmf: &CavityPmf, mu: f64, n: usize, stride: usize, seed: u64, chunk: Option<ChunkLaw>) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return argument(format!("service rate must be positive, got {mu}"));
    }
    if stride == 0 {
        return argument("stride must be at least 1");
    }
    let mean_chunk = chunk.map_or(pmf.chunk, |c| c.mean());
    let load = pmf.arrival_rate * pmf.mean_blocks() * mean_chunk / mu;
    if load >= 1.0 {
        return domain(format!("cavity queue is unstable: load {load} >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = Exp::new(pmf.arrival_rate).map_err(|e| crate::Error::Argument(e.to_string()))?;
    let warmup = n / 10;
    let mut out = Vec::with_capacity(n / stride + 1);
    let mut w = 0.0f64;
    for i in 0..warmup + n {
        if i >= warmup && (i - warmup) % stride == 0 {
            out.push(w);
        }
        let blocks = pmf.sample_blocks(&mut rng) as f64;
        let size = match chunk {
            None => pmf.chunk,
            Some(law) => law.sample(&mut rng),
        };
        let tau = gaps.sample(&mut rng);
        w = (w + blocks * size - mu * tau).max(0.0);
    }
    Ok(out)
}

/// Draws of `max_{i: s_i > 0} (W~_i + c s_i) / mu` for a typical Balanced
/// Random routing vector with |s| = k, the W~_i picked independently from
/// `pool` (stationary cavity workloads in bits).
pub fn cavity_delay_samples<R: Rng + ?Sized>(
    pool: &[f64],
    k: u64,
    m: usize,
    chunk: ChunkLaw,
    mu: f64,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if pool.is_empty() || k == 0 || m == 0 {
        return argument("cavity delay oracle needs a non-empty pool, k >= 1 and m >= 1");
    }
    let base = k / m as u64;
    let extra = (k - base * m as u64) as usize;
    // servers with base + 1 blocks, then servers with base blocks (if any)
    let groups: [(usize, f64); 2] = [(extra, (base + 1) as f64), (if base > 0 { m - extra } else { 0 }, base as f64)];
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let c = chunk.sample(rng);
        let mut worst = f64::NEG_INFINITY;
        for &(count, blocks) in &groups {
            for _ in 0..count {
                let w = pool[rng.random_range(0..pool.len())];
                worst = worst.max(w + c * blocks);
            }
        }
        out.push(worst / mu);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_every_stride_th_sample() {
        let pmf = cavity_pmf(&FileSizeDistribution::delta(4).unwrap(), 4, 1.0, 0.5).unwrap();
        let full = simulate_cavity_queue(&pmf, 1.0, 1000, 9).unwrap();
        let thin = simulate_cavity_queue_thinned(&pmf, 1.0, 1000, 7, 9).unwrap();
        assert_eq!(thin.len(), 143);
        assert!(thin.iter().enumerate().all(|(i, &w)| w == full[7 * i]));
        assert!(simulate_cavity_queue_thinned(&pmf, 1.0, 10, 0, 9).is_err());
    }

    #[test]
    fn full_width_files_load_every_server_once() {
        let pi = FileSizeDistribution::delta(8).unwrap();
        let p = cavity_pmf(&pi, 8, 2.0, 1.0).unwrap();
        assert_eq!(p.prob(0), 0.0);
        assert!((p.prob(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_chunk_files_on_four_servers() {
        let p = cavity_pmf(&FileSizeDistribution::delta(1).unwrap(), 4, 1.0, 1.0).unwrap();
        assert!((p.prob(0) - 0.75).abs() < 1e-15);
        assert!((p.prob(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn wide_files_split_between_two_levels() {
        // k = 6 on m = 4: two servers get 2 blocks, two get 1
        let p = cavity_pmf(&FileSizeDistribution::delta(6).unwrap(), 4, 1.0, 1.0).unwrap();
        assert!((p.prob(1) - 0.5).abs() < 1e-15);
        assert!((p.prob(2) - 0.5).abs() < 1e-15);
        assert_eq!(p.prob(0), 0.0);
    }

    #[test]
    fn binomial_normalization_and_mean() {
        let pi = FileSizeDistribution::binomial(0.1, 200).unwrap();
        let p = cavity_pmf(&pi, 200, 10.0, 1.0).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-9);
        assert!((p.mean_service_bits() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn massless_service_keeps_queue_empty() {
        let p = cavity_pmf(&FileSizeDistribution::binomial(0.0, 10).unwrap(), 10, 1.0, 3.0).unwrap();
        let w = simulate_cavity_queue(&p, 1.0, 1000, 1).unwrap();
        assert_eq!(w.len(), 1000);
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unstable_cavity_rejected() {
        let p = cavity_pmf(&FileSizeDistribution::delta(4).unwrap(), 4, 1.0, 2.0).unwrap();
        assert!(simulate_cavity_queue(&p, 1.0, 10, 1).is_err());
    }
}
