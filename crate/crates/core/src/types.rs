//! Vectors and parameters shared by the simulator and the analytics.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::dist::FileSizeDistribution;
use crate::error::{argument, Result};

/// Unfinished work, in bits, queued at each server.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadVector(Vec<f64>);

impl WorkloadVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return argument("workload vector needs at least one server");
        }
        if let Some(bad) = entries.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return argument(format!("workload entries must be finite and >= 0, got {bad}"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `w + chunk * s`, the load right after an arrival is routed.
    pub fn loaded_with(&self, s: &RoutingVector, chunk: f64) -> Vec<f64> {
        self.0
            .iter()
            .zip(s.as_slice())
            .map(|(w, &n)| w + chunk * f64::from(n))
            .collect()
    }

    pub(crate) fn from_clipped(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Per-server count of one file's coded blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacementVector(Vec<u32>);

impl PlacementVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return argument("placement vector needs at least one server");
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&a| u64::from(a)).sum()
    }

    /// True when the entries take only the values `floor(alpha/m)` and
    /// `floor(alpha/m) + 1`, with the larger value on exactly
    /// `alpha mod m` servers.
    pub fn is_balanced_for(&self, alpha: u64) -> bool {
        let m = self.0.len() as u64;
        let base = alpha / m;
        let extra = alpha - m * base;
        let high = self.0.iter().filter(|&&a| u64::from(a) == base + 1).count() as u64;
        let low = self.0.iter().filter(|&&a| u64::from(a) == base).count() as u64;
        self.total() == alpha && high == extra && high + low == m
    }
}

/// Per-server count of blocks requested for one arrival.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoutingVector(Vec<u32>);

impl RoutingVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return argument("routing vector needs at least one server");
        }
        Ok(Self(entries))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&s| u64::from(s)).sum()
    }

    /// `s <= a` entrywise.
    pub fn fits(&self, a: &PlacementVector) -> bool {
        self.0.len() == a.len() && self.0.iter().zip(a.as_slice()).all(|(s, a)| s <= a)
    }

    pub(crate) fn from_raw(entries: Vec<u32>) -> Self {
        Self(entries)
    }
}

/// Size law of a block. `Fixed` is the constant-chunk recursion; the other
/// variants draw one size per arrival, shared by all blocks of that file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChunkLaw {
    Fixed(f64),
    Exponential { mean: f64 },
    Uniform { low: f64, high: f64 },
}

impl ChunkLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ChunkLaw::Fixed(c) => c > 0.0 && c.is_finite(),
            ChunkLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            ChunkLaw::Uniform { low, high } => low > 0.0 && high >= low && high.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            argument(format!("chunk size law must be supported on positive reals: {self:?}"))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ChunkLaw::Fixed(c) => c,
            ChunkLaw::Exponential { mean } => mean,
            ChunkLaw::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            ChunkLaw::Fixed(c) => c * c,
            ChunkLaw::Exponential { mean } => 2.0 * mean * mean,
            ChunkLaw::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, ChunkLaw::Fixed(_))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ChunkLaw::Fixed(c) => c,
            ChunkLaw::Exponential { mean } => {
                Exp::new(1.0 / mean).expect("validated mean").sample(rng)
            }
            ChunkLaw::Uniform { low, high } => {
                if high > low {
                    rng.random_range(low..high)
                } else {
                    low
                }
            }
        }
    }
}

/// Cluster parameters. `arrival_rate` is the total request rate of the
/// whole cluster; the per-server load is derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub m: usize,
    pub mu: f64,
    pub chunk: ChunkLaw,
    pub arrival_rate: f64,
}

impl SystemParams {
    pub fn new(m: usize, mu: f64, chunk: ChunkLaw, arrival_rate: f64) -> Result<Self> {
        let params = Self { m, mu, chunk, arrival_rate };
        params.validate()?;
        Ok(params)
    }

    /// Picks the arrival rate that produces per-server load `rho` bits/sec.
    pub fn with_load(
        m: usize,
        mu: f64,
        chunk: ChunkLaw,
        rho: f64,
        dist: &FileSizeDistribution,
    ) -> Result<Self> {
        if !(rho > 0.0) {
            return argument(format!("load rho must be positive, got {rho}"));
        }
        let mean_bits = chunk.mean() * dist.mean_chunks();
        if !(mean_bits > 0.0) {
            return argument("file-size distribution has zero mean, load is undefined");
        }
        Self::new(m, mu, chunk, rho * m as f64 / mean_bits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return argument("server count m must be >= 1");
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return argument(format!("service rate mu must be positive, got {}", self.mu));
        }
        if !(self.arrival_rate > 0.0) || !self.arrival_rate.is_finite() {
            return argument(format!("arrival rate must be positive, got {}", self.arrival_rate));
        }
        self.chunk.validate()
    }

    /// rho = lambda * nu / m, bits/sec per server.
    pub fn rho(&self, dist: &FileSizeDistribution) -> f64 {
        self.arrival_rate * self.chunk.mean() * dist.mean_chunks() / self.m as f64
    }

    pub fn is_stable(&self, dist: &FileSizeDistribution) -> bool {
        self.rho(dist) < self.mu
    }
}
