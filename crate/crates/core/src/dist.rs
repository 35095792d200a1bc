//! File-size laws (number of chunks per request) and the coding rule k -> alpha_k.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};

use crate::error::{argument, Result};

/// Tail mass below which infinite-support pmfs are cut off.
pub const TAIL_CUTOFF: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SizeLaw {
    /// Binomial(trials, p) on {0, ..., trials}.
    Binomial { p: f64, trials: u64 },
    /// Geometric(p) on {1, 2, ...}: pi_k = (1-p)^(k-1) p.
    Geometric { p: f64 },
    Delta(u64),
    Explicit(Vec<(u64, f64)>),
}

/// How many coded blocks a file of k chunks is expanded into.
#[derive(Debug, Clone, PartialEq)]
pub enum CodingRule {
    /// alpha_k = k + r.
    Redundancy(u64),
    /// Explicit alpha_k; sizes missing from the table are uncoded.
    Table(BTreeMap<u64, u64>),
}

impl CodingRule {
    pub fn blocks(&self, k: u64) -> u64 {
        match self {
            CodingRule::Redundancy(r) => k + r,
            CodingRule::Table(t) => t.get(&k).copied().unwrap_or(k),
        }
    }
}

impl Default for CodingRule {
    fn default() -> Self {
        CodingRule::Redundancy(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileSizeDistribution {
    law: SizeLaw,
    coding: CodingRule,
    /// (k, pi_k) with pi_k > 0, ascending in k, cut where the tail drops below [`TAIL_CUTOFF`].
    table: Vec<(u64, f64)>,
    cumulative: Vec<f64>,
    truncated_mass: f64,
}

impl FileSizeDistribution {
    pub fn binomial(p: f64, trials: u64) -> Result<Self> {
        Self::new(SizeLaw::Binomial { p, trials }, CodingRule::default())
    }

    pub fn geometric(p: f64) -> Result<Self> {
        Self::new(SizeLaw::Geometric { p }, CodingRule::default())
    }

    pub fn delta(k0: u64) -> Result<Self> {
        Self::new(SizeLaw::Delta(k0), CodingRule::default())
    }

    pub fn explicit(pmf: Vec<(u64, f64)>) -> Result<Self> {
        Self::new(SizeLaw::Explicit(pmf), CodingRule::default())
    }

    pub fn with_coding(mut self, coding: CodingRule) -> Result<Self> {
        self.coding = coding;
        self.check_coding()?;
        Ok(self)
    }

    pub fn with_redundancy(self, r: u64) -> Result<Self> {
        self.with_coding(CodingRule::Redundancy(r))
    }

    pub fn new(law: SizeLaw, coding: CodingRule) -> Result<Self> {
        let table = build_table(&law)?;
        let total: f64 = table.iter().map(|(_, p)| p).sum();
        let truncated_mass = (1.0 - total).max(0.0);
        let mut acc = 0.0;
        let cumulative = table
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        let dist = Self { law, coding, table, cumulative, truncated_mass };
        dist.check_coding()?;
        Ok(dist)
    }

    fn check_coding(&self) -> Result<()> {
        for &(k, _) in &self.table {
            let alpha = self.coding.blocks(k);
            if alpha < k {
                return argument(format!("coding rule gives alpha_{k} = {alpha} < {k}"));
            }
        }
        Ok(())
    }

    pub fn law(&self) -> &SizeLaw {
        &self.law
    }

    pub fn coding(&self) -> &CodingRule {
        &self.coding
    }

    pub fn alpha(&self, k: u64) -> u64 {
        self.coding.blocks(k)
    }

    /// The support table (k, pi_k), truncated for infinite-support laws.
    pub fn table(&self) -> &[(u64, f64)] {
        &self.table
    }

    /// Probability mass dropped by the tail cut.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self.table.binary_search_by_key(&k, |&(kk, _)| kk) {
            Ok(i) => self.table[i].1,
            Err(_) => 0.0,
        }
    }

    /// E[kappa], the mean number of chunks per request.
    pub fn mean_chunks(&self) -> f64 {
        match self.law {
            SizeLaw::Binomial { p, trials } => p * trials as f64,
            SizeLaw::Geometric { p } => 1.0 / p,
            SizeLaw::Delta(k) => k as f64,
            SizeLaw::Explicit(_) => self.table.iter().map(|&(k, p)| k as f64 * p).sum(),
        }
    }

    /// nu = c * E[kappa], mean file size in bits.
    pub fn mean_bits(&self, chunk_mean: f64) -> f64 {
        chunk_mean * self.mean_chunks()
    }

    pub fn max_support(&self) -> u64 {
        self.table.last().map(|&(k, _)| k).unwrap_or(0)
    }

    /// Whether the law is one of the families known to yield associated
    /// routing vectors under Balanced Random (binomial, geometric).
    pub fn association_assumed(&self) -> bool {
        matches!(self.law, SizeLaw::Binomial { .. } | SizeLaw::Geometric { .. })
    }

    /// Whether the association-based bound comparisons are run for this law.
    pub fn bound_checks_permitted(&self) -> bool {
        self.association_assumed() || matches!(self.law, SizeLaw::Delta(_))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.law {
            SizeLaw::Binomial { p, trials } => Binomial::new(trials, p).expect("validated").sample(rng),
            SizeLaw::Geometric { p } => 1 + Geometric::new(p).expect("validated").sample(rng),
            SizeLaw::Delta(k) => k,
            SizeLaw::Explicit(_) => {
                let total = *self.cumulative.last().expect("non-empty table");
                let u: f64 = rng.random::<f64>() * total;
                let i = self.cumulative.partition_point(|&c| c <= u);
                self.table[i.min(self.table.len() - 1)].0
            }
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        argument(format!("{what} parameter p must lie in [0, 1], got {p}"))
    }
}

fn build_table(law: &SizeLaw) -> Result<Vec<(u64, f64)>> {
    match *law {
        SizeLaw::Binomial { p, trials } => {
            check_probability(p, "binomial")?;
            if p == 0.0 {
                return Ok(vec![(0, 1.0)]);
            }
            if p == 1.0 {
                return Ok(vec![(trials, 1.0)]);
            }
            let (lp, lq) = (p.ln(), (1.0 - p).ln());
            let mut log_pmf = trials as f64 * lq;
            let mut out = Vec::with_capacity(trials as usize + 1);
            for k in 0..=trials {
                if k > 0 {
                    log_pmf += ((trials - k + 1) as f64 / k as f64).ln() + lp - lq;
                }
                let pk = log_pmf.exp();
                if pk > 0.0 {
                    out.push((k, pk));
                }
            }
            Ok(out)
        }
        SizeLaw::Geometric { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return argument(format!("geometric parameter p must lie in (0, 1], got {p}"));
            }
            let mut out = Vec::new();
            let mut tail = 1.0;
            let mut k = 1u64;
            while tail >= TAIL_CUTOFF {
                let pk = p * (1.0 - p).powf((k - 1) as f64);
                out.push((k, pk));
                tail = (1.0 - p).powf(k as f64);
                k += 1;
            }
            Ok(out)
        }
        SizeLaw::Delta(k0) => Ok(vec![(k0, 1.0)]),
        SizeLaw::Explicit(ref pmf) => {
            if pmf.is_empty() {
                return argument("explicit pmf is empty");
            }
            let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
            for &(k, p) in pmf {
                if !(p >= 0.0) || !p.is_finite() {
                    return argument(format!("pmf entry pi_{k} = {p} is not a probability"));
                }
                *merged.entry(k).or_insert(0.0) += p;
            }
            let total: f64 = merged.values().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return argument(format!("pmf sums to {total}, expected 1"));
            }
            Ok(merged.into_iter().filter(|&(_, p)| p > 0.0).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binomial_table_normalized_with_mean_np() {
        let d = FileSizeDistribution::binomial(0.1, 200).unwrap();
        let total: f64 = d.table().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = d.table().iter().map(|&(k, p)| k as f64 * p).sum();
        assert!((mean - 20.0).abs() < 1e-9);
        assert!((d.mean_chunks() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_is_truncated_at_tiny_tail() {
        let d = FileSizeDistribution::geometric(0.25).unwrap();
        assert!(d.truncated_mass() < TAIL_CUTOFF);
        assert_eq!(d.table()[0], (1, 0.25));
        assert!((d.pmf(3) - 0.75 * 0.75 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn explicit_rejects_unnormalized() {
        assert!(FileSizeDistribution::explicit(vec![(1, 0.5), (2, 0.4)]).is_err());
        assert!(FileSizeDistribution::explicit(vec![(1, -0.5), (2, 1.5)]).is_err());
        assert!(FileSizeDistribution::explicit(vec![(1, 0.5), (2, 0.5)]).is_ok());
    }

    #[test]
    fn coding_rule_must_not_shrink() {
        let mut t = BTreeMap::new();
        t.insert(5, 4);
        assert!(FileSizeDistribution::delta(5).unwrap().with_coding(CodingRule::Table(t)).is_err());
        assert_eq!(FileSizeDistribution::delta(5).unwrap().with_redundancy(2).unwrap().alpha(5), 7);
    }

    #[test]
    fn delta_always_samples_its_point() {
        let d = FileSizeDistribution::delta(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 5));
    }

    #[test]
    fn explicit_sampling_frequencies() {
        let d = FileSizeDistribution::explicit(vec![(1, 0.2), (4, 0.8)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let ones = (0..n).filter(|_| d.sample(&mut rng) == 1).count() as f64 / n as f64;
        assert!((ones - 0.2).abs() < 0.01);
    }
}
