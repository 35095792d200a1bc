//! The workload recursion `W_{n+1} = (W_n + c_n s_n - mu tau_n 1)^+` driven
//! per policy, with the delay of every arrival recorded on the way.
//!
//! Every policy runs its own chain. Randomness comes from two ChaCha
//! streams per chain: an environment stream (inter-arrival times, chunk
//! counts, placements, chunk sizes) and a tie-break stream consumed by the
//! routing decision. In a coupled experiment all chains use the same two
//! streams, so they see identical arrivals while keeping separate workloads.
//!
//! Delays are times: bits divided by the service rate mu.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::dist::FileSizeDistribution;
use crate::error::{argument, Result};
use crate::placement::{sample_chunk_count, sample_placement};
use crate::policy::PolicyKind;
use crate::stats::{self, MeanEstimate};
use crate::types::{PlacementVector, RoutingVector, SystemParams, WorkloadVector};

const ENV_STREAM: u64 = 0;
const TIE_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub dist: FileSizeDistribution,
    pub policies: Vec<PolicyKind>,
    pub iterations: u64,
    /// Leading arrivals whose records are dropped.
    pub warmup: u64,
    pub seed: u64,
    /// Share the environment and tie-break streams across policies.
    pub coupled: bool,
}

impl ExperimentConfig {
    /// Coupled experiment with the default warmup of `iterations / 10`.
    pub fn new(
        params: SystemParams,
        dist: FileSizeDistribution,
        policies: Vec<PolicyKind>,
        iterations: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            params,
            dist,
            policies,
            iterations,
            warmup: iterations / 10,
            seed,
            coupled: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.iterations == 0 || self.warmup >= self.iterations {
            return argument(format!(
                "need iterations > warmup >= 0, got {} and {}",
                self.iterations, self.warmup
            ));
        }
        if self.policies.is_empty() {
            return argument("at least one policy must be enabled");
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.params.rho(&self.dist)
    }

    pub fn is_stable(&self) -> bool {
        self.params.is_stable(&self.dist)
    }

    fn stream_offset(&self, policy: PolicyKind) -> u64 {
        if self.coupled {
            0
        } else {
            1 + policy as u64
        }
    }
}

/// One request as drawn from the environment stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEvent {
    /// Time until the next arrival.
    pub tau: f64,
    pub k: u64,
    /// `None` for an empty request (k = 0), which only lets time pass.
    pub placement: Option<PlacementVector>,
    pub chunk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRecord {
    pub n: u64,
    pub k: u64,
    pub delay: f64,
    pub policy: PolicyKind,
}

/// `max(w_i + chunk * s_i - mu * tau, 0)` for every server.
pub fn step(
    w: &WorkloadVector,
    s: &RoutingVector,
    chunk: f64,
    tau: f64,
    mu: f64,
) -> Result<WorkloadVector> {
    if w.len() != s.len() {
        return argument(format!("workload has {} servers, routing {}", w.len(), s.len()));
    }
    if !(chunk > 0.0) || !(tau >= 0.0) || !(mu > 0.0) {
        return argument(format!("need chunk > 0, tau >= 0, mu > 0; got {chunk}, {tau}, {mu}"));
    }
    let drained = mu * tau;
    let next = w
        .as_slice()
        .iter()
        .zip(s.as_slice())
        .map(|(&wi, &si)| (wi + chunk * f64::from(si) - drained).max(0.0))
        .collect();
    Ok(WorkloadVector::from_clipped(next))
}

/// Completion time of the slowest requested block:
/// `max over {i : s_i > 0} of (w_i + chunk * s_i) / mu`.
pub fn delay_of(w: &WorkloadVector, s: &RoutingVector, chunk: f64, mu: f64) -> Result<f64> {
    if w.len() != s.len() {
        return argument(format!("workload has {} servers, routing {}", w.len(), s.len()));
    }
    if !(mu > 0.0) {
        return argument(format!("service rate must be positive, got {mu}"));
    }
    w.as_slice()
        .iter()
        .zip(s.as_slice())
        .filter(|(_, &si)| si > 0)
        .map(|(&wi, &si)| (wi + chunk * f64::from(si)) / mu)
        .reduce(f64::max)
        .ok_or_else(|| crate::Error::Argument("routing vector requests no block".into()))
}

struct Environment<'a> {
    rng: ChaCha8Rng,
    inter_arrival: Exp<f64>,
    config: &'a ExperimentConfig,
}

impl<'a> Environment<'a> {
    fn new(config: &'a ExperimentConfig, offset: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(ENV_STREAM + offset);
        let inter_arrival = Exp::new(config.params.arrival_rate).expect("validated rate");
        Self { rng, inter_arrival, config }
    }

    fn next(&mut self) -> Result<ArrivalEvent> {
        let tau = self.inter_arrival.sample(&mut self.rng);
        let dist = &self.config.dist;
        let k = sample_chunk_count(dist, &mut self.rng);
        if k == 0 {
            return Ok(ArrivalEvent { tau, k, placement: None, chunk: 0.0 });
        }
        let placement = sample_placement(k, dist.alpha(k), self.config.params.m, &mut self.rng)?;
        let chunk = self.config.params.chunk.sample(&mut self.rng);
        Ok(ArrivalEvent { tau, k, placement: Some(placement), chunk })
    }
}

/// A single policy's Markov chain. Advancing it handles arrival `n`:
/// routes it against `W_n`, records its delay and moves to `W_{n+1}`.
pub struct Chain<'a> {
    policy: PolicyKind,
    workload: WorkloadVector,
    env: Environment<'a>,
    ties: ChaCha8Rng,
    n: u64,
}

impl<'a> Chain<'a> {
    pub fn new(config: &'a ExperimentConfig, policy: PolicyKind) -> Self {
        let offset = config.stream_offset(policy);
        let mut ties = ChaCha8Rng::seed_from_u64(config.seed);
        ties.set_stream(TIE_STREAM + offset);
        Self {
            policy,
            workload: WorkloadVector::zeros(config.params.m),
            env: Environment::new(config, offset),
            ties,
            n: 0,
        }
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    /// Workload seen by the next arrival.
    pub fn workload(&self) -> &WorkloadVector {
        &self.workload
    }

    pub fn index(&self) -> u64 {
        self.n
    }

    /// Processes one arrival. Empty requests (k = 0) produce no record.
    pub fn advance(&mut self) -> Result<(ArrivalEvent, Option<DelayRecord>)> {
        let mu = self.env.config.params.mu;
        let event = self.env.next()?;
        let record = match &event.placement {
            None => {
                let drained = mu * event.tau;
                let next = self.workload.as_slice().iter().map(|w| (w - drained).max(0.0)).collect();
                self.workload = WorkloadVector::from_clipped(next);
                None
            }
            Some(a) => {
                let s = self.policy.route(a, event.k, &self.workload, event.chunk, &mut self.ties)?;
                let delay = delay_of(&self.workload, &s, event.chunk, mu)?;
                self.workload = step(&self.workload, &s, event.chunk, event.tau, mu)?;
                Some(DelayRecord { n: self.n, k: event.k, delay, policy: self.policy })
            }
        };
        self.n += 1;
        Ok((event, record))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub policy: PolicyKind,
    /// Records of arrivals `warmup..iterations` with k >= 1.
    pub records: Vec<DelayRecord>,
}

impl PolicyRun {
    pub fn delays(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.delay).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rho: f64,
    pub mu: f64,
    pub stable: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub runs: Vec<PolicyRun>,
}

impl RunOutput {
    pub fn policy(&self, policy: PolicyKind) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.policy == policy)
    }
}

/// Runs the chain of one policy, calling `observe(n, W_n)` before every
/// arrival that is past the warmup.
pub fn run_policy_with<F>(config: &ExperimentConfig, policy: PolicyKind, mut observe: F) -> Result<PolicyRun>
where
    F: FnMut(u64, &WorkloadVector),
{
    config.validate()?;
    let mut chain = Chain::new(config, policy);
    let mut records = Vec::with_capacity((config.iterations - config.warmup) as usize);
    for n in 0..config.iterations {
        let keep = n >= config.warmup;
        if keep {
            observe(n, chain.workload());
        }
        let (_, record) = chain.advance()?;
        if let (true, Some(r)) = (keep, record) {
            records.push(r);
        }
    }
    Ok(PolicyRun { policy, records })
}

pub fn run_policy(config: &ExperimentConfig, policy: PolicyKind) -> Result<PolicyRun> {
    run_policy_with(config, policy, |_, _| {})
}

fn summarize(config: &ExperimentConfig) -> RunSummary {
    let rho = config.rho();
    let stable = rho < config.params.mu;
    let warning = (!stable).then(|| {
        format!("unstable load: rho = {rho:.6} >= mu = {}; workloads grow without bound", config.params.mu)
    });
    RunSummary { rho, mu: config.params.mu, stable, warning }
}

/// Runs every enabled policy from an empty system.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    let runs = {
        use rayon::prelude::*;
        config.policies.par_iter().map(|&p| run_policy(config, p)).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs = config.policies.iter().map(|&p| run_policy(config, p)).collect::<Result<Vec<_>>>()?;
    Ok(RunOutput { summary: summarize(config), runs })
}

/// Post-warmup workload of one server under Balanced Random, one sample per
/// arrival (bits).
pub fn marginal_workload_samples(config: &ExperimentConfig, server: usize) -> Result<Vec<f64>> {
    if server >= config.params.m {
        return argument(format!("server index {server} out of range for m = {}", config.params.m));
    }
    if !config.policies.contains(&PolicyKind::BalancedRandom) {
        return argument("marginal workload samples are defined for the Balanced Random policy");
    }
    let mut out = Vec::with_capacity((config.iterations - config.warmup) as usize);
    run_policy_with(config, PolicyKind::BalancedRandom, |_, w| out.push(w.as_slice()[server]))?;
    Ok(out)
}

/// Delays of the records with chunk count `k`.
pub fn delays_for(records: &[DelayRecord], k: u64) -> Vec<f64> {
    records.iter().filter(|r| r.k == k).map(|r| r.delay).collect()
}

/// Mean delay given k with an i.i.d. 95% half-width; `None` for an empty stratum.
pub fn conditional_mean_delay(records: &[DelayRecord], k: u64) -> Option<MeanEstimate> {
    stats::mean_ci(&delays_for(records, k))
}

/// Conditional mean delay of every non-empty k stratum.
pub fn strata(records: &[DelayRecord]) -> BTreeMap<u64, MeanEstimate> {
    let mut by_k: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_k.entry(r.k).or_default().push(r.delay);
    }
    by_k.into_iter().filter_map(|(k, d)| stats::mean_ci(&d).map(|e| (k, e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ChunkLaw;

    fn wv(v: &[f64]) -> WorkloadVector {
        WorkloadVector::new(v.to_vec()).unwrap()
    }

    fn rv(v: &[u32]) -> RoutingVector {
        RoutingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(&wv(&[0.0, 0.0]), &rv(&[0, 0]), 3.0, 7.0, 1.0).unwrap(), wv(&[0.0, 0.0]));
        assert_eq!(step(&wv(&[5.0, 1.0]), &rv(&[1, 0]), 10.0, 2.0, 1.0).unwrap(), wv(&[13.0, 0.0]));
        assert_eq!(step(&wv(&[5.0, 1.0]), &rv(&[2, 1]), 1.5, 0.0, 1.0).unwrap(), wv(&[8.0, 2.5]));
    }

    #[test]
    fn step_rejects_mismatch() {
        assert!(step(&wv(&[0.0]), &rv(&[0, 0]), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn delay_examples() {
        assert_eq!(delay_of(&wv(&[0.0, 0.0]), &rv(&[0, 1]), 10.0, 2.0).unwrap(), 5.0);
        assert_eq!(delay_of(&wv(&[3.0, 7.0, 0.0]), &rv(&[1, 0, 2]), 2.0, 1.0).unwrap(), 5.0);
        assert_eq!(delay_of(&wv(&[3.0, 7.0, 0.0]), &rv(&[1, 0, 2]), 2.0, 2.0).unwrap(), 2.5);
        assert!(delay_of(&wv(&[3.0, 7.0]), &rv(&[0, 0]), 2.0, 1.0).is_err());
    }

    #[test]
    fn records_skip_warmup_and_empty_requests() {
        let dist = FileSizeDistribution::binomial(0.2, 10).unwrap();
        let params = SystemParams::with_load(10, 1.0, ChunkLaw::Fixed(1.0), 0.5, &dist).unwrap();
        let cfg = ExperimentConfig::new(params, dist, vec![PolicyKind::BalancedRandom], 2000, 5).unwrap();
        let run = run_policy(&cfg, PolicyKind::BalancedRandom).unwrap();
        assert!(run.records.iter().all(|r| r.n >= 200 && r.k >= 1));
        assert!(run.records.len() < 1800);
    }

    #[test]
    fn strata_of_constructed_records() {
        let recs: Vec<DelayRecord> = (1..=4u64)
            .flat_map(|k| {
                (0..3).map(move |n| DelayRecord { n, k, delay: k as f64, policy: PolicyKind::BalancedRandom })
            })
            .collect();
        for (k, e) in strata(&recs) {
            assert_eq!(e.mean, k as f64);
            assert_eq!(e.count, 3);
        }
        assert!(conditional_mean_delay(&recs, 9).is_none());
    }
}
