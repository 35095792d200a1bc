//! Delivery policies: which servers serve the k blocks of an arrival.
//!
//! All three policies first spread `floor(k/m)` blocks on every server.
//! Balanced Random then sends the `k mod m` extra blocks to a random subset
//! of the servers still holding a block, Batch Sampling sends them to the
//! least loaded such servers, and Water-Filling ignores the balanced split
//! and greedily assigns block by block to the currently least loaded server.
//! Ties are broken uniformly at random with the caller's rng.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{argument, Error, Result};
use crate::placement::choose_prefix;
use crate::types::{PlacementVector, RoutingVector, WorkloadVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    WaterFilling,
    BatchSampling,
    BalancedRandom,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] =
        [PolicyKind::WaterFilling, PolicyKind::BatchSampling, PolicyKind::BalancedRandom];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::WaterFilling => "WF",
            PolicyKind::BatchSampling => "BS",
            PolicyKind::BalancedRandom => "BR",
        }
    }

    /// Whether the decision looks at the workload vector.
    pub fn is_workload_aware(self) -> bool {
        !matches!(self, PolicyKind::BalancedRandom)
    }

    pub fn route<R: Rng + ?Sized>(
        self,
        a: &PlacementVector,
        k: u64,
        w: &WorkloadVector,
        chunk: f64,
        rng: &mut R,
    ) -> Result<RoutingVector> {
        let mut cost = OpCount::default();
        match self {
            PolicyKind::BalancedRandom => route_br(a, k, rng),
            PolicyKind::BatchSampling => route_bs_counted(a, k, w, rng, &mut cost),
            PolicyKind::WaterFilling => route_wf_counted(a, k, w, chunk, rng, &mut cost),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WF" | "WATER-FILLING" | "WATERFILLING" => Ok(PolicyKind::WaterFilling),
            "BS" | "BATCH-SAMPLING" | "BATCHSAMPLING" => Ok(PolicyKind::BatchSampling),
            "BR" | "BALANCED-RANDOM" | "BALANCEDRANDOM" => Ok(PolicyKind::BalancedRandom),
            other => argument(format!("unknown policy {other:?}, expected WF, BS or BR")),
        }
    }
}

/// Cost model for the ordered-structure work done while routing: every heap
/// push or pop on a heap of size n costs ceil(log2(n + 1)), every scanned
/// candidate costs 1.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount(pub u64);

impl OpCount {
    fn heap_op(&mut self, len: usize) {
        self.0 += u64::from(usize::BITS - len.leading_zeros()).max(1);
    }

    fn scan(&mut self) {
        self.0 += 1;
    }
}

/// Balanced part of the split: `(floor(k/m), k mod m, servers with a' > 0)`.
fn balanced_split(a: &PlacementVector, k: u64) -> Result<(u32, usize, Vec<usize>)> {
    let m = a.len() as u64;
    if a.total() < k {
        return argument(format!("infeasible request: {} blocks placed, {k} needed", a.total()));
    }
    let base = k / m;
    let extra = (k - base * m) as usize;
    let base = u32::try_from(base).map_err(|_| Error::Argument("k too large".into()))?;
    if let Some(i) = a.as_slice().iter().position(|&ai| ai < base) {
        return argument(format!("server {i} holds fewer than floor(k/m) = {base} blocks"));
    }
    let eligible: Vec<usize> =
        a.as_slice().iter().enumerate().filter(|(_, &ai)| ai > base).map(|(i, _)| i).collect();
    if eligible.len() < extra {
        return argument(format!(
            "only {} servers hold an extra block, {extra} needed",
            eligible.len()
        ));
    }
    Ok((base, extra, eligible))
}

fn balanced_vector(m: usize, base: u32, extras: &[usize]) -> RoutingVector {
    let mut s = vec![base; m];
    for &i in extras {
        s[i] += 1;
    }
    RoutingVector::from_raw(s)
}

fn check_workload(a: &PlacementVector, w: &WorkloadVector) -> Result<()> {
    if a.len() != w.len() {
        return argument(format!("placement has {} servers, workload {}", a.len(), w.len()));
    }
    Ok(())
}

/// Balanced Random: extras go to a uniformly random subset of the servers
/// holding an additional block. Workload-oblivious.
pub fn route_br<R: Rng + ?Sized>(a: &PlacementVector, k: u64, rng: &mut R) -> Result<RoutingVector> {
    let (base, extra, mut eligible) = balanced_split(a, k)?;
    choose_prefix(&mut eligible, extra, rng);
    Ok(balanced_vector(a.len(), base, &eligible[..extra]))
}

/// Heap entry ordered by `(load, key)`; `key` is a fresh random tag that
/// breaks exact load ties uniformly.
#[derive(Debug, Clone, Copy)]
struct Ranked {
    load: f64,
    key: u64,
    server: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.load
            .total_cmp(&other.load)
            .then(self.key.cmp(&other.key))
            .then(self.server.cmp(&other.server))
    }
}

pub fn route_bs<R: Rng + ?Sized>(
    a: &PlacementVector,
    k: u64,
    w: &WorkloadVector,
    rng: &mut R,
) -> Result<RoutingVector> {
    route_bs_counted(a, k, w, rng, &mut OpCount::default())
}

/// Batch Sampling: extras go to the `k mod m` least loaded servers among
/// those holding an additional block.
pub fn route_bs_counted<R: Rng + ?Sized>(
    a: &PlacementVector,
    k: u64,
    w: &WorkloadVector,
    rng: &mut R,
    cost: &mut OpCount,
) -> Result<RoutingVector> {
    check_workload(a, w)?;
    let (base, extra, eligible) = balanced_split(a, k)?;
    if extra == 0 || extra == eligible.len() {
        return Ok(balanced_vector(a.len(), base, &eligible[..extra]));
    }
    // bounded max-heap holding the `extra` smallest seen so far
    let mut best: BinaryHeap<Ranked> = BinaryHeap::with_capacity(extra + 1);
    for &i in &eligible {
        let cand = Ranked { load: w.as_slice()[i], key: rng.random(), server: i };
        cost.scan();
        if best.len() < extra {
            best.push(cand);
            cost.heap_op(best.len());
        } else if cand < *best.peek().expect("non-empty") {
            best.pop();
            best.push(cand);
            cost.heap_op(best.len());
            cost.heap_op(best.len());
        }
    }
    let chosen: Vec<usize> = best.into_iter().map(|r| r.server).collect();
    Ok(balanced_vector(a.len(), base, &chosen))
}

pub fn route_wf<R: Rng + ?Sized>(
    a: &PlacementVector,
    k: u64,
    w: &WorkloadVector,
    chunk: f64,
    rng: &mut R,
) -> Result<RoutingVector> {
    route_wf_counted(a, k, w, chunk, rng, &mut OpCount::default())
}

/// Water-Filling: k sequential picks of the server minimizing
/// `w_i + chunk * taken_i` among servers with blocks left.
///
/// Each (re)inserted server carries a fresh random key. Loads only grow, so
/// every server sharing the minimal load was inserted before that level was
/// reached and their keys are still exchangeable: popping in key order is a
/// uniform tie-break.
pub fn route_wf_counted<R: Rng + ?Sized>(
    a: &PlacementVector,
    k: u64,
    w: &WorkloadVector,
    chunk: f64,
    rng: &mut R,
    cost: &mut OpCount,
) -> Result<RoutingVector> {
    check_workload(a, w)?;
    if !(chunk > 0.0) {
        return argument(format!("chunk size must be positive, got {chunk}"));
    }
    if a.total() < k {
        return argument(format!("infeasible request: {} blocks placed, {k} needed", a.total()));
    }
    let m = a.len();
    let mut taken = vec![0u32; m];
    let mut heap: BinaryHeap<Reverse<Ranked>> = a
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &ai)| ai > 0)
        .map(|(i, _)| Reverse(Ranked { load: w.as_slice()[i], key: rng.random(), server: i }))
        .collect();
    cost.0 += heap.len() as u64;
    for _ in 0..k {
        let Reverse(top) = heap.pop().expect("feasibility checked");
        cost.heap_op(heap.len() + 1);
        let i = top.server;
        taken[i] += 1;
        if taken[i] < a.as_slice()[i] {
            let load = w.as_slice()[i] + chunk * f64::from(taken[i]);
            heap.push(Reverse(Ranked { load, key: rng.random(), server: i }));
            cost.heap_op(heap.len());
        }
    }
    Ok(RoutingVector::from_raw(taken))
}
