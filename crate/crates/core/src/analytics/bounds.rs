//! Delay bounds and the M/D/1 tail exponent they are built on.
//!
//! Every bound is a delay in time units (bits divided by the service rate),
//! the same convention as [`crate::engine::DelayRecord::delay`].

use std::fmt;

use super::lambert::lambert_w_lower;
use crate::error::{argument, domain, Error, Result};
use crate::stats::harmonic;

const BISECTION_TOL: f64 = 1e-10;
const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundRegime {
    Log,
    Harmonic,
    ChunkScaled,
}

impl fmt::Display for BoundRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundRegime::Log => "log",
            BoundRegime::Harmonic => "harmonic",
            BoundRegime::ChunkScaled => "chunk_scaled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub k: u64,
    pub value: f64,
    pub regime: BoundRegime,
    /// Inputs and intermediate quantities, by name.
    pub params: Vec<(&'static str, f64)>,
}

impl BoundReport {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

/// Nonzero root of `s = l (1 - exp(-s sigma))` found by bisection on the
/// negative half-line, returned as a magnitude.
pub fn md1_tail_exponent_bisection(lambda: f64, sigma: f64) -> Result<f64> {
    check_md1(lambda, sigma)?;
    let f = |s: f64| s - lambda * (1.0 - (-s * sigma).exp());
    let load = lambda * sigma;
    // f < 0 just left of 0, f -> +inf as s -> -inf
    let mut hi = -(1.0 - load) / (lambda * sigma * sigma);
    let mut halvings = 0;
    while f(hi) >= 0.0 {
        hi *= 0.5;
        halvings += 1;
        if halvings > 200 {
            return Err(Error::Numerical("tail exponent bracket collapsed onto 0".into()));
        }
    }
    let mut lo = 2.0 * hi;
    while f(lo) <= 0.0 {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::Numerical("tail exponent bracket diverged".into()));
        }
    }
    while hi - lo > BISECTION_TOL * 1e-3 * lo.abs().max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(-0.5 * (lo + hi))
}

/// Decay rate `q = |l + W(-l sigma e^{-l sigma}) / sigma|` of the M/D/1
/// delay tail, with arrival rate `lambda` and deterministic service `sigma`.
///
/// The argument of W has two real preimages, `-l sigma` and the point below
/// -1; the nonzero root needs the second one, i.e. the lower branch. The
/// result is checked against [`md1_tail_exponent_bisection`].
pub fn md1_tail_exponent(lambda: f64, sigma: f64) -> Result<f64> {
    check_md1(lambda, sigma)?;
    let load = lambda * sigma;
    let w = lambert_w_lower(-load * (-load).exp())?;
    let q = (lambda + w / sigma).abs();
    let oracle = md1_tail_exponent_bisection(lambda, sigma)?;
    if (q - oracle).abs() > CROSS_CHECK_TOL * q.max(1.0) {
        return Err(Error::Numerical(format!(
            "tail exponent {q} disagrees with root-finding {oracle}"
        )));
    }
    Ok(q)
}

fn check_md1(lambda: f64, sigma: f64) -> Result<()> {
    if !(lambda > 0.0) || !(sigma > 0.0) || !lambda.is_finite() || !sigma.is_finite() {
        return argument(format!("arrival rate and service must be positive, got {lambda}, {sigma}"));
    }
    if lambda * sigma >= 1.0 {
        return domain(format!("unstable M/D/1: load {} >= 1", lambda * sigma));
    }
    Ok(())
}

fn check_stable(rho: f64, mu: f64) -> Result<()> {
    if !(mu > 0.0) || !(rho > 0.0) {
        return argument(format!("need rho > 0 and mu > 0, got {rho}, {mu}"));
    }
    if rho >= mu {
        return domain(format!("unstable: rho {rho} >= mu {mu}"));
    }
    Ok(())
}

/// `c/mu + ln(k) / q(rho/c, c/mu)` for fixed chunks of size `c` bits.
pub fn log_bound(k: u64, rho: f64, c: f64, mu: f64) -> Result<BoundReport> {
    if k == 0 {
        return argument("log bound needs k >= 1");
    }
    if !(c > 0.0) {
        return argument(format!("chunk size must be positive, got {c}"));
    }
    check_stable(rho, mu)?;
    let q = md1_tail_exponent(rho / c, c / mu)?;
    Ok(BoundReport {
        k,
        value: c / mu + (k as f64).ln() / q,
        regime: BoundRegime::Log,
        params: vec![("rho", rho), ("c", c), ("mu", mu), ("q", q)],
    })
}

/// Bound for exponential chunks with mean `mean_chunk` bits:
/// `mean_chunk/mu + mean_chunk H(k) / (mu - rho)`.
///
/// The per-server queue is M/M/1 with delay rate `(mu - rho) / mean_chunk`;
/// `raw_prefactor` carries `mu / (mu - rho)` for comparison with the
/// unit-free form of the harmonic term.
pub fn harmonic_bound(k: u64, rho: f64, mu: f64, mean_chunk: f64) -> Result<BoundReport> {
    if k == 0 {
        return argument("harmonic bound needs k >= 1");
    }
    if !(mean_chunk > 0.0) {
        return argument(format!("mean chunk must be positive, got {mean_chunk}"));
    }
    check_stable(rho, mu)?;
    let prefactor = mean_chunk / (mu - rho);
    let h = harmonic(k);
    Ok(BoundReport {
        k,
        value: mean_chunk / mu + prefactor * h,
        regime: BoundRegime::Harmonic,
        params: vec![
            ("rho", rho),
            ("mu", mu),
            ("mean_chunk", mean_chunk),
            ("harmonic", h),
            ("prefactor", prefactor),
            ("raw_prefactor", mu / (mu - rho)),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkScalingBound {
    /// Uses the exact tail exponent at arrival rate `lambda_p a`, service `c/a`.
    pub exact: BoundReport,
    /// Uses `1/q ~ c^2 lambda_p / (2 a (1 - lambda_p c))`.
    pub approx: BoundReport,
    /// `|approx - exact| / exact` of the `ln(ak)` coefficients.
    pub relative_gap: f64,
}

/// Delay bound when each chunk of size `c` is split into `a` sub-chunks,
/// with unit service rate: `c/a + ln(ak) / q`.
pub fn chunk_scaling_bound(k: u64, a: u64, lambda_p: f64, c: f64) -> Result<ChunkScalingBound> {
    if k == 0 || a == 0 {
        return argument("chunk scaling bound needs k >= 1 and a >= 1");
    }
    if !(c > 0.0) || !(lambda_p > 0.0) {
        return argument("chunk scaling bound needs lambda_p > 0 and c > 0");
    }
    let load = lambda_p * c;
    if load >= 1.0 {
        return domain(format!("unstable: lambda_p c = {load} >= 1"));
    }
    let af = a as f64;
    let q = md1_tail_exponent(lambda_p * af, c / af)?;
    let exact_coef = 1.0 / q;
    let approx_coef = c * c * lambda_p / (2.0 * af * (1.0 - load));
    let log_term = (af * k as f64).ln();
    let params = vec![("a", af), ("lambda_p", lambda_p), ("c", c), ("q", q)];
    let report = |coef: f64, extra: (&'static str, f64)| {
        let mut params = params.clone();
        params.push(extra);
        BoundReport { k, value: c / af + coef * log_term, regime: BoundRegime::ChunkScaled, params }
    };
    Ok(ChunkScalingBound {
        exact: report(exact_coef, ("coefficient", exact_coef)),
        approx: report(approx_coef, ("coefficient", approx_coef)),
        relative_gap: (approx_coef - exact_coef).abs() / exact_coef,
    })
}

/// Mean of the maximum of `k` i.i.d. exponentials with the given rate.
pub fn expected_max_exponential(k: u64, rate: f64) -> Result<f64> {
    if k == 0 || !(rate > 0.0) {
        return argument("expected max needs k >= 1 and a positive rate");
    }
    Ok(harmonic(k) / rate)
}
