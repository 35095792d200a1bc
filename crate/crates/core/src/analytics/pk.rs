//! Pollaczek–Khinchine transform of the stationary M/G/1 workload.

use crate::error::{argument, domain, Result};

/// Laplace transform `E[exp(-s W)]` of the stationary workload (time units)
/// of an M/G/1 queue with Poisson rate `arrival_rate` and service time
/// transform `service_lst`:
///
/// `G(s) = (1 - l E[sigma]) s / (s - l (1 - psi(s)))`.
pub fn pk_workload_transform<F>(arrival_rate: f64, service_lst: F, mean_service: f64, s: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(arrival_rate >= 0.0) || !(mean_service >= 0.0) {
        return argument("arrival rate and mean service must be non-negative");
    }
    let load = arrival_rate * mean_service;
    if load >= 1.0 {
        return domain(format!("unstable queue: load {load} >= 1"));
    }
    if !(s >= 0.0) {
        return argument(format!("transform argument must be >= 0, got {s}"));
    }
    // G(0+) = 1; below ~1e-10 the ratio is lost to cancellation in 1 - psi(s).
    if s < 1e-10 || arrival_rate == 0.0 {
        return Ok(1.0);
    }
    let denom = s - arrival_rate * (1.0 - service_lst(s));
    Ok((1.0 - load) * s / denom)
}

/// Mean stationary workload `l E[sigma^2] / (2 (1 - l E[sigma]))`.
pub fn pk_mean_workload(arrival_rate: f64, mean_service: f64, second_moment: f64) -> Result<f64> {
    let load = arrival_rate * mean_service;
    if load >= 1.0 {
        return domain(format!("unstable queue: load {load} >= 1"));
    }
    Ok(arrival_rate * second_moment / (2.0 * (1.0 - load)))
}

/// Transform of a deterministic service time.
pub fn deterministic_lst(service: f64) -> impl Fn(f64) -> f64 {
    move |s| (-s * service).exp()
}

/// Transform of an exponential service time with the given rate.
pub fn exponential_lst(rate: f64) -> impl Fn(f64) -> f64 {
    move |s| rate / (rate + s)
}
