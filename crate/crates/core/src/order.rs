//! Majorization predicates and an empirical increasing-convex-order check.
//!
//! `majorizes(x, y)` reads "x is majorized by y": x is the more balanced of
//! two vectors with the same total. Sums are compared with an
//! absolute-plus-relative tolerance of 1e-9 because the inputs come out of a
//! floating-point recursion.

use crate::error::{argument, Result};
use crate::stats::Z_95;

const TOL: f64 = 1e-9;

fn tolerance(x: &[f64], y: &[f64]) -> f64 {
    let scale = x.iter().map(|v| v.abs()).sum::<f64>().max(y.iter().map(|v| v.abs()).sum());
    TOL * (1.0 + scale)
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != y.len() {
        return argument(format!(
            "vectors must have the same non-zero length, got {} and {}",
            x.len(),
            y.len()
        ));
    }
    Ok(())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// True iff `x ≺ y`: equal totals, and for every l < m the sum of the l
/// smallest entries of x is at least that of y.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    check_lengths(x, y)?;
    let tol = tolerance(x, y);
    let (xs, ys) = (sorted(x), sorted(y));
    let (tx, ty): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    if (tx - ty).abs() > tol {
        return Ok(false);
    }
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys).take(xs.len() - 1) {
        px += a;
        py += b;
        if px < py - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `x ≺_s y`: for every l = 1..m the sum of the l largest entries
/// of x is at most that of y.
pub fn submajorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    check_lengths(x, y)?;
    let tol = tolerance(x, y);
    let (xs, ys) = (sorted(x), sorted(y));
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().rev().zip(ys.iter().rev()) {
        px += a;
        py += b;
        if px > py + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Moves `delta` from entry `j` to entry `i`, where `x[i] <= x[j]` and
/// `0 <= delta <= x[j] - x[i]`. The result is always majorized by `x`.
pub fn apply_balancing_transfer(x: &[f64], i: usize, j: usize, delta: f64) -> Result<Vec<f64>> {
    if i >= x.len() || j >= x.len() {
        return argument(format!("indices ({i}, {j}) out of range for length {}", x.len()));
    }
    if x[i] > x[j] {
        return argument(format!("transfer needs x[{i}] <= x[{j}], got {} > {}", x[i], x[j]));
    }
    if !(delta >= 0.0) || delta > x[j] - x[i] {
        return argument(format!("delta must lie in [0, {}], got {delta}", x[j] - x[i]));
    }
    let mut y = x.to_vec();
    y[i] += delta;
    y[j] -= delta;
    Ok(y)
}

/// Comparison of `E[(X - t)+]` and `E[(Y - t)+]` at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct IcxPoint {
    pub t: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Combined 95% normal half-width of `mean_x - mean_y`.
    pub half_width: f64,
    pub flagged: bool,
}

impl IcxPoint {
    pub fn gap(&self) -> f64 {
        self.mean_x - self.mean_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcxReport {
    pub points: Vec<IcxPoint>,
}

impl IcxReport {
    /// No threshold shows `mean_x` above `mean_y` beyond the half-width.
    pub fn consistent(&self) -> bool {
        self.points.iter().all(|p| !p.flagged)
    }

    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| p.flagged).count()
    }

    /// Largest `(gap - half_width)` over the grid; positive means a flag.
    pub fn worst_excess(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.gap() - p.half_width)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn excess_moments(samples: &[f64], t: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for &v in samples {
        let e = (v - t).max(0.0);
        s += e;
        s2 += e * e;
    }
    let mean = s / n;
    let var = if samples.len() > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Statistical check of `X ≤icx Y` on the generating family `(· - t)+`.
///
/// This is a consistency test, not a decision procedure: a threshold is
/// flagged only when the sample excess of X beats that of Y by more than the
/// combined 95% half-width.
pub fn empirical_icx_leq(samples_x: &[f64], samples_y: &[f64], t_grid: &[f64]) -> Result<IcxReport> {
    if samples_x.is_empty() || samples_y.is_empty() {
        return argument("icx comparison needs non-empty sample sets");
    }
    if t_grid.is_empty() {
        return argument("icx comparison needs a non-empty threshold grid");
    }
    let (nx, ny) = (samples_x.len() as f64, samples_y.len() as f64);
    let points = t_grid
        .iter()
        .map(|&t| {
            let (mx, vx) = excess_moments(samples_x, t);
            let (my, vy) = excess_moments(samples_y, t);
            let half_width = Z_95 * (vx / nx + vy / ny).sqrt();
            IcxPoint { t, mean_x: mx, mean_y: my, half_width, flagged: mx - my > half_width }
        })
        .collect();
    Ok(IcxReport { points })
}

/// `n` evenly spaced thresholds from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
