//! Small sample-statistics helpers used by the experiments and the audit.

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// 95% normal half-width.
    pub ci_half_width: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half_width
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean with an i.i.d. normal-approximation half-width.
pub fn mean_ci(xs: &[f64]) -> Option<MeanEstimate> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    Some(MeanEstimate {
        mean: mean(xs),
        ci_half_width: Z_95 * (sample_variance(xs) / n as f64).sqrt(),
        count: n,
    })
}

/// Mean with a batch-means half-width, for serially correlated output such
/// as consecutive delays of one simulated chain.
pub fn batch_means_ci(xs: &[f64], batches: usize) -> Option<MeanEstimate> {
    let batches = batches.max(2);
    if xs.len() < 2 * batches {
        return mean_ci(xs);
    }
    let size = xs.len() / batches;
    let batch_means: Vec<f64> = xs.chunks_exact(size).take(batches).map(mean).collect();
    let half = Z_95 * (sample_variance(&batch_means) / batches as f64).sqrt();
    Some(MeanEstimate { mean: mean(xs), ci_half_width: half, count: xs.len() })
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Two-sample Kolmogorov–Smirnov distance sup |F_a - F_b|.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// H(k) = 1 + 1/2 + ... + 1/k.
pub fn harmonic(k: u64) -> f64 {
    // sum small terms first
    (1..=k).rev().map(|l| 1.0 / l as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_identical_and_disjoint_samples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &[10.0, 11.0]), 1.0);
        assert!((ks_distance(&[1.0, 2.0], &[1.0, 3.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        assert_eq!(ks_distance(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_line_fit() {
        let x = [1.0, 2.0, 3.0];
        let f = linear_fit(&x, &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(2), 1.5);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn batch_means_falls_back_for_short_input() {
        let e = batch_means_ci(&[1.0, 2.0, 3.0], 20).unwrap();
        assert_eq!(e.count, 3);
        assert!((e.mean - 2.0).abs() < 1e-15);
    }
}
