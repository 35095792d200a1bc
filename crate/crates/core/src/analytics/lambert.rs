//! Real branches of the Lambert W function by Halley iteration.

use std::f64::consts::E;

use crate::error::{domain, Result};

/// -1/e, the common branch point.
pub const BRANCH_POINT: f64 = -1.0 / E;

const MAX_ITER: usize = 64;

/// Accepts arguments that rounding pushed marginally below -1/e.
const BRANCH_SLACK: f64 = 4.0 * f64::EPSILON;

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        if !dw.is_finite() {
            break;
        }
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// Series in p = sqrt(2(ex + 1)) around the branch point; `sign` selects
/// the principal (+1) or lower (-1) branch.
fn branch_point_guess(x: f64, sign: f64) -> f64 {
    let p = sign * (2.0 * (E * x + 1.0)).max(0.0).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// Principal branch W0 on [-1/e, inf): the solution w >= -1 of w e^w = x.
pub fn lambert_w_principal(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT - BRANCH_SLACK {
        return domain(format!("Lambert W0 is real only for x >= -1/e, got {x}"));
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let guess = if x < -0.25 {
        branch_point_guess(x, 1.0)
    } else if x < 3.0 {
        (1.0 + x).ln() * (1.0 - (1.0 + x).ln().ln_1p() / (2.0 + (1.0 + x).ln()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(x, guess))
}

/// Lower branch W-1 on [-1/e, 0): the solution w <= -1 of w e^w = x.
pub fn lambert_w_lower(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT - BRANCH_SLACK || x >= 0.0 {
        return domain(format!("Lambert W-1 is real only for -1/e <= x < 0, got {x}"));
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    let guess = if x < -0.25 {
        branch_point_guess(x, -1.0)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(x, guess))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_fixed_points() {
        assert_eq!(lambert_w_principal(0.0).unwrap(), 0.0);
        assert!((lambert_w_principal(E).unwrap() - 1.0).abs() < 1e-15);
        let x = -0.2 * (-0.2f64).exp();
        assert!((lambert_w_principal(x).unwrap() + 0.2).abs() < 1e-14);
        assert_eq!(lambert_w_principal(BRANCH_POINT).unwrap(), -1.0);
    }

    #[test]
    fn principal_rejects_below_branch_point() {
        assert!(lambert_w_principal(-0.5).is_err());
        assert!(lambert_w_principal(f64::NAN).is_err());
    }

    #[test]
    fn lower_branch_values() {
        // -2 e^-2 lies on W-1 at -2
        let x = -2.0 * (-2.0f64).exp();
        assert!((lambert_w_lower(x).unwrap() + 2.0).abs() < 1e-13);
        let x = -10.0 * (-10.0f64).exp();
        assert!((lambert_w_lower(x).unwrap() + 10.0).abs() < 1e-12);
        assert!(lambert_w_lower(0.1).is_err());
        assert!(lambert_w_lower(0.0).is_err());
    }

    #[test]
    fn principal_large_argument_residual() {
        for &x in &[1e-8, 0.5, 10.0, 1e3, 1e6, 1e12] {
            let w = lambert_w_principal(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0), "x = {x}");
        }
    }
}
