use std::f64::consts::E;

use crate::error::{Error, Result};

/// Lower real branch `W_{-1}`: the solution `v <= -1` of `v e^v = nu`.
pub fn lambert_w_lower(nu: f64) -> Result<f64> {
    let min = -1.0 / E;
    if !(nu >= min - 1e-16 && nu < 0.0) {
        return Err(Error::Domain(format!("lower Lambert W needs -1/e <= nu < 0, got {nu}")));
    }
    if nu <= min {
        return Ok(-1.0);
    }
    lambert_w_lower_log((-nu).ln())
}

/// Lower branch expressed through `L = ln(-nu)`, usable when `nu` underflows.
///
/// Solves `w - ln w + L = 0` for `w = -v >= 1`.
pub fn lambert_w_lower_log(log_neg_nu: f64) -> Result<f64> {
    let l = log_neg_nu;
    if !(l <= -1.0 + 1e-15) || l.is_nan() {
        return Err(Error::Domain(format!("lower Lambert W needs ln(-nu) <= -1, got {l}")));
    }
    if l >= -1.0 {
        return Ok(-1.0);
    }
    let phi = |w: f64| w - w.ln() + l;
    // phi is increasing on [1, inf); phi(1) = 1 + l <= 0
    let (mut lo, mut hi) = (1.0, 2.0 * (-l) + 2.0);
    let mut w = if l < -2.0 { -l + (-l).ln() } else { 1.0 + (2.0 * (-1.0 - l)).sqrt() };
    if !(w > lo && w < hi) {
        w = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let p = phi(w);
        if p > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let dp = 1.0 - 1.0 / w;
        let mut wn = w - p / dp;
        if !(wn > lo && wn < hi) || !wn.is_finite() {
            wn = 0.5 * (lo + hi);
        }
        let done = (wn - w).abs() <= 1e-15 * w;
        w = wn;
        if done || hi - lo <= 1e-15 * w {
            break;
        }
    }
    Ok(-w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_lower(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn tenth() {
        let v = lambert_w_lower(-0.1).unwrap();
        assert!((v + 3.577_152_063_957_297).abs() < 1e-11);
        assert!(((v * v.exp() + 0.1) / 0.1).abs() < 1e-12);
    }

    #[test]
    fn near_branch_point() {
        let nu = -1.0 / E + 1e-9;
        let v = lambert_w_lower(nu).unwrap();
        assert!(v <= -1.0);
        assert!(((v * v.exp() - nu) / nu).abs() < 1e-12);
    }

    #[test]
    fn positive_rejected() {
        assert!(lambert_w_lower(0.1).is_err());
    }

    #[test]
    fn underflowing_argument() {
        let v = lambert_w_lower_log(-800.0).unwrap();
        assert!(((-v).ln() + v + 800.0).abs() < 1e-10);
    }
}
