//! Scalar special functions: `g`, its inverse, the profile `G`, the basis
//! functions of its expansions, and the transport kernels `h` and `v`.
//!
//! Negative arguments are handled by the trigonometric rewrites
//! (`sinh(sqrt r)/sqrt r -> sin(sqrt(-r))/sqrt(-r)`) so everything stays real.

use std::f64::consts::PI;

use crate::combinatorics::CoeffTable;
use crate::error::{Error, Result};

const PI2: f64 = PI * PI;

/// `sinh(s)/s - 1` without cancellation for small `s`.
fn sinhc_m1(s: f64) -> f64 {
    if s.abs() < 0.5 {
        let z = s * s;
        let mut term = z / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        s.sinh() / s - 1.0
    }
}

/// `sin(s)/s - 1` without cancellation for small `s`.
fn sinc_m1(s: f64) -> f64 {
    if s.abs() < 0.5 {
        let z = s * s;
        let mut term = -z / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        s.sin() / s - 1.0
    }
}

/// `ln(sinh(s)/s)` for `s >= 0`, valid for arbitrarily large `s`.
fn ln_sinhc(s: f64) -> f64 {
    if s < 1.0 {
        sinhc_m1(s).ln_1p()
    } else {
        s + (-(-2.0 * s).exp()).ln_1p() - std::f64::consts::LN_2 - s.ln()
    }
}

/// `g(r) = sinh(sqrt r)/sqrt r`, extended by `sin(sqrt(-r))/sqrt(-r)` for
/// `-pi^2 < r < 0` and by 1 at 0.
pub fn g(r: f64) -> Result<f64> {
    if !(r > -PI2) {
        return Err(Error::Domain(format!("g needs r > -pi^2, got {r}")));
    }
    Ok(g_raw(r))
}

pub(crate) fn g_raw(r: f64) -> f64 {
    if r.abs() <= 1e-4 {
        // sum r^n / (2n+1)!
        1.0 + r / 6.0 * (1.0 + r / 20.0 * (1.0 + r / 42.0 * (1.0 + r / 72.0)))
    } else if r > 0.0 {
        let s = r.sqrt();
        if s > 700.0 {
            ln_sinhc(s).exp()
        } else {
            s.sinh() / s
        }
    } else {
        let s = (-r).sqrt();
        s.sin() / s
    }
}

/// Result of inverting `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GInvResult {
    pub value: f64,
    /// `g(value)/rho - 1`.
    pub residual: f64,
    pub iterations: usize,
}

/// Unique `r in (-pi^2, inf)` with `g(r) = rho`.
pub fn g_inv(rho: f64) -> Result<GInvResult> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("g_inv needs a finite rho > 0, got {rho}")));
    }
    let (value, iterations) = if rho >= 1.0 { ginv_from_log(rho.ln()) } else { ginv_below_one(rho) };
    let back = g_raw(value);
    Ok(GInvResult { value, residual: back / rho - 1.0, iterations })
}

/// `g_inv` as a plain value, for internal callers that already validated `rho`.
pub(crate) fn ginv(rho: f64) -> f64 {
    if rho >= 1.0 {
        ginv_from_log(rho.ln()).0
    } else {
        ginv_below_one(rho).0
    }
}

/// `g^{-1}(e^L)` for `L >= 0`; usable when `e^L` overflows.
pub fn g_inv_log(log_rho: f64) -> Result<f64> {
    if !(log_rho >= 0.0) || !log_rho.is_finite() {
        if log_rho < 0.0 && log_rho.is_finite() {
            return Ok(ginv_below_one(log_rho.exp()).0);
        }
        return Err(Error::Domain(format!("g_inv_log needs a finite argument, got {log_rho}")));
    }
    Ok(ginv_from_log(log_rho).0)
}

// Solve ln(sinh s / s) = L in s >= 0 and return s^2.
fn ginv_from_log(l: f64) -> (f64, usize) {
    if l == 0.0 {
        return (0.0, 0);
    }
    if l < 1e-9 {
        // ln g(r) = r/6 - r^2/180 + ...; two-term inversion is exact to rounding here
        let r0 = 6.0 * l;
        return (r0 + r0 * r0 / 30.0, 0);
    }
    let phi = |s: f64| {
        let v = if s < 1e-3 {
            let z = s * s;
            z / 6.0 - z * z / 180.0 + z * z * z / 2835.0
        } else {
            ln_sinhc(s)
        };
        let dv = if s < 1e-3 { s / 3.0 - s * s * s / 45.0 } else { 1.0 / s.tanh() - 1.0 / s };
        (v - l, dv)
    };
    // s ~ L + ln(2 s) for large L
    let mut hi = (l + (2.0 * (l + 2.0)).ln() + 2.0).max(1.0);
    while phi(hi).0 < 0.0 {
        hi *= 1.5;
    }
    let guess = if l < 1.0 { (6.0 * l).sqrt() } else { l + (2.0 * l.max(1.0)).ln() };
    let mut lo = 0.0;
    let mut s = if guess > lo && guess < hi { guess } else { 0.5 * hi };
    let mut it = 0;
    for k in 1..=100 {
        it = k;
        let (f, df) = phi(s);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut sn = s - f / df;
        if !(sn > lo && sn < hi) {
            sn = 0.5 * (lo + hi);
        }
        let step = (sn - s).abs();
        s = sn;
        if step <= 2e-16 * s || hi - lo <= 2e-16 * s {
            break;
        }
    }
    (s * s, it)
}

// Solve sin(s)/s = rho in s in (0, pi) and return -s^2.
fn ginv_below_one(rho: f64) -> (f64, usize) {
    let target = rho - 1.0;
    let phi = |s: f64| {
        let v = sinc_m1(s) - target;
        let dv = if s < 1e-4 { -s / 3.0 } else { (s * s.cos() - s.sin()) / (s * s) };
        (v, dv)
    };
    let (mut lo, mut hi) = (0.0, PI);
    // small-deficit start from sin(s)/s ~ 1 - s^2/6, large-deficit from s ~ pi(1 - rho)
    let mut s = if rho > 0.5 { (6.0 * (1.0 - rho)).sqrt() } else { PI * (1.0 - rho) };
    if !(s > lo && s < hi) {
        s = 0.5 * PI;
    }
    let mut it = 0;
    for k in 1..=100 {
        it = k;
        let (f, df) = phi(s);
        if f == 0.0 {
            break;
        }
        // phi is decreasing on (0, pi)
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut sn = s - f / df;
        if !(sn > lo && sn < hi) || !sn.is_finite() {
            sn = 0.5 * (lo + hi);
        }
        let step = (sn - s).abs();
        s = sn;
        if step <= 2e-16 * s || hi - lo <= 2e-16 * s {
            break;
        }
    }
    (-(s * s), it)
}

/// Sign rule for the square-root branch: +1 below `pi/2`, 0 at it, -1 above.
pub fn branch_sign(eta: f64) -> f64 {
    let c = 0.5 * PI;
    if eta < c {
        1.0
    } else if eta > c {
        -1.0
    } else {
        0.0
    }
}

/// `G(eta) = 2 eta - 2 sgn(4 g^{-1}(1/eta) + pi^2) sqrt(eta^2 + g^{-1}(1/eta)) + g^{-1}(1/eta)`.
pub fn big_g(eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("G needs eta > 0, got {eta}")));
    }
    Ok(big_g_with(eta, ginv(1.0 / eta)))
}

/// `G` with `r = g^{-1}(1/eta)` supplied by the caller.
pub(crate) fn big_g_with(eta: f64, r: f64) -> f64 {
    let sgn = branch_sign(eta);
    if sgn > 0.0 {
        // rewritten to avoid cancellation around eta = 1 where G ~ 3 (eta-1)^2
        let root = (eta * eta + r).max(0.0).sqrt();
        let num = (eta - 1.0) + ((eta - 1.0) * (eta + 1.0) + r) / (root + 1.0);
        r * num / (eta + root)
    } else {
        2.0 * eta - 2.0 * sgn * (eta * eta + r).max(0.0).sqrt() + r
    }
}

/// Which expansion basis to use on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `b_n (-log eta)^n / (1 - log eta)^(n-2)`.
    Gn,
    /// `b~_n (-log eta)^n / (1 - log eta)^(n-1)`, a lower approximation.
    GnTilde,
}

fn check_order(n: usize, table: &CoeffTable) -> Result<()> {
    if n < 2 || n > table.order {
        return Err(Error::Precondition(format!("basis index {n} outside 2..={}", table.order)));
    }
    Ok(())
}

/// The `n`-th basis function `G_n(eta)`.
pub fn g_n(n: usize, eta: f64, table: &CoeffTable) -> Result<f64> {
    basis_term(n, eta, table, Basis::Gn)
}

/// The `n`-th basis function with the `b~_n` variant on `(0, 1)`.
pub fn g_n_tilde(n: usize, eta: f64, table: &CoeffTable) -> Result<f64> {
    basis_term(n, eta, table, Basis::GnTilde)
}

fn basis_term(n: usize, eta: f64, table: &CoeffTable, basis: Basis) -> Result<f64> {
    check_order(n, table)?;
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("basis functions need eta > 0, got {eta}")));
    }
    let ni = n as i32;
    Ok(if eta > 1.0 {
        table.a(n) * (eta - 1.0).powi(ni) / eta.powi(ni - 1)
    } else if eta < 1.0 {
        let m = -eta.ln();
        match basis {
            Basis::Gn => table.b(n) * m.powi(ni) / (1.0 + m).powi(ni - 2),
            Basis::GnTilde => table.b_tilde(n) * m.powi(ni) / (1.0 + m).powi(ni - 1),
        }
    } else {
        0.0
    })
}

/// Relative size of the rounding noise in `G(eta) - series_sum(eta, ..)`.
/// Truncation errors below `SERIES_NOISE_FLOOR * max(|G|, 1)` are not
/// resolvable in double precision.
pub const SERIES_NOISE_FLOOR: f64 = 256.0 * f64::EPSILON;

/// `sum_{n=2}^{order} G_n(eta)` (or the tilde variant) by Horner evaluation
/// in the mapped variable.
pub fn series_sum(eta: f64, table: &CoeffTable, order: usize, basis: Basis) -> f64 {
    let order = order.min(table.order);
    if eta > 1.0 {
        let xi = (eta - 1.0) / eta;
        eta * horner(table.a_f64(), xi, order)
    } else if eta < 1.0 {
        let m = -eta.ln();
        let xi = m / (1.0 + m);
        match basis {
            Basis::Gn => (1.0 + m) * (1.0 + m) * horner(table.b_f64(), xi, order),
            Basis::GnTilde => (1.0 + m) * horner(table.b_tilde_f64(), xi, order),
        }
    } else {
        0.0
    }
}

// sum_{n=2}^{order} c[n] x^n
fn horner(c: &[f64], x: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for n in (2..=order).rev() {
        acc = acc * x + c[n];
    }
    acc * x * x
}

/// `h(eta) = 2 q - 2 eta / (1 - q)` with `q = sqrt(eta) coth(sqrt(eta))`
/// (`sqrt(-eta) cot(sqrt(-eta))` for negative `eta`); `h(0) = 8`.
pub fn h_kernel(eta: f64) -> Result<f64> {
    if !(eta > -PI2) {
        return Err(Error::Domain(format!("h kernel needs eta > -pi^2, got {eta}")));
    }
    Ok(h_kernel_raw(eta))
}

pub(crate) fn h_kernel_raw(eta: f64) -> f64 {
    if eta.abs() <= 1e-3 {
        return h_kernel_series(eta);
    }
    let q = if eta > 0.0 {
        let s = eta.sqrt();
        s / s.tanh()
    } else {
        let s = (-eta).sqrt();
        s / s.tan()
    };
    2.0 * q - 2.0 * eta / (1.0 - q)
}

/// Taylor expansion of the `h` kernel at 0.
pub fn h_kernel_series(eta: f64) -> f64 {
    const C: [f64; 6] =
        [8.0, 16.0 / 15.0, -88.0 / 1575.0, 16.0 / 3375.0, -4072.0 / 9_095_625.0, 233_872.0 / 5_320_940_625.0];
    C.iter().rev().fold(0.0, |acc, c| acc * eta + c)
}

/// `v(eta) = |eta| / (2 sqrt(3 sqrt(eta) sinh(sqrt eta) - 6 cosh(sqrt eta) + 6))`
/// with the trigonometric branch for negative `eta`; `v(0) = 1`.
pub fn v_profile(eta: f64) -> Result<f64> {
    if !(eta > -4.0 * PI2) {
        return Err(Error::Domain(format!("v profile needs eta > -4 pi^2, got {eta}")));
    }
    Ok(v_profile_raw(eta))
}

pub(crate) fn v_profile_raw(eta: f64) -> f64 {
    if eta.abs() <= 1e-3 {
        v_profile_series(eta)
    } else {
        v_profile_closed(eta)
    }
}

/// Closed form of `v` without the series switch.
///
/// The denominator is evaluated as `12 sinh(x) (x cosh x - sinh x)` with
/// `x = sqrt(eta)/2` (trigonometric analogue for `eta < 0`), which loses
/// only `O(eps/eta)` near zero instead of `O(eps/eta^2)`.
pub fn v_profile_closed(eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    if eta > 0.0 {
        let q = eta.sqrt();
        if q > 30.0 {
            // dominant exponential term; the rest is below 1e-25 relative
            let log_d = q + (1.5 * q - 3.0).ln();
            return eta * (-0.5 * log_d).exp() / 2.0;
        }
        let x = 0.5 * q;
        let d = 12.0 * x.sinh() * (x * x.cosh() - x.sinh());
        eta / (2.0 * d.sqrt())
    } else {
        let x = 0.5 * (-eta).sqrt();
        let d = 12.0 * x.sin() * (x.sin() - x * x.cos());
        -eta / (2.0 * d.sqrt())
    }
}

/// Series `1/v^2 = 1 + sum_{n>=1} 12 (n+1) / ((n+2) (2n+3)!) eta^n`.
pub fn v_profile_series(eta: f64) -> f64 {
    let mut fact = 120.0; // (2n+3)! at n = 1
    let mut pow = eta;
    let mut inv_sq = 1.0;
    for n in 1..=8 {
        let nf = n as f64;
        inv_sq += 12.0 * (nf + 1.0) / ((nf + 2.0) * fact) * pow;
        pow *= eta;
        fact *= (2.0 * nf + 4.0) * (2.0 * nf + 5.0);
    }
    1.0 / inv_sq.sqrt()
}
