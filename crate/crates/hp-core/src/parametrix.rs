//! Pre-parametrix `H1`, correction `u`, parametrix `H = u H1`, transport data,
//! the leading Picard term `K0 = L H` and the Dirac-delta integral.
//!
//! Unit volatility throughout; [`parametrix_density`] applies the volatility
//! scaling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cost::{chi_term, psi_exact, psi_or_inf, psi_reduced};
use crate::error::{Error, Result};
use crate::geometry::{control_data, curve_state, h_invariant, GroupPoint, OrderedPair};
use crate::numerics::{integrate_1d, integrate_rects, QuadratureResult, Rect};
use crate::scalar_kernels::{big_g_with, ginv, h_kernel_raw, v_profile_raw};

/// Below this log-value `H1` is reported as 0.
pub const LOG_UNDERFLOW: f64 = -745.0;

/// `ln(sqrt(12) / (2 pi))`.
fn log_prefactor() -> f64 {
    (12f64.sqrt() / (2.0 * PI)).ln()
}

/// A full kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub h1: f64,
    pub u: f64,
    /// `H = u H1`.
    pub kernel: f64,
    pub psi: f64,
    pub h: f64,
}

/// `ln H1 = ln(sqrt(12) / (2 pi tau^2 y1^2)) - Psi/2`.
pub fn log_h1(tau: f64, y1: f64, psi: f64) -> f64 {
    log_prefactor() - 2.0 * (tau * y1).ln() - 0.5 * psi
}

fn exp_or_zero(l: f64) -> f64 {
    if l < LOG_UNDERFLOW {
        0.0
    } else {
        l.exp()
    }
}

/// `H1(z; w) = sqrt(12) / (2 pi (T-t)^2 y1^2) exp(-Psi/2)`.
pub fn h1(pair: &OrderedPair) -> Result<f64> {
    let psi = psi_exact(pair, 1.0)?.psi;
    Ok(exp_or_zero(log_h1(pair.tau(), pair.w().x1, psi)))
}

/// `H1` from raw points, 0 when they are not ordered.
pub fn h1_or_zero(z: &GroupPoint, w: &GroupPoint) -> f64 {
    let psi = psi_or_inf(z, w, 1.0);
    if psi.is_infinite() {
        return 0.0;
    }
    exp_or_zero(log_h1(w.t - z.t, w.x1, psi))
}

/// `u` as a function of the invariant: `v(4 g^{-1}(1/h))`.
pub fn u_of_h(h: f64) -> f64 {
    v_profile_raw(4.0 * ginv(1.0 / h))
}

/// Correction `u(z; w) = v(4 g^{-1}(1/h(z; w)))`.
pub fn u_correction(pair: &OrderedPair) -> f64 {
    u_of_h(h_invariant(pair))
}

/// `exp(int_0^1 f~(tau) d tau)` with `f~(tau) = (2 - h_kernel(tau^2 g^{-1}(1/h)) / 4) / tau`.
pub fn u_path_integral(h: f64, rel_tol: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {h}")));
    }
    let r = ginv(1.0 / h);
    let f = |tau: f64| {
        if tau == 0.0 {
            0.0
        } else {
            (2.0 - 0.25 * h_kernel_raw(tau * tau * r)) / tau
        }
    };
    let q = integrate_1d(f, 0.0, 1.0, rel_tol, 1e-15)?;
    if !q.converged {
        return Err(Error::Consistency(format!("u path integral did not converge, error {}", q.error_estimate)));
    }
    Ok(q.value.exp())
}

/// `H1`, `u` and `H = u H1` at one pair.
pub fn kernel(pair: &OrderedPair) -> Result<KernelEval> {
    let ce = psi_exact(pair, 1.0)?;
    let h1 = exp_or_zero(log_h1(pair.tau(), pair.w().x1, ce.psi));
    let u = u_of_h(ce.h);
    Ok(KernelEval { h1, u, kernel: u * h1, psi: ce.psi, h: ce.h })
}

/// `ln H` at unit volatility from reduced data (`w = 1_G`):
/// `tau = -t`, `x1`, `x2 < 0`; `-inf` when unordered.
pub fn log_parametrix_reduced(tau: f64, x1: f64, x2: f64) -> f64 {
    if !(tau > 0.0) || !(x2 < 0.0) || !(x1 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let h = tau * x1.sqrt() / -x2;
    let r = ginv(1.0 / h);
    let psi = 4.0 / tau * (h * chi_term(x1, 1.0) + big_g_with(h, r));
    log_h1(tau, 1.0, psi) + v_profile_raw(4.0 * r).ln()
}

/// Parametrix `H = u H1` as a transition density in `y` for volatility `sigma`;
/// 0 outside the ordered region.
pub fn parametrix_density(z: &GroupPoint, w: &GroupPoint, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    if !(w.t > z.t) || !(w.x2 > z.x2) {
        return 0.0;
    }
    // H_sigma(t,x;T,y) = sigma^2 H(sigma^2 t, x1, sigma^2 x2; sigma^2 T, y1, sigma^2 y2),
    // then reduce w to the identity: H(z; w) = H(w^{-1} z; 1_G) / y1^2
    let tau = s2 * (w.t - z.t);
    let x1 = z.x1 / w.x1;
    let x2 = s2 * (z.x2 - w.x2) / w.x1;
    s2 * exp_or_zero(log_parametrix_reduced(tau, x1, x2) - 2.0 * w.x1.ln())
}

/// Transport data at a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportData {
    /// `f = 2/(T-t) - x1^2 d_{x1 x1} Psi / 4`.
    pub f: f64,
    /// `(x1^2 / 2) d_{x1} Psi`.
    pub g_field: f64,
}

fn d1_d2(f: impl Fn(f64) -> f64, x: f64, step: f64) -> (f64, f64) {
    let (p1, m1, p2, m2, c) = (f(x + step), f(x - step), f(x + 2.0 * step), f(x - 2.0 * step), f(x));
    let d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step);
    let d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * c) / (12.0 * step * step);
    (d1, d2)
}

/// `f` and the drift field by finite differences of `Psi` in `x1`
/// (relative step `fd_step`).
pub fn transport_data(pair: &OrderedPair, fd_step: f64) -> Result<TransportData> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!("fd_step must be positive, got {fd_step}")));
    }
    let (z, w) = (pair.z(), pair.w());
    let tau = pair.tau();
    let psi = |x1: f64| {
        let d = w.x2 - z.x2;
        let h = tau * (x1 * w.x1).sqrt() / d;
        psi_reduced(tau, chi_term(x1, w.x1), h)
    };
    let (d1, d2) = d1_d2(psi, z.x1, fd_step * z.x1);
    let x1 = z.x1;
    Ok(TransportData { f: 2.0 / tau - x1 * x1 * d2 / 4.0, g_field: 0.5 * x1 * x1 * d1 })
}

/// Closed form of `f` along the optimal curve:
/// `f(s, gamma(s)) = (2 - h_kernel((T-s)^2 E / 4) / 4) / (T - s)`.
pub fn f_along_curve(pair: &OrderedPair, s: f64) -> f64 {
    let cd = control_data(pair);
    let rem = pair.w().t - s;
    (2.0 - 0.25 * h_kernel_raw(rem * rem * cd.energy / 4.0)) / rem
}

/// Point of the optimal curve of `pair` at time `s`.
pub fn curve_point(pair: &OrderedPair, s: f64) -> GroupPoint {
    let cd = control_data(pair);
    let st = curve_state(pair, &cd, s);
    GroupPoint { t: s, x1: st.gamma1, x2: st.gamma2 }
}

/// `x1^2 d_{x1 x1} u`. Writing `u = W(L)` with `L = ln(1/h)`, which moves by
/// `-1/2` per unit of `ln x1`, gives `x1^2 d_{x1 x1} u = W''/4 + W'/2`; the
/// derivatives of `W` are finite differences in `L`.
pub fn x1sq_d2u(pair: &OrderedPair) -> f64 {
    x1sq_d2u_of_h(h_invariant(pair))
}

/// [`x1sq_d2u`] as a function of `h`.
pub fn x1sq_d2u_of_h(h: f64) -> f64 {
    let l0 = -h.ln();
    let wf = |l: f64| v_profile_raw(4.0 * ginv(l.exp()));
    let (d1, d2) = d1_d2(wf, l0, 1e-2 * (1.0 + 0.05 * l0.abs()));
    0.25 * d2 + 0.5 * d1
}

/// `K0(z; w) = L H = (x1^2 / 2) d_{x1 x1} u H1`.
pub fn k0(pair: &OrderedPair) -> Result<f64> {
    Ok(0.5 * x1sq_d2u(pair) * h1(pair)?)
}

/// Empirical constants in the bounds of `u` and `x1^2 d_{x1 x1} u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaFit {
    /// Smallest `kappa` with `h/kappa <= u` for `h <= 1` and `u <= kappa (sqrt h + h)`.
    pub kappa_u: f64,
    /// Smallest `kappa` with `|x1^2 d_{x1 x1} u| <= kappa sqrt h`.
    pub kappa_d2u: f64,
}

/// Fits the constants on a log-grid of `n` values of `h` in `[h_lo, h_hi]`.
pub fn fit_kappa(h_lo: f64, h_hi: f64, n: usize) -> Result<KappaFit> {
    if !(h_lo > 0.0 && h_hi > h_lo) || n < 2 {
        return Err(Error::Precondition("need 0 < h_lo < h_hi and n >= 2".into()));
    }
    let (mut ku, mut kd) = (0.0f64, 0.0f64);
    for i in 0..n {
        let h = (h_lo.ln() + (h_hi / h_lo).ln() * i as f64 / (n - 1) as f64).exp();
        let u = u_of_h(h);
        ku = ku.max(u / (h.sqrt() + h));
        if h <= 1.0 {
            ku = ku.max(h / u);
        }
        kd = kd.max(x1sq_d2u_of_h(h).abs() / h.sqrt());
    }
    Ok(KappaFit { kappa_u: ku, kappa_d2u: kd })
}

/// Weight applied to `H1` in the Dirac-delta integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaWeight {
    One,
    SqrtH,
    SqrtHPlusH,
}

impl DeltaWeight {
    pub fn eval(self, h: f64) -> f64 {
        match self {
            DeltaWeight::One => 1.0,
            DeltaWeight::SqrtH => h.sqrt(),
            DeltaWeight::SqrtHPlusH => h.sqrt() + h,
        }
    }

    /// The limit of the integral is `weight(1) phi(1, 0)`.
    pub fn at_one(self) -> f64 {
        self.eval(1.0)
    }
}

/// `int weight(h(1_G; T, xi)) H1(1_G; T, xi) phi(xi) d xi` over `xi1 > 0, xi2 > 0`.
///
/// Integrates in `(ln chi, ln eta)` with `chi = sqrt(xi1)`, `eta = h(1_G; T, xi)`,
/// so `xi = (chi^2, T chi / eta)`, on panels graded around `(0, 0)` by the
/// Gaussian widths `sqrt(T)/2` and `sqrt(T/12)`.
pub fn delta_test<F: Fn(f64, f64) -> f64>(big_t: f64, phi: F, weight: DeltaWeight) -> Result<QuadratureResult> {
    if !(big_t > 0.0) {
        return Err(Error::Domain(format!("T must be positive, got {big_t}")));
    }
    let pre = 12f64.sqrt() / (PI * big_t);
    let integrand = |a: f64, b: f64| {
        let (chi, eta) = (a.exp(), b.exp());
        let r = ginv(1.0 / eta);
        let expo = -2.0 * (eta * (chi + 1.0 / chi - 2.0) + big_g_with(eta, r)) / big_t;
        if expo < LOG_UNDERFLOW {
            return 0.0;
        }
        pre * expo.exp() / (chi * eta) * weight.eval(eta) * phi(chi * chi, big_t * chi / eta)
    };
    let (sa, sb) = (0.5 * big_t.sqrt(), (big_t / 12.0).sqrt());
    let grid = |s: f64, outer: f64| {
        let mut v: Vec<f64> = [-16.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k * s).collect();
        if outer > 16.0 * s {
            v.insert(0, -outer);
            v.push(outer);
        }
        v
    };
    let (ga, gb) = (grid(sa, 3.0), grid(sb, 4.0));
    let mut rects = Vec::new();
    for i in 0..ga.len() - 1 {
        for j in 0..gb.len() - 1 {
            rects.push(Rect::new(ga[i], ga[i + 1], gb[j], gb[j + 1]));
        }
    }
    let q = integrate_rects(integrand, &rects, 1e-9, 1e-13, 4_000_000)?;
    if !q.converged {
        return Err(Error::Consistency(format!("delta integral did not converge, error {}", q.error_estimate)));
    }
    Ok(q)
}
