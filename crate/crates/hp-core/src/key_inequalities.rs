//! Numerical check of the convolution bounds for the pre-parametrix `H1`.
//!
//! For `t < s < 0` and `z = (t, x)` with `x2 < 0`, the ratios
//!
//! `I_k = int w(h(z; s, xi)) H1~(z; s, xi) w(h(s, xi; 1)) H1~(s, xi; 1) dxi / (w(h(z; 1)) H1(z; 1))`
//!
//! are evaluated over `xi2 in (x2, 0)`, `xi1 in (0, xi_bar)`, where `H1~` uses
//! the lower series cost `Psi~_N`, `w = sqrt(h)` for `I1` and `sqrt(h) + h`
//! for `I2`. Everything runs in log space: the denominators reach far below
//! the smallest positive double in the tails of the sampling law.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::CoeffTable;
use crate::cost::{chi_term, psi_exact, psi_reduced};
use crate::error::{Error, Result};
use crate::geometry::{GroupPoint, OrderedPair};
use crate::numerics::{integrate_rect, lambert_w_lower_log, summarize, McResult, Rect, RngStream};
use crate::parametrix::{curve_point, log_h1};
use crate::scalar_kernels::{series_sum, Basis};

/// Series order used for `Psi~_N`.
pub const DEFAULT_ORDER: usize = 50;
/// Default standard deviation of `ln chi` and `ln eta` in the sampling law.
pub const LOG_SD: f64 = 2.0;
/// Largest ratios reported for the reference batch of `2e7` samples.
pub const REFERENCE_MAX_I1: f64 = 1.74841;
pub const REFERENCE_MAX_I2: f64 = 2.48050;

const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_BUDGET: usize = 400_000;
// half-width of the integration box in units of the Laplace standard deviation
const BOX_SDS: f64 = 8.0;
// box edges are pushed out until the integrand there is below this fraction of the peak
const EDGE_LOG_DROP: f64 = -27.6;
// integrand at the truncation edge must be below this fraction of the peak
const BOUNDARY_FRACTION: f64 = 1e-6;

/// One draw `(t, s, x)`, with `x1 = chi^2` and `x2 = t chi / eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeySample {
    pub t: f64,
    pub s: f64,
    pub x1: f64,
    pub x2: f64,
    pub chi: f64,
    pub eta: f64,
}

impl KeySample {
    pub fn from_chi_eta(t: f64, s: f64, chi: f64, eta: f64) -> Result<Self> {
        if !(chi > 0.0) || !(eta > 0.0) || !chi.is_finite() || !eta.is_finite() {
            return Err(Error::Domain(format!("need chi, eta > 0, got {chi}, {eta}")));
        }
        Self::checked(KeySample { t, s, x1: chi * chi, x2: t * chi / eta, chi, eta })
    }

    pub fn from_coords(t: f64, s: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0) || !(x2 < 0.0) {
            return Err(Error::Domain(format!("need x1 > 0 and x2 < 0, got {x1}, {x2}")));
        }
        let chi = x1.sqrt();
        Self::checked(KeySample { t, s, x1, x2, chi, eta: t * chi / x2 })
    }

    fn checked(k: KeySample) -> Result<Self> {
        if !(k.t < k.s && k.s < 0.0) || !k.t.is_finite() {
            return Err(Error::Domain(format!("need t < s < 0, got t = {}, s = {}", k.t, k.s)));
        }
        if !(k.x1 > 0.0 && k.x1.is_finite()) || !(k.x2 < 0.0 && k.x2.is_finite()) {
            return Err(Error::Domain(format!("need x1 > 0 and x2 < 0 finite, got {}, {}", k.x1, k.x2)));
        }
        Ok(k)
    }

    pub fn z(&self) -> GroupPoint {
        GroupPoint { t: self.t, x1: self.x1, x2: self.x2 }
    }

    fn pair_to_identity(&self) -> Result<OrderedPair> {
        OrderedPair::to_identity(self.z())
    }
}

/// Argmax of `I1` in the reference batch.
pub fn reference_argmax_i1() -> KeySample {
    KeySample::from_coords(-0.81948, -0.54040, 43.64581, -0.12497).expect("valid constant sample")
}

/// Argmax of `I2` in the reference batch as printed in coordinates.
pub fn reference_argmax_i2() -> KeySample {
    KeySample::from_coords(-0.78426, -0.67014, 0.00002, -0.00605).expect("valid constant sample")
}

/// Argmax of `I2` rebuilt from its printed `ln chi = -5.52146`, `ln eta = -0.54472`.
/// Its `x2` differs from the printed coordinate by about 12%.
pub fn reference_argmax_i2_from_logs() -> KeySample {
    KeySample::from_chi_eta(-0.78426, -0.67014, (-5.52146f64).exp(), (-0.54472f64).exp())
        .expect("valid constant sample")
}

/// Which of the two ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    I1,
    I2,
}

impl Which {
    /// `sqrt(h)` or `sqrt(h) + h`.
    pub fn weight(self, h: f64) -> f64 {
        match self {
            Which::I1 => h.sqrt(),
            Which::I2 => h.sqrt() + h,
        }
    }
}

/// Upper limits for `xi1`: `xi_bar` for `I1`, `xi_bbar` for `I2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub xi_bar: f64,
    pub xi_bbar: f64,
}

impl TruncationBounds {
    pub fn for_ratio(&self, which: Which) -> f64 {
        match which {
            Which::I1 => self.xi_bar,
            Which::I2 => self.xi_bbar,
        }
    }
}

// (x2 / c) v*(nu) with nu = (c x1 / x2) exp(-k (psi - 3 ln(s/t) + extra) + c x1 / x2),
// where v* is the lower real branch. Returns None when nu < -1/e.
fn lambert_term(k: &KeySample, psi: f64, c: f64, kk: f64, extra: f64) -> Option<f64> {
    let a = c * k.x1 / k.x2;
    let log_neg_nu = (-a).ln() - kk * (psi - 3.0 * (k.s / k.t).ln() + extra) + a;
    if !(log_neg_nu <= -1.0) {
        return None;
    }
    lambert_w_lower_log(log_neg_nu).ok().map(|v| k.x2 / c * v)
}

/// `xi_bar` and `xi_bbar` from the cost `Psi(t, x; 1)` and the lower Lambert
/// branch. A Lambert term whose argument falls below `-1/e` has no real
/// solution and is left out of the max; both bounds are at least 1.
pub fn truncation_bounds(sample: &KeySample) -> Result<TruncationBounds> {
    let psi = psi_exact(&sample.pair_to_identity()?, 1.0)?.psi;
    let ln2 = std::f64::consts::LN_2;
    let lin = |extra: f64| -sample.x2 / 4.0 * (psi - 3.0 * ((sample.t - sample.s) / sample.t).ln() + extra);
    let max_of = |vals: &[Option<f64>]| vals.iter().flatten().fold(1.0f64, |m, &v| if v > m { v } else { m });
    let xi_bar = max_of(&[Some(lin(ln2)), lambert_term(sample, psi, 8.0, 2.0, ln2)]);
    let xi_bbar =
        max_of(&[Some(lin(0.0)), lambert_term(sample, psi, 8.0, 2.0, 0.0), lambert_term(sample, psi, 4.0, 1.0, 0.0)]);
    Ok(TruncationBounds { xi_bar, xi_bbar })
}

// ln(1 / (1 + e^{-v}))
fn log_sigmoid(v: f64) -> f64 {
    if v > 0.0 {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

/// The numerator integrand in the coordinates `l = ln xi1` and `v`, with
/// `xi2 = x2 / (1 + e^v)`, normalised by the denominator.
struct Integrand<'a> {
    k: KeySample,
    which: Which,
    // series table and order for Psi~_N; None uses the exact cost
    series: Option<(&'a CoeffTable, usize)>,
    log_den: f64,
    ln_neg_x2: f64,
}

impl<'a> Integrand<'a> {
    fn new(k: &KeySample, which: Which, series: Option<(&'a CoeffTable, usize)>) -> Result<Self> {
        let pair = k.pair_to_identity()?;
        let ce = psi_exact(&pair, 1.0)?;
        let log_den = which.weight(ce.h).ln() + log_h1(-k.t, 1.0, ce.psi);
        if !log_den.is_finite() {
            return Err(Error::Evaluation(k.t));
        }
        Ok(Integrand { k: *k, which, series, log_den, ln_neg_x2: (-k.x2).ln() })
    }

    fn psi_tilde(&self, tau: f64, x1: f64, y1: f64, h: f64) -> f64 {
        match self.series {
            Some((table, order)) => 4.0 / tau * (h * chi_term(x1, y1) + series_sum(h, table, order, Basis::GnTilde)),
            None => psi_reduced(tau, chi_term(x1, y1), h),
        }
    }

    // ln of the normalised integrand including the Jacobian of (l, v) -> xi
    fn log_f(&self, l: f64, v: f64) -> f64 {
        let k = &self.k;
        let xi1 = l.exp();
        let (lsa, lsb) = (log_sigmoid(v), log_sigmoid(-v));
        // xi2 - x2 = -x2 sigma(v), -xi2 = -x2 sigma(-v)
        let (da, db) = ((self.ln_neg_x2 + lsa).exp(), (self.ln_neg_x2 + lsb).exp());
        let (ta, tb) = (k.s - k.t, -k.s);
        let ha = ta * (k.x1 * xi1).sqrt() / da;
        let hb = tb * xi1.sqrt() / db;
        let pa = self.psi_tilde(ta, k.x1, xi1, ha);
        let pb = self.psi_tilde(tb, xi1, 1.0, hb);
        let val = self.which.weight(ha).ln() + log_h1(ta, xi1, pa) + self.which.weight(hb).ln() + log_h1(tb, 1.0, pb)
            - self.log_den
            + l
            + self.ln_neg_x2
            + lsa
            + lsb;
        if val.is_nan() {
            f64::NEG_INFINITY
        } else {
            val
        }
    }

    /// Start at the point of the optimal curve from `z` to the identity at time `s`.
    fn start(&self) -> [f64; 2] {
        let pair = OrderedPair::to_identity(self.k.z()).expect("validated sample");
        let p = curve_point(&pair, self.k.s);
        let l = if p.x1 > 0.0 && p.x1.is_finite() { p.x1.ln() } else { 0.0 };
        let v = if p.x2 > self.k.x2 && p.x2 < 0.0 { ((p.x2 - self.k.x2) / -p.x2).ln() } else { 0.0 };
        [l, v]
    }
}

/// Laplace fit of a log-density: mode, value there and the covariance `-H^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Laplace {
    mode: [f64; 2],
    log_peak: f64,
    cov: [[f64; 2]; 2],
}

fn fd_grad_hess(f: &impl Fn(f64, f64) -> f64, p: [f64; 2], h: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let f0 = f(p[0], p[1]);
    let fxp = f(p[0] + h[0], p[1]);
    let fxm = f(p[0] - h[0], p[1]);
    let fyp = f(p[0], p[1] + h[1]);
    let fym = f(p[0], p[1] - h[1]);
    let fpp = f(p[0] + h[0], p[1] + h[1]);
    let fpm = f(p[0] + h[0], p[1] - h[1]);
    let fmp = f(p[0] - h[0], p[1] + h[1]);
    let fmm = f(p[0] - h[0], p[1] - h[1]);
    let g = [(fxp - fxm) / (2.0 * h[0]), (fyp - fym) / (2.0 * h[1])];
    let hxx = (fxp - 2.0 * f0 + fxm) / (h[0] * h[0]);
    let hyy = (fyp - 2.0 * f0 + fym) / (h[1] * h[1]);
    let hxy = (fpp - fpm - fmp + fmm) / (4.0 * h[0] * h[1]);
    (f0, g, [[hxx, hxy], [hxy, hyy]])
}

// Damped Newton ascent with finite-difference derivatives whose steps track
// the current width estimate.
fn laplace_fit(f: &impl Fn(f64, f64) -> f64, start: [f64; 2]) -> Result<Laplace> {
    let mut p = start;
    let mut h = [1e-3, 1e-3];
    if !f(p[0], p[1]).is_finite() {
        p = [0.0, 0.0];
    }
    for _ in 0..200 {
        let (f0, g, hm) = fd_grad_hess(f, p, h);
        if !f0.is_finite() {
            return Err(Error::Evaluation(p[0]));
        }
        let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
        let concave = hm[0][0] < 0.0 && det > 0.0;
        let step = if concave {
            [-(hm[1][1] * g[0] - hm[0][1] * g[1]) / det, -(hm[0][0] * g[1] - hm[1][0] * g[0]) / det]
        } else {
            let n = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1e-300);
            [0.5 * g[0] / n, 0.5 * g[1] / n]
        };
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let q = [p[0] + alpha * step[0], p[1] + alpha * step[1]];
            if f(q[0], q[1]) >= f0 {
                p = q;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if concave {
            let sd = [(-hm[1][1] / det).sqrt(), (-hm[0][0] / det).sqrt()];
            h = [(0.02 * sd[0]).clamp(1e-7, 1e-2), (0.02 * sd[1]).clamp(1e-7, 1e-2)];
            let size = (alpha * step[0] / sd[0]).abs().max((alpha * step[1] / sd[1]).abs());
            if !moved || size < 1e-6 {
                let (f0, _, hm) = fd_grad_hess(f, p, h);
                let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
                if hm[0][0] < 0.0 && det > 0.0 {
                    let cov = [[-hm[1][1] / det, hm[0][1] / det], [hm[1][0] / det, -hm[0][0] / det]];
                    return Ok(Laplace { mode: p, log_peak: f0, cov });
                }
            }
        } else if !moved {
            break;
        }
    }
    Err(Error::Consistency(format!("mode search did not converge near ({}, {})", p[0], p[1])))
}

/// Result of one ratio evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEval {
    pub value: f64,
    pub error_estimate: f64,
    /// `ln` of the peak of the normalised integrand in `(ln xi1, v)`.
    pub log_peak: f64,
    /// Mode in `(ln xi1, xi2)`.
    pub mode: [f64; 2],
    /// Upper `xi1` limit used.
    pub xi_limit: f64,
    /// Integrand on the `xi1 = xi_limit` edge relative to its peak.
    pub boundary_fraction: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl RatioEval {
    /// Whether the truncation edge carries less than `1e-6` of the peak.
    pub fn domain_sufficient(&self) -> bool {
        self.boundary_fraction <= BOUNDARY_FRACTION
    }
}

/// `I1` or `I2` by adaptive cubature on a box around the Laplace mode, with
/// `xi1` cut at the truncation bound.
pub fn ratio_i(sample: &KeySample, which: Which, table: &CoeffTable, order: usize) -> Result<RatioEval> {
    let limit = truncation_bounds(sample)?.for_ratio(which);
    ratio_i_with_limit(sample, which, table, order, limit)
}

/// As [`ratio_i`] with an explicit upper limit for `xi1`.
pub fn ratio_i_with_limit(
    sample: &KeySample,
    which: Which,
    table: &CoeffTable,
    order: usize,
    xi_limit: f64,
) -> Result<RatioEval> {
    check_order(table, order)?;
    integrate_ratio(&Integrand::new(sample, which, Some((table, order)))?, xi_limit)
}

/// The ratio with the exact cost `Psi` in the numerator as well, for
/// separating the effect of the series truncation.
pub fn ratio_i_exact_cost(sample: &KeySample, which: Which, xi_limit: f64) -> Result<RatioEval> {
    integrate_ratio(&Integrand::new(sample, which, None)?, xi_limit)
}

fn check_order(table: &CoeffTable, order: usize) -> Result<()> {
    if order < 2 || order > table.order {
        return Err(Error::Precondition(format!("series order {order} outside 2..={}", table.order)));
    }
    Ok(())
}

fn integrate_ratio(ig: &Integrand, xi_limit: f64) -> Result<RatioEval> {
    if !(xi_limit > 0.0) {
        return Err(Error::Domain(format!("xi limit must be positive, got {xi_limit}")));
    }
    let sample = &ig.k;
    let lf = |l: f64, v: f64| ig.log_f(l, v);
    let lap = laplace_fit(&lf, ig.start())?;
    // whitened coordinates u: l = m0 + c00 u0, v = m1 + c10 u0 + c11 u1 (Cholesky of the covariance),
    // so the truncation l <= ln xi_limit stays an axis-aligned cut u0 <= u_lim
    let c00 = lap.cov[0][0].sqrt();
    let c10 = lap.cov[1][0] / c00;
    let c11 = (lap.cov[1][1] - c10 * c10).max(1e-300).sqrt();
    let at = |u0: f64, u1: f64| lf(lap.mode[0] + c00 * u0, lap.mode[1] + c10 * u0 + c11 * u1);
    let u_lim = (xi_limit.ln() - lap.mode[0]) / c00;
    let mut lo = [-BOX_SDS, -BOX_SDS];
    let mut hi = [BOX_SDS, BOX_SDS];
    let edge_max = |lo: [f64; 2], hi: [f64; 2], side: usize| -> f64 {
        let m = 48;
        let top = hi[0].min(u_lim);
        (0..=m)
            .map(|i| {
                let a = i as f64 / m as f64;
                match side {
                    0 => at(lo[0], lo[1] + a * (hi[1] - lo[1])),
                    1 => at(top, lo[1] + a * (hi[1] - lo[1])),
                    2 => at(lo[0] + a * (top - lo[0]), lo[1]),
                    _ => at(lo[0] + a * (top - lo[0]), hi[1]),
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // widen each side until its edge is negligible
    for _ in 0..12 {
        let mut grown = false;
        for side in 0..4 {
            if side == 1 && hi[0] >= u_lim {
                continue;
            }
            if edge_max(lo, hi, side) - lap.log_peak > EDGE_LOG_DROP {
                let (axis, sign) = [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)][side];
                if sign < 0.0 {
                    lo[axis] -= 0.5 * BOX_SDS;
                } else {
                    hi[axis] += 0.5 * BOX_SDS;
                }
                grown = true;
            }
        }
        if !grown {
            break;
        }
    }
    let top = hi[0].min(u_lim);
    let boundary_fraction = if hi[0] >= u_lim { (edge_max(lo, hi, 1) - lap.log_peak).exp() } else { 0.0 };
    let mode = [lap.mode[0], sample.x2 / (1.0 + lap.mode[1].exp())];
    let mut out = RatioEval {
        value: 0.0,
        error_estimate: 0.0,
        log_peak: lap.log_peak,
        mode,
        xi_limit,
        boundary_fraction,
        evaluations: 0,
        converged: true,
    };
    if top <= lo[0] {
        return Ok(out);
    }
    let q = integrate_rect(
        |u0, u1| (at(u0, u1) - lap.log_peak).exp(),
        Rect::new(lo[0], top, lo[1], hi[1]),
        QUAD_REL_TOL,
        1e-300,
        QUAD_BUDGET,
    )?;
    let scale = lap.log_peak.exp() * c00 * c11;
    out.value = q.value * scale;
    out.error_estimate = q.error_estimate * scale;
    out.evaluations = q.evaluations;
    out.converged = q.converged;
    Ok(out)
}

/// Sampling law for the Monte Carlo estimate of a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McSampler {
    /// Student-t (3 degrees of freedom) around the Laplace fit, scale doubled.
    Importance,
    /// Uniform on the rectangle `(x2, 0) x (0, xi_limit)`.
    Uniform,
}

/// Monte Carlo estimate of `I1` or `I2` with `n` draws.
pub fn ratio_i_mc(
    sample: &KeySample,
    which: Which,
    table: &CoeffTable,
    order: usize,
    n: usize,
    sampler: McSampler,
    stream: &mut RngStream,
) -> Result<McResult> {
    check_order(table, order)?;
    ratio_mc(sample, which, Some((table, order)), n, sampler, stream)
}

fn ratio_mc(
    sample: &KeySample,
    which: Which,
    series: Option<(&CoeffTable, usize)>,
    n: usize,
    sampler: McSampler,
    stream: &mut RngStream,
) -> Result<McResult> {
    let limit = truncation_bounds(sample)?.for_ratio(which);
    let ig = Integrand::new(sample, which, series)?;
    let lf = |l: f64, v: f64| ig.log_f(l, v);
    let ln_lim = limit.ln();
    let mut vals = Vec::with_capacity(n);
    let mut rejected = 0;
    match sampler {
        McSampler::Uniform => {
            let area = limit * -sample.x2;
            for _ in 0..n {
                let xi1: f64 = limit * stream.gen::<f64>();
                let xi2: f64 = sample.x2 * stream.gen::<f64>();
                if !(xi1 > 0.0) || !(xi2 < 0.0) || xi2 <= sample.x2 {
                    vals.push(0.0);
                    continue;
                }
                // undo the Jacobian of (l, v) to get the density in xi
                let v = ((xi2 - sample.x2) / -xi2).ln();
                let jac = xi1.ln() + (-sample.x2).ln() + log_sigmoid(v) + log_sigmoid(-v);
                let f = (lf(xi1.ln(), v) - jac).exp() * area;
                if f.is_finite() {
                    vals.push(f);
                } else {
                    rejected += 1;
                }
            }
        }
        McSampler::Importance => {
            let lap = laplace_fit(&lf, ig.start())?;
            // Cholesky factor of the doubled covariance
            let c = lap.cov;
            let l00 = (4.0 * c[0][0]).sqrt();
            let l10 = 4.0 * c[1][0] / l00;
            let l11 = (4.0 * c[1][1] - l10 * l10).sqrt();
            let log_det = (l00 * l11).ln();
            let nu = 3.0;
            // bivariate t normaliser Gamma(5/2) / (Gamma(3/2) nu pi)
            let log_norm = (1.5 / (nu * std::f64::consts::PI)).ln();
            for _ in 0..n {
                let (a, b): (f64, f64) = (StandardNormal.sample(stream), StandardNormal.sample(stream));
                let chi2: f64 = (0..3).map(|_| StandardNormal.sample(stream)).map(|g: f64| g * g).sum();
                let w = (chi2 / nu).sqrt();
                let (ua, ub) = (a / w, b / w);
                let p = [lap.mode[0] + l00 * ua, lap.mode[1] + l10 * ua + l11 * ub];
                if p[0] > ln_lim {
                    vals.push(0.0);
                    continue;
                }
                let q2 = ua * ua + ub * ub;
                let log_q = log_norm - log_det - 2.5 * (1.0 + q2 / nu).ln();
                let f = (lf(p[0], p[1]) - log_q).exp();
                if f.is_finite() {
                    vals.push(f);
                } else {
                    rejected += 1;
                }
            }
        }
    }
    summarize(&vals, rejected)
}

/// Draws `(t, s, chi, eta)` with `t ~ U(-tau, 0)`, `s ~ U(t, 0)` and
/// `ln chi, ln eta ~ N(0, log_sd^2)`.
pub fn draw_sample(tau: f64, log_sd: f64, stream: &mut RngStream) -> Result<KeySample> {
    loop {
        let t = -tau * stream.gen::<f64>();
        let s = t * stream.gen::<f64>();
        let lc: f64 = StandardNormal.sample(stream);
        let le: f64 = StandardNormal.sample(stream);
        if t < s && s < 0.0 {
            return KeySample::from_chi_eta(t, s, (log_sd * lc).exp(), (log_sd * le).exp());
        }
    }
}

/// Cost used in the numerator kernels of a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorCost {
    /// The series `Psi~_N`, bounding `Psi` from below.
    #[default]
    Series,
    /// The exact cost `Psi`.
    Exact,
}

/// Batch settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub n: usize,
    pub tau: f64,
    pub order: usize,
    pub seed: u64,
    pub log_sd: f64,
    /// One sample in this many gets the truncation and enlargement checks.
    pub spot_check_every: usize,
    /// One sample in this many gets a Monte Carlo cross-check.
    pub mc_check_every: usize,
    pub mc_check_n: usize,
    pub cost: NumeratorCost,
}

impl BatchConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        BatchConfig {
            n,
            tau: 1.0,
            order: DEFAULT_ORDER,
            seed,
            log_sd: LOG_SD,
            spot_check_every: 100,
            mc_check_every: 1000,
            mc_check_n: 20_000,
            cost: NumeratorCost::Series,
        }
    }
}

/// Counters collected over a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchDiagnostics {
    pub evaluated: usize,
    pub nonconverged: usize,
    /// Samples with `Psi~_N(z; 1) > Psi(z; 1)`.
    pub psi_tilde_violations: usize,
    pub boundary_checked: usize,
    /// Spot checks where the integrand on the truncation edge exceeded `1e-6` of its peak.
    pub boundary_exceeded: usize,
    pub enlarge_checked: usize,
    /// Spot checks where doubling the truncation bound changed the ratio by 1% or more.
    pub enlarge_exceeded: usize,
    pub max_enlarge_change: f64,
    pub mc_checked: usize,
    /// Largest `|quadrature - mc| / mc_std_error` over the cross-checks.
    pub mc_max_z: f64,
    pub quadrature_evaluations: u64,
}

/// Largest ratios over a batch and where they occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub n: usize,
    pub seed: u64,
    pub tau: f64,
    pub log_sd: f64,
    #[serde(rename = "N")]
    pub order: usize,
    pub numerator_cost: NumeratorCost,
    #[serde(rename = "max_I1")]
    pub max_i1: f64,
    #[serde(rename = "argmax_I1")]
    pub argmax_i1: Option<KeySample>,
    #[serde(rename = "max_I2")]
    pub max_i2: f64,
    #[serde(rename = "argmax_I2")]
    pub argmax_i2: Option<KeySample>,
    /// Samples whose ratios could not be evaluated.
    pub flagged: usize,
    pub runtime_s: f64,
    pub diagnostics: BatchDiagnostics,
}

struct Outcome {
    sample: KeySample,
    values: Option<[f64; 2]>,
    diag: BatchDiagnostics,
}

fn evaluate_one(i: usize, cfg: &BatchConfig, table: &CoeffTable) -> Outcome {
    let mut stream = RngStream::new(cfg.seed, i as u64);
    let sample = draw_sample(cfg.tau, cfg.log_sd, &mut stream).expect("drawn samples are valid");
    let mut diag = BatchDiagnostics::default();
    let mut values = [0.0; 2];
    let series = match cfg.cost {
        NumeratorCost::Series => Some((table, cfg.order)),
        NumeratorCost::Exact => None,
    };
    let ratio = |which: Which, limit: f64| integrate_ratio(&Integrand::new(&sample, which, series)?, limit);
    for (j, which) in [Which::I1, Which::I2].into_iter().enumerate() {
        let bound = match truncation_bounds(&sample) {
            Ok(b) => b.for_ratio(which),
            Err(_) => return Outcome { sample, values: None, diag },
        };
        let r = match ratio(which, bound) {
            Ok(r) if r.value.is_finite() => r,
            _ => return Outcome { sample, values: None, diag },
        };
        diag.quadrature_evaluations += r.evaluations as u64;
        if !r.converged {
            diag.nonconverged += 1;
        }
        values[j] = r.value;
        if cfg.spot_check_every > 0 && i.is_multiple_of(cfg.spot_check_every) {
            diag.boundary_checked += 1;
            if !r.domain_sufficient() {
                diag.boundary_exceeded += 1;
            }
            if let Ok(big) = ratio(which, 2.0 * r.xi_limit) {
                diag.enlarge_checked += 1;
                let change = (big.value - r.value).abs() / r.value.abs().max(1e-300);
                diag.max_enlarge_change = diag.max_enlarge_change.max(change);
                if change >= 0.01 {
                    diag.enlarge_exceeded += 1;
                }
            }
        }
        if cfg.mc_check_every > 0 && i.is_multiple_of(cfg.mc_check_every) {
            let mut mc_stream = RngStream::new(cfg.seed, (1u64 << 40) + 2 * i as u64 + j as u64);
            if let Ok(m) = ratio_mc(&sample, which, series, cfg.mc_check_n, McSampler::Importance, &mut mc_stream) {
                diag.mc_checked += 1;
                let z = (r.value - m.mean).abs() / m.std_error.max(1e-300);
                diag.mc_max_z = diag.mc_max_z.max(z);
            }
        }
    }
    if let Ok(pair) = sample.pair_to_identity() {
        if let (Ok(ex), Ok(tl)) =
            (psi_exact(&pair, 1.0), crate::cost::psi_series(&pair, 1.0, cfg.order, Basis::GnTilde, table))
        {
            if tl > ex.psi * (1.0 + 1e-12) + 1e-12 {
                diag.psi_tilde_violations += 1;
            }
        }
    }
    diag.evaluated = 1;
    Outcome { sample, values: Some(values), diag }
}

fn merge(a: &mut BatchDiagnostics, b: &BatchDiagnostics) {
    a.evaluated += b.evaluated;
    a.nonconverged += b.nonconverged;
    a.psi_tilde_violations += b.psi_tilde_violations;
    a.boundary_checked += b.boundary_checked;
    a.boundary_exceeded += b.boundary_exceeded;
    a.enlarge_checked += b.enlarge_checked;
    a.enlarge_exceeded += b.enlarge_exceeded;
    a.max_enlarge_change = a.max_enlarge_change.max(b.max_enlarge_change);
    a.mc_checked += b.mc_checked;
    a.mc_max_z = a.mc_max_z.max(b.mc_max_z);
    a.quadrature_evaluations += b.quadrature_evaluations;
}

/// Evaluates both ratios on `n` samples. Sample `i` draws from stream `i` of
/// the seed, and the maxima are merged in index order (ties keep the lower
/// index), so the report does not depend on the thread count.
pub fn run_batch(cfg: &BatchConfig, table: &CoeffTable) -> Result<BatchReport> {
    if cfg.n == 0 || !(cfg.tau > 0.0) || !(cfg.log_sd >= 0.0) {
        return Err(Error::Precondition("batch needs n > 0, tau > 0 and log_sd >= 0".into()));
    }
    if cfg.order < 2 || cfg.order > table.order {
        return Err(Error::Precondition(format!("series order {} outside 2..={}", cfg.order, table.order)));
    }
    let start = Instant::now();
    let outcomes: Vec<Outcome> = (0..cfg.n).into_par_iter().map(|i| evaluate_one(i, cfg, table)).collect();
    let mut report = BatchReport {
        n: cfg.n,
        seed: cfg.seed,
        tau: cfg.tau,
        log_sd: cfg.log_sd,
        order: cfg.order,
        numerator_cost: cfg.cost,
        max_i1: f64::NEG_INFINITY,
        argmax_i1: None,
        max_i2: f64::NEG_INFINITY,
        argmax_i2: None,
        flagged: 0,
        runtime_s: 0.0,
        diagnostics: BatchDiagnostics::default(),
    };
    for o in &outcomes {
        merge(&mut report.diagnostics, &o.diag);
        match o.values {
            None => report.flagged += 1,
            Some([a, b]) => {
                if a > report.max_i1 {
                    report.max_i1 = a;
                    report.argmax_i1 = Some(o.sample);
                }
                if b > report.max_i2 {
                    report.max_i2 = b;
                    report.argmax_i2 = Some(o.sample);
                }
            }
        }
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_constructors_agree() {
        let a = KeySample::from_chi_eta(-0.5, -0.2, 1.5, 0.7).unwrap();
        let b = KeySample::from_coords(-0.5, -0.2, a.x1, a.x2).unwrap();
        assert!((a.eta - b.eta).abs() < 1e-14 && (a.chi - b.chi).abs() < 1e-15);
        assert!(KeySample::from_coords(-0.5, -0.6, 1.0, -1.0).is_err());
        assert!(KeySample::from_coords(-0.5, -0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn eta_is_the_h_invariant() {
        let k = KeySample::from_chi_eta(-0.7, -0.3, 2.0, 3.0).unwrap();
        let h = crate::geometry::h_invariant(&k.pair_to_identity().unwrap());
        assert!((h - 3.0).abs() < 1e-14);
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_sigmoid(800.0), 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_at_least_one_and_deterministic() {
        let k = reference_argmax_i1();
        let a = truncation_bounds(&k).unwrap();
        assert!(a.xi_bar >= 1.0 && a.xi_bbar >= 1.0);
        assert_eq!(a, truncation_bounds(&k).unwrap());
    }

    #[test]
    fn laplace_fit_of_a_gaussian() {
        let f = |x: f64, y: f64| -0.5 * ((x - 1.0) * (x - 1.0) / 0.04 + (y + 2.0) * (y + 2.0) / 9.0);
        let l = laplace_fit(&f, [0.0, 0.0]).unwrap();
        assert!((l.mode[0] - 1.0).abs() < 1e-6 && (l.mode[1] + 2.0).abs() < 1e-5);
        assert!((l.cov[0][0] - 0.04).abs() < 1e-6 && (l.cov[1][1] - 9.0).abs() < 1e-3);
    }
}
