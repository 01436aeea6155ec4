//! The optimal cost `Psi`, its series expansions, the Langevin quadratic form
//! and finite-difference checks of the HJB identity and the second-order
//! expansion at the zero-cost point.

use serde::{Deserialize, Serialize};

use crate::combinatorics::CoeffTable;
use crate::error::{Error, Result};
use crate::geometry::{h_invariant, GroupPoint, OrderedPair};
use crate::scalar_kernels::{big_g_with, branch_sign, ginv, series_sum, Basis};

/// Default relative step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Default relative step for second derivatives.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// A cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEval {
    pub psi: f64,
    pub h: f64,
    pub energy: f64,
    pub sigma: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// `chi + 1/chi - 2` with `chi = sqrt(x1/y1)`, written without cancellation.
pub fn chi_term(x1: f64, y1: f64) -> f64 {
    let (a, b) = (x1.sqrt(), y1.sqrt());
    let d = x1 - y1;
    d * d / (a * b * (a + b) * (a + b))
}

/// `Psi` at unit volatility from `T - t`, `chi + 1/chi - 2`, `h` and `r = g^{-1}(1/h)`.
pub fn psi_reduced_with(tau: f64, chi_excess: f64, h: f64, r: f64) -> f64 {
    4.0 / tau * (h * chi_excess + big_g_with(h, r))
}

/// `Psi` at unit volatility from `T - t`, `chi + 1/chi - 2` and `h`.
pub fn psi_reduced(tau: f64, chi_excess: f64, h: f64) -> f64 {
    psi_reduced_with(tau, chi_excess, h, ginv(1.0 / h))
}

/// `Psi(z; w)` through the `g^{-1}` form, cross-checked against the energy form.
pub fn psi_exact(pair: &OrderedPair, sigma: f64) -> Result<CostEval> {
    check_sigma(sigma)?;
    let (z, w) = (pair.z(), pair.w());
    let tau = pair.tau();
    let h = h_invariant(pair);
    let r = ginv(1.0 / h);
    let psi1 = psi_reduced_with(tau, chi_term(z.x1, w.x1), h, r);
    let (alt, scale) = energy_form_terms(pair, r);
    if (alt - psi1).abs() > 1e-10 * psi1.abs() + 1e-13 * scale {
        return Err(Error::Consistency(format!("closed forms of psi disagree: {psi1} vs {alt}")));
    }
    let s2 = sigma * sigma;
    Ok(CostEval { psi: psi1 / s2, h, energy: 4.0 * r / (tau * tau) / s2, sigma })
}

// E tau + 4 (x1 + y1)/d - 4 sgn sqrt(E + 4 x1 y1 / d^2) and the sum of term magnitudes
fn energy_form_terms(pair: &OrderedPair, r: f64) -> (f64, f64) {
    let (z, w) = (pair.z(), pair.w());
    let tau = pair.tau();
    let d = w.x2 - z.x2;
    let h = h_invariant(pair);
    let e = 4.0 * r / (tau * tau);
    let a = e * tau;
    let b = 4.0 * (z.x1 + w.x1) / d;
    let c = 4.0 * branch_sign(h) * (e + 4.0 * z.x1 * w.x1 / (d * d)).max(0.0).sqrt();
    (a + b - c, a.abs() + b.abs() + c.abs())
}

/// `Psi(z; w)` through the energy form `E (T-t) + 4 (x1+y1)/(y2-x2) - 4 sgn sqrt(E + 4 x1 y1/(y2-x2)^2)`.
pub fn psi_explicit(pair: &OrderedPair, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let r = ginv(1.0 / h_invariant(pair));
    Ok(energy_form_terms(pair, r).0 / (sigma * sigma))
}

/// `Psi` from raw coordinates; `+inf` when the points are not ordered.
pub fn psi_or_inf(z: &GroupPoint, w: &GroupPoint, sigma: f64) -> f64 {
    if !(z.t < w.t) || !(w.x2 - z.x2 > 1e-300) || !(z.x1 > 0.0) || !(w.x1 > 0.0) {
        return f64::INFINITY;
    }
    let tau = w.t - z.t;
    let h = tau * (z.x1 * w.x1).sqrt() / (w.x2 - z.x2);
    psi_reduced(tau, chi_term(z.x1, w.x1), h) / (sigma * sigma)
}

/// `N`-th order expansion `Psi_N` (or `Psi~_N` with [`Basis::GnTilde`]).
pub fn psi_series(pair: &OrderedPair, sigma: f64, order: usize, basis: Basis, table: &CoeffTable) -> Result<f64> {
    check_sigma(sigma)?;
    if order < 2 || order > table.order {
        return Err(Error::Precondition(format!("series order {order} outside 2..={}", table.order)));
    }
    let (z, w) = (pair.z(), pair.w());
    let h = h_invariant(pair);
    let bracket = h * chi_term(z.x1, w.x1) + series_sum(h, table, order, basis);
    Ok(4.0 / (sigma * sigma * pair.tau()) * bracket)
}

/// Covariance `C(sigma, s) = sigma^2 [[s, -s^2/2], [-s^2/2, s^3/3]]`.
pub fn langevin_covariance(sigma: f64, s: f64) -> [[f64; 2]; 2] {
    let s2 = sigma * sigma;
    [[s2 * s, -s2 * s * s / 2.0], [-s2 * s * s / 2.0, s2 * s * s * s / 3.0]]
}

/// Langevin cost
/// `3 (2 (y2 - x2) - tau (x1 + y1))^2 / (sigma^2 tau^3) + (y1 - x1)^2 / (sigma^2 tau)`.
pub fn psi_langevin(tau: f64, x: [f64; 2], y: [f64; 2], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("need T > t, got T - t = {tau}")));
    }
    let a = 2.0 * (y[1] - x[1]) - tau * (x[0] + y[0]);
    let b = y[0] - x[0];
    Ok((3.0 * a * a / (tau * tau * tau) + b * b / tau) / (sigma * sigma))
}

/// `|Y Psi - (x1 d_{x1} Psi / 2)^2| / (1 + |Y Psi|)` at unit volatility with
/// `Y = d_t + x1 d_{x2}`, by central differences with relative step `fd_step`.
pub fn hjb_residual(pair: &OrderedPair, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!("fd_step must be positive, got {fd_step}")));
    }
    let (z, w) = (pair.z(), pair.w());
    let psi_at = |t: f64, x1: f64, x2: f64| psi_or_inf(&GroupPoint { t, x1, x2 }, &w, 1.0);
    // flow of Y: (t + d, x1, x2 + d x1); step scaled to the time to maturity
    let dy = fd_step * pair.tau().min((w.x2 - z.x2) / z.x1);
    let y_psi = (psi_at(z.t + dy, z.x1, z.x2 + dy * z.x1) - psi_at(z.t - dy, z.x1, z.x2 - dy * z.x1)) / (2.0 * dy);
    let dx = fd_step * z.x1;
    let d1 = (psi_at(z.t, z.x1 + dx, z.x2) - psi_at(z.t, z.x1 - dx, z.x2)) / (2.0 * dx);
    let rhs = 0.25 * (z.x1 * d1).powi(2);
    let res = (y_psi - rhs).abs() / (1.0 + y_psi.abs());
    if !res.is_finite() {
        return Err(Error::Evaluation(z.x1));
    }
    Ok(res)
}

/// The same identity for the Langevin cost with its own drift,
/// `Y Psi_L = (sigma^2/4) (d_{x1} Psi_L)^2`, by exact derivatives.
pub fn hjb_residual_langevin(tau: f64, x: [f64; 2], y: [f64; 2], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    let a = 2.0 * (y[1] - x[1]) - tau * (x[0] + y[0]);
    let b = y[0] - x[0];
    // d_t acts through tau = T - t
    let d_tau = (6.0 * a * -(x[0] + y[0]) / tau.powi(3) - 9.0 * a * a / tau.powi(4) - b * b / (tau * tau)) / s2;
    let d_t = -d_tau;
    let d_x2 = 6.0 * a * -2.0 / (tau.powi(3) * s2);
    let d_x1 = (6.0 * a * -tau / tau.powi(3) - 2.0 * b / tau) / s2;
    let y_psi = d_t + x[0] * d_x2;
    Ok((y_psi - 0.25 * s2 * d_x1 * d_x1).abs() / (1.0 + y_psi.abs()))
}

/// Second-order comparison at the zero-cost point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    /// Max abs entry of FD Hessian of `Psi` minus exact Hessian of `Psi_{sigma y1}`.
    pub max_hessian_diff: f64,
    /// Max abs entry of the FD gradient.
    pub gradient: f64,
    /// `Psi` at the zero-cost point.
    pub value: f64,
}

/// Compares `Psi(t, . ; T, y)` near `x = (y1, y2 - (T-t) y1)` with the Langevin
/// form at volatility `sigma y1`.
pub fn psi_hessian_check(w: GroupPoint, tau: f64, sigma: f64, fd_step: f64) -> Result<HessianCheck> {
    check_sigma(sigma)?;
    if !(tau > 0.0) || !(fd_step > 0.0) {
        return Err(Error::Domain("tau and fd_step must be positive".into()));
    }
    let t = w.t - tau;
    let c = [w.x1, w.x2 - tau * w.x1];
    let f = |x1: f64, x2: f64| psi_or_inf(&GroupPoint { t, x1, x2 }, &w, sigma);
    let hs = [fd_step * w.x1, fd_step * (w.x2 - c[1])];
    let f0 = f(c[0], c[1]);
    let mut hess = [[0.0; 2]; 2];
    let mut grad = [0.0; 2];
    for i in 0..2 {
        let e = |s: f64| if i == 0 { (c[0] + s, c[1]) } else { (c[0], c[1] + s) };
        let (p, m) = (e(hs[i]), e(-hs[i]));
        let (fp, fm) = (f(p.0, p.1), f(m.0, m.1));
        grad[i] = (fp - fm) / (2.0 * hs[i]);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (hs[i] * hs[i]);
    }
    let (a, b) = (hs[0], hs[1]);
    let mixed =
        (f(c[0] + a, c[1] + b) - f(c[0] + a, c[1] - b) - f(c[0] - a, c[1] + b) + f(c[0] - a, c[1] - b)) / (4.0 * a * b);
    hess[0][1] = mixed;
    hess[1][0] = mixed;
    let v = sigma * sigma * w.x1 * w.x1;
    let exact = [[8.0 / (v * tau), 12.0 / (v * tau * tau)], [12.0 / (v * tau * tau), 24.0 / (v * tau.powi(3))]];
    let mut diff = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            diff = diff.max((hess[i][j] - exact[i][j]).abs());
        }
    }
    Ok(HessianCheck { max_hessian_diff: diff, gradient: grad[0].abs().max(grad[1].abs()), value: f0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(t: f64, x1: f64, x2: f64) -> OrderedPair {
        OrderedPair::to_identity(GroupPoint::new(t, x1, x2).unwrap()).unwrap()
    }

    #[test]
    fn zero_cost_and_h2_value() {
        assert_eq!(psi_exact(&pair(-1.0, 1.0, -1.0), 1.0).unwrap().psi, 0.0);
        let r = -3.592898516358689f64;
        let want = 4.0 * (r + 5.0 + 2.0 * (r + 4.0).sqrt());
        let got = psi_exact(&pair(-1.0, 4.0, -1.0), 1.0).unwrap().psi;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        assert!((got - 10.73276632084715).abs() < 1e-10);
    }

    #[test]
    fn langevin_matrix_form() {
        let (tau, x, y, s) = (0.7, [1.3, -0.4], [0.8, 0.9], 1.7);
        let c = langevin_covariance(s, tau);
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        assert!((det - s.powi(4) * tau.powi(4) / 12.0).abs() < 1e-14);
        let v = [x[0] - y[0], x[1] - y[1] + tau * y[0]];
        let q = (c[1][1] * v[0] * v[0] - 2.0 * c[0][1] * v[0] * v[1] + c[0][0] * v[1] * v[1]) / det;
        assert!((q - psi_langevin(tau, x, y, s).unwrap()).abs() < 1e-10 * q);
        assert!(psi_langevin(tau, [2.0, 1.0], [2.0, 1.0 + tau * 2.0], 1.0).unwrap().abs() < 1e-14);
        assert!(hjb_residual_langevin(tau, x, y, s).unwrap() < 1e-12);
    }

    #[test]
    fn unordered_is_infinite() {
        let w = GroupPoint::IDENTITY;
        assert!(psi_or_inf(&GroupPoint { t: -1.0, x1: 1.0, x2: 0.0 }, &w, 1.0).is_infinite());
        assert!(psi_or_inf(&GroupPoint { t: 0.0, x1: 1.0, x2: -1.0 }, &w, 1.0).is_infinite());
    }

    #[test]
    fn hessian_at_zero_cost_point() {
        let chk = psi_hessian_check(GroupPoint::IDENTITY, 1.0, 1.0, FD_STEP_SECOND).unwrap();
        assert!(chk.value.abs() < 1e-12);
        assert!(chk.gradient < 1e-5);
        assert!(chk.max_hessian_diff < 1e-3, "{chk:?}");
    }
}
