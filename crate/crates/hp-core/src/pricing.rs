//! Arithmetic Asian calls at zero interest rate, priced by integrating a
//! transition density against the payoff and by Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GroupPoint;
use crate::numerics::{integrate_rect, summarize, Rect, RngStream};
use crate::parametrix::parametrix_density;
use crate::reference_densities::{simulate_paths, transition_density};

/// Payoff on `(X1_T, X2_T / T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payoff {
    /// `(X1_T - X2_T / T)^+`
    FloatingCall,
    /// `(X2_T / T - K)^+`
    FixedCall { strike: f64 },
}

impl Payoff {
    pub fn eval(&self, y1: f64, average: f64) -> f64 {
        match *self {
            Payoff::FloatingCall => (y1 - average).max(0.0),
            Payoff::FixedCall { strike } => (average - strike).max(0.0),
        }
    }
}

/// Contract valued at time `t` from the state `x = (X1_t, X2_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsianContract {
    pub payoff: Payoff,
    pub t: f64,
    pub maturity: f64,
    pub x: [f64; 2],
    pub sigma: f64,
}

impl AsianContract {
    pub fn new(payoff: Payoff, t: f64, maturity: f64, x: [f64; 2], sigma: f64) -> Result<Self> {
        if !(maturity > t) || !(maturity > 0.0) {
            return Err(Error::Domain(format!("need T > t and T > 0, got t = {t}, T = {maturity}")));
        }
        if !(x[0] > 0.0) || !x[1].is_finite() || !(sigma > 0.0) {
            return Err(Error::Domain("need x1 > 0, finite x2 and sigma > 0".into()));
        }
        if let Payoff::FixedCall { strike } = payoff {
            if !(strike > 0.0) {
                return Err(Error::Domain(format!("strike must be positive, got {strike}")));
            }
        }
        Ok(AsianContract { payoff, t, maturity, x, sigma })
    }

    fn start(&self) -> GroupPoint {
        GroupPoint { t: self.t, x1: self.x[0], x2: self.x[1] }
    }
}

/// Which transition density is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Exact density from Yor's formula.
    Yor,
    /// Leading-order parametrix `u H1`, without correction terms; only
    /// meaningful for small `T - t`.
    ParametrixH,
}

/// A price with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Price {
    pub price: f64,
    /// Quadrature error estimate or Monte Carlo standard error.
    pub err: f64,
    pub converged: bool,
}

const PRICE_BUDGET: usize = 300_000;
// box half-width in standard deviations of ln X1
const PRICE_SDS: f64 = 10.0;

/// `E[payoff]` by adaptive cubature in `a = ln(y1/x1)`, `b = ln((y2 - x2)/x1)`.
///
/// The box spans `PRICE_SDS` standard deviations of `ln X1` around its mean
/// in `a`, and the same width around `ln(T - t)` in `b`. The zero region of
/// the payoff is cut away: for the fixed-strike call by a lower bound on `b`,
/// for the floating-strike call by integrating in `c = ln m(a) - b`, where
/// `b < ln m(a)` is the region where the payoff is positive. Either way the
/// integrand is smooth on the box.
pub fn price_by_density(contract: &AsianContract, density: DensityKind, rel_tol: f64) -> Result<Price> {
    let c = contract;
    let z = c.start();
    let tau = c.maturity - c.t;
    let sd = c.sigma * tau.sqrt();
    let (mut a_lo, a_hi) = (-0.5 * sd * sd - PRICE_SDS * sd, -0.5 * sd * sd + PRICE_SDS * sd);
    let (mut b_lo, b_hi) = (tau.ln() - PRICE_SDS * sd - 1.0, tau.ln() + PRICE_SDS * sd + 1.0);
    let mut failure = None;
    let mut integrand = |a: f64, b: f64| {
        let (u1, u2) = (a.exp(), b.exp());
        let w = GroupPoint { t: c.maturity, x1: c.x[0] * u1, x2: c.x[1] + c.x[0] * u2 };
        let pay = c.payoff.eval(w.x1, w.x2 / c.maturity);
        if pay == 0.0 {
            return 0.0;
        }
        let p = match density {
            DensityKind::Yor => match transition_density(&z, &w, c.sigma) {
                Ok(p) => p,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            DensityKind::ParametrixH => parametrix_density(&z, &w, c.sigma),
        };
        p * pay * c.x[0] * c.x[0] * u1 * u2
    };
    let q = match c.payoff {
        Payoff::FixedCall { strike } => {
            // payoff vanishes unless x2 + x1 u2 > K T
            let u_min = (strike * c.maturity - c.x[1]) / c.x[0];
            if u_min > 0.0 {
                b_lo = b_lo.max(u_min.ln());
            }
            if b_lo >= b_hi {
                return Ok(Price { price: 0.0, err: 0.0, converged: true });
            }
            integrate_rect(integrand, Rect::new(a_lo, a_hi, b_lo, b_hi), rel_tol, 1e-14, PRICE_BUDGET)?
        }
        Payoff::FloatingCall => {
            // payoff vanishes unless u2 < m(a) = T u1 - x2 / x1
            let shift = c.x[1] / c.x[0];
            if shift > 0.0 {
                a_lo = a_lo.max((shift / c.maturity).ln());
            }
            if a_lo >= a_hi {
                return Ok(Price { price: 0.0, err: 0.0, converged: true });
            }
            let log_m = |a: f64| (c.maturity * a.exp() - shift).ln();
            integrate_rect(
                |a, cc| integrand(a, log_m(a) - cc),
                Rect::new(a_lo, a_hi, 0.0, b_hi - b_lo),
                rel_tol,
                1e-14,
                PRICE_BUDGET,
            )?
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Price { price: q.value, err: q.error_estimate, converged: q.converged })
}

/// Mean payoff over simulated paths with its standard error.
pub fn price_by_mc(contract: &AsianContract, n_paths: usize, n_steps: usize, stream: &RngStream) -> Result<Price> {
    let c = contract;
    let batch = simulate_paths(c.t, c.x, c.maturity, c.sigma, n_paths, n_steps, stream)?;
    let pays: Vec<f64> =
        batch.x1.iter().zip(batch.x2.iter()).map(|(&a, &b)| c.payoff.eval(a, b / c.maturity)).collect();
    let r = summarize(&pays, 0)?;
    Ok(Price { price: r.mean, err: r.std_error, converged: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payoffs() {
        assert_eq!(Payoff::FloatingCall.eval(1.5, 1.0), 0.5);
        assert_eq!(Payoff::FloatingCall.eval(0.5, 1.0), 0.0);
        assert_eq!(Payoff::FixedCall { strike: 1.0 }.eval(9.0, 1.25), 0.25);
    }

    #[test]
    fn contract_validation() {
        assert!(AsianContract::new(Payoff::FloatingCall, 1.0, 1.0, [1.0, 0.0], 1.0).is_err());
        assert!(AsianContract::new(Payoff::FixedCall { strike: 0.0 }, 0.0, 1.0, [1.0, 0.0], 1.0).is_err());
        assert!(AsianContract::new(Payoff::FloatingCall, 0.0, 1.0, [0.0, 0.0], 1.0).is_err());
        assert!(AsianContract::new(Payoff::FloatingCall, 0.0, 1.0, [1.0, 0.0], 1.0).is_ok());
    }

    #[test]
    fn strike_beyond_reach_prices_to_zero_by_density() {
        let c = AsianContract::new(Payoff::FixedCall { strike: 1e9 }, 0.0, 1.0, [1.0, 0.0], 0.3).unwrap();
        assert_eq!(price_by_density(&c, DensityKind::Yor, 1e-6).unwrap().price, 0.0);
    }
}
