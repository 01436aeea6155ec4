//! The group `(R x D, o)`, ordered pairs, the invariant `h`, the control data
//! of the deterministic problem `d gamma1 = omega gamma1 ds, d gamma2 = gamma1 ds`
//! and its closed-form optimal curves (unit volatility).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_kernels::{g_raw, ginv};

/// A point `(t, x1, x2)` of the group, `x1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

impl GroupPoint {
    /// The identity `(0, 1, 0)`.
    pub const IDENTITY: GroupPoint = GroupPoint { t: 0.0, x1: 1.0, x2: 0.0 };

    pub fn new(t: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0) || !x1.is_finite() || !t.is_finite() || !x2.is_finite() {
            return Err(Error::Domain(format!("group point needs finite t, x2 and x1 > 0, got ({t}, {x1}, {x2})")));
        }
        Ok(GroupPoint { t, x1, x2 })
    }

    pub fn compose(&self, w: &GroupPoint) -> GroupPoint {
        compose(self, w)
    }

    pub fn inverse(&self) -> GroupPoint {
        inverse(self)
    }
}

/// `z o w = (t + T, x1 y1, x2 + y2 x1)`.
pub fn compose(z: &GroupPoint, w: &GroupPoint) -> GroupPoint {
    GroupPoint { t: z.t + w.t, x1: z.x1 * w.x1, x2: z.x2 + w.x2 * z.x1 }
}

/// `z^{-1} = (-t, 1/x1, -x2/x1)`.
pub fn inverse(z: &GroupPoint) -> GroupPoint {
    GroupPoint { t: -z.t, x1: 1.0 / z.x1, x2: -z.x2 / z.x1 }
}

/// A pair `z < w`: `z.t < w.t` and `z.x2 < w.x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedPair {
    z: GroupPoint,
    w: GroupPoint,
}

impl OrderedPair {
    pub fn new(z: GroupPoint, w: GroupPoint) -> Result<Self> {
        GroupPoint::new(z.t, z.x1, z.x2)?;
        GroupPoint::new(w.t, w.x1, w.x2)?;
        if !(z.t < w.t) || !(z.x2 < w.x2) {
            return Err(Error::Ordering);
        }
        Ok(OrderedPair { z, w })
    }

    /// Pair `(z, 1_G)`.
    pub fn to_identity(z: GroupPoint) -> Result<Self> {
        Self::new(z, GroupPoint::IDENTITY)
    }

    pub fn from_coords(t: f64, x1: f64, x2: f64, big_t: f64, y1: f64, y2: f64) -> Result<Self> {
        Self::new(GroupPoint::new(t, x1, x2)?, GroupPoint::new(big_t, y1, y2)?)
    }

    pub fn z(&self) -> GroupPoint {
        self.z
    }

    pub fn w(&self) -> GroupPoint {
        self.w
    }

    /// `T - t`.
    pub fn tau(&self) -> f64 {
        self.w.t - self.z.t
    }

    /// `w^{-1} o z`, the first argument after moving `w` to the identity.
    pub fn reduced(&self) -> GroupPoint {
        compose(&inverse(&self.w), &self.z)
    }
}

/// `h(z; w) = (T - t) sqrt(x1 y1) / (y2 - x2)`.
pub fn h_invariant(pair: &OrderedPair) -> f64 {
    let (z, w) = (pair.z, pair.w);
    pair.tau() * (z.x1 * w.x1).sqrt() / (w.x2 - z.x2)
}

/// Data of the optimal control problem for a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlData {
    /// `E = 4 g^{-1}(1/h) / (T - t)^2`.
    pub energy: f64,
    /// Sign of `4 g^{-1}(1/h) + pi^2`.
    pub sigma_sign: i8,
    /// Shooting constant of the curve.
    pub k: f64,
    pub h: f64,
    /// `g^{-1}(1/h)`.
    pub r: f64,
}

/// Energy, branch sign and shooting constant for `pair`.
pub fn control_data(pair: &OrderedPair) -> ControlData {
    let tau = pair.tau();
    let (z, w) = (pair.z, pair.w);
    let h = h_invariant(pair);
    let r = ginv(1.0 / h);
    let energy = 4.0 * r / (tau * tau);
    let c = r + PI * PI / 4.0;
    let sigma_sign: i8 = if c > 0.0 {
        1
    } else if c < 0.0 {
        -1
    } else {
        0
    };
    let d = w.x2 - z.x2;
    // sqrt(E + 4 x1 y1 / d^2) = (2/tau) sqrt(r + h^2)
    let root = 2.0 / tau * (r + h * h).max(0.0).sqrt();
    let k = 2.0 * w.x1 / d - f64::from(sigma_sign) * root;
    ControlData { energy, sigma_sign, k, h, r }
}

/// Curve state at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveState {
    pub gamma1: f64,
    pub gamma2: f64,
    pub omega: f64,
}

// cosh(sqrt r), cos(sqrt(-r)) for r < 0
fn cosh_sqrt(r: f64) -> f64 {
    if r >= 0.0 {
        r.sqrt().cosh()
    } else {
        (-r).sqrt().cos()
    }
}

/// Closed-form optimal curve at time `s in [t, T]`.
///
/// With `u = (T - s)/2`, `C = cosh(sqrt(E) u)`, `S = u g(E u^2)` and `D = C + k S`:
/// `gamma1 = y1 / D^2`, `gamma2 = y2 - 2 S y1 / D`, `omega = (E S + k C) / D`.
pub fn curve_state(pair: &OrderedPair, cd: &ControlData, s: f64) -> CurveState {
    let w = pair.w;
    let u = 0.5 * (w.t - s);
    let r = cd.energy * u * u;
    let c = cosh_sqrt(r);
    let sv = u * g_raw(r);
    let d = c + cd.k * sv;
    CurveState { gamma1: w.x1 / (d * d), gamma2: w.x2 - 2.0 * sv * w.x1 / d, omega: (cd.energy * sv + cd.k * c) / d }
}

/// Samples of an optimal curve on a uniform grid of `[t, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub times: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub omega: Vec<f64>,
}

impl CurveSample {
    /// CSV with header `s,gamma1,gamma2,omega`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,gamma1,gamma2,omega\n");
        for i in 0..self.times.len() {
            let _ = writeln!(out, "{},{},{},{}", self.times[i], self.gamma1[i], self.gamma2[i], self.omega[i]);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut dst: W) -> Result<()> {
        dst.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// The optimal curve from `z` to `w` sampled at `n_points` uniform times.
pub fn optimal_curve(pair: &OrderedPair, n_points: usize) -> Result<CurveSample> {
    if n_points < 2 {
        return Err(Error::Precondition(format!("need at least 2 curve points, got {n_points}")));
    }
    let cd = control_data(pair);
    let tau = pair.tau();
    if !(cd.energy * tau * tau > -4.0 * PI * PI) {
        return Err(Error::Domain(format!("energy {} below -4 pi^2/(T-t)^2", cd.energy)));
    }
    let (t0, t1) = (pair.z.t, pair.w.t);
    let mut out = CurveSample {
        times: Vec::with_capacity(n_points),
        gamma1: Vec::with_capacity(n_points),
        gamma2: Vec::with_capacity(n_points),
        omega: Vec::with_capacity(n_points),
    };
    let last = (n_points - 1) as f64;
    for i in 0..n_points {
        let s = if i + 1 == n_points { t1 } else { t0 + tau * (i as f64) / last };
        let st = curve_state(pair, &cd, s);
        out.times.push(s);
        out.gamma1.push(st.gamma1);
        out.gamma2.push(st.gamma2);
        out.omega.push(st.omega);
    }
    Ok(out)
}

/// `int omega^2 ds` over the sampled curve by composite Simpson
/// (Simpson 3/8 on the last four points when the interval count is odd).
/// When the interval count is a multiple of 4 the result is extrapolated
/// against Simpson on every other sample.
pub fn curve_cost(curve: &CurveSample) -> Result<f64> {
    let n = curve.len();
    if n < 2 {
        return Err(Error::Precondition("curve needs at least 2 points".into()));
    }
    let f: Vec<f64> = curve.omega.iter().map(|w| w * w).collect();
    let dt = (curve.times[n - 1] - curve.times[0]) / (n - 1) as f64;
    let fine = simpson(&f, dt);
    if !(n - 1).is_multiple_of(4) {
        return Ok(fine);
    }
    let coarse: Vec<f64> = f.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse, 2.0 * dt);
    Ok(fine + (fine - coarse) / 15.0)
}

pub(crate) fn simpson(f: &[f64], dt: f64) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * dt * (f[0] + f[1]),
        3 => dt / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let intervals = n - 1;
            let m = if intervals.is_multiple_of(2) { n } else { n - 3 };
            let mut acc = f[0] + f[m - 1];
            for (i, v) in f.iter().enumerate().take(m - 1).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = acc * dt / 3.0;
            if m < n {
                let j = m - 1;
                total += 3.0 * dt / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
            }
            total
        }
    }
}

/// Largest deviation of `g^{-1}((y2 - gamma2)/((T - s) sqrt(gamma1 y1))) - (T - s)^2 E / 4`
/// over the interior samples of `curve`, relative to `max(1, |E| (T - t)^2 / 4)`.
pub fn energy_deviation(pair: &OrderedPair, curve: &CurveSample) -> f64 {
    let cd = control_data(pair);
    let w = pair.w;
    let scale = (cd.energy.abs() * pair.tau().powi(2) / 4.0).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..curve.len() {
        let rem = w.t - curve.times[i];
        if rem <= 1e-9 * pair.tau() {
            continue;
        }
        let rho = (w.x2 - curve.gamma2[i]) / (rem * (curve.gamma1[i] * w.x1).sqrt());
        let lhs = ginv(rho);
        let rhs = rem * rem * cd.energy / 4.0;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64, x1: f64, x2: f64) -> GroupPoint {
        GroupPoint::new(t, x1, x2).unwrap()
    }

    #[test]
    fn compose_example() {
        let c = compose(&p(1.0, 2.0, 3.0), &p(4.0, 5.0, 6.0));
        assert_eq!(c, p(5.0, 10.0, 15.0));
        assert_eq!(inverse(&p(1.0, 2.0, 4.0)), p(-1.0, 0.5, -2.0));
        assert_eq!(inverse(&GroupPoint::IDENTITY), GroupPoint::IDENTITY);
    }

    #[test]
    fn ordering_enforced() {
        assert_eq!(OrderedPair::new(p(0.0, 1.0, 0.0), p(0.0, 1.0, 1.0)), Err(Error::Ordering));
        assert_eq!(OrderedPair::new(p(0.0, 1.0, 1.0), p(1.0, 1.0, 1.0)), Err(Error::Ordering));
        assert!(GroupPoint::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn control_data_examples() {
        let one = OrderedPair::to_identity(p(-1.0, 1.0, -1.0)).unwrap();
        let cd = control_data(&one);
        assert_eq!(cd.h, 1.0);
        assert!(cd.energy.abs() < 1e-15);
        assert_eq!(cd.sigma_sign, 1);
        assert!(cd.k.abs() < 1e-12);
        let two = OrderedPair::to_identity(p(-1.0, 4.0, -1.0)).unwrap();
        let cd = control_data(&two);
        assert!((cd.h - 2.0).abs() < 1e-15);
        assert!((cd.energy - 4.0 * -3.592898516358689).abs() < 1e-10);
        assert_eq!(cd.sigma_sign, -1);
    }

    #[test]
    fn zero_energy_curve_is_flow_of_y() {
        let pair = OrderedPair::to_identity(p(-1.0, 1.0, -1.0)).unwrap();
        let c = optimal_curve(&pair, 11).unwrap();
        for i in 0..11 {
            assert!((c.gamma1[i] - 1.0).abs() < 1e-14);
            assert!((c.gamma2[i] - c.times[i]).abs() < 1e-14);
        }
        assert!(curve_cost(&c).unwrap() < 1e-24);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        for n in [4usize, 5, 8, 9] {
            let dt = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * dt).powi(3)).collect();
            assert!((simpson(&f, dt) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn csv_header() {
        let pair = OrderedPair::to_identity(p(-1.0, 2.0, -1.5)).unwrap();
        let csv = optimal_curve(&pair, 3).unwrap().to_csv();
        assert!(csv.starts_with("s,gamma1,gamma2,omega\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
