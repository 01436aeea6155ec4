//! Reference densities: Yor's integral representation, the transition density
//! of `(X1, X2)` built on it, the Langevin Gaussian, and a path simulator with
//! a kernel density estimate.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{langevin_covariance, psi_langevin};
use crate::error::{Error, Result};
use crate::geometry::GroupPoint;
use crate::numerics::{find_root_bracketed, integrate_1d_budget, RngStream};

/// Default relative tolerance for the Yor integral.
pub const YOR_REL_TOL: f64 = 1e-9;

/// The Yor integral `q(s, eta)` held in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YorQ {
    pub s: f64,
    pub eta: f64,
    /// `ln(e^{pi^2/(2s)} q(s, eta))`.
    pub log_scaled: f64,
    /// Achieved relative accuracy estimate.
    pub rel_error: f64,
    /// Whether the requested tolerance was met.
    pub converged: bool,
}

impl YorQ {
    /// `q(s, eta)`; underflows to 0 for small `s`.
    pub fn value(&self) -> f64 {
        (self.log_scaled - PI * PI / (2.0 * self.s)).exp()
    }
}

fn check_s_eta(s: f64, eta: f64) -> Result<()> {
    if !(s > 0.0) || !(eta > 0.0) || !s.is_finite() || !eta.is_finite() {
        return Err(Error::Domain(format!("Yor integral needs s, eta > 0, got s = {s}, eta = {eta}")));
    }
    Ok(())
}

/// Imaginary shift of the integration line: the minimiser of
/// `(pi - y)^2 / (2s) - eta cos y` on `[0, pi/2]`.
fn contour_shift(s: f64, eta: f64) -> f64 {
    let d = |y: f64| -(PI - y) / s + eta * y.sin();
    if d(0.5 * PI) <= 0.0 {
        return 0.5 * PI;
    }
    find_root_bracketed(d, 0.0, 0.5 * PI, 1e-13).unwrap_or(0.5 * PI)
}

// Scans a unimodal-tail log-modulus for its max and a cut-off where it has
// dropped by `drop` below the max.
fn scan_log_modulus(lm: impl Fn(f64) -> f64, step: f64, drop: f64) -> (f64, f64) {
    let mut m = f64::NEG_INFINITY;
    let mut x = 0.0;
    let mut prev = f64::NEG_INFINITY;
    loop {
        let v = lm(x);
        if v > m {
            m = v;
        }
        if x > 0.0 && v < m - drop && v <= prev {
            return (m, x);
        }
        prev = v;
        x += step;
        if x > 1e3 {
            return (m, x);
        }
    }
}

/// `q(s, eta)` by integrating along `Im xi = y` with `y` from [`contour_shift`].
///
/// The integrand `exp(-(xi - i pi)^2/(2s) - eta cosh xi) sinh xi` is entire, the
/// vertical connecting segment contributes only to the real part, so
/// `e^{pi^2/(2s)} q = Im int_0^inf F(x + i y) dx`. This removes the
/// `e^{pi^2/(2s)}` cancellation of the real-axis form.
pub fn yor_q(s: f64, eta: f64, rel_tol: f64) -> Result<YorQ> {
    check_s_eta(s, eta)?;
    let y = contour_shift(s, eta);
    let log_f = |x: f64| {
        let z = Complex64::new(x, y);
        let w = z - Complex64::new(0.0, PI);
        -(w * w) / (2.0 * s) - eta * z.cosh() + z.sinh().ln()
    };
    let re_log = |x: f64| {
        let (ch, sh) = (x.cosh(), x.sinh());
        let modsinh = (sh * sh + y.sin().powi(2)).sqrt();
        -(x * x - (PI - y).powi(2)) / (2.0 * s) - eta * ch * y.cos() + modsinh.ln()
    };
    let (m, cut) = scan_log_modulus(re_log, (0.02f64).min(0.25 * s.sqrt()), 60.0);
    let f = |x: f64| {
        let v = (log_f(x) - m).exp().im;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // about half an oscillation at the origin per panel
    let seg = (0.5f64).min(PI * s / (PI - y + s));
    let n = ((cut / seg).ceil() as usize).max(1);
    let pass = |rel: f64, abs: f64| -> Result<(f64, f64, f64)> {
        let (mut val, mut err, mut mag) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let (a, b) = (cut * k as f64 / n as f64, cut * (k + 1) as f64 / n as f64);
            let q = integrate_1d_budget(f, a, b, rel, abs, 20_000)?;
            val += q.value;
            err += q.error_estimate;
            mag += q.value.abs();
        }
        Ok((val, err, mag))
    };
    let (mut val, mut err, mut mag) = pass(0.1 * rel_tol, 1e-18)?;
    if val > 1e-10 * mag && err > rel_tol * val {
        // segments cancel: retry with an absolute target set by the total
        (val, err, mag) = pass(1e-15, (0.1 * rel_tol * val / n as f64).max(1e-30))?;
    }
    finish_q(s, eta, m, val, err + 1e-16 * mag, rel_tol)
}

// A sum that cancellation has swallowed (non-positive, or error above half
// its size) is reported as `log_scaled = -inf` with `converged = false`.
fn finish_q(s: f64, eta: f64, m: f64, val: f64, err: f64, rel_tol: f64) -> Result<YorQ> {
    if !(val > 0.0) || err > 0.5 * val {
        return Ok(YorQ { s, eta, log_scaled: f64::NEG_INFINITY, rel_error: f64::INFINITY, converged: false });
    }
    let rel_error = err / val;
    Ok(YorQ { s, eta, log_scaled: m + val.ln(), rel_error, converged: rel_error <= rel_tol })
}

/// `q(s, eta)` on the real axis: panels between the zeros `k s` of
/// `sin(pi xi / s)`, summed until the Gaussian tail bound drops below the
/// running total by 60 e-folds. The `e^{pi^2/(2s)}` cancellation makes this
/// unreliable for small `s`; `converged` reports whether `rel_tol` was met.
pub fn yor_q_panels(s: f64, eta: f64, rel_tol: f64) -> Result<YorQ> {
    check_s_eta(s, eta)?;
    let lm = |x: f64| -x * x / (2.0 * s) - eta * x.cosh() + x.sinh().ln();
    let (m, cut) = scan_log_modulus(lm, (0.02f64).min(0.25 * s), 60.0);
    let f = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        (lm(x) - m).exp() * (PI * x / s).sin()
    };
    let (mut val, mut err, mut mag) = (0.0, 0.0, 0.0);
    let mut k = 0usize;
    loop {
        let (a, b) = (k as f64 * s, (k + 1) as f64 * s);
        if a > cut {
            break;
        }
        let q = integrate_1d_budget(f, a, b, 0.1 * rel_tol, 1e-300, 20_000)?;
        val += q.value;
        err += q.error_estimate;
        mag += q.value.abs();
        k += 1;
    }
    let mut out = finish_q(s, eta, m, val, err + 1e-16 * mag, rel_tol)?;
    out.log_scaled += PI * PI / (2.0 * s);
    Ok(out)
}

/// Yor's law: the density of `(e^{B_s}, int_0^s e^{2 B_u} du)` for a standard
/// Brownian motion `B`, in log form:
/// `ln[e^{pi^2/(2s)} / (pi b^2 sqrt(2 pi s)) exp(-(1 + a^2)/(2b)) q(s, a/b)]`.
pub fn yor_law_log(s: f64, a: f64, b: f64, rel_tol: f64) -> Result<YorQ> {
    let q = yor_q(s, a / b, rel_tol)?;
    let log = q.log_scaled - (PI * b * b * (2.0 * PI * s).sqrt()).ln() - (1.0 + a * a) / (2.0 * b);
    Ok(YorQ { log_scaled: log, ..q })
}

/// Elapsed time, end point relative to the start `(1, 0)`, and volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityQuery {
    pub s: f64,
    pub y1: f64,
    pub y2: f64,
    pub sigma: f64,
}

/// `ln` of the unit-volatility density of `(X1_s, X2_s)` from `(1, 0)`.
///
/// With `W_s = 2 B_{s/4}`, `X1 = e^{2 (B_u - u)}` and `X2 = 4 int_0^u e^{2 (B_r - r)} dr`
/// at `u = s/4`. Removing the drift by Girsanov (density `e^{-B_u - u/2}`) and
/// changing variables gives
/// `p(s, y1, y2) = e^{-s/8} / (8 y1) p_Yor(s/4, sqrt(y1), y2/4)`.
pub fn log_density_unit(s: f64, y1: f64, y2: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if !(y1 > 0.0) || !(y2 > 0.0) {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("elapsed time must be positive, got {s}")));
    }
    let q = yor_law_log(0.25 * s, y1.sqrt(), 0.25 * y2, rel_tol)?;
    Ok((-s / 8.0 - (8.0 * y1).ln() + q.log_scaled, q.rel_error))
}

/// Transition density of `(X1, X2)` from `(1, 0)` after time `s` at volatility `sigma`:
/// `sigma^2 p(sigma^2 s, y1, sigma^2 y2)`; 0 outside `y1 > 0, y2 > 0`.
pub fn yor_density(q: &DensityQuery) -> Result<f64> {
    if !(q.sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {}", q.sigma)));
    }
    let s2 = q.sigma * q.sigma;
    let (l, _) = log_density_unit(s2 * q.s, q.y1, s2 * q.y2, YOR_REL_TOL)?;
    Ok(s2 * l.exp())
}

/// Transition density `p(t, x; T, y)` in `y`, reduced to the start `(1, 0)`:
/// `p = pbar(T - t, y1/x1, (y2 - x2)/x1) / x1^2`.
pub fn transition_density(z: &GroupPoint, w: &GroupPoint, sigma: f64) -> Result<f64> {
    if !(w.t > z.t) {
        return Err(Error::Domain("need T > t".into()));
    }
    let q = DensityQuery { s: w.t - z.t, y1: w.x1 / z.x1, y2: (w.x2 - z.x2) / z.x1, sigma };
    Ok(yor_density(&q)? / (z.x1 * z.x1))
}

/// Gaussian density with covariance `C(sigma, T - t)` centred at the zero-cost point.
pub fn langevin_density(tau: f64, x: [f64; 2], y: [f64; 2], sigma: f64) -> Result<f64> {
    let c = langevin_covariance(sigma, tau);
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let psi = psi_langevin(tau, x, y, sigma)?;
    Ok((-0.5 * psi).exp() / (2.0 * PI * det.sqrt()))
}

/// Terminal samples of simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub t: f64,
    pub big_t: f64,
    pub start: [f64; 2],
    pub sigma: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"HPPB";
const VERSION: u32 = 1;
const BLOCK: usize = 8192;

/// Simulates `X1` by exact log-normal steps and `X2` by the trapezoidal rule.
///
/// Paths are generated in blocks of 8192, block `b` drawing from
/// `stream.split((stream_id << 32) + b)`, so results do not depend on the
/// number of threads.
pub fn simulate_paths(
    t: f64,
    x: [f64; 2],
    big_t: f64,
    sigma: f64,
    n_paths: usize,
    n_steps: usize,
    stream: &RngStream,
) -> Result<PathBatch> {
    if !(big_t > t) || !(x[0] > 0.0) || !(sigma >= 0.0) || n_paths == 0 || n_steps == 0 {
        return Err(Error::Precondition("need T > t, x1 > 0, sigma >= 0, n_paths and n_steps > 0".into()));
    }
    let dt = (big_t - t) / n_steps as f64;
    let vol = sigma * dt.sqrt();
    let drift = -0.5 * sigma * sigma * dt;
    let mut x1 = vec![0.0; n_paths];
    let mut x2 = vec![0.0; n_paths];
    let base = stream.stream_id() << 32;
    x1.par_chunks_mut(BLOCK).zip(x2.par_chunks_mut(BLOCK)).enumerate().for_each(|(b, (c1, c2))| {
        let mut rng = stream.split(base + b as u64);
        for (a, i) in c1.iter_mut().zip(c2.iter_mut()) {
            let (mut s1, mut s2) = (x[0], x[1]);
            for _ in 0..n_steps {
                let zn: f64 = StandardNormal.sample(&mut rng);
                let next = s1 * (vol * zn + drift).exp();
                s2 += 0.5 * dt * (s1 + next);
                s1 = next;
            }
            *a = s1;
            *i = s2;
        }
    });
    Ok(PathBatch { n_paths, n_steps, seed: stream.seed(), t, big_t, start: x, sigma, x1, x2 })
}

impl PathBatch {
    /// Little-endian columnar file: magic `HPPB`, version, `n_paths`, seed,
    /// `n_steps`, `t`, `T`, start, sigma, then the `X1` and `X2` columns.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.n_steps as u64).to_le_bytes())?;
        for v in [self.t, self.big_t, self.start[0], self.start[1], self.sigma] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.x1.iter().chain(self.x2.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a path batch file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported path batch version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n_paths = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let n_steps = read_u64(&mut r)? as usize;
        let mut f = [0.0; 5];
        for v in f.iter_mut() {
            *v = f64::from_bits(read_u64(&mut r)?);
        }
        let col = |r: &mut R| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n_paths];
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
        };
        let x1 = col(&mut r)?;
        let x2 = col(&mut r)?;
        Ok(PathBatch { n_paths, n_steps, seed, t: f[0], big_t: f[1], start: [f[2], f[3]], sigma: f[4], x1, x2 })
    }
}

/// Product Gaussian kernel estimate in `(ln y1, ln(y2 - x2_0))`.
#[derive(Debug, Clone)]
pub struct Kde {
    // samples sorted by the first coordinate
    u: Vec<f64>,
    v: Vec<f64>,
    bw: [f64; 2],
    x2_0: f64,
}

impl Kde {
    /// Bandwidths `scale * sd_i * n^{-1/6}` (Scott's rule in two dimensions).
    pub fn new(batch: &PathBatch, bandwidth_scale: f64) -> Result<Self> {
        if batch.n_paths < 2 || !(bandwidth_scale > 0.0) {
            return Err(Error::Precondition("KDE needs 2 samples and a positive bandwidth scale".into()));
        }
        let x2_0 = batch.start[1];
        let mut pts: Vec<(f64, f64)> = batch
            .x1
            .iter()
            .zip(batch.x2.iter())
            .filter(|(a, b)| **a > 0.0 && **b > x2_0)
            .map(|(a, b)| (a.ln(), (b - x2_0).ln()))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pts.len() as f64;
        let sd = |f: &dyn Fn(&(f64, f64)) -> f64| {
            let m = pts.iter().map(f).sum::<f64>() / n;
            (pts.iter().map(|p| (f(p) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let factor = bandwidth_scale * n.powf(-1.0 / 6.0);
        let bw = [sd(&|p| p.0) * factor, sd(&|p| p.1) * factor];
        Ok(Kde { u: pts.iter().map(|p| p.0).collect(), v: pts.iter().map(|p| p.1).collect(), bw, x2_0 })
    }

    pub fn bandwidths(&self) -> [f64; 2] {
        self.bw
    }

    /// Density of `(X1, X2)` at `(y1, y2)`.
    pub fn density(&self, y1: f64, y2: f64) -> f64 {
        if !(y1 > 0.0) || !(y2 > self.x2_0) {
            return 0.0;
        }
        let (u0, v0) = (y1.ln(), (y2 - self.x2_0).ln());
        let lo = self.u.partition_point(|&u| u < u0 - 8.0 * self.bw[0]);
        let hi = self.u.partition_point(|&u| u <= u0 + 8.0 * self.bw[0]);
        let mut acc = 0.0;
        for i in lo..hi {
            let a = (self.u[i] - u0) / self.bw[0];
            let b = (self.v[i] - v0) / self.bw[1];
            acc += (-0.5 * (a * a + b * b)).exp();
        }
        let f_log = acc / (self.u.len() as f64 * 2.0 * PI * self.bw[0] * self.bw[1]);
        f_log / (y1 * (y2 - self.x2_0))
    }
}

/// KDE at one point with the default bandwidth.
pub fn kde_density(batch: &PathBatch, y1: f64, y2: f64) -> Result<f64> {
    Ok(Kde::new(batch, 1.0)?.density(y1, y2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_bounds() {
        for (s, eta) in [(0.01, 1.0), (1.0, 0.1), (1.0, 10.0), (0.25, 1.0)] {
            let y = contour_shift(s, eta);
            assert!((0.0..=0.5 * PI).contains(&y));
        }
    }

    #[test]
    fn contour_and_panels_agree() {
        for eta in [0.1, 1.0, 10.0] {
            let a = yor_q(1.0, eta, 1e-10).unwrap();
            let b = yor_q_panels(1.0, eta, 1e-10).unwrap();
            assert!(a.value() > 0.0);
            assert!((a.log_scaled - b.log_scaled).abs() < 1e-8, "eta {eta}: {a:?} {b:?}");
        }
    }

    #[test]
    fn outside_support_is_zero() {
        let q = DensityQuery { s: 1.0, y1: 1.0, y2: -0.5, sigma: 1.0 };
        assert_eq!(yor_density(&q).unwrap(), 0.0);
        let q = DensityQuery { s: 1.0, y1: 0.0, y2: 0.5, sigma: 1.0 };
        assert_eq!(yor_density(&q).unwrap(), 0.0);
    }

    #[test]
    fn langevin_peak_value() {
        let (tau, s) = (0.5, 1.3);
        let peak = langevin_density(tau, [1.0, 0.0], [1.0, tau], s).unwrap();
        let want = 1.0 / (2.0 * PI * (s.powi(4) * tau.powi(4) / 12.0).sqrt());
        assert!((peak - want).abs() < 1e-12 * want);
        assert!(langevin_density(tau, [1.0, 0.0], [1.1, tau], s).unwrap() < peak);
    }

    #[test]
    fn batch_round_trip() {
        let b = simulate_paths(0.0, [1.0, 0.0], 1.0, 1.0, 100, 10, &RngStream::new(42, 0)).unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"HPPB");
        assert_eq!(PathBatch::read_from(buf.as_slice()).unwrap(), b);
        assert!(PathBatch::read_from(&b"XXXX"[..]).is_err());
    }
}
