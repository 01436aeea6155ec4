use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
}

// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half, centre last).
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// The 15 Kronrod abscissae on [-1, 1] with Kronrod and Gauss weights
/// (Gauss weight is zero at pure Kronrod nodes).
fn rule15() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    let mut k = 0;
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[k] = (-XK[i], WK[i], wg);
        out[k + 1] = (XK[i], WK[i], wg);
        k += 2;
    }
    out[14] = (0.0, WK[7], WG[3]);
    out
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut rk = 0.0;
    let mut rg = 0.0;
    for (x, wk, wg) in rule15() {
        let xx = c + h * x;
        let fx = f(xx);
        if !fx.is_finite() {
            return Err(Error::Evaluation(xx));
        }
        rk += wk * fx;
        rg += wg * fx;
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

#[derive(Debug, Clone, Copy)]
struct Panel1 {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel1 {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel1 {}
impl PartialOrd for Panel1 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel1 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    integrate_1d_budget(f, a, b, rel_tol, abs_tol, 200_000)
}

/// As [`integrate_1d`] with an explicit cap on function evaluations.
pub fn integrate_1d_budget<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 1, converged: true });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&mut f, lo, hi)?;
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel1 { a: lo, b: hi, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut converged = false;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            converged = true;
            break;
        }
        if evals + 30 > budget {
            break;
        }
        let p = heap.pop().expect("heap never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // panel cannot be split further in floating point
            heap.push(Panel1 { err: 0.0, ..p });
            total_err -= p.err;
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m)?;
        let (v2, e2) = gk15(&mut f, m, p.b)?;
        evals += 30;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel1 { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel1 { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to avoid drift from incremental updates
    let (mut value, mut err) = (0.0, 0.0);
    for p in heap.iter() {
        value += p.value;
        err += p.err;
    }
    Ok(QuadratureResult { value: sign * value, error_estimate: err, evaluations: evals, converged })
}

/// Integral of `f` over `[a, inf)` via the map `x = a + u / (1 - u)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    integrate_1d(
        |u| {
            let d = 1.0 - u;
            let x = a + u / d;
            let w = 1.0 / (d * d);
            if w.is_infinite() {
                return 0.0;
            }
            let y = f(x) * w;
            if y.is_nan() {
                0.0
            } else {
                y
            }
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
    )
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel2 {
    r: Rect,
    value: f64,
    err: f64,
    split_x: bool,
}

impl PartialEq for Panel2 {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel2 {}
impl PartialOrd for Panel2 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel2 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Tensor Kronrod rule on a rectangle. The error in each direction is the
/// difference with the Gauss rule in that direction; the panel is later split
/// along the worse one.
fn gk15_2d<F: FnMut(f64, f64) -> f64>(f: &mut F, r: &Rect) -> Result<Panel2> {
    let rule = rule15();
    let (cx, hx) = (0.5 * (r.x0 + r.x1), 0.5 * (r.x1 - r.x0));
    let (cy, hy) = (0.5 * (r.y0 + r.y1), 0.5 * (r.y1 - r.y0));
    let (mut kk, mut gk, mut kg) = (0.0, 0.0, 0.0);
    for &(xi, wkx, wgx) in rule.iter() {
        let x = cx + hx * xi;
        let (mut row_k, mut row_g) = (0.0, 0.0);
        for &(yj, wky, wgy) in rule.iter() {
            let y = cy + hy * yj;
            let v = f(x, y);
            if !v.is_finite() {
                return Err(Error::Evaluation(x));
            }
            row_k += wky * v;
            row_g += wgy * v;
        }
        kk += wkx * row_k;
        gk += wgx * row_k;
        kg += wkx * row_g;
    }
    let s = hx * hy;
    let ex = ((kk - gk) * s).abs();
    let ey = ((kk - kg) * s).abs();
    Ok(Panel2 { r: *r, value: kk * s, err: ex + ey, split_x: ex >= ey })
}

/// Adaptive tensor Gauss-Kronrod cubature over a rectangle.
///
/// Runs until the summed error estimate meets `max(abs_tol, rel_tol * |I|)` or
/// `budget` evaluations are spent; in the latter case the result is returned
/// with `converged = false`.
pub fn integrate_rect<F: FnMut(f64, f64) -> f64>(
    f: F,
    rect: Rect,
    rel_tol: f64,
    abs_tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    integrate_rects(f, &[rect], rel_tol, abs_tol, budget)
}

/// As [`integrate_rect`] over the union of disjoint starting panels.
pub fn integrate_rects<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    rects: &[Rect],
    rel_tol: f64,
    abs_tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    const PER: usize = 225;
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for r in rects {
        if !(r.x0.is_finite() && r.x1.is_finite() && r.y0.is_finite() && r.y1.is_finite()) {
            return Err(Error::Domain("rectangle must be finite".into()));
        }
        heap.push(gk15_2d(&mut f, r)?);
        evals += PER;
    }
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    let mut converged = false;
    while let Some(p) = heap.peek().copied() {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            converged = true;
            break;
        }
        if evals + 2 * PER > budget {
            break;
        }
        heap.pop();
        let (a, b) = if p.split_x {
            let m = 0.5 * (p.r.x0 + p.r.x1);
            (Rect { x1: m, ..p.r }, Rect { x0: m, ..p.r })
        } else {
            let m = 0.5 * (p.r.y0 + p.r.y1);
            (Rect { y1: m, ..p.r }, Rect { y0: m, ..p.r })
        };
        let pa = gk15_2d(&mut f, &a)?;
        let pb = gk15_2d(&mut f, &b)?;
        evals += 2 * PER;
        total += pa.value + pb.value - p.value;
        total_err += pa.err + pb.err - p.err;
        heap.push(pa);
        heap.push(pb);
    }
    let (mut value, mut err) = (0.0, 0.0);
    for p in heap.iter() {
        value += p.value;
        err += p.err;
    }
    if !converged {
        converged = err <= abs_tol.max(rel_tol * value.abs());
    }
    Ok(QuadratureResult { value, error_estimate: err, evaluations: evals, converged })
}
