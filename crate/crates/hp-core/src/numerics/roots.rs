use crate::error::{Error, Result};

fn checked(x: f64, fx: f64) -> Result<f64> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::Evaluation(x))
    }
}

/// Root of `f` on `[lo, hi]` by secant steps safeguarded with bisection.
///
/// Stops when `|f(r)| <= tol * (1 + |r|)` or the bracket is narrower than `tol`.
/// The returned value always lies in the initial bracket.
pub fn find_root_bracketed<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !(lo <= hi) {
        return Err(Error::Precondition(format!("need lo <= hi and tol > 0, got [{lo}, {hi}], tol {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = checked(a, f(a))?;
    let mut fb = checked(b, f(b))?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let mut width = b - a;
    for _ in 0..400 {
        // secant step from the better endpoint, falling back to bisection
        let (x0, f0) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
        let slope = (fb - fa) / (b - a);
        let mut x = x0 - f0 / slope;
        if !(x > a && x < b) || !x.is_finite() {
            x = 0.5 * (a + b);
        }
        let fx = checked(x, f(x))?;
        if fx == 0.0 || fx.abs() <= tol * (1.0 + x.abs()) {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        let new_width = b - a;
        if new_width > 0.5 * width {
            // slow convergence: force a bisection
            let m = 0.5 * (a + b);
            let fm = checked(m, f(m))?;
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
        width = b - a;
        if width <= tol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Newton iteration on `fdf(x) = (f, f')` kept inside `[lo, hi]`.
///
/// Requires a sign change on the bracket. Converges when the step is below
/// `xtol * max(1, |x|)`.
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(
    mut fdf: F,
    lo: f64,
    hi: f64,
    x0: f64,
    xtol: f64,
) -> Result<(f64, usize)> {
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    if !fa.is_finite() {
        return Err(Error::Evaluation(a));
    }
    if !fb.is_finite() {
        return Err(Error::Evaluation(b));
    }
    if fa == 0.0 {
        return Ok((a, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let sa = fa.signum();
    let mut x = if x0 > a && x0 < b { x0 } else { 0.5 * (a + b) };
    for it in 1..=200 {
        let (fx, dfx) = fdf(x);
        if !fx.is_finite() {
            return Err(Error::Evaluation(x));
        }
        if fx == 0.0 {
            return Ok((x, it));
        }
        if fx.signum() == sa {
            a = x;
        } else {
            b = x;
        }
        let mut xn = x - fx / dfx;
        if !(xn > a && xn < b) || !xn.is_finite() {
            xn = 0.5 * (a + b);
        }
        let step = (xn - x).abs();
        x = xn;
        if step <= xtol * x.abs().max(1.0) || (b - a) <= xtol * x.abs().max(1.0) {
            return Ok((x, it));
        }
    }
    Ok((x, 200))
}
