use crate::error::{Error, Result};

/// Central finite difference: fourth-order stencil for the first derivative,
/// three-point stencil for the second.
pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, x: f64, order: u8, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("step must be positive, got {h}")));
    }
    let d = match order {
        1 => (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        _ => return Err(Error::Precondition(format!("order must be 1 or 2, got {order}"))),
    };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Evaluation(x))
    }
}
