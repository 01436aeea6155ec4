//! Browser bindings: cost and kernel at a pair, Asian call prices, and the
//! series coefficients. Every function returns a JSON string.

use hp_core::combinatorics::CoeffTable;
use hp_core::cost::psi_exact;
use hp_core::geometry::OrderedPair;
use hp_core::parametrix::kernel;
use hp_core::pricing::{price_by_density, AsianContract, DensityKind, Payoff};
use wasm_bindgen::prelude::*;

fn to_js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

fn pair_eval(t: f64, x1: f64, x2: f64, big_t: f64, y1: f64, y2: f64, sigma: f64) -> Result<String, String> {
    let p = OrderedPair::from_coords(t, x1, x2, big_t, y1, y2).map_err(|e| e.to_string())?;
    let c = psi_exact(&p, sigma).map_err(|e| e.to_string())?;
    let k = kernel(&p).map_err(|e| e.to_string())?;
    Ok(format!(
        r#"{{"psi":{},"h":{},"energy":{},"u":{},"h1":{},"kernel":{}}}"#,
        c.psi, c.h, c.energy, k.u, k.h1, k.kernel
    ))
}

/// Cost, invariant `h`, energy and unit-volatility kernel at `(t, x) -> (T, y)`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn cost_and_kernel(t: f64, x1: f64, x2: f64, big_t: f64, y1: f64, y2: f64, sigma: f64) -> Result<String, JsError> {
    pair_eval(t, x1, x2, big_t, y1, y2, sigma).map_err(to_js)
}

fn price_eval(strike: f64, sigma: f64, maturity: f64, method: &str) -> Result<String, String> {
    let payoff = if strike > 0.0 { Payoff::FixedCall { strike } } else { Payoff::FloatingCall };
    let kind = match method {
        "yor" => DensityKind::Yor,
        "parametrix" => DensityKind::ParametrixH,
        other => return Err(format!("unknown method `{other}`")),
    };
    let c = AsianContract::new(payoff, 0.0, maturity, [1.0, 0.0], sigma).map_err(|e| e.to_string())?;
    let p = price_by_density(&c, kind, 1e-6).map_err(|e| e.to_string())?;
    Ok(format!(r#"{{"price":{},"err":{},"converged":{}}}"#, p.price, p.err, p.converged))
}

/// Asian call from `x = (1, 0)` at time 0 by density quadrature; a strike of
/// 0 or below selects the floating-strike call. `method` is `yor` or `parametrix`.
#[wasm_bindgen]
pub fn asian_price(strike: f64, sigma: f64, maturity: f64, method: &str) -> Result<String, JsError> {
    price_eval(strike, sigma, maturity, method).map_err(to_js)
}

fn coeffs_eval(order: usize) -> Result<String, String> {
    if order > 80 {
        return Err("order above 80 is too slow for the browser".into());
    }
    let t = CoeffTable::compute(order).map_err(|e| e.to_string())?;
    let rows: Vec<String> =
        (2..=order).map(|n| format!(r#"{{"n":{n},"a":{},"b":{},"a_exact":"{}"}}"#, t.a(n), t.b(n), t.a[n])).collect();
    Ok(format!("[{}]", rows.join(",")))
}

/// Series coefficients `a_n, b_n` for `n = 2..order`, computed exactly.
#[wasm_bindgen]
pub fn coefficients(order: usize) -> Result<String, JsError> {
    coeffs_eval(order).map_err(to_js)
}
