//! Root finding, quadrature, Monte Carlo and finite differences.

mod diff;
mod lambert;
mod mc;
mod quad;
mod rng;
mod roots;

pub use diff::central_diff;
pub use lambert::{lambert_w_lower, lambert_w_lower_log};
pub use mc::{mc_integrate, pairwise_sum, summarize, McResult};
pub use quad::{
    integrate_1d, integrate_1d_budget, integrate_rect, integrate_rects, integrate_semi_infinite, QuadratureResult, Rect,
};
pub use rng::RngStream;
pub use roots::{find_root_bracketed, newton_bracketed};

/// Default tolerances for one-dimensional quadrature.
pub const DEFAULT_REL_TOL_1D: f64 = 1e-10;
pub const DEFAULT_ABS_TOL_1D: f64 = 1e-12;
/// Default relative tolerance for two-dimensional quadrature.
pub const DEFAULT_REL_TOL_2D: f64 = 1e-7;
