use hp_core::combinatorics::CoeffTable;
use hp_core::scalar_kernels::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[test]
fn g_inv_round_trip_on_log_grid() {
    for rho in log_grid(1e-6, 1e6, 2001) {
        let r = g_inv(rho).unwrap();
        let back = g(r.value).unwrap();
        // near rho = 0 the root sits next to -pi^2 where f64 spacing of r limits g(r)
        assert!((back - rho).abs() <= 1e-12 * rho + 1e-15, "rho={rho}: g(g_inv)={back}");
        if rho >= 1e-2 {
            assert!((back - rho).abs() <= 1e-12 * rho, "rho={rho}: g(g_inv)={back}");
        }
    }
}

#[test]
fn big_g_nonnegative_convex_unique_zero() {
    let grid = log_grid(1e-4, 1e4, 4001);
    let vals: Vec<f64> = grid.iter().map(|&e| big_g(e).unwrap()).collect();
    for (e, v) in grid.iter().zip(&vals) {
        assert!(*v >= 0.0, "G({e}) = {v}");
        if (e - 1.0).abs() > 1e-3 {
            assert!(*v > 0.0, "G({e}) vanishes away from 1");
        }
    }
    // convexity in eta on a uniform grid
    let h = 1e-3;
    let mut e = 2e-3;
    while e < 50.0 {
        let d2 = big_g(e + h).unwrap() - 2.0 * big_g(e).unwrap() + big_g(e - h).unwrap();
        assert!(d2 >= -1e-9, "second difference {d2} at {e}");
        e += 0.0731;
    }
}

#[test]
fn series_and_closed_forms_agree_near_zero() {
    for x in log_grid(1e-5, 1e-3, 41) {
        for eta in [x, -x] {
            let s = 1.0 + eta / 6.0 + eta * eta / 120.0 + eta.powi(3) / 5040.0;
            let closed = if eta > 0.0 { eta.sqrt().sinh() / eta.sqrt() } else { (-eta).sqrt().sin() / (-eta).sqrt() };
            assert!(rel(closed, s) < 1e-10);
            assert!(rel(g(eta).unwrap(), s) < 1e-10);
            let q = if eta > 0.0 { eta.sqrt() / eta.sqrt().tanh() } else { (-eta).sqrt() / (-eta).sqrt().tan() };
            let hk = 2.0 * q - 2.0 * eta / (1.0 - q);
            assert!(rel(hk, h_kernel_series(eta)) < 1e-10, "h at {eta}");
            let v = v_profile_closed(eta);
            assert!(rel(v, v_profile_series(eta)) < 1e-10, "v at {eta}: {v} vs {}", v_profile_series(eta));
        }
    }
}

#[test]
fn g_inv_grows_like_log_squared() {
    // the ratio tends to 1 only slowly (relative correction ~ ln(2s)/ln(rho))
    let ratios: Vec<f64> = [18.0f64, 100.0, 690.0, 1e4, 1e5].iter().map(|&l| g_inv_log(l).unwrap() / (l * l)).collect();
    for w in ratios.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!((ratios[3] - 1.0).abs() < 0.05, "{ratios:?}");
}

#[test]
fn big_g_grows_like_log_squared_at_zero() {
    let v: Vec<f64> = [1e-8f64, 1e-100, 1e-300].iter().map(|&e| big_g(e).unwrap() / e.ln().powi(2)).collect();
    assert!(v[0] > v[1] && v[1] > v[2]);
    assert!((v[2] - 1.0).abs() < 0.05, "{v:?}");
}

#[test]
fn big_g_linear_at_infinity() {
    assert!((big_g(1e4).unwrap() / 4e4 - 1.0).abs() < 0.05);
    assert!((big_g(1e8).unwrap() / 4e8 - 1.0).abs() < 1e-3);
}

#[test]
fn series_converges_above_one() {
    let t = CoeffTable::compute(50).unwrap();
    for i in 0..=19 {
        let eta = 1.05 + 0.05 * i as f64;
        let exact = big_g(eta).unwrap();
        let floor = SERIES_NOISE_FLOOR * exact.abs().max(1.0);
        let mut prev = f64::INFINITY;
        for n in 2..=50 {
            let err = (exact - series_sum(eta, &t, n, Basis::Gn)).abs();
            assert!(err <= prev.max(floor), "eta={eta} N={n}: {err} > {prev}");
            prev = err;
        }
        assert!(prev <= 1e-6, "eta={eta}: error {prev}");
    }
}

#[test]
fn tilde_series_bounds_from_below() {
    let t = CoeffTable::compute(50).unwrap();
    let grid = log_grid(0.01, 100.0, 801);
    for eta in grid {
        let s = series_sum(eta, &t, 50, Basis::GnTilde);
        assert!(s <= big_g(eta).unwrap() + 1e-12, "eta={eta}");
    }
}

#[test]
fn basis_functions_match_horner_sum() {
    let t = CoeffTable::compute(20).unwrap();
    for eta in [0.05, 0.3, 0.9, 1.0, 1.3, 7.0] {
        let direct: f64 = (2..=20).map(|n| g_n(n, eta, &t).unwrap()).sum();
        let direct_t: f64 = (2..=20).map(|n| g_n_tilde(n, eta, &t).unwrap()).sum();
        assert!((direct - series_sum(eta, &t, 20, Basis::Gn)).abs() < 1e-12 * (1.0 + direct.abs()));
        assert!((direct_t - series_sum(eta, &t, 20, Basis::GnTilde)).abs() < 1e-12 * (1.0 + direct_t.abs()));
    }
    assert_eq!(g_n(2, 2.0, &t).unwrap(), 1.5);
    assert_eq!(g_n_tilde(2, 2.0, &t).unwrap(), 1.5);
    assert!((g_n(3, (-1f64).exp(), &t).unwrap() + 0.3).abs() < 1e-14);
    assert_eq!(g_n(7, 1.0, &t).unwrap(), 0.0);
    assert!(g_n(21, 2.0, &t).is_err());
}

proptest! {
    #[test]
    fn g_is_increasing(a in -9.8f64..50.0, d in 1e-3f64..5.0) {
        prop_assert!(g(a + d).unwrap() > g(a).unwrap());
    }

    #[test]
    fn g_inv_inverts(r in -9.86f64..400.0) {
        let rho = g(r).unwrap();
        let back = g_inv(rho).unwrap().value;
        prop_assert!((back - r).abs() <= 1e-9 * (1.0 + r.abs()));
    }
}
