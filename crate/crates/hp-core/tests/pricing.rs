use hp_core::numerics::RngStream;
use hp_core::pricing::{price_by_density, price_by_mc, AsianContract, DensityKind, Payoff};

fn fixed(strike: f64, maturity: f64, sigma: f64) -> AsianContract {
    AsianContract::new(Payoff::FixedCall { strike }, 0.0, maturity, [1.0, 0.0], sigma).unwrap()
}

#[test]
fn density_prices_match_monte_carlo() {
    for strike in [0.8, 1.0, 1.2] {
        let c = fixed(strike, 1.0, 1.0);
        let d = price_by_density(&c, DensityKind::Yor, 1e-6).unwrap();
        assert!(d.converged, "{d:?}");
        let m = price_by_mc(&c, 1_000_000, 200, &RngStream::new(42, 0)).unwrap();
        let se = (d.err * d.err + m.err * m.err).sqrt();
        assert!((d.price - m.price).abs() <= 3.0 * se, "K = {strike}: density {d:?} mc {m:?}");
    }
}

#[test]
fn floating_strike_matches_monte_carlo() {
    let c = AsianContract::new(Payoff::FloatingCall, 0.0, 1.0, [1.0, 0.0], 0.6).unwrap();
    let d = price_by_density(&c, DensityKind::Yor, 1e-6).unwrap();
    let m = price_by_mc(&c, 400_000, 100, &RngStream::new(42, 1)).unwrap();
    let se = (d.err * d.err + m.err * m.err).sqrt();
    assert!((d.price - m.price).abs() <= 3.0 * se, "density {d:?} mc {m:?}");
}

#[test]
fn zero_volatility_limit() {
    // X1 stays at 1, the average is 1
    let c = fixed(0.9, 1.0, 1e-9);
    let m = price_by_mc(&c, 1000, 10, &RngStream::new(1, 0)).unwrap();
    assert!((m.price - 0.1).abs() < 1e-6, "{m:?}");
}

#[test]
fn price_decreases_in_strike() {
    let p: Vec<f64> = [0.8, 1.0, 1.2]
        .iter()
        .map(|&k| price_by_density(&fixed(k, 1.0, 1.0), DensityKind::Yor, 1e-6).unwrap().price)
        .collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
}

#[test]
fn parametrix_price_approaches_exact_price_for_short_maturity() {
    let mut dist = Vec::new();
    for tau in [0.5, 0.25] {
        let c = fixed(1.0, tau, 1.0);
        let y = price_by_density(&c, DensityKind::Yor, 1e-6).unwrap().price;
        let h = price_by_density(&c, DensityKind::ParametrixH, 1e-6).unwrap().price;
        dist.push((h / y - 1.0).abs());
    }
    assert!(dist[1] < dist[0], "{dist:?}");
    assert!(dist[1] < 0.25, "{dist:?}");
}

#[test]
fn monte_carlo_is_seeded_and_its_error_scales() {
    let c = fixed(1.0, 1.0, 1.0);
    let a = price_by_mc(&c, 50_000, 20, &RngStream::new(42, 0)).unwrap();
    let b = price_by_mc(&c, 50_000, 20, &RngStream::new(42, 0)).unwrap();
    assert_eq!(a, b);
    let big = price_by_mc(&c, 200_000, 20, &RngStream::new(42, 1)).unwrap();
    let ratio = a.err / big.err;
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}
