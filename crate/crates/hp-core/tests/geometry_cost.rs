use hp_core::combinatorics::CoeffTable;
use hp_core::cost::{hjb_residual, psi_exact, psi_explicit, psi_or_inf, psi_series, FD_STEP_SECOND};
use hp_core::geometry::{
    compose, control_data, curve_cost, energy_deviation, h_invariant, inverse, optimal_curve, GroupPoint, OrderedPair,
};
use hp_core::scalar_kernels::Basis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_point(rng: &mut ChaCha8Rng) -> GroupPoint {
    GroupPoint::new(rng.gen_range(-2.0..2.0), log_uniform(rng, 0.1, 10.0), rng.gen_range(-2.0..2.0)).unwrap()
}

/// Random ordered pair with `h` log-uniform in `[h_lo, h_hi]`.
fn random_pair(rng: &mut ChaCha8Rng, h_lo: f64, h_hi: f64) -> OrderedPair {
    let w = random_point(rng);
    let tau = log_uniform(rng, 0.05, 2.0);
    let x1 = w.x1 * log_uniform(rng, 0.2, 5.0);
    let h = log_uniform(rng, h_lo, h_hi);
    let d = tau * (x1 * w.x1).sqrt() / h;
    OrderedPair::new(GroupPoint::new(w.t - tau, x1, w.x2 - d).unwrap(), w).unwrap()
}

#[test]
fn group_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let l = compose(&compose(&a, &b), &c);
        let r = compose(&a, &compose(&b, &c));
        for (u, v) in [(l.t, r.t), (l.x1, r.x1), (l.x2, r.x2)] {
            assert!((u - v).abs() <= 1e-14 * (1.0 + u.abs()), "associativity {u} {v}");
        }
        assert_eq!(compose(&a, &GroupPoint::IDENTITY), a);
        let e = compose(&a, &inverse(&a));
        assert!(e.t.abs() < 1e-15 && (e.x1 - 1.0).abs() < 1e-15 && e.x2.abs() < 1e-14);
        let ii = inverse(&inverse(&a));
        assert!((ii.x1 - a.x1).abs() < 1e-14 * a.x1 && (ii.x2 - a.x2).abs() < 1e-14 * (1.0 + a.x2.abs()));
    }
}

#[test]
fn invariance_reductions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let p = random_pair(&mut rng, 1e-2, 1e2);
        let (z, w) = (p.z(), p.w());
        let left = OrderedPair::new(compose(&inverse(&w), &z), GroupPoint::IDENTITY).unwrap();
        let right = OrderedPair::new(GroupPoint::IDENTITY, compose(&inverse(&z), &w)).unwrap();
        let h = h_invariant(&p);
        let psi = psi_exact(&p, 1.0).unwrap().psi;
        for q in [left, right] {
            assert!((h_invariant(&q) - h).abs() <= 1e-12 * h);
            let v = psi_exact(&q, 1.0).unwrap().psi;
            assert!((v - psi).abs() <= 1e-12 * psi.max(1e-300) + 1e-14, "{v} vs {psi}");
        }
    }
}

#[test]
fn h_examples() {
    let one = OrderedPair::to_identity(GroupPoint::new(-1.0, 1.0, -1.0).unwrap()).unwrap();
    assert_eq!(h_invariant(&one), 1.0);
    let two = OrderedPair::to_identity(GroupPoint::new(-1.0, 4.0, -1.0).unwrap()).unwrap();
    assert_eq!(h_invariant(&two), 2.0);
}

#[test]
fn branch_sign_at_pi_over_two() {
    // h = pi/2 with T - t = 1, x1 = y1 = 1
    let z = GroupPoint::new(-1.0, 1.0, -2.0 / std::f64::consts::PI).unwrap();
    let cd = control_data(&OrderedPair::to_identity(z).unwrap());
    assert!((cd.h - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    assert!(cd.energy * 1.0 + std::f64::consts::PI.powi(2) < 1e-9);
}

#[test]
fn dual_form_agreement_ten_thousand_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_pair(&mut rng, 1e-3, 1e3);
        let a = psi_exact(&p, 1.0).unwrap().psi;
        let b = psi_explicit(&p, 1.0).unwrap();
        worst = worst.max((a - b).abs() / a);
    }
    assert!(worst <= 1e-10, "max relative difference {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn sigma_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let p = random_pair(&mut rng, 1e-2, 1e2);
        let s: f64 = rng.gen_range(0.2..3.0);
        let (z, w) = (p.z(), p.w());
        let s2 = s * s;
        let scaled = OrderedPair::from_coords(s2 * z.t, z.x1, s2 * z.x2, s2 * w.t, w.x1, s2 * w.x2).unwrap();
        let a = psi_exact(&p, s).unwrap().psi;
        let b = psi_exact(&scaled, 1.0).unwrap().psi;
        assert!((a - b).abs() <= 1e-11 * a, "{a} vs {b}");
    }
}

#[test]
fn psi_nonnegative_and_zero_on_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let p = random_pair(&mut rng, 1e-3, 1e3);
        assert!(psi_exact(&p, 1.0).unwrap().psi >= 0.0);
    }
    let w = GroupPoint::new(0.3, 2.0, 1.0).unwrap();
    let z = GroupPoint::new(-0.7, 2.0, 1.0 - 2.0).unwrap();
    assert!(psi_or_inf(&z, &w, 1.0).abs() < 1e-14);
}

#[test]
fn hjb_residual_on_grid() {
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let tau = 0.1 + 0.2 * i as f64;
                let x1 = (-2.0 + 4.0 * j as f64 / 9.0).exp();
                let h = (-2.0 + 4.0 * k as f64 / 9.0).exp();
                let d = tau * x1.sqrt() / h;
                let p = OrderedPair::to_identity(GroupPoint::new(-tau, x1, -d).unwrap()).unwrap();
                worst = worst.max(hjb_residual(&p, 1e-4).unwrap());
                count += 1;
            }
        }
    }
    assert_eq!(count, 1000);
    assert!(worst <= 1e-5, "max HJB residual {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn hjb_near_diagonal() {
    let p = OrderedPair::to_identity(GroupPoint::new(-1.0, 1.0001, -0.9999).unwrap()).unwrap();
    assert!(hjb_residual(&p, FD_STEP_SECOND).unwrap() <= 1e-4);
}

#[test]
fn curve_cost_matches_psi_and_energy_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        // beyond h ~ 50 the terminal layer of omega is too thin for 2001 uniform samples
        let p = random_pair(&mut rng, 1e-2, 20.0);
        let c = optimal_curve(&p, 2001).unwrap();
        let (z, w) = (p.z(), p.w());
        let n = c.len() - 1;
        for (a, b) in [(c.gamma1[0], z.x1), (c.gamma2[0], z.x2), (c.gamma1[n], w.x1), (c.gamma2[n], w.x2)] {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "endpoint {a} vs {b}");
        }
        assert!(c.gamma2.windows(2).all(|v| v[1] > v[0]));
        let psi = psi_exact(&p, 1.0).unwrap().psi;
        let cost = curve_cost(&c).unwrap();
        assert!((cost - psi).abs() <= 1e-6 * psi, "cost {cost} vs psi {psi}");
        let dev = energy_deviation(&p, &c);
        assert!(dev <= 1e-8, "energy deviation {dev:e}");
    }
}

#[test]
fn curve_cost_refinement_order() {
    let p = OrderedPair::to_identity(GroupPoint::new(-1.0, 3.0, -0.4).unwrap()).unwrap();
    let psi = psi_exact(&p, 1.0).unwrap().psi;
    let e1 = (curve_cost(&optimal_curve(&p, 21).unwrap()).unwrap() - psi).abs();
    let e2 = (curve_cost(&optimal_curve(&p, 41).unwrap()).unwrap() - psi).abs();
    assert!(e2 < e1 / 4.0, "{e1:e} {e2:e}");
}

#[test]
fn series_bounds_and_convergence() {
    let table = CoeffTable::compute(50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let p = random_pair(&mut rng, 1e-2, 1e2);
        let exact = psi_exact(&p, 1.0).unwrap().psi;
        let tilde = psi_series(&p, 1.0, 50, Basis::GnTilde, &table).unwrap();
        assert!(tilde <= exact * (1.0 + 1e-12), "{tilde} > {exact}");
    }
    let z = GroupPoint::new(-1.0, 1.0, -1.0 / 1.5).unwrap();
    let p = OrderedPair::to_identity(z).unwrap();
    let exact = psi_exact(&p, 1.0).unwrap().psi;
    let n50 = psi_series(&p, 1.0, 50, Basis::Gn, &table).unwrap();
    assert!((n50 - exact).abs() <= 1e-6 * exact);
    let zero = OrderedPair::to_identity(GroupPoint::new(-1.0, 1.0, -1.0).unwrap()).unwrap();
    assert_eq!(psi_series(&zero, 1.0, 10, Basis::Gn, &table).unwrap(), 0.0);
}
