use hp_core::combinatorics::{compute_beta, load_or_compute, CoeffTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

const TABLE: &str = include_str!("data/table_ab.csv");

fn table_rows() -> Vec<(usize, f64, f64)> {
    TABLE
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            (v[0].parse().unwrap(), v[1].parse().unwrap(), v[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn reproduces_six_digit_table() {
    let t = CoeffTable::compute(38).unwrap();
    let rows = table_rows();
    assert_eq!(rows.len(), 37);
    for (n, a, b) in rows {
        assert!((t.a(n) - a).abs() / a.abs() <= 1e-5, "a_{n}: {} vs {a}", t.a(n));
        assert!((t.b(n) - b).abs() / b.abs() <= 1e-5, "b_{n}: {} vs {b}", t.b(n));
    }
}

// Formal power series, truncated at degree N.
type Fps = Vec<BigRational>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn mul(a: &Fps, b: &Fps, n: usize) -> Fps {
    let mut c = vec![BigRational::zero(); n + 1];
    for (i, x) in a.iter().enumerate().take(n + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n + 1 - i) {
            c[i + j] += x * y;
        }
    }
    c
}

// f(g(x)) with g(0) = 0
fn compose(f: &Fps, g: &Fps, n: usize) -> Fps {
    let mut res = vec![BigRational::zero(); n + 1];
    let mut p = vec![BigRational::zero(); n + 1];
    p[0] = BigRational::one();
    for fk in f.iter().take(n + 1) {
        if !fk.is_zero() {
            for (r, pi) in res.iter_mut().zip(p.iter()) {
                *r += fk * pi;
            }
        }
        p = mul(&p, g, n);
    }
    res
}

fn inverse(g: &Fps, n: usize) -> Fps {
    let mut h = vec![BigRational::zero(); n + 1];
    h[1] = BigRational::one() / &g[1];
    for k in 2..=n {
        let c = compose(g, &h, n);
        h[k] = -&c[k] / &g[1];
    }
    h
}

fn fact(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

#[test]
fn series_oracle_matches_recursions() {
    let n = 12;
    let mut gm1 = vec![BigRational::zero(); n + 1];
    for (k, g) in gm1.iter_mut().enumerate().skip(1) {
        *g = BigRational::new(BigInt::one(), fact(2 * k + 1));
    }
    let beta = inverse(&gm1, n);
    assert_eq!(beta, compute_beta(n));

    // sqrt(1+x) coefficients
    let mut sq = vec![BigRational::one()];
    for k in 1..=n {
        let prev = sq[k - 1].clone();
        sq.push(
            prev * (q(1, 2) - BigRational::from_integer(BigInt::from(k as i64 - 1)))
                / BigRational::from_integer(BigInt::from(k)),
        );
    }
    let mut one_minus = vec![BigRational::zero(); n + 1];
    one_minus[0] = BigRational::one();
    one_minus[1] = -BigRational::one();
    let mut neg_x = vec![BigRational::zero(); n + 1];
    neg_x[1] = -BigRational::one();
    // F(xi) = 2 - 2 sqrt(1 + (1-xi)^2 ginv(1-xi)) + (1-xi) ginv(1-xi)
    let ginv = compose(&beta, &neg_x, n);
    let a1 = mul(&one_minus, &ginv, n);
    let a2 = mul(&one_minus, &a1, n);
    let root = compose(&sq, &a2, n);
    let t = CoeffTable::compute(n).unwrap();
    for k in 2..=n {
        let fk = &a1[k] - q(2, 1) * &root[k];
        assert_eq!(fk, t.a[k], "a_{k}");
    }

    // b side: eta = exp(-w), w = xi / (1 - xi)
    let w: Fps = (0..=n).map(|k| if k == 0 { BigRational::zero() } else { BigRational::one() }).collect();
    let exps: Fps = (0..=n).map(|k| BigRational::new(BigInt::one(), fact(k))).collect();
    let scale = |s: i64| -> Fps { w.iter().map(|x| x * BigRational::from_integer(BigInt::from(s))).collect() };
    let inv_eta = compose(&exps, &w, n);
    let eta = compose(&exps, &scale(-1), n);
    let eta2 = compose(&exps, &scale(-2), n);
    let mut inv_eta_m1 = inv_eta.clone();
    inv_eta_m1[0] = BigRational::zero();
    let d = compose(&beta, &inv_eta_m1, n);
    let mut inner: Fps = eta2.iter().zip(d.iter()).map(|(x, y)| x + y).collect();
    inner[0] -= BigRational::one();
    let root_b = compose(&sq, &inner, n);
    let g: Fps = (0..=n).map(|k| q(2, 1) * &eta[k] - q(2, 1) * &root_b[k] + &d[k]).collect();
    let fb = mul(&mul(&one_minus, &one_minus, n), &g, n);
    let fbt = mul(&one_minus, &g, n);
    for k in 2..=n {
        assert_eq!(fb[k], t.b[k], "b_{k}");
        assert_eq!(fbt[k], t.b_tilde[k], "b~_{k}");
    }
}

#[test]
fn partial_sums_of_a_increase_below_four() {
    let t = CoeffTable::compute(60).unwrap();
    let mut s = 0.0;
    for n in 2..=60 {
        assert!(t.a(n) > 0.0, "a_{n} not positive");
        let next = s + t.a(n);
        assert!(next > s);
        assert!(next <= 4.0 + 1e-9);
        s = next;
    }
}

#[test]
fn disk_cache() {
    let dir = std::env::temp_dir().join(format!("hp-cache-test-{}", std::process::id()));
    let t1 = load_or_compute(9, Some(&dir)).unwrap();
    assert!(dir.join("coeffs-N9.json").exists());
    let t2 = load_or_compute(9, Some(&dir)).unwrap();
    assert_eq!(t1.a, t2.a);
    assert_eq!(t1.b, t2.b);
    std::fs::remove_dir_all(&dir).ok();
}
