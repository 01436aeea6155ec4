//! Exact rational combinatorics and the expansion coefficients of `G`.
//!
//! The coefficients `a_n` (basis on `eta > 1`), `b_n` and `b~_n` (bases on
//! `eta < 1`) come from Faa di Bruno expansions around `eta = 1`. The
//! intermediate quantities lose many digits to cancellation in floating
//! point, so everything is carried in big rationals and projected to `f64`
//! only at the end.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn factorials(n: usize) -> Vec<BigInt> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigInt::one());
    for k in 1..=n {
        let next = &f[k - 1] * BigInt::from(k);
        f.push(next);
    }
    f
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// All partial exponential Bell polynomials `B[n][h]`, `0 <= h <= n <= nmax`,
/// for the argument sequence `x[1], x[2], ...` (`x[0]` is ignored).
pub fn bell_table(nmax: usize, x: &[BigRational]) -> Vec<Vec<BigRational>> {
    let mut b = vec![vec![BigRational::zero(); nmax + 1]; nmax + 1];
    b[0][0] = BigRational::one();
    for n in 1..=nmax {
        for h in 1..=n {
            let mut acc = BigRational::zero();
            for j in 1..=(n - h + 1) {
                if j >= x.len() || x[j].is_zero() || b[n - j][h - 1].is_zero() {
                    continue;
                }
                let c = BigRational::from_integer(binomial(n - 1, j - 1));
                acc += c * &x[j] * &b[n - j][h - 1];
            }
            b[n][h] = acc;
        }
    }
    b
}

/// Partial exponential Bell polynomial `B_{n,h}(x_1, ..., x_{n-h+1})`.
///
/// `x[0]` holds `x_1`.
pub fn bell_partial(n: usize, h: usize, x: &[BigRational]) -> Result<BigRational> {
    if h < 1 || h > n {
        return Err(Error::Domain(format!("Bell polynomial needs 1 <= h <= n, got n={n}, h={h}")));
    }
    if x.len() < n - h + 1 {
        return Err(Error::Precondition(format!("need {} arguments, got {}", n - h + 1, x.len())));
    }
    let mut shifted = Vec::with_capacity(x.len() + 1);
    shifted.push(BigRational::zero());
    shifted.extend_from_slice(x);
    Ok(bell_table(n, &shifted)[n][h].clone())
}

/// Unsigned Lah number `L(n, h) = C(n-1, h-1) n! / h!`.
pub fn lah(n: usize, h: usize) -> Result<BigRational> {
    if h < 1 || h > n {
        return Err(Error::Domain(format!("Lah number needs 1 <= h <= n, got n={n}, h={h}")));
    }
    let f = factorials(n);
    Ok(BigRational::new(binomial(n - 1, h - 1) * &f[n], f[h].clone()))
}

/// Stirling number of the second kind `{h brace k}`.
pub fn stirling2(h: usize, k: usize) -> Result<BigRational> {
    if k > h {
        return Err(Error::Domain(format!("Stirling number needs k <= h, got h={h}, k={k}")));
    }
    Ok(BigRational::from_integer(stirling2_table(h)[h][k].clone()))
}

fn stirling2_table(nmax: usize) -> Vec<Vec<BigInt>> {
    let mut s = vec![vec![BigInt::zero(); nmax + 1]; nmax + 1];
    s[0][0] = BigInt::one();
    for n in 1..=nmax {
        for k in 1..=n {
            s[n][k] = BigInt::from(k) * &s[n - 1][k] + &s[n - 1][k - 1];
        }
    }
    s
}

/// Taylor coefficients `beta_0..=beta_N` of `g^{-1}` at 1, `beta_0 = 0`, `beta_1 = 6`.
pub fn compute_beta(order: usize) -> Vec<BigRational> {
    let n = order.max(1);
    let f = factorials(2 * n + 3);
    // derivatives of g at 0 are j!/(2j+1)!
    let mut x = vec![BigRational::zero(); n + 1];
    for j in 1..=n {
        x[j] = BigRational::new(f[j].clone(), f[2 * j + 1].clone());
    }
    let bell = bell_table(n, &x);
    let mut beta = vec![BigRational::zero(); n + 1];
    beta[1] = int(6);
    let mut six_k = BigInt::from(6);
    for k in 2..=n {
        six_k *= 6;
        let mut acc = BigRational::zero();
        for h in 1..k {
            acc += BigRational::from_integer(f[h].clone()) * &beta[h] * &bell[k][h];
        }
        beta[k] = -BigRational::new(six_k.clone(), f[k].clone()) * acc;
    }
    beta.truncate(order + 1);
    beta
}

/// Exact coefficient table with `f64` projections.
///
/// Vectors are indexed by `n` directly; entries below the first meaningful
/// index are zero.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    pub order: usize,
    pub beta: Vec<BigRational>,
    pub a: Vec<BigRational>,
    pub b: Vec<BigRational>,
    pub b_tilde: Vec<BigRational>,
    pub c: Vec<BigRational>,
    pub d: Vec<BigRational>,
    pub e: Vec<BigRational>,
    pub e_tilde: Vec<BigRational>,
    pub f: Vec<BigRational>,
    a_f: Vec<f64>,
    b_f: Vec<f64>,
    bt_f: Vec<f64>,
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

// Taylor coefficient of sqrt(1+x) times h!: (-1)^h (2h)! / ((1-2h) h! 4^h)
fn sqrt_weights(n: usize, f: &[BigInt]) -> Vec<BigRational> {
    (0..=n)
        .map(|h| {
            let num = if h % 2 == 0 { f[2 * h].clone() } else { -f[2 * h].clone() };
            let den = BigInt::from(1 - 2 * h as i64) * &f[h] * BigInt::from(4).pow(h as u32);
            BigRational::new(num, den)
        })
        .collect()
}

impl CoeffTable {
    /// Builds the full table through `order` (at least 2).
    pub fn compute(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Precondition(format!("coefficient order must be >= 2, got {order}")));
        }
        let n = order;
        let fct = factorials(2 * n + 3);
        let fr = |k: usize| BigRational::from_integer(fct[k].clone());
        let beta = compute_beta(n);
        let bt = |k: isize| if k < 1 { BigRational::zero() } else { beta[k as usize].clone() };
        let sq = sqrt_weights(n, &fct);

        // a-side: c_m = beta_m + 2 beta_{m-1} + beta_{m-2}
        let mut c = vec![BigRational::zero(); n + 1];
        for (m, cm) in c.iter_mut().enumerate().skip(1) {
            let mi = m as isize;
            *cm = bt(mi) + int(2) * bt(mi - 1) + bt(mi - 2);
        }
        let yc: Vec<BigRational> = (0..=n).map(|j| fr(j) * &c[j]).collect();
        let bell_c = bell_table(n, &yc);
        let mut a = vec![BigRational::zero(); n + 1];
        for m in 2..=n {
            let mut s = BigRational::zero();
            for h in 1..=m {
                s += &sq[h] * &bell_c[m][h];
            }
            let mi = m as isize;
            let inner = bt(mi) + bt(mi - 1) - int(2) * s / fr(m);
            a[m] = if m % 2 == 0 { inner } else { -inner };
        }

        // b-side intermediates
        let stir = stirling2_table(n);
        let lahs: Vec<Vec<BigRational>> = (0..=n)
            .map(|m| (0..=m).map(|h| if h == 0 || m == 0 { BigRational::zero() } else { lah(m, h).unwrap() }).collect())
            .collect();
        let inner_d: Vec<BigRational> = (0..=n)
            .map(|h| {
                let mut s = BigRational::zero();
                for k in 1..=h {
                    s += &beta[k] * fr(k) * BigRational::from_integer(stir[h][k].clone());
                }
                s
            })
            .collect();
        let mut d = vec![BigRational::zero(); n + 1];
        let mut e = vec![BigRational::zero(); n + 1];
        let mut e_tilde = vec![BigRational::zero(); n + 1];
        for m in 1..=n {
            let (mut sd, mut se, mut set) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
            for h in 1..=m {
                sd += &lahs[m][h] * &inner_d[h];
                let sign = if h % 2 == 0 { int(1) } else { int(-1) };
                se += &sign * &lahs[m][h];
                set += BigRational::from_integer(BigInt::from(-2).pow(h as u32)) * &lahs[m][h];
            }
            d[m] = sd / fr(m);
            e[m] = se / fr(m);
            e_tilde[m] = set / fr(m);
        }
        let yf: Vec<BigRational> = (0..=n).map(|j| fr(j) * (&d[j] + &e_tilde[j])).collect();
        let bell_f = bell_table(n, &yf);
        let mut f = vec![BigRational::zero(); n + 1];
        for m in 1..=n {
            let mut s = BigRational::zero();
            for h in 1..=m {
                s += &sq[h] * &bell_f[m][h];
            }
            f[m] = s / fr(m);
        }
        let at = |v: &Vec<BigRational>, k: isize| if k < 1 { BigRational::zero() } else { v[k as usize].clone() };
        let mut b = vec![BigRational::zero(); n + 1];
        let mut b_tilde = vec![BigRational::zero(); n + 1];
        let mut running = BigRational::zero();
        for m in 2..=n {
            let k = m as isize;
            let dd = at(&d, k - 2) - int(2) * at(&d, k - 1) + at(&d, k);
            let ee = at(&e, k - 2) - int(2) * at(&e, k - 1) + at(&e, k);
            let ff = at(&f, k - 2) - int(2) * at(&f, k - 1) + at(&f, k);
            b[m] = dd + int(2) * (ee - ff);
            // the tilde basis carries one fewer power of (1 - xi)
            running += &b[m];
            b_tilde[m] = running.clone();
        }
        Ok(Self::assemble(order, beta, a, b, b_tilde, c, d, e, e_tilde, f))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        order: usize,
        beta: Vec<BigRational>,
        a: Vec<BigRational>,
        b: Vec<BigRational>,
        b_tilde: Vec<BigRational>,
        c: Vec<BigRational>,
        d: Vec<BigRational>,
        e: Vec<BigRational>,
        e_tilde: Vec<BigRational>,
        f: Vec<BigRational>,
    ) -> Self {
        let a_f = a.iter().map(to_f64).collect();
        let b_f = b.iter().map(to_f64).collect();
        let bt_f = b_tilde.iter().map(to_f64).collect();
        CoeffTable { order, beta, a, b, b_tilde, c, d, e, e_tilde, f, a_f, b_f, bt_f }
    }

    pub fn a_f64(&self) -> &[f64] {
        &self.a_f
    }
    pub fn b_f64(&self) -> &[f64] {
        &self.b_f
    }
    pub fn b_tilde_f64(&self) -> &[f64] {
        &self.bt_f
    }

    /// `a_n` as `f64` (`n` in `2..=order`).
    pub fn a(&self, n: usize) -> f64 {
        self.a_f[n]
    }
    pub fn b(&self, n: usize) -> f64 {
        self.b_f[n]
    }
    pub fn b_tilde(&self, n: usize) -> f64 {
        self.bt_f[n]
    }

    /// A copy restricted to orders `<= n`.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.order {
            return Err(Error::Precondition(format!("cannot truncate order {} table to {n}", self.order)));
        }
        let cut = |v: &Vec<BigRational>| v[..=n].to_vec();
        Ok(Self::assemble(
            n,
            cut(&self.beta),
            cut(&self.a),
            cut(&self.b),
            cut(&self.b_tilde),
            cut(&self.c),
            cut(&self.d),
            cut(&self.e),
            cut(&self.e_tilde),
            cut(&self.f),
        ))
    }

    fn to_cache(&self) -> CacheFile {
        let pairs = |v: &[BigRational], from: usize| -> Vec<[String; 2]> {
            v[from..].iter().map(|r| [r.numer().to_string(), r.denom().to_string()]).collect()
        };
        CacheFile {
            n: self.order,
            a: pairs(&self.a, 2),
            b: pairs(&self.b, 2),
            b_tilde: pairs(&self.b_tilde, 2),
            beta: pairs(&self.beta, 0),
        }
    }

    /// Serializes the cache document (`a`, `b`, `b_tilde` from index 2, `beta` from 0).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_cache())?)
    }

    /// Rebuilds a table from a cache document. Only `a`, `b`, `b_tilde` and
    /// `beta` are stored, so the intermediates are recomputed when needed by
    /// calling [`CoeffTable::compute`]; here they are left empty.
    pub fn from_json(s: &str) -> Result<Self> {
        let cf: CacheFile = serde_json::from_str(s)?;
        let parse = |v: &[[String; 2]], pad: usize| -> Result<Vec<BigRational>> {
            let mut out = vec![BigRational::zero(); pad];
            for [num, den] in v {
                let n: BigInt = num.parse().map_err(|_| Error::Format(format!("bad numerator {num}")))?;
                let d: BigInt = den.parse().map_err(|_| Error::Format(format!("bad denominator {den}")))?;
                if d.is_zero() || d.is_negative() {
                    return Err(Error::Format(format!("denominator must be positive, got {den}")));
                }
                out.push(BigRational::new(n, d));
            }
            Ok(out)
        };
        let a = parse(&cf.a, 2)?;
        let b = parse(&cf.b, 2)?;
        let b_tilde = parse(&cf.b_tilde, 2)?;
        let beta = parse(&cf.beta, 0)?;
        let n = cf.n;
        if n < 2 || a.len() != n + 1 || b.len() != n + 1 || b_tilde.len() != n + 1 || beta.len() != n + 1 {
            return Err(Error::Format(format!("cache lengths inconsistent with N = {n}")));
        }
        Ok(Self::assemble(n, beta, a, b, b_tilde, vec![], vec![], vec![], vec![], vec![]))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    #[serde(rename = "N")]
    n: usize,
    a: Vec<[String; 2]>,
    b: Vec<[String; 2]>,
    b_tilde: Vec<[String; 2]>,
    beta: Vec<[String; 2]>,
}

/// Path of the cache file for `order` inside `dir`.
pub fn cache_path(dir: &Path, order: usize) -> PathBuf {
    dir.join(format!("coeffs-N{order}.json"))
}

/// Loads the table from `dir` if a valid cache exists, otherwise computes it
/// and writes the cache. Without a directory the table is just computed.
pub fn load_or_compute(order: usize, dir: Option<&Path>) -> Result<CoeffTable> {
    let Some(dir) = dir else {
        return CoeffTable::compute(order);
    };
    let path = cache_path(dir, order);
    if let Ok(s) = fs::read_to_string(&path) {
        if let Ok(t) = CoeffTable::from_json(&s) {
            if t.order == order {
                return Ok(t);
            }
        }
    }
    let t = CoeffTable::compute(order)?;
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, t.to_json()?)?;
    fs::rename(&tmp, &path)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        int(n)
    }

    #[test]
    fn bell_small() {
        assert_eq!(bell_partial(3, 2, &[r(1), r(1)]).unwrap(), r(3));
        assert_eq!(bell_partial(4, 4, &[r(2)]).unwrap(), r(16));
        assert_eq!(bell_partial(4, 2, &[r(1), r(2), r(6)]).unwrap(), r(36));
        assert!(bell_partial(2, 3, &[r(1)]).is_err());
        assert!(bell_partial(2, 0, &[r(1)]).is_err());
    }

    #[test]
    fn lah_small() {
        assert_eq!(lah(1, 1).unwrap(), r(1));
        assert_eq!(lah(3, 2).unwrap(), r(6));
        assert_eq!(lah(4, 2).unwrap(), r(36));
        assert!(lah(2, 3).is_err());
    }

    #[test]
    fn stirling_small() {
        assert_eq!(stirling2(3, 2).unwrap(), r(3));
        assert_eq!(stirling2(5, 5).unwrap(), r(1));
        assert_eq!(stirling2(4, 2).unwrap(), r(7));
        assert!(stirling2(2, 3).is_err());
    }

    #[test]
    fn beta_start() {
        let b = compute_beta(3);
        assert_eq!(b[0], r(0));
        assert_eq!(b[1], r(6));
        // inversion of g(z) = 1 + z/6 + z^2/120 + ...: beta_2 = -6^3/120
        assert_eq!(b[2], BigRational::new(BigInt::from(-9), BigInt::from(5)));
    }

    #[test]
    fn first_coefficients() {
        let t = CoeffTable::compute(10).unwrap();
        assert_eq!(t.a[2], r(3));
        assert_eq!(t.b[2], r(3));
        assert_eq!(t.a[3], BigRational::new(BigInt::from(3), BigInt::from(5)));
        assert_eq!(t.b[3], BigRational::new(BigInt::from(-3), BigInt::from(5)));
        assert!((t.a(10) - 0.00511786).abs() / 0.00511786 < 1e-5);
        assert_eq!(t.b_tilde[3], &t.b[2] + &t.b[3]);
    }

    #[test]
    fn cache_round_trip() {
        let t = CoeffTable::compute(8).unwrap();
        let back = CoeffTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.a, t.a);
        assert_eq!(back.b_tilde, t.b_tilde);
        assert_eq!(back.beta, t.beta);
    }

    #[test]
    fn cache_rejects_garbage() {
        assert!(CoeffTable::from_json("{\"N\": 3}").is_err());
    }

    #[test]
    fn truncation() {
        let t = CoeffTable::compute(12).unwrap();
        let s = t.truncated(6).unwrap();
        assert_eq!(s.order, 6);
        assert_eq!(s.a[6], t.a[6]);
        assert!(t.truncated(13).is_err());
    }
}
