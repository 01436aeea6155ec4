use crate::error::{Error, Result};

use super::RngStream;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub mean: f64,
    pub std_error: f64,
    /// Samples that contributed.
    pub accepted: usize,
    /// Samples dropped because the integrand was not finite.
    pub rejected: usize,
}

/// Pairwise (cascade) summation. The association order depends only on the
/// length of the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of a set of finite values.
pub fn summarize(values: &[f64], rejected: usize) -> Result<McResult> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 finite samples, got {n}")));
    }
    let mean = pairwise_sum(values) / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Ok(McResult { mean, std_error: (var / n as f64).sqrt(), accepted: n, rejected })
}

/// Plain Monte Carlo: draws `n` points with `sampler` and averages `f`.
pub fn mc_integrate<P, S, F>(mut f: F, mut sampler: S, n: usize, stream: &mut RngStream) -> Result<McResult>
where
    S: FnMut(&mut RngStream) -> P,
    F: FnMut(&P) -> f64,
{
    if n < 2 {
        return Err(Error::Precondition(format!("mc_integrate needs n >= 2, got {n}")));
    }
    let mut values = Vec::with_capacity(n);
    let mut rejected = 0;
    for _ in 0..n {
        let p = sampler(stream);
        let v = f(&p);
        if v.is_finite() {
            values.push(v);
        } else {
            rejected += 1;
        }
    }
    summarize(&values, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_integrand() {
        let mut s = RngStream::new(1, 0);
        let r = mc_integrate(|_: &f64| 1.0, |s: &mut RngStream| s.gen::<f64>(), 1000, &mut s).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn uniform_mean() {
        let mut s = RngStream::new(42, 0);
        let r = mc_integrate(|x: &f64| *x, |s: &mut RngStream| s.gen::<f64>(), 1_000_000, &mut s).unwrap();
        assert!((r.mean - 0.5).abs() <= 3.0 * r.std_error);
    }

    #[test]
    fn too_few_samples() {
        let mut s = RngStream::new(1, 0);
        assert!(mc_integrate(|x: &f64| *x, |s: &mut RngStream| s.gen::<f64>(), 1, &mut s).is_err());
    }

    #[test]
    fn rejected_counted() {
        let mut s = RngStream::new(1, 0);
        let r = mc_integrate(
            |x: &f64| if *x < 0.1 { f64::NAN } else { 1.0 },
            |s: &mut RngStream| s.gen::<f64>(),
            1000,
            &mut s,
        )
        .unwrap();
        assert!(r.rejected > 0);
        assert_eq!(r.accepted + r.rejected, 1000);
    }

    #[test]
    fn split_streams_match_single_reduction() {
        let draw = |id: u64, n: usize| {
            let mut s = RngStream::new(7, id);
            (0..n).map(|_| s.gen::<f64>().exp()).collect::<Vec<f64>>()
        };
        let a = draw(0, 30_000);
        let b = draw(1, 20_000);
        let ra = summarize(&a, 0).unwrap();
        let rb = summarize(&b, 0).unwrap();
        let joined: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        let rj = summarize(&joined, 0).unwrap();
        let combined = (ra.mean * 30_000.0 + rb.mean * 20_000.0) / 50_000.0;
        assert!((combined - rj.mean).abs() <= 1e-12 * rj.mean.abs());
    }
}
