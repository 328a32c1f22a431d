#![allow(dead_code)]

use mcvd::{ChannelSpec, HalfLife};

pub const RR: f64 = 10.0;
pub const D: f64 = 79.4;

pub fn table2(half_life: HalfLife) -> ChannelSpec {
    ChannelSpec::from_gap(RR, 4.0, D, half_life).unwrap()
}

pub fn finite(v: f64) -> HalfLife {
    HalfLife::Finite(v)
}

/// First-passage density written out independently of the library.
pub fn rate_density(rr: f64, gap: f64, dc: f64, lambda: f64, t: f64) -> f64 {
    let r0 = rr + gap;
    rr / r0 * gap / (4.0 * std::f64::consts::PI * dc * t.powi(3)).sqrt()
        * (-gap * gap / (4.0 * dc * t) - lambda * t).exp()
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // split into panels so the sharp rise near the origin is resolved
    let panels = 64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + (b - a) * i as f64 / panels as f64;
        let hi = a + (b - a) * (i + 1) as f64 / panels as f64;
        let (flo, fhi) = (f(lo), f(hi));
        let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
        total += recurse(f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, 50);
    }
    total
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

/// Poisson pmf by direct recurrence, for small means.
pub fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut p = (-mean).exp();
    for (k, v) in out.iter_mut().enumerate() {
        *v = p;
        p *= mean / (k + 1) as f64;
    }
    out
}

pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Binomial CDF by summing exact coefficients, for `n ≤ 200`.
pub fn binomial_cdf_direct(k: u64, n: u64, p: f64) -> f64 {
    let mut coeff = 1.0f64;
    let mut sum = 0.0;
    for j in 0..=k.min(n) {
        if j > 0 {
            coeff = coeff * (n - j + 1) as f64 / j as f64;
        }
        sum += coeff * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    sum
}

/// Stationary error probabilities by enumerating every bit sequence of
/// length `z` and averaging over positions with a full history.
pub fn enumerate_errors(slots: &[f64], n1: f64, n0: f64, pi1: f64, tau: u64, z: usize) -> (f64, f64) {
    use mcvd::special::poisson_cdf;
    let k = slots.len();
    assert!(k <= z && z <= 16);
    let (mut pe0, mut pe1, mut weight) = (0.0, 0.0, 0.0);
    for code in 0u32..(1 << z) {
        let bits: Vec<bool> = (0..z).map(|i| code >> i & 1 == 1).collect();
        let ones = bits.iter().filter(|&&b| b).count() as i32;
        let w = pi1.powi(ones) * (1.0 - pi1).powi(z as i32 - ones);
        for i in k - 1..z {
            let isi: f64 = (1..k).map(|j| if bits[i - j] { n1 } else { n0 } * slots[j]).sum();
            let c0 = poisson_cdf(tau as i64, isi + n0 * slots[0]);
            let c1 = poisson_cdf(tau as i64, isi + n1 * slots[0]);
            pe0 += w * (1.0 - c0);
            pe1 += w * c1;
            weight += w;
        }
    }
    (pe0 / weight, pe1 / weight)
}
