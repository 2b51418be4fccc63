//! Special functions and quadrature rules used throughout the crate.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use statrs::function::{factorial, gamma};

pub fn ln_factorial(k: u64) -> f64 {
    factorial::ln_factorial(k)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma::gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma::gamma_ur(a, x)
    }
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    factorial::binomial(n, k)
}

/// Generalized Laguerre polynomial L_n^{(a)}(x) by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// e^{-x} I_m(x) for x >= 0 by the periodic trapezoid rule on
/// (1/2pi) int e^{x(cos th - 1)} cos(m th) dth, which converges geometrically.
/// Large x uses the asymptotic series, whose smallest term is about e^{-2x}.
pub fn scaled_bessel_i(m: i64, x: f64) -> f64 {
    let m = m.unsigned_abs() as f64;
    if x == 0.0 {
        return if m == 0.0 { 1.0 } else { 0.0 };
    }
    if x > 40.0 + m * m {
        let mu = 4.0 * m * m;
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..200 {
            let kf = k as f64;
            let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
            if next.abs() >= term.abs() || next == 0.0 {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum / (std::f64::consts::TAU * x).sqrt();
    }
    scaled_bessel_trapezoid(m, x)
}

fn scaled_bessel_trapezoid(m: f64, x: f64) -> f64 {
    let count = (2.0 * m + 48.0 + 2.0 * (80.0 * x).sqrt()).ceil() as usize;
    let step = std::f64::consts::TAU / count as f64;
    let mut acc = 0.0;
    for j in 0..count {
        let th = j as f64 * step;
        acc += (x * (th.cos() - 1.0)).exp() * (m * th).cos();
    }
    acc / count as f64
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).unwrap();
    GaussLegendre::new(order).as_node_weight_pairs().to_vec()
}

/// Gauss-Hermite nodes and weights for the weight e^{-x^2}.
pub fn gauss_hermite(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).unwrap();
    GaussHermite::new(order).as_node_weight_pairs().to_vec()
}

/// Composite Gauss-Legendre rule on [a, b] with panels no wider than `width`,
/// forced to break at every point of `breaks` that falls inside (a, b).
pub fn composite_gl(a: f64, b: f64, width: f64, order: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    cuts.extend(inner);
    cuts.push(b);
    let base = gauss_legendre(order);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = ((hi - lo) / width).ceil().max(1.0) as usize;
        let h = (hi - lo) / pieces as f64;
        for p in 0..pieces {
            let l = lo + p as f64 * h;
            for &(x, wt) in &base {
                out.push((l + 0.5 * h * (x + 1.0), 0.5 * h * wt));
            }
        }
    }
    out
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Clone, Debug, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = d[0];
            m[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Some(Self { xs: xs.to_vec(), ys: ys.to_vec(), slopes: m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// None outside the sampled range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k => (k - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1])
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_small_cases() {
        // L_2^{(1)}(x) = (x^2 - 6x + 6)/2
        for &x in &[0.0, 0.3, 1.7, 4.0] {
            let want = (x * x - 6.0 * x + 6.0) / 2.0;
            assert!((laguerre(2, 1.0, x) - want).abs() < 1e-13);
        }
        assert_eq!(laguerre(0, 3.0, 2.0), 1.0);
    }

    #[test]
    fn scaled_bessel_against_series() {
        // I_m(x) = sum_k (x/2)^{2k+m} / (k! (k+m)!)
        for &(m, x) in &[(0i64, 0.5f64), (1, 2.0), (3, 5.0), (2, 20.0)] {
            let mut s = 0.0;
            for k in 0..80u64 {
                let lt = (2 * k + m as u64) as f64 * (x / 2.0).ln() - ln_factorial(k) - ln_factorial(k + m as u64);
                s += (lt - x).exp();
            }
            assert!((scaled_bessel_i(m, x) - s).abs() < 1e-13 * s.max(1e-300) + 1e-300, "m={m} x={x}");
        }
    }

    #[test]
    fn scaled_bessel_asymptotic_branch() {
        // e^{-x} I_m(x) from 40-digit arithmetic
        let table = [
            (0i64, 41.0, 0.062496943756818890749),
            (1, 60.0, 0.051179630189028718118),
            (2, 44.0, 0.057605613675372026056),
            (3, 300.0, 0.022698932738915835318),
            (4, 57.0, 0.045968587113201873571),
            (0, 5000.0, 0.005642036898744588657),
            (1, 40000.0, 0.00199469270144166935),
            (2, 40000.0, 0.0019946179009328830774),
        ];
        for (m, x, want) in table {
            let got = scaled_bessel_i(m, x);
            assert!((got - want).abs() < 2e-15 * want, "m={m} x={x}: {got}");
        }
    }

    #[test]
    fn composite_rule_integrates_polynomials_and_breaks() {
        let rule = composite_gl(0.0, 3.0, 0.7, 6, &[1.0, 2.5, 7.0]);
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(5)).sum();
        assert!((s - 3f64.powi(6) / 6.0).abs() < 1e-11);
        assert!(rule.iter().all(|&(x, _)| x > 0.0 && x < 3.0));
    }

    #[test]
    fn pchip_reproduces_monotone_data_and_refuses_extrapolation() {
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys = [0.0, 1.0, 1.5, 1.6];
        let p = Pchip::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((p.eval(*x).unwrap() - y).abs() < 1e-14);
        }
        let mut last = -1.0;
        for i in 0..=400 {
            let v = p.eval(i as f64 * 0.01).unwrap();
            assert!(v >= last - 1e-15);
            last = v;
        }
        assert!(p.eval(4.01).is_none());
        assert!(p.eval(-0.01).is_none());
    }

    #[test]
    fn hermite_rule_moments() {
        let r = gauss_hermite(20);
        let m2: f64 = r.iter().map(|&(x, w)| w * x * x).sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
    }
}
