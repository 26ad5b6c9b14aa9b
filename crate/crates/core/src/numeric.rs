//! Small numerical building blocks shared by the kernel, oracle and simulation code.

use std::f64::consts::PI;

/// Binomial coefficient `C(k, j)` as a float.
pub fn binom(k: u32, j: u32) -> f64 {
    if j > k {
        return 0.0;
    }
    let j = j.min(k - j);
    let mut acc = 1.0;
    for m in 0..j {
        acc = acc * f64::from(k - m) / f64::from(m + 1);
    }
    acc.round()
}

/// Falling factorial `a (a-1) ... (a-j+1)`, equal to 1 for `j = 0`.
pub fn falling_factorial(a: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, m| acc * (a - f64::from(m)))
}

/// Generalized binomial coefficient `binom(a, m)` for real `a`.
pub fn gen_binom(a: f64, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (a - f64::from(i)) / f64::from(i + 1))
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Accumulated Richardson error estimate.
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// Subintervals that reach `max_depth` are accepted as-is and flag the result as
/// not converged.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, converged: true };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut out = Quadrature { value: 0.0, error: 0.0, converged: true };
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut Quadrature,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        out.value += left + right;
        out.error = f64::INFINITY;
        out.converged = false;
        return;
    }
    if delta.abs() <= 15.0 * tol {
        out.value += left + right + delta / 15.0;
        out.error += delta.abs() / 15.0;
        return;
    }
    if depth == 0 || m <= a || m >= b {
        out.value += left + right + delta / 15.0;
        out.error += delta.abs() / 15.0;
        out.converged = false;
        return;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
    simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

/// Adaptive Simpson over consecutive pieces `[points[i], points[i+1]]`, the tolerance
/// split evenly across pieces.
pub fn adaptive_simpson_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64, max_depth: u32) -> Quadrature {
    let mut total = Quadrature { value: 0.0, error: 0.0, converged: true };
    if points.len() < 2 {
        return total;
    }
    let piece_tol = tol / (points.len() - 1) as f64;
    for w in points.windows(2) {
        let q = adaptive_simpson(f, w[0], w[1], piece_tol, max_depth);
        total.value += q.value;
        total.error += q.error;
        total.converged &= q.converged;
    }
    total
}

/// Chebyshev (first kind) interpolant on `[lo, hi]`, evaluated by the barycentric formula.
#[derive(Debug, Clone)]
pub struct ChebyshevInterpolant {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl ChebyshevInterpolant {
    /// Interpolation nodes mapped to `[lo, hi]`.
    pub fn nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|j| {
                let x = (PI * (2 * j + 1) as f64 / (2 * count) as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            })
            .collect()
    }

    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Self {
        let count = values.len();
        let nodes = Self::nodes(lo, hi, count);
        let weights = (0..count)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * (PI * (2 * j + 1) as f64 / (2 * count) as f64).sin()
            })
            .collect();
        Self { lo, hi, nodes, weights, values }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.values.len() == 1 || self.lo == self.hi {
            return self.values[0];
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let d = t - x;
            if d == 0.0 {
                return v;
            }
            let c = w / d;
            num += c * v;
            den += c;
        }
        num / den
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (type 7). Returns NaN on empty input.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorted copy, NaN values last.
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile(&sorted(values), 0.5)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let c = cdf(x);
        d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs())
    })
}
