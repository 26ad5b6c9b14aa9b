use crate::error::{invalid, Error, Result};
use crate::numeric::{adaptive_simpson, adaptive_simpson_pieces, binom, falling_factorial, gen_binom};

/// Parameters of `h_k(x) = sum_{j=0}^k (-1)^j C(k,j) (x-j)_+^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HkParams {
    pub alpha: f64,
    pub k: u32,
}

impl HkParams {
    pub fn new(alpha: f64, k: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if k == 0 {
            return Err(invalid("increment order k must be >= 1"));
        }
        Ok(Self { alpha, k })
    }

    pub fn eval(&self, x: f64) -> f64 {
        hk_raw(self.alpha, self.k, x)
    }

    /// `alpha` is an integer below `k`, so `h_k` vanishes on `[k, inf)`.
    pub fn compact_support(&self) -> bool {
        self.alpha.fract() == 0.0 && self.alpha < f64::from(self.k)
    }

    /// `|(alpha)_k|`, the constant in `|alpha)_k| x^(alpha-k) <= |h_k(x)| <= |(alpha)_k| (x-k)^(alpha-k)`
    /// valid for `x > k` when `alpha < k`.
    pub fn tail_constant(&self) -> f64 {
        falling_factorial(self.alpha, self.k).abs()
    }
}

/// `h_k` for any real exponent; used directly for derivatives (`alpha - 1`).
///
/// For `x > 4(k+1)` the alternating sum is replaced by its convergent binomial
/// expansion in `1/x`, which avoids the cancellation of the direct form.
pub fn hk_raw(alpha: f64, k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let kf = f64::from(k);
    if alpha.fract() == 0.0 && alpha >= 0.0 && alpha < kf && x >= kf {
        return 0.0;
    }
    if x > 4.0 * (kf + 1.0) {
        return hk_series(alpha, k, x);
    }
    (0..=k)
        .map(|j| {
            let y = x - f64::from(j);
            if y <= 0.0 {
                return 0.0;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(k, j) * y.powf(alpha)
        })
        .sum()
}

/// `x^alpha sum_{m>=k} binom(alpha, m) (-1/x)^m T(m,k)` with
/// `T(m,k) = sum_j (-1)^j C(k,j) j^m = (-1)^k k! S(m,k)`.
fn hk_series(alpha: f64, k: u32, x: f64) -> f64 {
    let ku = k as usize;
    // row[j] = S(m, j) / x^m, advanced in m
    let mut row = vec![0.0; ku + 1];
    row[0] = 1.0;
    let k_fact: f64 = (1..=k).map(f64::from).product();
    let k_sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut sum = 0.0;
    for m in 1..=400u32 {
        for j in (1..=ku).rev() {
            row[j] = (j as f64 * row[j] + row[j - 1]) / x;
        }
        row[0] = 0.0;
        if m < k {
            continue;
        }
        let m_sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let term = gen_binom(alpha, m) * m_sign * k_sign * k_fact * row[ku];
        sum += term;
        if term == 0.0 || (m > k + 1 && term.abs() <= 1e-17 * sum.abs()) {
            break;
        }
    }
    x.powf(alpha) * sum
}

/// `∫_0^∞ |h_k(x)|^q dx` with a certified enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HkIntegral {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl HkIntegral {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

const BODY_TOL: f64 = 1e-10;
const FAR_CUT: f64 = 1e12;

pub fn hk_abs_power_integral(params: HkParams, q: f64) -> Result<HkIntegral> {
    if !(q > 0.0) {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    let HkParams { alpha, k } = params;
    let kf = f64::from(k);
    let f = |x: f64| params.eval(x).abs().powf(q);
    if params.compact_support() {
        let points: Vec<f64> = (0..=k).map(f64::from).collect();
        let body = adaptive_simpson_pieces(&f, &points, BODY_TOL, 50);
        return Ok(HkIntegral { value: body.value, lower: body.value - body.error, upper: body.value + body.error });
    }
    let expo = (alpha - kf) * q;
    if expo >= -1.0 {
        return Err(Error::NonIntegrableTail(format!("(alpha - k) q = {expo} >= -1")));
    }
    let x_cut = kf + 20.0;
    let mut points: Vec<f64> = (0..=k).map(f64::from).collect();
    points.push(x_cut);
    let body = adaptive_simpson_pieces(&f, &points, BODY_TOL, 50);

    // x = k + e^v on [x_cut, FAR_CUT]
    let g = |v: f64| {
        let e = v.exp();
        f(kf + e) * e
    };
    let mid = adaptive_simpson(&g, (x_cut - kf).ln(), (FAR_CUT - kf).ln(), 0.1 * BODY_TOL, 50);

    let c = params.tail_constant().powf(q);
    let far_lo = c * FAR_CUT.powf(expo + 1.0) / (-expo - 1.0);
    let far_hi = c * (FAR_CUT - kf).powf(expo + 1.0) / (-expo - 1.0);
    let base = body.value + mid.value;
    let err = body.error + mid.error;
    Ok(HkIntegral { value: base + 0.5 * (far_lo + far_hi), lower: base + far_lo - err, upper: base + far_hi + err })
}
