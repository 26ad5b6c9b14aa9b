//! Estimators of `(alpha, beta)` and of the self-similarity index from one
//! high-frequency path.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::numeric::KahanSum;
use crate::variation::VariationSeries;

/// Powers at which the scale statistic is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct PGrid {
    points: Vec<f64>,
}

impl Default for PGrid {
    fn default() -> Self {
        Self { points: (1..=12).map(|i| 0.25 * f64::from(i)).collect() }
    }
}

impl PGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("p grid must be strictly increasing with at least two points"));
        }
        let (lo, hi) = (points[0], points[points.len() - 1]);
        if !(lo > 0.0 && lo < 1.0 && hi > 2.0) {
            return Err(invalid(format!("p grid must span p_lo in (0, 1) and p_hi > 2, got [{lo}, {hi}]")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn p_lo(&self) -> f64 {
        self.points[0]
    }
    pub fn p_hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// Grid over `J = {beta in [1, 2], alpha in [0, 1 - 1/beta]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomainJ {
    pub d_alpha: f64,
    pub d_beta: f64,
}

impl Default for ParamDomainJ {
    fn default() -> Self {
        Self { d_alpha: 0.01, d_beta: 0.01 }
    }
}

impl ParamDomainJ {
    pub fn new(d_alpha: f64, d_beta: f64) -> Result<Self> {
        if !(d_alpha > 0.0 && d_alpha <= 1.0 && d_beta > 0.0 && d_beta <= 1.0) {
            return Err(invalid("grid resolutions must lie in (0, 1]"));
        }
        Ok(Self { d_alpha, d_beta })
    }

    /// All grid points `(alpha, beta)` inside `J`, sorted by `alpha` then `beta`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let nb = (1.0 / self.d_beta + 1e-9).floor() as usize;
        let na = (0.5 / self.d_alpha + 1e-9).floor() as usize;
        let mut out = Vec::new();
        for i in 0..=na {
            let alpha = i as f64 * self.d_alpha;
            for j in 0..=nb {
                let beta = 1.0 + j as f64 * self.d_beta;
                if alpha <= 1.0 - 1.0 / beta + 1e-12 {
                    out.push((alpha, beta));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `alpha_hat + 1/beta_hat`
    pub h_hat: f64,
    pub objective: f64,
    /// `(p, S_observed(p) - scale_limit(p))` at the minimizer.
    pub residuals: Vec<(f64, f64)>,
}

/// `S(n, p) = -log V(p) / log n` for each `(p, V(p))`.
pub fn scale_stat(values: &[(f64, f64)], n: f64) -> Result<Vec<(f64, f64)>> {
    if !(n >= 2.0) {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    values
        .iter()
        .map(|&(p, v)| {
            if v == 0.0 {
                Err(Error::ZeroVariation)
            } else if !(v > 0.0) {
                Err(invalid(format!("power variation must be positive, got {v}")))
            } else {
                Ok((p, -v.ln() / n.ln()))
            }
        })
        .collect()
}

/// `V(p;1)_1^n` for every grid power from observations `X_{i/n}`, `i = 0..=n`.
pub fn variations_on_grid(values: &[f64], pgrid: &PGrid) -> Result<Vec<(f64, f64)>> {
    if values.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: values.len() });
    }
    let abs_inc: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(pgrid.points().iter().map(|&p| (p, abs_inc.iter().map(|d| d.powf(p)).collect::<KahanSum>().value())).collect())
}

/// Limit of the scale statistic: `alpha p` for `p >= beta`, `p (alpha + 1/beta) - 1` below.
pub fn scale_limit(alpha: f64, beta: f64, p: f64) -> f64 {
    if p >= beta {
        alpha * p
    } else {
        p * (alpha + 1.0 / beta) - 1.0
    }
}

fn objective(observed: &[(f64, f64)], alpha: f64, beta: f64) -> f64 {
    let sq: Vec<f64> = observed.iter().map(|&(p, s)| (s - scale_limit(alpha, beta, p)).powi(2)).collect();
    let mut acc = KahanSum::new();
    for i in 0..observed.len() - 1 {
        acc.add(0.5 * (observed[i + 1].0 - observed[i].0) * (sq[i] + sq[i + 1]));
    }
    acc.value()
}

/// Exhaustive L² grid search over `J`; ties go to the smallest `alpha`, then `beta`.
pub fn fit_alpha_beta(observed: &[(f64, f64)], pgrid: &PGrid, domain: &ParamDomainJ) -> Result<EstimateReport> {
    if observed.len() != pgrid.points().len()
        || observed.iter().zip(pgrid.points()).any(|(o, p)| (o.0 - p).abs() > 1e-12)
    {
        return Err(invalid("observed scale statistic must be given on the p grid"));
    }
    if observed.iter().any(|o| !o.1.is_finite()) {
        return Err(invalid("observed scale statistic must be finite"));
    }
    let (objective_value, alpha_hat, beta_hat) =
        domain.points().into_par_iter().map(|(a, b)| (objective(observed, a, b), a, b)).reduce(
            || (f64::INFINITY, f64::INFINITY, f64::INFINITY),
            |x, y| {
                let key = |t: &(f64, f64, f64)| (t.0, t.1, t.2);
                let (kx, ky) = (key(&x), key(&y));
                let ord = kx.0.total_cmp(&ky.0).then(kx.1.total_cmp(&ky.1)).then(kx.2.total_cmp(&ky.2));
                if ord.is_le() {
                    x
                } else {
                    y
                }
            },
        );
    let residuals = observed.iter().map(|&(p, s)| (p, s - scale_limit(alpha_hat, beta_hat, p))).collect();
    Ok(EstimateReport { alpha_hat, beta_hat, h_hat: alpha_hat + 1.0 / beta_hat, objective: objective_value, residuals })
}

/// `sum |X_i - X_{i-2}|^p / sum |X_i - X_{i-1}|^p`.
pub fn ratio_stat(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("ratio statistic needs p in (0, 1], got {p}")));
    }
    if values.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: values.len() });
    }
    let num: KahanSum = values.windows(3).map(|w| (w[2] - w[0]).abs().powf(p)).collect();
    let den: KahanSum = values.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).collect();
    if den.value() == 0.0 {
        return Err(Error::ZeroDenominator("all first-order increments vanish".into()));
    }
    Ok(num.value() / den.value())
}

/// `log R / (p log 2)`.
pub fn estimate_h(ratio: f64, p: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::NonPositiveRatio(ratio));
    }
    Ok(ratio.ln() / (p * std::f64::consts::LN_2))
}

/// `V_t / V_1`.
pub fn relative_intermittency(series: &VariationSeries, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid(format!("t must lie in (0, 1], got {t}")));
    }
    if series.t_grid.last().copied().unwrap_or(0.0) < 1.0 - 1e-9 {
        return Err(invalid("variation series does not reach t = 1"));
    }
    let total = series.value_at(1.0);
    if total == 0.0 {
        return Err(Error::ZeroDenominator("V at t = 1 is zero".into()));
    }
    Ok(series.value_at(t) / total)
}
