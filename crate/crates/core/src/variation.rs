//! Higher-order increments, power variation and regime bookkeeping.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::numeric::{binom, KahanSum};
use crate::sim::LssPath;

const CRITICAL_TOL: f64 = 1e-12;

/// `sum_{j=0}^k (-1)^j C(k,j) X_{i-j}` for `i = k..len`, indexed from 0.
pub fn increments_k(values: &[f64], k: u32) -> Result<Vec<f64>> {
    let ku = k as usize;
    if k == 0 {
        return Err(invalid("increment order k must be >= 1"));
    }
    if values.len() < ku + 1 {
        return Err(Error::TooShort { needed: ku + 1, got: values.len() });
    }
    let coeffs: Vec<f64> = (0..=k).map(|j| if j % 2 == 0 { binom(k, j) } else { -binom(k, j) }).collect();
    Ok((ku..values.len()).map(|i| coeffs.iter().enumerate().map(|(j, c)| c * values[i - j]).sum()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    /// Jump-dominated: `alpha < k - 1/p`, `p > beta`, `p >= 1`.
    I,
    /// Stable small-scale: `alpha < k - 1/beta`, `p < beta`.
    II,
    /// Smooth: `alpha > k - 1/(beta v p)`, `p >= 1`.
    III,
    /// `p = beta`, `alpha = k - 1/p` or `alpha = k - 1/beta`.
    Critical,
    /// No case of the limit theorem applies (for instance `p < 1` with a finite Lévy measure).
    Uncovered,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeTag::I => "i",
            RegimeTag::II => "ii",
            RegimeTag::III => "iii",
            RegimeTag::Critical => "critical",
            RegimeTag::Uncovered => "uncovered",
        })
    }
}

impl std::str::FromStr for RegimeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" => Ok(RegimeTag::I),
            "ii" => Ok(RegimeTag::II),
            "iii" => Ok(RegimeTag::III),
            "critical" => Ok(RegimeTag::Critical),
            "uncovered" => Ok(RegimeTag::Uncovered),
            other => Err(Error::Parse(format!("unknown regime '{other}'"))),
        }
    }
}

/// Regime of the limit theorem for `(alpha, beta, p, k)`; `beta = 0` for
/// compound Poisson drivers.
pub fn regime_classify(alpha: f64, beta: f64, p: f64, k: u32) -> RegimeTag {
    let kf = f64::from(k);
    let near = |a: f64, b: f64| (a - b).abs() <= CRITICAL_TOL;
    if near(p, beta) || near(alpha, kf - 1.0 / p) || (beta > 0.0 && near(alpha, kf - 1.0 / beta)) {
        return RegimeTag::Critical;
    }
    if alpha < kf - 1.0 / p && p > beta && p >= 1.0 {
        RegimeTag::I
    } else if beta > 0.0 && alpha < kf - 1.0 / beta && p < beta {
        RegimeTag::II
    } else if alpha > kf - 1.0 / beta.max(p) && p >= 1.0 {
        RegimeTag::III
    } else {
        RegimeTag::Uncovered
    }
}

pub fn normalization_factor(tag: RegimeTag, n: f64, p: f64, k: u32, alpha: f64, beta: f64) -> Result<f64> {
    let exponent = match tag {
        RegimeTag::I => alpha * p,
        RegimeTag::II => -1.0 + p * (alpha + 1.0 / beta),
        RegimeTag::III => -1.0 + p * f64::from(k),
        RegimeTag::Critical => {
            return Err(Error::CriticalRegime(format!(
                "p = {p}, beta = {beta}, alpha = {alpha}, k = {k} lies on a boundary between regimes"
            )))
        }
        RegimeTag::Uncovered => {
            return Err(Error::CriticalRegime(format!(
                "no limit regime covers p = {p}, beta = {beta}, alpha = {alpha}, k = {k}"
            )))
        }
    };
    Ok(n.powf(exponent))
}

/// `V(p;k)_t^n` as a right-continuous step function on the observation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationSeries {
    pub n: f64,
    pub p: f64,
    pub k: u32,
    pub t_grid: Vec<f64>,
    /// `values[j] = V(p;k)_{t_grid[j]}^n`
    pub values: Vec<f64>,
    pub normalization: Option<(RegimeTag, f64)>,
}

impl VariationSeries {
    /// `V` at time `t` (`floor(n t)` increments).
    pub fn value_at(&self, t: f64) -> f64 {
        let j = (self.n * t + 1e-9).floor();
        if j < 0.0 {
            return 0.0;
        }
        let j = (j as usize).min(self.values.len() - 1);
        self.values[j]
    }

    pub fn total(&self) -> f64 {
        *self.values.last().expect("series is nonempty")
    }

    pub fn with_normalization(mut self, tag: RegimeTag, factor: f64) -> Self {
        self.normalization = Some((tag, factor));
        self
    }

    /// Values times the normalization factor (raw values when none is set).
    pub fn normalized_values(&self) -> Vec<f64> {
        let f = self.normalization.map_or(1.0, |n| n.1);
        self.values.iter().map(|v| v * f).collect()
    }
}

/// Power variation from values on the grid `i/n`, `i = 0, 1, ...`.
pub fn power_variation_values(values: &[f64], n: f64, p: f64, k: u32) -> Result<VariationSeries> {
    if !(p > 0.0) {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    let inc = increments_k(values, k)?;
    let mut acc = KahanSum::new();
    let mut out = vec![0.0; values.len()];
    for (i, d) in inc.iter().enumerate() {
        acc.add(d.abs().powf(p));
        out[i + k as usize] = acc.value();
    }
    Ok(VariationSeries {
        n,
        p,
        k,
        t_grid: (0..values.len()).map(|i| i as f64 / n).collect(),
        values: out,
        normalization: None,
    })
}

pub fn power_variation(path: &LssPath, p: f64, k: u32) -> Result<VariationSeries> {
    let times = &path.eval_times;
    if times.len() < k as usize + 1 {
        return Err(Error::TooShort { needed: k as usize + 1, got: times.len() });
    }
    let n = path.frequency().expect("at least two points").round();
    if times[0].abs() > 1e-12 || times.iter().enumerate().any(|(i, t)| (t * n - i as f64).abs() > 1e-6) {
        return Err(invalid("power variation needs observations on the grid i/n starting at 0"));
    }
    power_variation_values(&path.values, n, p, k)
}
