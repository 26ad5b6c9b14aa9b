//! Càdlàg volatility paths with left-limit evaluation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::driver::{simulate_compound_poisson, DriverSpec, JumpRecord};
use crate::error::{invalid, Error, Result};
use crate::numeric::adaptive_simpson;

/// Named deterministic volatility functions.
#[derive(Clone)]
pub enum DeterministicSigma {
    /// `intercept + slope * s`
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `base + amplitude * sin(2 pi frequency s)`
    Periodic {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl DeterministicSigma {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            DeterministicSigma::Linear { intercept, slope } => intercept + slope * s,
            DeterministicSigma::Periodic { base, amplitude, frequency } => {
                base + amplitude * (2.0 * std::f64::consts::PI * frequency * s).sin()
            }
            DeterministicSigma::Custom { f, .. } => f(s),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DeterministicSigma::Linear { intercept, slope } => format!("linear({intercept},{slope})"),
            DeterministicSigma::Periodic { base, amplitude, frequency } => {
                format!("periodic({base},{amplitude},{frequency})")
            }
            DeterministicSigma::Custom { name, .. } => name.clone(),
        }
    }

    /// Exact for the linear and periodic kinds.
    fn sup_abs(&self, a: f64, b: f64) -> f64 {
        match self {
            DeterministicSigma::Linear { .. } => self.eval(a).abs().max(self.eval(b).abs()),
            DeterministicSigma::Periodic { base, amplitude, .. } => base.abs() + amplitude.abs(),
            DeterministicSigma::Custom { .. } => {
                (0..=4096).map(|i| self.eval(a + (b - a) * f64::from(i) / 4096.0).abs()).fold(0.0, f64::max)
            }
        }
    }
}

impl fmt::Debug for DeterministicSigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PartialEq for DeterministicSigma {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DeterministicSigma::Custom { name: a, f: fa }, DeterministicSigma::Custom { name: b, f: fb }) => {
                a == b && Arc::ptr_eq(fa, fb)
            }
            (DeterministicSigma::Custom { .. }, _) | (_, DeterministicSigma::Custom { .. }) => false,
            _ => self.name() == other.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    Constant(f64),
    Deterministic(DeterministicSigma),
    /// `levels[0]` before `breakpoints[0]`, `levels[i]` on `[breakpoints[i-1], breakpoints[i])`.
    Step {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    /// `d sigma = -reversion (sigma - mean) dt + dZ` with `Z` compound Poisson.
    Ou {
        mean: f64,
        reversion: f64,
        jump_driver: DriverSpec,
    },
}

impl SigmaSpec {
    pub fn step(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(invalid("step volatility needs one more level than breakpoints"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("step breakpoints must be strictly increasing"));
        }
        Ok(SigmaSpec::Step { breakpoints, levels })
    }

    pub fn ou(mean: f64, reversion: f64, jump_driver: DriverSpec) -> Result<Self> {
        if !(reversion > 0.0) {
            return Err(invalid(format!("reversion must be positive, got {reversion}")));
        }
        if jump_driver.is_stable() {
            return Err(invalid("OU volatility needs a compound Poisson jump driver"));
        }
        Ok(SigmaSpec::Ou { mean, reversion, jump_driver })
    }

    pub fn label(&self) -> String {
        match self {
            SigmaSpec::Constant(c) => format!("constant({c})"),
            SigmaSpec::Deterministic(d) => d.name(),
            SigmaSpec::Step { breakpoints, levels } => format!("step(breakpoints={breakpoints:?}, levels={levels:?})"),
            SigmaSpec::Ou { mean, reversion, jump_driver } => {
                format!("ou(mean={mean}, reversion={reversion}, driver={jump_driver:?})")
            }
        }
    }

    /// Paths are bounded on compact windows by construction (OU only almost surely).
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, SigmaSpec::Ou { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Constant(f64),
    Deterministic(DeterministicSigma),
    /// `levels[0]` before `times[0]`, `levels[i+1]` from `times[i]` on.
    Piecewise {
        times: Vec<f64>,
        levels: Vec<f64>,
    },
    /// Exponential relaxation towards `mean` from `anchors[i]` at `times[i]`.
    Ou {
        mean: f64,
        reversion: f64,
        start: f64,
        times: Vec<f64>,
        anchors: Vec<f64>,
    },
}

/// A realized volatility path on `[window_start, window_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPath {
    pub window_start: f64,
    pub window_end: f64,
    /// Grid used for tabulated output.
    pub grid_start: f64,
    pub grid_step: f64,
    /// Jump times and sizes for piecewise kinds.
    pub jumps: Vec<JumpRecord>,
    /// Description of the generating spec.
    pub label: String,
    repr: Repr,
}

pub fn simulate_sigma<R: Rng + ?Sized>(
    spec: &SigmaSpec,
    window_start: f64,
    window_end: f64,
    grid_step: f64,
    rng: &mut R,
) -> Result<SigmaPath> {
    if !(window_start < window_end) {
        return Err(invalid(format!("empty window [{window_start}, {window_end}]")));
    }
    if !(grid_step > 0.0) {
        return Err(invalid(format!("grid step must be positive, got {grid_step}")));
    }
    let (repr, jumps) = match spec {
        SigmaSpec::Constant(c) => (Repr::Constant(*c), Vec::new()),
        SigmaSpec::Deterministic(d) => (Repr::Deterministic(d.clone()), Vec::new()),
        SigmaSpec::Step { breakpoints, levels } => {
            let jumps = breakpoints
                .iter()
                .zip(levels.windows(2))
                .map(|(&time, w)| JumpRecord { time, size: w[1] - w[0] })
                .collect();
            (Repr::Piecewise { times: breakpoints.clone(), levels: levels.clone() }, jumps)
        }
        SigmaSpec::Ou { mean, reversion, jump_driver } => {
            let driver = simulate_compound_poisson(jump_driver, window_start, window_end, rng)?;
            let jumps = driver.jumps()?.to_vec();
            let mut level = *mean;
            let mut last = window_start;
            let mut anchors = Vec::with_capacity(jumps.len());
            for j in &jumps {
                level = mean + (level - mean) * (-reversion * (j.time - last)).exp() + j.size;
                anchors.push(level);
                last = j.time;
            }
            let times = jumps.iter().map(|j| j.time).collect();
            (Repr::Ou { mean: *mean, reversion: *reversion, start: *mean, times, anchors }, jumps)
        }
    };
    Ok(SigmaPath { window_start, window_end, grid_start: window_start, grid_step, jumps, label: spec.label(), repr })
}

impl SigmaPath {
    fn check(&self, s: f64) -> Result<()> {
        if s < self.window_start || s > self.window_end || s.is_nan() {
            return Err(Error::OutOfWindow { t: s, start: self.window_start, end: self.window_end });
        }
        Ok(())
    }

    /// Value at `s` given the number of jumps already in effect.
    fn eval_with(&self, s: f64, count: impl Fn(&[f64]) -> usize) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Deterministic(d) => d.eval(s),
            Repr::Piecewise { times, levels } => levels[count(times)],
            Repr::Ou { mean, reversion, start, times, anchors } => {
                let idx = count(times);
                let (t0, x0) = if idx == 0 { (self.window_start, *start) } else { (times[idx - 1], anchors[idx - 1]) };
                mean + (x0 - mean) * (-reversion * (s - t0)).exp()
            }
        }
    }

    /// Right-continuous value `sigma_s`.
    pub fn value(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.eval_with(s, |t| t.partition_point(|&x| x <= s)))
    }

    /// `sigma_{s-}`: the pre-jump level at jump times.
    pub fn left_limit(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.eval_with(s, |t| t.partition_point(|&x| x < s)))
    }

    /// Tabulated right-continuous values at `grid_start + i grid_step`.
    pub fn grid_values(&self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|i| self.value(self.grid_start + i as f64 * self.grid_step)).collect()
    }

    /// `sup |sigma|` over `[a, b]`.
    pub fn sup_abs(&self, a: f64, b: f64) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(match &self.repr {
            Repr::Constant(c) => c.abs(),
            Repr::Deterministic(d) => d.sup_abs(a, b),
            Repr::Piecewise { times, levels } => {
                let lo = times.partition_point(|&x| x <= a);
                let hi = times.partition_point(|&x| x <= b);
                levels[lo..=hi].iter().fold(0.0, |m, l| m.max(l.abs()))
            }
            Repr::Ou { times, .. } => {
                // monotone between jumps: extremes sit at piece ends
                let mut m = self.left_limit(b)?.abs().max(self.value(a)?.abs());
                let lo = times.partition_point(|&x| x <= a);
                let hi = times.partition_point(|&x| x <= b);
                for &t in &times[lo..hi] {
                    m = m.max(self.left_limit(t)?.abs()).max(self.value(t)?.abs());
                }
                m
            }
        })
    }

    /// `∫_0^t |sigma_s|^p ds`; exact for piecewise-constant kinds.
    pub fn power_integral(&self, p: f64, t: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(invalid(format!("p must be positive, got {p}")));
        }
        self.check(0.0)?;
        self.check(t)?;
        let (a, b) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let f = |s: f64| self.eval_with(s, |ts| ts.partition_point(|&x| x <= s)).abs().powf(p);
        let total = match &self.repr {
            Repr::Constant(c) => (b - a) * c.abs().powf(p),
            Repr::Deterministic(_) => adaptive_simpson(&f, a, b, 1e-13, 50).value,
            Repr::Piecewise { times, .. } | Repr::Ou { times, .. } => {
                let mut cuts = vec![a];
                cuts.extend(times.iter().copied().filter(|&x| x > a && x < b));
                cuts.push(b);
                let piecewise_constant = matches!(self.repr, Repr::Piecewise { .. });
                cuts.windows(2)
                    .map(|w| {
                        if piecewise_constant {
                            (w[1] - w[0]) * f(w[0])
                        } else {
                            adaptive_simpson(&f, w[0], w[1], 1e-13, 40).value
                        }
                    })
                    .sum()
            }
        };
        Ok(sign * total)
    }
}

pub fn sigma_left_limit(path: &SigmaPath, s: f64) -> Result<f64> {
    path.left_limit(s)
}

pub fn sigma_power_integral(path: &SigmaPath, p: f64, t: f64) -> Result<f64> {
    path.power_integral(p, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::JumpLaw;
    use crate::rng::{stream_rng, SimRng, Stream};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn path(spec: &SigmaSpec) -> SigmaPath {
        simulate_sigma(spec, -10.0, 10.0, 0.01, &mut SimRng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn constant_and_linear() {
        let p = path(&SigmaSpec::Constant(2.0));
        assert_eq!(p.value(3.3).unwrap(), 2.0);
        assert_eq!(p.left_limit(-3.3).unwrap(), 2.0);
        assert!((p.power_integral(3.0, 0.7).unwrap() - 0.7 * 8.0).abs() < 1e-15);
        let p = path(&SigmaSpec::Deterministic(DeterministicSigma::Linear { intercept: 1.0, slope: 1.0 }));
        assert_eq!(p.value(0.5).unwrap(), 1.5);
        assert_eq!(p.left_limit(0.5).unwrap(), 1.5);
        assert!((p.power_integral(1.0, 1.0).unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn step_path() {
        let p = path(&SigmaSpec::step(vec![0.0], vec![1.0, 3.0]).unwrap());
        assert_eq!(p.left_limit(0.0).unwrap(), 1.0);
        assert_eq!(p.value(0.0).unwrap(), 3.0);
        let p = path(&SigmaSpec::step(vec![0.5], vec![1.0, 2.0]).unwrap());
        assert!((p.power_integral(2.0, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(p.jumps, vec![JumpRecord { time: 0.5, size: 1.0 }]);
    }

    #[test]
    fn out_of_window() {
        let p = path(&SigmaSpec::Constant(1.0));
        assert!(matches!(p.left_limit(11.0), Err(Error::OutOfWindow { .. })));
        assert!(matches!(p.power_integral(1.0, 20.0), Err(Error::OutOfWindow { .. })));
    }

    fn ou_spec() -> SigmaSpec {
        let driver = DriverSpec::compound_poisson(2.0, JumpLaw::Rademacher { size: 0.5 }).unwrap();
        SigmaSpec::ou(1.0, 3.0, driver).unwrap()
    }

    #[test]
    fn ou_long_run_mean() {
        let p = simulate_sigma(&ou_spec(), 0.0, 200.0, 0.01, &mut SimRng::seed_from_u64(5)).unwrap();
        let mean = p.power_integral(1.0, 200.0).unwrap() / 200.0;
        // sigma stays positive with high probability at these parameters; check the signed mean too
        let signed: f64 = (0..20_000).map(|i| p.value(f64::from(i) * 0.01).unwrap()).sum::<f64>() / 20_000.0;
        assert!((signed - 1.0).abs() < 0.05, "{signed}");
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn ou_left_limit_at_jumps() {
        let p = simulate_sigma(&ou_spec(), 0.0, 20.0, 0.01, &mut SimRng::seed_from_u64(6)).unwrap();
        assert!(!p.jumps.is_empty());
        for j in &p.jumps {
            let before = p.left_limit(j.time).unwrap();
            let after = p.value(j.time).unwrap();
            assert!((after - before - j.size).abs() < 1e-12);
            // continuity from the left
            let near = p.value(j.time - 1e-12).unwrap();
            assert!((near - before).abs() < 1e-9);
        }
    }

    #[test]
    fn ou_sup_bounds_samples() {
        let p = simulate_sigma(&ou_spec(), 0.0, 20.0, 0.01, &mut SimRng::seed_from_u64(7)).unwrap();
        let sup = p.sup_abs(1.0, 19.0).unwrap();
        for i in 0..=1800 {
            assert!(p.value(1.0 + f64::from(i) * 0.01).unwrap().abs() <= sup + 1e-12);
        }
    }

    #[test]
    fn sigma_stream_is_independent_of_driver_stream() {
        let a = simulate_sigma(&ou_spec(), 0.0, 50.0, 0.1, &mut stream_rng(9, 4, Stream::Sigma)).unwrap();
        // consuming the driver stream has no influence on the sigma stream
        let mut driver = stream_rng(10, 4, Stream::Driver);
        let _: f64 = rand::Rng::random(&mut driver);
        let b = simulate_sigma(&ou_spec(), 0.0, 50.0, 0.1, &mut stream_rng(9, 4, Stream::Sigma)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn piecewise_integral_is_exact(levels in proptest::collection::vec(-3.0f64..3.0, 2..6), p in 0.5f64..3.0) {
            let n = levels.len() - 1;
            let breaks: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let path = path(&SigmaSpec::step(breaks.clone(), levels.clone()).unwrap());
            let got = path.power_integral(p, 1.0).unwrap();
            let width = 1.0 / (n + 1) as f64;
            // the first level is active on [0, breaks[0]) and so on
            let exact: f64 = levels.iter().map(|l| width * l.abs().powf(p)).sum();
            prop_assert!((got - exact).abs() <= 1e-14 * exact.max(1.0));
            for (b, w) in breaks.iter().zip(levels.windows(2)) {
                prop_assert_eq!(path.value(*b).unwrap(), w[1]);
                prop_assert_eq!(path.left_limit(*b).unwrap(), w[0]);
            }
        }
    }
}
