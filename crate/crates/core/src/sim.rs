//! Assembly of LSS paths from kernel, volatility and driver.
//!
//! Compound Poisson drivers are summed exactly over their jumps. Stable drivers
//! use a left-point Riemann sum: a uniform fine grid near the observation window
//! (convolved by FFT) and geometric cells further in the past, whose smooth
//! contribution is interpolated in `t` from Chebyshev nodes.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::driver::{simulate_stable_hybrid, DriverPath, JumpRecord};
use crate::error::{invalid, Error, Result};
use crate::kernel::{G0Mode, KernelFamily, KernelSpec};
use crate::numeric::ChebyshevInterpolant;
use crate::volatility::SigmaPath;

const CHEBYSHEV_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Observations per unit time.
    pub n: u64,
    pub t_max: f64,
    /// Truncation point of the infinite past: the driver starts at `-burn_in`.
    pub burn_in: f64,
    /// Driver cells per observation cell.
    pub fine_factor: usize,
    pub tail_tol: f64,
    /// Length of the uniformly gridded past before time 0 (at least `t_max`).
    pub near_window: f64,
    /// Geometric far cells per e-fold of distance from time 0.
    pub far_cells_per_efold: usize,
}

impl SimConfig {
    pub fn new(n: u64, t_max: f64, burn_in: f64) -> Self {
        Self { n, t_max, burn_in, fine_factor: 8, tail_tol: 1e-6, near_window: 2.0, far_cells_per_efold: 64 }
    }

    /// Config whose burn-in is the truncation point for `kernel` at index `q`.
    pub fn for_kernel(kernel: &KernelSpec, q: f64, n: u64, t_max: f64) -> Result<Self> {
        let mut cfg = Self::new(n, t_max, 0.0);
        cfg.burn_in = burnin_truncation_for_horizon(kernel, q, cfg.tail_tol, t_max.max(1.0))?;
        Ok(cfg)
    }

    pub fn observation_count(&self) -> usize {
        (self.n as f64 * self.t_max + 1e-9).floor() as usize + 1
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.burn_in > 0.0) {
            return Err(invalid(format!("burn_in must be positive, got {}", self.burn_in)));
        }
        if self.fine_factor == 0 || self.far_cells_per_efold == 0 {
            return Err(invalid("fine_factor and far_cells_per_efold must be positive"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(invalid("tail_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kernel: KernelSpec,
    pub sigma: String,
    pub driver: String,
    pub burn_in: f64,
    pub fine_factor: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LssPath {
    pub eval_times: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl LssPath {
    /// Observation frequency implied by a uniform `i/n` grid.
    pub fn frequency(&self) -> Option<f64> {
        (self.eval_times.len() >= 2).then(|| 1.0 / (self.eval_times[1] - self.eval_times[0]))
    }
}

/// Upper bound on `∫_T^∞ |g(t+u) - g0(u)|^q du` valid for all `t` in `[0, horizon]`.
pub fn tail_bound(kernel: &KernelSpec, q: f64, horizon: f64, t_b: f64) -> Result<f64> {
    kernel.tail_integrable(q)?;
    let (c0, alpha, lam) = (kernel.c0().abs(), kernel.alpha(), kernel.decay());
    if kernel.family() == KernelFamily::Power || lam == 0.0 {
        // concavity: (u+t)^alpha - u^alpha <= alpha t u^(alpha-1)
        let e = (alpha - 1.0) * q + 1.0;
        return Ok((c0 * alpha * horizon).powf(q) * t_b.powf(e) / (-e));
    }
    // log-derivative of u^(alpha q) e^(-lam q u) is at most alpha q / T - lam q on [T, inf)
    let rate = lam * q - alpha * q / t_b;
    if rate <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let single = c0.powf(q) * t_b.powf(alpha * q) * (-lam * q * t_b).exp() / rate;
    Ok(match kernel.g0_mode() {
        G0Mode::Zero => single,
        // |a - b|^q <= max(2, 2^q) (|a|^q + |b|^q) / 2
        G0Mode::EqualG => 2f64.max(2f64.powf(q)) * single,
    })
}

/// Smallest integer `T` with `tail_bound(kernel, q, 1, T) < tol`.
pub fn burnin_truncation(kernel: &KernelSpec, q: f64, tol: f64) -> Result<f64> {
    burnin_truncation_for_horizon(kernel, q, tol, 1.0)
}

pub fn burnin_truncation_for_horizon(kernel: &KernelSpec, q: f64, tol: f64, horizon: f64) -> Result<f64> {
    if !(q > 0.0 && tol > 0.0 && horizon > 0.0) {
        return Err(invalid("q, tol and horizon must be positive"));
    }
    kernel.tail_integrable(q)?;
    let (c0, alpha) = (kernel.c0().abs(), kernel.alpha());
    if kernel.family() == KernelFamily::Power || kernel.decay() == 0.0 {
        let e = (alpha - 1.0) * q + 1.0;
        let t = (tol * -e / (c0 * alpha * horizon).powf(q)).powf(1.0 / e);
        // guard against rounding in the closed-form inverse
        let mut t = t.ceil().max(1.0);
        while tail_bound(kernel, q, horizon, t)? >= tol {
            t = (t * (1.0 + 1e-12)).ceil();
        }
        return Ok(t);
    }
    let bound = |t: f64| tail_bound(kernel, q, horizon, t);
    let mut hi: f64 = 1.0;
    while bound(hi)? >= tol {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NonIntegrableTail("tail bound does not reach tolerance".into()));
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 0.5 {
        let mid = 0.5 * (lo + hi);
        if bound(mid)? >= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = hi.ceil();
    while t > 1.0 && bound(t - 1.0)? < tol {
        t -= 1.0;
    }
    Ok(t)
}

/// Exact jump-sum evaluator of `X_t` and `F_u` for a finite jump list.
#[derive(Debug, Clone)]
pub struct JumpSum {
    kernel: KernelSpec,
    /// `(s_j, sigma_{s_j-} dL_j)` in time order.
    terms: Vec<(f64, f64)>,
}

impl JumpSum {
    pub fn new(kernel: &KernelSpec, sigma: &SigmaPath, jumps: &[JumpRecord]) -> Result<Self> {
        let terms = jumps
            .iter()
            .map(|j| {
                let s = sigma.left_limit(j.time).map_err(|_| {
                    Error::InsufficientWindow(format!("volatility path does not cover jump at {}", j.time))
                })?;
                Ok((j.time, s * j.size))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kernel: *kernel, terms })
    }

    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.0)
    }

    /// `sum_j (g(t - s_j) - g0(-s_j)) sigma_{s_j-} dL_j`.
    pub fn x(&self, t: f64) -> f64 {
        let last = t.max(0.0);
        let mut acc = 0.0;
        for &(s, w) in &self.terms {
            if s > last {
                break;
            }
            acc += self.kernel.contribution(t, s) * w;
        }
        acc
    }

    /// `sum_{s_j < u} g^(k)(u - s_j) sigma_{s_j-} dL_j`.
    pub fn f(&self, k: u32, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(s, w) in &self.terms {
            if s >= u {
                break;
            }
            acc += self.kernel.deriv_unchecked(k, u - s) * w;
        }
        acc
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("evaluation times must be finite"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("evaluation times must be strictly increasing"));
    }
    Ok(())
}

/// Exact `X_t` at `eval_times` for a compound Poisson driver.
pub fn simulate_lss_cp(
    kernel: &KernelSpec,
    sigma: &SigmaPath,
    driver: &DriverPath,
    eval_times: &[f64],
) -> Result<LssPath> {
    check_times(eval_times)?;
    let jumps = driver.jumps()?;
    if let Some(&last) = eval_times.last() {
        if last > driver.window_end {
            return Err(Error::InsufficientWindow(format!(
                "driver ends at {} before evaluation time {last}",
                driver.window_end
            )));
        }
    }
    let sum = JumpSum::new(kernel, sigma, jumps)?;
    let values = eval_times.iter().map(|&t| sum.x(t)).collect();
    Ok(LssPath {
        eval_times: eval_times.to_vec(),
        values,
        provenance: Provenance {
            kernel: *kernel,
            sigma: sigma.label.clone(),
            driver: format!("compound Poisson jump list ({} jumps)", jumps.len()),
            burn_in: -driver.window_start,
            fine_factor: None,
            seed: None,
        },
    })
}

/// Reusable stable-mode simulator: grid geometry, FFT plans and the kernel
/// spectrum are computed once per configuration.
pub struct StableSimulator {
    kernel: KernelSpec,
    beta: f64,
    gamma_scale: f64,
    config: SimConfig,
    step: f64,
    past_cells: usize,
    total_cells: usize,
    obs: usize,
    fft_len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StableSimulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StableSimulator")
            .field("kernel", &self.kernel)
            .field("beta", &self.beta)
            .field("gamma_scale", &self.gamma_scale)
            .field("config", &self.config)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl StableSimulator {
    pub fn new(kernel: &KernelSpec, beta: f64, gamma_scale: f64, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        crate::driver::DriverSpec::stable(beta, gamma_scale)?;
        let needed = burnin_truncation_for_horizon(kernel, beta, config.tail_tol, config.t_max.max(1.0))?;
        if config.burn_in < needed {
            return Err(Error::InsufficientWindow(format!(
                "burn_in {} is below the truncation point {needed} for tail_tol {}",
                config.burn_in, config.tail_tol
            )));
        }
        let cells_per_unit = config.n as f64 * config.fine_factor as f64;
        let step = 1.0 / cells_per_unit;
        let near = config.near_window.max(config.t_max).ceil().min(config.burn_in);
        let past_cells = (near * cells_per_unit + 1e-6).floor() as usize;
        let obs = config.observation_count();
        let total_cells = past_cells + (obs - 1) * config.fine_factor;
        let fft_len = (2 * total_cells + 2).next_power_of_two();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut spectrum = vec![Complex::new(0.0, 0.0); fft_len];
        for (m, slot) in spectrum.iter_mut().enumerate().take(total_cells + 1).skip(1) {
            slot.re = kernel.eval_g(m as f64 * step);
        }
        forward.process(&mut spectrum);
        Ok(Self {
            kernel: *kernel,
            beta,
            gamma_scale,
            config: config.clone(),
            step,
            past_cells,
            total_cells,
            obs,
            fft_len,
            spectrum,
            forward,
            inverse,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn fine_step(&self) -> f64 {
        self.step
    }

    pub fn grid_start(&self) -> f64 {
        -(self.past_cells as f64) * self.step
    }

    pub fn eval_times(&self) -> Vec<f64> {
        (0..self.obs).map(|i| i as f64 / self.config.n as f64).collect()
    }

    /// Driver increments on this simulator's geometry.
    pub fn sample_driver<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DriverPath> {
        simulate_stable_hybrid(
            self.beta,
            self.gamma_scale,
            -self.config.burn_in,
            self.grid_start(),
            self.step,
            self.total_cells,
            self.config.far_cells_per_efold,
            rng,
        )
    }

    pub fn simulate<R: Rng + ?Sized>(&self, sigma: &SigmaPath, rng: &mut R) -> Result<LssPath> {
        let driver = self.sample_driver(rng)?;
        self.evaluate(sigma, &driver)
    }

    /// Left-point Riemann sum for a given driver realization.
    pub fn evaluate(&self, sigma: &SigmaPath, driver: &DriverPath) -> Result<LssPath> {
        if driver.increments.len() != self.total_cells
            || (driver.grid_step - self.step).abs() > 1e-15 * self.step
            || (driver.grid_start - self.grid_start()).abs() > 1e-9 * self.step
        {
            return Err(invalid("driver grid does not match the simulator geometry"));
        }
        let window_start = driver.far_cells.first().map_or(driver.grid_start, |c| c.start);
        if sigma.window_start > window_start || sigma.window_end < self.config.t_max {
            return Err(Error::InsufficientWindow(format!(
                "volatility window [{}, {}] does not cover [{window_start}, {}]",
                sigma.window_start, sigma.window_end, self.config.t_max
            )));
        }
        let start = self.grid_start();
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (c, (slot, &inc)) in buf.iter_mut().zip(&driver.increments).enumerate() {
            slot.re = sigma.left_limit(start + c as f64 * self.step)? * inc;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        let ff = self.config.fine_factor;
        let y = |i: usize| buf[self.past_cells + i * ff].re * scale;
        let y0 = match self.kernel.g0_mode() {
            G0Mode::Zero => 0.0,
            G0Mode::EqualG => y(0),
        };

        let far = self.far_interpolant(sigma, driver)?;
        let times = self.eval_times();
        let values: Vec<f64> =
            times.iter().enumerate().map(|(i, &t)| y(i) - y0 + far.as_ref().map_or(0.0, |f| f.eval(t))).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotConverged("non-finite value in stable Riemann sum".into()));
        }
        Ok(LssPath {
            eval_times: times,
            values,
            provenance: Provenance {
                kernel: self.kernel,
                sigma: sigma.label.clone(),
                driver: format!("stable(beta={}, gamma={})", self.beta, self.gamma_scale),
                burn_in: self.config.burn_in,
                fine_factor: Some(self.config.fine_factor),
                seed: None,
            },
        })
    }

    /// Far-past contribution on `[0, t_max]` from the geometric cells.
    fn far_interpolant(&self, sigma: &SigmaPath, driver: &DriverPath) -> Result<Option<ChebyshevInterpolant>> {
        if driver.far_cells.is_empty() {
            return Ok(None);
        }
        let weights = driver
            .far_cells
            .iter()
            .map(|c| Ok((c.start, sigma.left_limit(c.start)? * c.increment)))
            .collect::<Result<Vec<_>>>()?;
        let t_max = (self.config.obs_time(self.obs - 1)).max(self.step);
        let nodes = ChebyshevInterpolant::nodes(0.0, t_max, CHEBYSHEV_NODES);
        let values =
            nodes.iter().map(|&t| weights.iter().map(|&(s, w)| self.kernel.contribution(t, s) * w).sum()).collect();
        Ok(Some(ChebyshevInterpolant::new(0.0, t_max, values)))
    }
}

impl SimConfig {
    fn obs_time(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }
}

pub fn simulate_lss_stable<R: Rng + ?Sized>(
    kernel: &KernelSpec,
    sigma: &SigmaPath,
    beta: f64,
    gamma_scale: f64,
    config: &SimConfig,
    rng: &mut R,
) -> Result<LssPath> {
    StableSimulator::new(kernel, beta, gamma_scale, config)?.simulate(sigma, rng)
}

/// `F_u = ∫_{-∞}^u g^(k)(u - s) sigma_{s-} dL_s` on `grid`: exact jump sum for a jump
/// list, left-point Riemann sum over the driver cells otherwise.
pub fn compute_f_path(
    kernel: &KernelSpec,
    k: u32,
    sigma: &SigmaPath,
    driver: &DriverPath,
    grid: &[f64],
) -> Result<Vec<f64>> {
    check_times(grid)?;
    if let Some(&last) = grid.last() {
        if last > driver.window_end {
            return Err(Error::InsufficientWindow(format!("driver ends before {last}")));
        }
    }
    match &driver.jumps {
        Some(jumps) => {
            let sum = JumpSum::new(kernel, sigma, jumps)?;
            let offset = 0.5 * grid.windows(2).map(|w| w[1] - w[0]).fold(1e-6, f64::min);
            Ok(grid
                .iter()
                .map(|&u| {
                    // g^(k) blows up at 0+: move evaluation points off the jump set
                    let hit = jumps.iter().any(|j| (j.time - u).abs() <= 1e-12 * u.abs().max(1.0));
                    sum.f(k, if hit { u + offset } else { u })
                })
                .collect())
        }
        None => {
            let cells = driver
                .cells()
                .map(|c| Ok((c.start, sigma.left_limit(c.start)? * c.increment)))
                .collect::<Result<Vec<_>>>()?;
            Ok(grid
                .iter()
                .map(|&u| {
                    cells.iter().take_while(|c| c.0 < u).map(|&(s, w)| kernel.deriv_unchecked(k, u - s) * w).sum()
                })
                .collect())
        }
    }
}
