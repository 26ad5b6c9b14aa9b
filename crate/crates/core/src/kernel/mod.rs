//! Deterministic kernels `g`, `g0`, the small-scale shape `h_k` and diagnostics
//! built from them.

mod assumption;
mod hk;
mod phi;

pub use assumption::{check_assumption_a, AssumptionReport, ConditionCheck};
pub use hk::{hk_abs_power_integral, hk_raw, HkIntegral, HkParams};
pub use phi::{phi_functional, phi_q};

use crate::error::{invalid, Error, Result};
use crate::numeric::{binom, falling_factorial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `c0 t^alpha exp(-decay t)`
    Gamma,
    /// `c0 t^alpha`, the linear fractional stable motion kernel.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum G0Mode {
    Zero,
    EqualG,
}

/// The kernel pair `(g, g0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    c0: f64,
    alpha: f64,
    decay: f64,
    g0_mode: G0Mode,
    delta: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, c0: f64, alpha: f64, decay: f64, g0_mode: G0Mode, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if c0 == 0.0 || !c0.is_finite() {
            return Err(invalid("c0 must be finite and nonzero"));
        }
        if !(decay >= 0.0 && decay.is_finite()) {
            return Err(invalid(format!("decay must be >= 0, got {decay}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("delta must be positive, got {delta}")));
        }
        if family == KernelFamily::Power {
            if g0_mode != G0Mode::EqualG {
                return Err(invalid("power kernel requires g0 = g"));
            }
            if decay != 0.0 {
                return Err(invalid("power kernel has no decay"));
            }
        }
        Ok(Self { family, c0, alpha, decay, g0_mode, delta })
    }

    /// Gamma kernel `c0 t^alpha e^{-decay t}` with `g0 = 0` and `delta = 1`.
    pub fn gamma(c0: f64, alpha: f64, decay: f64) -> Result<Self> {
        Self::new(KernelFamily::Gamma, c0, alpha, decay, G0Mode::Zero, 1.0)
    }

    /// Power kernel `c0 t^alpha` with `g0 = g`.
    pub fn power(c0: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::Power, c0, alpha, 0.0, G0Mode::EqualG, 1.0)
    }

    pub fn with_g0_mode(self, mode: G0Mode) -> Result<Self> {
        Self::new(self.family, self.c0, self.alpha, self.decay, mode, self.delta)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.family, self.c0, self.alpha, self.decay, self.g0_mode, delta)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn decay(&self) -> f64 {
        self.decay
    }
    pub fn g0_mode(&self) -> G0Mode {
        self.g0_mode
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval_g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Gamma => self.c0 * t.powf(self.alpha) * (-self.decay * t).exp(),
            KernelFamily::Power => self.c0 * t.powf(self.alpha),
        }
    }

    pub fn eval_g0(&self, t: f64) -> f64 {
        match self.g0_mode {
            G0Mode::Zero => 0.0,
            G0Mode::EqualG => self.eval_g(t),
        }
    }

    /// Closed-form `g^{(k)}(t)` for `t > 0`.
    pub fn eval_g_deriv(&self, k: u32, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("derivative needs t > 0, got {t}")));
        }
        Ok(self.deriv_unchecked(k, t))
    }

    pub(crate) fn deriv_unchecked(&self, k: u32, t: f64) -> f64 {
        match self.family {
            KernelFamily::Power => self.c0 * falling_factorial(self.alpha, k) * t.powf(self.alpha - f64::from(k)),
            KernelFamily::Gamma => {
                let lam = self.decay;
                let mut acc = 0.0;
                for j in 0..=k {
                    let ff = falling_factorial(self.alpha, j);
                    if ff == 0.0 {
                        continue;
                    }
                    let lam_pow = if k == j { 1.0 } else { (-lam).powi((k - j) as i32) };
                    acc += binom(k, j) * lam_pow * ff * t.powf(self.alpha - f64::from(j));
                }
                self.c0 * (-lam * t).exp() * acc
            }
        }
    }

    /// `g(t - s) - g0(-s)`, evaluated without cancellation when both terms are large.
    pub fn contribution(&self, t: f64, s: f64) -> f64 {
        if self.g0_mode == G0Mode::Zero || s >= 0.0 {
            return self.eval_g(t - s);
        }
        let u = -s;
        if t - s <= 0.0 {
            return -self.eval_g(u);
        }
        let log_ratio = self.alpha * (t / u).ln_1p();
        match self.family {
            KernelFamily::Power => self.c0 * u.powf(self.alpha) * log_ratio.exp_m1(),
            KernelFamily::Gamma => {
                self.c0 * u.powf(self.alpha) * (-self.decay * u).exp() * (log_ratio - self.decay * t).exp_m1()
            }
        }
    }

    /// Discrete weight `g_{i,n}(s) = sum_j (-1)^j C(k,j) g((i-j)/n - s)`.
    pub fn weights_gin(&self, k: u32, n: u64, i: i64, s: f64) -> f64 {
        weights_with(|x| self.eval_g(x), k, n, i, s)
    }

    /// Integrability exponent check of the kernel contribution for the burn-in
    /// bound: returns an error when `∫ |g(t-s) - g0(-s)|^q ds` has a heavy tail.
    pub(crate) fn tail_integrable(&self, q: f64) -> Result<()> {
        let heavy = match (self.family, self.g0_mode) {
            (KernelFamily::Gamma, _) if self.decay > 0.0 => false,
            (KernelFamily::Gamma, G0Mode::Zero) => true,
            // first difference decays like s^(alpha-1)
            _ => (self.alpha - 1.0) * q >= -1.0,
        };
        if heavy {
            Err(Error::NonIntegrableTail(format!(
                "kernel {:?} with alpha = {} has no q-integrable tail for q = {q}",
                self.family, self.alpha
            )))
        } else {
            Ok(())
        }
    }
}

/// `sum_j (-1)^j C(k,j) g((i-j)/n - s)` for an arbitrary kernel function.
pub fn weights_with<G: Fn(f64) -> f64>(g: G, k: u32, n: u64, i: i64, s: f64) -> f64 {
    let n = n as f64;
    (0..=k)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(k, j) * g((i - i64::from(j)) as f64 / n - s)
        })
        .sum()
}
