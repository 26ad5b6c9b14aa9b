use super::{G0Mode, KernelFamily, KernelSpec};
use crate::numeric::{adaptive_simpson, falling_factorial};

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

/// Per-condition diagnostics of the kernel regularity assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub conditions: Vec<ConditionCheck>,
    /// Split point actually used: the configured `delta`, moved right until
    /// `|g'|` and `|g^(k)|` are nonincreasing beyond it.
    pub effective_delta: f64,
    /// Fitted constant `C` in `|g^(k)(t)| <= C t^(alpha-k)` on `(0, effective_delta)`.
    pub fitted_c: f64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, passed: bool, value: Option<f64>, detail: String) -> ConditionCheck {
    ConditionCheck { name, passed, value, detail }
}

/// Behaves like a pure power `c t^(alpha-j)` at infinity.
fn power_like(spec: &KernelSpec) -> bool {
    spec.family() == KernelFamily::Power || spec.decay() == 0.0
}

/// `∫_delta^∞ |g^(j)|^theta`, `None` when infinite.
fn derivative_tail_integral(spec: &KernelSpec, j: u32, theta: f64, delta: f64) -> Option<f64> {
    let ff = falling_factorial(spec.alpha(), j);
    if power_like(spec) {
        if ff == 0.0 {
            return Some(0.0);
        }
        let e = (spec.alpha() - f64::from(j)) * theta;
        if e >= -1.0 {
            return None;
        }
        return Some((spec.c0() * ff).abs().powf(theta) * delta.powf(e + 1.0) / (-e - 1.0));
    }
    // exponential decay: integrate in log time up to where e^{-decay theta t} is negligible
    let t_end = delta + 60.0 / (spec.decay() * theta) + 10.0;
    let f = |v: f64| {
        let t = v.exp();
        spec.deriv_unchecked(j, t).abs().powf(theta) * t
    };
    Some(adaptive_simpson(&f, delta.ln(), t_end.ln(), 1e-12, 40).value)
}

fn log_grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(move |i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
}

/// Numerical check of the kernel conditions for increment order `k` and
/// integrability index `theta`. Failures are reported, never raised.
pub fn check_assumption_a(spec: &KernelSpec, k: u32, theta: f64) -> AssumptionReport {
    let mut conditions = Vec::new();
    let alpha = spec.alpha();
    let k = k.max(1);

    let t_small: f64 = 1e-9 * spec.delta().min(1.0);
    let ratio = spec.eval_g(t_small) / (spec.c0() * t_small.powf(alpha));
    conditions.push(check(
        "small_time_limit",
        (ratio - 1.0).abs() < 1e-6,
        Some(ratio),
        format!("g(t)/(c0 t^alpha) = {ratio} at t = {t_small:e}"),
    ));

    // Find the split point beyond which |g'| and |g^(k)| are nonincreasing.
    let grid: Vec<f64> = log_grid(spec.delta(), spec.delta() * 1e6, 600).collect();
    let orders: Vec<u32> = if k == 1 { vec![1] } else { vec![1, k] };
    let mut start = 0usize;
    for &j in &orders {
        let vals: Vec<f64> = grid.iter().map(|&t| spec.deriv_unchecked(j, t).abs()).collect();
        // last index where the sequence increases
        if let Some(last_up) = (1..vals.len()).rev().find(|&i| vals[i] > vals[i - 1] * (1.0 + 1e-12)) {
            start = start.max(last_up);
        }
    }
    let monotone = start + 1 < grid.len() / 2;
    let effective_delta = grid[start.min(grid.len() - 1)];
    conditions.push(check(
        "monotone_tail",
        monotone,
        Some(effective_delta),
        if monotone {
            format!("|g'| and |g^({k})| nonincreasing on ({effective_delta}, inf)")
        } else {
            "|g'| or |g^(k)| keeps increasing on (delta, inf)".to_string()
        },
    ));

    for (&j, name) in orders.iter().zip(["tail_g_prime", "tail_g_k"]) {
        let integral = derivative_tail_integral(spec, j, theta, effective_delta);
        conditions.push(check(
            name,
            integral.is_some(),
            integral,
            match integral {
                Some(v) => format!("int_delta^inf |g^({j})|^theta = {v}"),
                None => format!("|g^({j})|^theta not integrable at infinity for theta = {theta}"),
            },
        ));
    }
    if k == 1 {
        let first = conditions.last().cloned().expect("tail condition pushed");
        conditions.push(ConditionCheck { name: "tail_g_k", ..first });
    }

    let c_fit = log_grid(effective_delta * 1e-12, effective_delta, 400)
        .map(|t| spec.deriv_unchecked(k, t).abs() / t.powf(alpha - f64::from(k)))
        .fold(0.0, f64::max);
    conditions.push(check(
        "local_derivative_bound",
        c_fit.is_finite(),
        Some(c_fit),
        format!("|g^({k})(t)| <= {c_fit} t^(alpha-k) on (0, {effective_delta})"),
    ));

    let (bounded, in_l_theta) = match spec.g0_mode() {
        G0Mode::EqualG => (true, true),
        G0Mode::Zero => {
            let decays = spec.family() == KernelFamily::Gamma && spec.decay() > 0.0;
            (decays, decays)
        }
    };
    conditions.push(check(
        "g_minus_g0_bounded_l_theta",
        bounded && in_l_theta,
        None,
        format!("g - g0 bounded: {bounded}, in L^theta(R+): {in_l_theta}"),
    ));

    let a_log = if power_like(spec) {
        falling_factorial(alpha, k) == 0.0 || (alpha - f64::from(k)) * theta < -1.0
    } else {
        true
    };
    conditions.push(check("log_moment", a_log, None, "int_delta^inf |g^(k)|^theta log(1/|g^(k)|) finite".to_string()));

    AssumptionReport { conditions, effective_delta, fitted_c: c_fit }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_kernels_pass() {
        for &(alpha, lam) in &[(0.1, 1.0), (0.5, 3.0), (1.2, 0.5), (2.7, 1.0)] {
            for k in 1..=3 {
                let spec = KernelSpec::gamma(1.0, alpha, lam).unwrap();
                let report = check_assumption_a(&spec, k, 2.0);
                assert!(report.all_passed(), "alpha={alpha} lam={lam} k={k}: {report:#?}");
            }
        }
    }

    #[test]
    fn power_kernel_tail_criterion() {
        let spec = KernelSpec::power(1.0, 0.2).unwrap();
        let report = check_assumption_a(&spec, 1, 1.5);
        assert!(report.all_passed(), "{report:#?}");

        let spec = KernelSpec::power(1.0, 0.5).unwrap();
        let report = check_assumption_a(&spec, 1, 1.5);
        assert!(!report.condition("tail_g_prime").unwrap().passed);
        assert!(!report.all_passed());
    }

    #[test]
    fn increasing_derivative_fails_monotonicity() {
        let spec = KernelSpec::power(1.0, 1.2).unwrap();
        let report = check_assumption_a(&spec, 1, 1.5);
        assert!(!report.condition("monotone_tail").unwrap().passed);
    }

    #[test]
    fn undamped_gamma_is_not_in_l_theta() {
        let spec = KernelSpec::gamma(1.0, 0.3, 0.0).unwrap();
        let report = check_assumption_a(&spec, 1, 2.0);
        assert!(!report.condition("g_minus_g0_bounded_l_theta").unwrap().passed);
    }
}
