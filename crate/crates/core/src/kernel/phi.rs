use crate::driver::{stable_levy_density_constant, DriverSpec, JumpLaw};
use crate::error::{invalid, Error, Result};
use crate::numeric::{adaptive_simpson, KahanSum};

/// `|x|^q` outside the unit ball, `x^2` inside.
pub fn phi_q(q: f64, x: f64) -> f64 {
    let a = x.abs();
    if a > 1.0 {
        a.powf(q)
    } else {
        a * a
    }
}

const CHUNK: f64 = 4.0;
const MAX_CHUNKS: usize = 2000;
const STOP_REL: f64 = 1e-13;

/// `∫ f(v) dv` from `v0` outward in direction `dir` (±1), chunk by chunk until the
/// last chunk is negligible.
fn integrate_outward<F: Fn(f64) -> f64>(f: &F, v0: f64, dir: f64, what: &str) -> Result<f64> {
    let mut total = KahanSum::new();
    for c in 0..MAX_CHUNKS {
        let a = v0 + dir * CHUNK * c as f64;
        let b = a + dir * CHUNK;
        let piece = adaptive_simpson(f, a.min(b), a.max(b), 1e-15, 40).value;
        total.add(piece);
        if !total.value().is_finite() {
            break;
        }
        if piece.abs() <= STOP_REL * total.value().abs() || (piece == 0.0 && c > 0) {
            return Ok(total.value());
        }
    }
    Err(Error::DivergentIntegral(format!("{what}: partial sums do not stabilize")))
}

/// `∫ phi_q(a u) nu(du)` for one value `a` of the integrand.
fn levy_integral(q: f64, driver: &DriverSpec, a: f64, stable_unit: Option<f64>) -> Result<f64> {
    let a = a.abs();
    if a == 0.0 {
        return Ok(0.0);
    }
    match driver {
        DriverSpec::Stable { beta, .. } => {
            // homogeneity: ∫ phi(a u) |u|^{-1-beta} du = a^beta ∫ phi(w) |w|^{-1-beta} dw
            Ok(stable_unit.expect("unit integral precomputed") * a.powf(*beta))
        }
        DriverSpec::CompoundPoisson { rate, jump_law } => match jump_law {
            JumpLaw::Rademacher { size } => Ok(rate * phi_q(q, a * size)),
            JumpLaw::Atoms(atoms) => Ok(rate * atoms.iter().map(|&(s, p)| p * phi_q(q, a * s)).sum::<f64>()),
            JumpLaw::TwoSidedPareto { tail_index, min_size } => {
                // |J| has density theta m^theta x^{-1-theta} on [m, inf); x = e^v
                let theta = *tail_index;
                let norm = theta * min_size.powf(theta);
                let f = |v: f64| phi_q(q, a * v.exp()) * (-theta * v).exp();
                let v_min = min_size.ln();
                let kink = -a.ln();
                let body = if kink > v_min { adaptive_simpson(&f, v_min, kink, 1e-15, 50).value } else { 0.0 };
                let tail = integrate_outward(&f, kink.max(v_min), 1.0, "pareto jump integral")?;
                Ok(rate * norm * (body + tail))
            }
        },
    }
}

/// `2 c ∫_0^∞ phi_q(w) w^{-1-beta} dw` via `w = e^v`, split at the kink `v = 0`.
fn stable_unit_integral(q: f64, beta: f64, gamma: f64) -> Result<f64> {
    let c = stable_levy_density_constant(beta, gamma);
    let f = |v: f64| phi_q(q, v.exp()) * (-beta * v).exp();
    let left = integrate_outward(&f, 0.0, -1.0, "small-jump integral")?;
    let right = integrate_outward(&f, 0.0, 1.0, "large-jump integral")?;
    Ok(2.0 * c * (left + right))
}

/// `∫∫ phi_q(f(s) u) ds nu(du)` with the `s`-integral taken as a left-point sum
/// over the cells of `grid`.
pub fn phi_functional(q: f64, driver: &DriverSpec, grid: &[f64], values: &[f64]) -> Result<f64> {
    if !(q == 0.0 || q >= 1.0) {
        return Err(invalid(format!("q must be 0 or at least 1, got {q}")));
    }
    if grid.len() != values.len() {
        return Err(invalid("grid and values differ in length"));
    }
    if grid.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: grid.len() });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid must be strictly increasing"));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let unit = match driver {
        DriverSpec::Stable { beta, gamma_scale } => Some(stable_unit_integral(q, *beta, *gamma_scale)?),
        DriverSpec::CompoundPoisson { .. } => None,
    };
    let mut total = KahanSum::new();
    for i in 0..grid.len() - 1 {
        let width = grid[i + 1] - grid[i];
        total.add(width * levy_integral(q, driver, values[i], unit)?);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid(cells: usize, level: f64) -> (Vec<f64>, Vec<f64>) {
        let grid: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let mut values = vec![level; cells + 1];
        values[cells] = 0.0;
        (grid, values)
    }

    #[test]
    fn zero_function() {
        let d = DriverSpec::stable(1.5, 1.0).unwrap();
        let (g, _) = unit_grid(10, 0.0);
        assert_eq!(phi_functional(0.0, &d, &g, &[0.0; 11]).unwrap(), 0.0);
    }

    #[test]
    fn rademacher_atoms_on_indicator() {
        let d = DriverSpec::compound_poisson(2.0, JumpLaw::Rademacher { size: 1.0 }).unwrap();
        let (g, v) = unit_grid(100, 1.0);
        assert!((phi_functional(0.0, &d, &g, &v).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stable_matches_double_riemann_sum() {
        let beta = 1.5;
        let d = DriverSpec::stable(beta, 1.0).unwrap();
        let (g, v) = unit_grid(50, 0.5);
        let got = phi_functional(0.0, &d, &g, &v).unwrap();

        // midpoint sum over u on a log-uniform grid, times the unit-length s-integral
        let c = stable_levy_density_constant(beta, 1.0);
        let (lo, hi) = (-60.0f64, 90.0f64);
        let cells = 3_000_000usize;
        let h = (hi - lo) / cells as f64;
        let mut acc = KahanSum::new();
        for i in 0..cells {
            let u = (lo + (i as f64 + 0.5) * h).exp();
            acc.add(phi_q(0.0, 0.5 * u) * u.powf(-beta) * h);
        }
        let oracle = 2.0 * c * acc.value();
        assert!((got - oracle).abs() < 1e-4 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn stable_large_jump_divergence() {
        let d = DriverSpec::stable(1.5, 1.0).unwrap();
        let (g, v) = unit_grid(4, 1.0);
        assert!(matches!(phi_functional(2.0, &d, &g, &v), Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn pareto_matches_closed_form() {
        // theta = 3, m = 1, q = 1, a = 0.5: kink at |J| = 2
        let d = DriverSpec::compound_poisson(1.0, JumpLaw::TwoSidedPareto { tail_index: 3.0, min_size: 1.0 }).unwrap();
        let (g, v) = unit_grid(1, 0.5);
        let got = phi_functional(1.0, &d, &g, &v).unwrap();
        // ∫_1^2 (x/2)^2 3 x^-4 dx + ∫_2^∞ (x/2) 3 x^-4 dx
        let exact = 0.75 * (1.0 - 0.5) + 1.5 * (1.0 / 8.0);
        assert!((got - exact).abs() < 1e-10, "{got} vs {exact}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scaling_homogeneity(lambda in 0.0f64..5.0, q in prop_oneof![Just(0.0), 1.0f64..1.4], seed in 0u64..1000) {
            let d = DriverSpec::stable(1.5, 1.0).unwrap();
            let grid: Vec<f64> = (0..=8).map(|i| f64::from(i) / 8.0).collect();
            let values: Vec<f64> = (0..=8).map(|i| ((seed + i) as f64 * 0.37).sin()).collect();
            let scaled: Vec<f64> = values.iter().map(|v| lambda * v).collect();
            let base = phi_functional(q, &d, &grid, &values).unwrap();
            let lhs = phi_functional(q, &d, &grid, &scaled).unwrap();
            let factor = (lambda * lambda).max(lambda.powf(q));
            prop_assert!(lhs <= factor * base * (1.0 + 1e-9) + 1e-300);
        }
    }
}
