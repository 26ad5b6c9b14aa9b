//! Symmetric Lévy drivers: stable variates and grid increments, compound Poisson
//! jump lists, and the big/small jump split.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// `±size` with probability 1/2 each.
    Rademacher { size: f64 },
    /// `±min_size U^{-1/tail_index}`, so `P(|J| > x) = (min_size/x)^tail_index`.
    TwoSidedPareto { tail_index: f64, min_size: f64 },
    /// Positive sizes with probabilities; every atom is mirrored with a random sign.
    Atoms(Vec<(f64, f64)>),
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Rademacher { size } if *size > 0.0 && size.is_finite() => Ok(()),
            JumpLaw::Rademacher { size } => Err(invalid(format!("jump size must be positive, got {size}"))),
            JumpLaw::TwoSidedPareto { tail_index, min_size } => {
                if *tail_index > 0.0 && *min_size > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("pareto law needs tail_index > 0 and min_size > 0"))
                }
            }
            JumpLaw::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(invalid("atom list is empty"));
                }
                if atoms.iter().any(|&(s, p)| !(s > 0.0) || !(p > 0.0)) {
                    return Err(invalid("atoms need positive sizes and probabilities"));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("atom probabilities sum to {total}, expected 1")));
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = match self {
            JumpLaw::Rademacher { size } => *size,
            JumpLaw::TwoSidedPareto { tail_index, min_size } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                min_size * u.powf(-1.0 / tail_index)
            }
            JumpLaw::Atoms(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = atoms[atoms.len() - 1].0;
                for &(s, p) in atoms {
                    acc += p;
                    if u < acc {
                        pick = s;
                        break;
                    }
                }
                pick
            }
        };
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriverSpec {
    Stable { beta: f64, gamma_scale: f64 },
    CompoundPoisson { rate: f64, jump_law: JumpLaw },
}

impl DriverSpec {
    pub fn stable(beta: f64, gamma_scale: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 2.0) {
            return Err(invalid(format!("stable index must lie in (0, 2), got {beta}")));
        }
        if !(gamma_scale > 0.0 && gamma_scale.is_finite()) {
            return Err(invalid(format!("scale must be positive, got {gamma_scale}")));
        }
        Ok(DriverSpec::Stable { beta, gamma_scale })
    }

    pub fn compound_poisson(rate: f64, jump_law: JumpLaw) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid(format!("jump rate must be nonnegative, got {rate}")));
        }
        jump_law.validate()?;
        Ok(DriverSpec::CompoundPoisson { rate, jump_law })
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, DriverSpec::Stable { .. })
    }
}

/// Blumenthal–Getoor index: `beta` for stable drivers, 0 for finite Lévy measures.
pub fn blumenthal_getoor(spec: &DriverSpec) -> f64 {
    match spec {
        DriverSpec::Stable { beta, .. } => *beta,
        DriverSpec::CompoundPoisson { .. } => 0.0,
    }
}

/// Constant `c` of the symmetric stable Lévy density `c |x|^{-1-beta}` for the
/// characteristic function `exp(-gamma^beta |u|^beta)`.
pub fn stable_levy_density_constant(beta: f64, gamma_scale: f64) -> f64 {
    // ∫_0^∞ (1 - cos y) y^{-1-beta} dy
    let integral = if (beta - 1.0).abs() < 1e-12 {
        PI / 2.0
    } else {
        statrs::function::gamma::gamma(1.0 - beta) * (PI * beta / 2.0).cos() / beta
    };
    gamma_scale.powf(beta) / (2.0 * integral)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub size: f64,
}

/// A driver cell `[start, start + width)` carrying the increment of `L` over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverCell {
    pub start: f64,
    pub width: f64,
    pub increment: f64,
}

/// A realized driver on `[window_start, window_end]`.
///
/// Grid mode: `increments[i]` is the increment over
/// `[grid_start + i grid_step, grid_start + (i+1) grid_step)`, optionally preceded
/// by coarser `far_cells` that reach back to `window_start`.
/// Jump mode: an exact, time-sorted jump list.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    pub window_start: f64,
    pub window_end: f64,
    pub grid_start: f64,
    pub grid_step: f64,
    pub increments: Vec<f64>,
    pub far_cells: Vec<DriverCell>,
    pub jumps: Option<Vec<JumpRecord>>,
}

impl DriverPath {
    pub fn from_jumps(window_start: f64, window_end: f64, mut jumps: Vec<JumpRecord>) -> Self {
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self {
            window_start,
            window_end,
            grid_start: window_start,
            grid_step: window_end - window_start,
            increments: Vec::new(),
            far_cells: Vec::new(),
            jumps: Some(jumps),
        }
    }

    pub fn jumps(&self) -> Result<&[JumpRecord]> {
        self.jumps.as_deref().ok_or(Error::MissingJumpList)
    }

    /// Increments over `(start + i step, start + (i+1) step]` derived from the jump list.
    pub fn grid_increments(&self, start: f64, step: f64, count: usize) -> Result<Vec<f64>> {
        let jumps = self.jumps()?;
        let mut out = vec![0.0; count];
        for j in jumps {
            let idx = ((j.time - start) / step).ceil() - 1.0;
            if idx >= 0.0 && (idx as usize) < count {
                out[idx as usize] += j.size;
            }
        }
        Ok(out)
    }

    /// Copy with grid increments on the given grid filled from the jump list.
    pub fn with_grid(&self, start: f64, step: f64, count: usize) -> Result<DriverPath> {
        let increments = self.grid_increments(start, step, count)?;
        Ok(DriverPath { grid_start: start, grid_step: step, increments, ..self.clone() })
    }

    /// All grid cells (far cells first, then the uniform grid) in time order.
    pub fn cells(&self) -> impl Iterator<Item = DriverCell> + '_ {
        let uniform = self.increments.iter().enumerate().map(move |(i, &inc)| DriverCell {
            start: self.grid_start + i as f64 * self.grid_step,
            width: self.grid_step,
            increment: inc,
        });
        self.far_cells.iter().copied().chain(uniform)
    }
}

/// One symmetric β-stable variate with characteristic function
/// `exp(-gamma_scale^beta |u|^beta)` (Chambers–Mallows–Stuck, symmetric case).
pub fn sample_stable<R: Rng + ?Sized>(beta: f64, gamma_scale: f64, rng: &mut R) -> f64 {
    gamma_scale * standard_stable(beta, rng)
}

fn standard_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let mut u: f64 = rng.random();
    while u == 0.0 {
        u = rng.random();
    }
    let v = PI * (u - 0.5);
    let w: f64 = Exp1.sample(rng);
    if beta == 1.0 {
        return v.tan();
    }
    (beta * v).sin() / v.cos().powf(1.0 / beta) * (((1.0 - beta) * v).cos() / w).powf((1.0 - beta) / beta)
}

pub fn simulate_stable_increments<R: Rng + ?Sized>(
    beta: f64,
    gamma_scale: f64,
    grid_start: f64,
    grid_step: f64,
    count: usize,
    rng: &mut R,
) -> Result<DriverPath> {
    if !(grid_step > 0.0) {
        return Err(invalid(format!("grid step must be positive, got {grid_step}")));
    }
    DriverSpec::stable(beta, gamma_scale)?;
    let scale = gamma_scale * grid_step.powf(1.0 / beta);
    let increments = (0..count).map(|_| sample_stable(beta, scale, rng)).collect();
    Ok(DriverPath {
        window_start: grid_start,
        window_end: grid_start + count as f64 * grid_step,
        grid_start,
        grid_step,
        increments,
        far_cells: Vec::new(),
        jumps: None,
    })
}

/// Geometric cells on `[window_start, grid_start)`: the cell ending at `b` has
/// width `max(|b| / cells_per_efold, min_width)`.
pub fn geometric_cells(window_start: f64, grid_start: f64, cells_per_efold: usize, min_width: f64) -> Vec<(f64, f64)> {
    let mut cells = Vec::new();
    let mut end = grid_start;
    while end > window_start {
        let width = (end.abs() / cells_per_efold as f64).max(min_width);
        let start = (end - width).max(window_start);
        cells.push((start, end - start));
        end = start;
    }
    cells.reverse();
    cells
}

/// Stable driver on a uniform grid `[grid_start, grid_start + count step)` with
/// geometric far cells back to `window_start`. The uniform part is drawn first.
#[allow(clippy::too_many_arguments)]
pub fn simulate_stable_hybrid<R: Rng + ?Sized>(
    beta: f64,
    gamma_scale: f64,
    window_start: f64,
    grid_start: f64,
    grid_step: f64,
    count: usize,
    cells_per_efold: usize,
    rng: &mut R,
) -> Result<DriverPath> {
    if window_start > grid_start {
        return Err(invalid("window must start before the uniform grid"));
    }
    if cells_per_efold == 0 {
        return Err(invalid("cells_per_efold must be positive"));
    }
    let mut path = simulate_stable_increments(beta, gamma_scale, grid_start, grid_step, count, rng)?;
    let geometry = geometric_cells(window_start, grid_start, cells_per_efold, grid_step);
    // draw from the present backwards so the far past can be extended without
    // changing nearer cells
    let mut far: Vec<DriverCell> = geometry
        .iter()
        .rev()
        .map(|&(start, width)| DriverCell {
            start,
            width,
            increment: sample_stable(beta, gamma_scale * width.powf(1.0 / beta), rng),
        })
        .collect();
    far.reverse();
    path.far_cells = far;
    path.window_start = window_start;
    Ok(path)
}

pub fn simulate_compound_poisson<R: Rng + ?Sized>(
    spec: &DriverSpec,
    window_start: f64,
    window_end: f64,
    rng: &mut R,
) -> Result<DriverPath> {
    let DriverSpec::CompoundPoisson { rate, jump_law } = spec else {
        return Err(invalid("compound Poisson simulation needs a compound Poisson driver"));
    };
    if !(window_start < window_end) {
        return Err(invalid(format!("empty window [{window_start}, {window_end}]")));
    }
    let len = window_end - window_start;
    let mean = rate * len;
    let count =
        if mean == 0.0 { 0 } else { Poisson::new(mean).map_err(|e| invalid(e.to_string()))?.sample(rng) as usize };
    let mut times: Vec<f64> = (0..count).map(|_| window_start + len * rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    // distinct jump times: redraw duplicates
    loop {
        let dup = times.windows(2).position(|w| w[0] == w[1]);
        match dup {
            Some(i) => {
                times[i + 1] = window_start + len * rng.random::<f64>();
                times.sort_by(f64::total_cmp);
            }
            None => break,
        }
    }
    let jumps = times.into_iter().map(|time| JumpRecord { time, size: jump_law.sample(rng) }).collect();
    Ok(DriverPath::from_jumps(window_start, window_end, jumps))
}

/// Split into jumps with `|size| > a` and the rest.
pub fn split_by_threshold(path: &DriverPath, a: f64) -> Result<(DriverPath, DriverPath)> {
    let jumps = path.jumps()?;
    if !(a > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {a}")));
    }
    let (big, small): (Vec<JumpRecord>, Vec<JumpRecord>) = jumps.iter().partition(|j| j.size.abs() > a);
    Ok((
        DriverPath::from_jumps(path.window_start, path.window_end, big),
        DriverPath::from_jumps(path.window_start, path.window_end, small),
    ))
}

/// Time-ordered merge of two jump lists.
pub fn merge_jumps(a: &[JumpRecord], b: &[JumpRecord]) -> Vec<JumpRecord> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].time <= b[j].time {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{ks_two_sample, median};
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn spec_validation() {
        assert!(DriverSpec::stable(2.0, 1.0).is_err());
        assert!(DriverSpec::stable(0.0, 1.0).is_err());
        assert!(DriverSpec::stable(1.5, -1.0).is_err());
        assert!(DriverSpec::compound_poisson(1.0, JumpLaw::Atoms(vec![(1.0, 0.4)])).is_err());
        assert!(DriverSpec::compound_poisson(1.0, JumpLaw::Atoms(vec![(1.0, 0.4), (2.0, 0.6)])).is_ok());
    }

    #[test]
    fn stable_scaling_law() {
        let mut a = SimRng::seed_from_u64(5);
        let mut b = SimRng::seed_from_u64(5);
        for _ in 0..100 {
            let x = sample_stable(1.3, 2.5, &mut a);
            let y = sample_stable(1.3, 1.0, &mut b);
            assert!((x - 2.5 * y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn cauchy_median_is_zero() {
        let mut rng = SimRng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_stable(1.0, 1.0, &mut rng)).collect();
        assert!(median(&xs).abs() < 0.01);
    }

    #[test]
    fn characteristic_function_at_one() {
        let mut rng = SimRng::seed_from_u64(12);
        let n = 1_000_000;
        let cos: Vec<f64> = (0..n).map(|_| sample_stable(1.5, 1.0, &mut rng).cos()).collect();
        let mean = cos.iter().sum::<f64>() / n as f64;
        let var = cos.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - (-1.0f64).exp()).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn levy_density_constant_for_cauchy() {
        assert!((stable_levy_density_constant(1.0, 1.0) - 1.0 / PI).abs() < 1e-12);
        // continuity across beta = 1
        let a = stable_levy_density_constant(1.0 - 1e-7, 1.0);
        assert!((a - 1.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn empty_increments() {
        let mut rng = SimRng::seed_from_u64(1);
        let p = simulate_stable_increments(1.5, 1.0, 0.0, 0.1, 0, &mut rng).unwrap();
        assert!(p.increments.is_empty());
    }

    fn unit_sums(step: f64, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..10_000)
            .map(|_| simulate_stable_increments(1.5, 1.0, 0.0, step, count, &mut rng).unwrap().increments.iter().sum())
            .collect()
    }

    #[test]
    fn increments_aggregate_to_unit_scale() {
        let mut rng = SimRng::seed_from_u64(99);
        let direct: Vec<f64> = (0..10_000).map(|_| sample_stable(1.5, 1.0, &mut rng)).collect();
        let sums = unit_sums(1.0 / 16.0, 16, 3);
        assert!(ks_two_sample(&direct, &sums) < 0.02);
        let finer = unit_sums(1.0 / 32.0, 32, 4);
        assert!(ks_two_sample(&finer, &sums) < 0.02);
    }

    #[test]
    fn compound_poisson_counts_and_sizes() {
        let spec = DriverSpec::compound_poisson(5.0, JumpLaw::Rademacher { size: 0.5 }).unwrap();
        let mut rng = SimRng::seed_from_u64(7);
        let reps = 10_000;
        let mut total = 0usize;
        for _ in 0..reps {
            let p = simulate_compound_poisson(&spec, 0.0, 3.0, &mut rng).unwrap();
            let jumps = p.jumps().unwrap();
            assert!(jumps.iter().all(|j| j.size.abs() == 0.5));
            assert!(jumps.windows(2).all(|w| w[0].time < w[1].time));
            assert!(jumps.iter().all(|j| (0.0..3.0).contains(&j.time)));
            total += jumps.len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 15.0).abs() < 3.0 * (15.0f64 / reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn vanishing_rate_gives_no_jumps() {
        let zero = DriverSpec::compound_poisson(0.0, JumpLaw::Rademacher { size: 1.0 }).unwrap();
        let mut rng = SimRng::seed_from_u64(8);
        assert!(simulate_compound_poisson(&zero, 0.0, 1.0, &mut rng).unwrap().jumps().unwrap().is_empty());
        let spec = DriverSpec::compound_poisson(1e-12, JumpLaw::Rademacher { size: 1.0 }).unwrap();
        let mut rng = SimRng::seed_from_u64(8);
        for _ in 0..1000 {
            let p = simulate_compound_poisson(&spec, 0.0, 1.0, &mut rng).unwrap();
            assert!(p.jumps().unwrap().is_empty());
        }
    }

    #[test]
    fn pareto_tail_and_atoms() {
        let law = JumpLaw::TwoSidedPareto { tail_index: 2.0, min_size: 1.0 };
        let mut rng = SimRng::seed_from_u64(21);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        assert!(xs.iter().all(|x| x.abs() >= 1.0));
        let frac = xs.iter().filter(|x| x.abs() > 3.0).count() as f64 / n as f64;
        assert!((frac - 1.0 / 9.0).abs() < 0.005);
        let atoms = JumpLaw::Atoms(vec![(0.5, 0.25), (2.0, 0.75)]);
        let ys: Vec<f64> = (0..n).map(|_| atoms.sample(&mut rng)).collect();
        let frac = ys.iter().filter(|y| y.abs() == 2.0).count() as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.01);
    }

    #[test]
    fn increment_signs_are_symmetric() {
        // two-sided sign test at level 0.01: |#pos - n/2| < 2.576 sqrt(n)/2
        let n = 100_000;
        let bound = 2.576 * (n as f64).sqrt() / 2.0;
        let mut rng = SimRng::seed_from_u64(31);
        let stable = simulate_stable_increments(1.2, 1.0, 0.0, 0.01, n, &mut rng).unwrap();
        let pos = stable.increments.iter().filter(|&&x| x > 0.0).count() as f64;
        assert!((pos - n as f64 / 2.0).abs() < bound);
        let laws = [
            JumpLaw::Rademacher { size: 1.0 },
            JumpLaw::TwoSidedPareto { tail_index: 1.5, min_size: 0.1 },
            JumpLaw::Atoms(vec![(1.0, 0.5), (3.0, 0.5)]),
        ];
        for law in laws {
            let pos = (0..n).filter(|_| law.sample(&mut rng) > 0.0).count() as f64;
            assert!((pos - n as f64 / 2.0).abs() < bound, "{law:?}");
        }
    }

    #[test]
    fn stable_tail_exponent() {
        // Hill estimator on the top 1% of |samples|
        let mut rng = SimRng::seed_from_u64(41);
        let n = 1_000_000;
        for beta in [0.8, 1.5] {
            let mut xs: Vec<f64> = (0..n).map(|_| sample_stable(beta, 1.0, &mut rng).abs()).collect();
            xs.sort_by(|a, b| b.total_cmp(a));
            let m = n / 100;
            let thresh = xs[m].ln();
            let hill = m as f64 / xs[..m].iter().map(|x| x.ln() - thresh).sum::<f64>();
            assert!((hill - beta).abs() < 0.1, "beta {beta}: hill {hill}");
        }
    }

    #[test]
    fn blumenthal_getoor_index() {
        assert_eq!(blumenthal_getoor(&DriverSpec::stable(1.5, 1.0).unwrap()), 1.5);
        let cp = DriverSpec::compound_poisson(2.0, JumpLaw::Rademacher { size: 1.0 }).unwrap();
        assert_eq!(blumenthal_getoor(&cp), 0.0);
        let par =
            DriverSpec::compound_poisson(2.0, JumpLaw::TwoSidedPareto { tail_index: 2.0, min_size: 1.0 }).unwrap();
        assert_eq!(blumenthal_getoor(&par), 0.0);
    }

    #[test]
    fn split_requires_jumps() {
        let mut rng = SimRng::seed_from_u64(1);
        let p = simulate_stable_increments(1.5, 1.0, 0.0, 0.1, 10, &mut rng).unwrap();
        assert_eq!(split_by_threshold(&p, 0.5), Err(Error::MissingJumpList));
    }

    #[test]
    fn hybrid_cells_cover_window() {
        let mut rng = SimRng::seed_from_u64(2);
        let p = simulate_stable_hybrid(1.5, 1.0, -1000.0, -2.0, 0.01, 300, 16, &mut rng).unwrap();
        let cells: Vec<DriverCell> = p.cells().collect();
        assert_eq!(cells[0].start, -1000.0);
        for w in cells.windows(2) {
            assert!((w[0].start + w[0].width - w[1].start).abs() < 1e-9);
        }
        assert!((p.grid_start - -2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_increments_from_jumps() {
        let jumps = vec![JumpRecord { time: 0.25, size: 1.0 }, JumpRecord { time: 0.3, size: -2.0 }];
        let p = DriverPath::from_jumps(0.0, 1.0, jumps);
        // (0.2, 0.3] holds both jumps; 0.25 alone is not a boundary
        let inc = p.grid_increments(0.0, 0.1, 10).unwrap();
        assert_eq!(inc[2], -1.0);
        assert_eq!(inc.iter().sum::<f64>(), -1.0);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(seed in 0u64..1000, a in 0.01f64..5.0) {
            let law = JumpLaw::TwoSidedPareto { tail_index: 1.0, min_size: 0.2 };
            let spec = DriverSpec::compound_poisson(20.0, law).unwrap();
            let mut rng = SimRng::seed_from_u64(seed);
            let path = simulate_compound_poisson(&spec, -1.0, 1.0, &mut rng).unwrap();
            let (big, small) = split_by_threshold(&path, a).unwrap();
            prop_assert!(big.jumps().unwrap().iter().all(|j| j.size.abs() > a));
            prop_assert!(small.jumps().unwrap().iter().all(|j| j.size.abs() <= a));
            let merged = merge_jumps(big.jumps().unwrap(), small.jumps().unwrap());
            prop_assert_eq!(merged.as_slice(), path.jumps().unwrap());
        }
    }

    #[test]
    fn split_extremes() {
        let spec = DriverSpec::compound_poisson(10.0, JumpLaw::Atoms(vec![(0.5, 0.5), (1.5, 0.5)])).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let path = simulate_compound_poisson(&spec, 0.0, 2.0, &mut rng).unwrap();
        let (big, small) = split_by_threshold(&path, 10.0).unwrap();
        assert!(big.jumps().unwrap().is_empty());
        assert_eq!(small.jumps().unwrap(), path.jumps().unwrap());
        let (big, small) = split_by_threshold(&path, 0.1).unwrap();
        assert!(small.jumps().unwrap().is_empty());
        assert_eq!(big.jumps().unwrap(), path.jumps().unwrap());
    }
}
