//! Monte Carlo orchestration: flat key-value configuration, seeded
//! replications and the verification and estimation pipelines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::driver::{blumenthal_getoor, simulate_compound_poisson, DriverPath, DriverSpec, JumpLaw};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_h, fit_alpha_beta, ratio_stat, relative_intermittency, scale_stat, variations_on_grid, PGrid, ParamDomainJ,
};
use crate::kernel::{hk_abs_power_integral, G0Mode, HkParams, KernelFamily, KernelSpec};
use crate::numeric::{quantile, sorted};
use crate::oracles::{
    abs_moment_stable, f_power_integral_adaptive, f_power_integral_grid, marked_jumps, mp_constant, stable_limit_z,
    vm_series,
};
use crate::rng::{stream_rng, Stream};
use crate::sim::{
    burnin_truncation_for_horizon, compute_f_path, simulate_lss_cp, JumpSum, LssPath, SimConfig, StableSimulator,
};
use crate::variation::{normalization_factor, power_variation, power_variation_values, regime_classify, RegimeTag};
use crate::volatility::{simulate_sigma, DeterministicSigma, SigmaPath, SigmaSpec};

/// Points of the fixed time grid used for the uniform-on-compacts check.
pub const UCP_POINTS: usize = 10;
/// Grid size for `∫|F|^p` when `F` comes from a stable driver's Riemann sum.
const STABLE_F_GRID: usize = 256;
/// Expected number of volatility jumps above which an OU burn-in window is refused.
const MAX_SIGMA_JUMPS: f64 = 1e7;

/// Every recognized configuration key with a one-line description.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("mode", "verify_i | verify_ii | verify_iii | estimate | oracle"),
    ("kernel", "gamma | power (default gamma)"),
    ("c0", "kernel constant (default 1)"),
    ("alpha", "kernel power index (required)"),
    ("lambda", "gamma kernel decay (default 1)"),
    ("g0", "zero | equal (default zero for gamma, equal for power)"),
    ("delta", "kernel regularity threshold (default 1)"),
    ("driver", "stable | cp (required)"),
    ("beta", "stable index in (0, 2)"),
    ("gamma_scale", "stable scale (default 1)"),
    ("rate", "compound Poisson jump rate"),
    ("jump_law", "rademacher | pareto | atoms (default rademacher)"),
    ("jump_size", "rademacher jump size (default 1)"),
    ("tail_index", "pareto tail index"),
    ("min_size", "pareto minimal jump size (default 1)"),
    ("atoms", "size:probability pairs separated by ';'"),
    ("theta", "tail index used for the compound Poisson burn-in (default min(tail_index, 2))"),
    ("sigma", "constant | step | linear | periodic | ou (default constant)"),
    ("sigma_level", "constant volatility level (default 1)"),
    ("sigma_breakpoints", "comma-separated step times"),
    ("sigma_levels", "comma-separated step levels, one more than breakpoints"),
    ("sigma_intercept", "linear volatility intercept"),
    ("sigma_slope", "linear volatility slope"),
    ("sigma_base", "periodic volatility base level"),
    ("sigma_amplitude", "periodic volatility amplitude"),
    ("sigma_frequency", "periodic volatility frequency"),
    ("ou_mean", "OU volatility mean"),
    ("ou_reversion", "OU volatility reversion speed"),
    ("ou_rate", "OU volatility jump rate"),
    ("ou_jump_size", "OU volatility rademacher jump size"),
    ("k", "increment order (default 1)"),
    ("p", "power (default 1)"),
    ("p_grid", "comma-separated powers for the scale statistic"),
    ("d_alpha", "alpha resolution of the estimator grid (default 0.01)"),
    ("d_beta", "beta resolution of the estimator grid (default 0.01)"),
    ("ratio_p", "power of the ratio statistic (default 0.5)"),
    ("ri_t", "time of the relative intermittency estimate (default 0.5)"),
    ("n_list", "comma-separated sampling frequencies (required)"),
    ("replications", "replications per frequency (default 100)"),
    ("seed", "64-bit master seed (default 0)"),
    ("horizon", "time horizon t (default 1)"),
    ("fine_factor", "stable driver cells per observation (default 8)"),
    ("tail_tol", "burn-in tail tolerance (default 1e-6)"),
    ("parallel", "run replications concurrently (default true)"),
    ("rel_tol", "per-replication relative error tolerance (default 0.05)"),
    ("ucp_tol", "tolerance of the uniform-in-time check (default 0.15)"),
    ("pass_fraction", "required fraction of passing replications (default 0.9)"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    VerifyI,
    VerifyII,
    VerifyIII,
    Estimate,
    Oracle,
}

impl Mode {
    /// Regime a verification mode targets.
    pub fn regime(self) -> Option<RegimeTag> {
        match self {
            Mode::VerifyI => Some(RegimeTag::I),
            Mode::VerifyII => Some(RegimeTag::II),
            Mode::VerifyIII => Some(RegimeTag::III),
            Mode::Estimate | Mode::Oracle => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::VerifyI => "verify_i",
            Mode::VerifyII => "verify_ii",
            Mode::VerifyIII => "verify_iii",
            Mode::Estimate => "estimate",
            Mode::Oracle => "oracle",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verify_i" => Ok(Mode::VerifyI),
            "verify_ii" => Ok(Mode::VerifyII),
            "verify_iii" => Ok(Mode::VerifyIII),
            "estimate" => Ok(Mode::Estimate),
            "oracle" => Ok(Mode::Oracle),
            other => Err(Error::ConfigInvalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_error: f64,
    pub ucp: f64,
    pub pass_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_error: 0.05, ucp: 0.15, pass_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub kernel: KernelSpec,
    pub driver: DriverSpec,
    pub sigma: SigmaSpec,
    pub k: u32,
    pub p: f64,
    pub pgrid: PGrid,
    pub domain: ParamDomainJ,
    pub ratio_p: f64,
    pub ri_t: f64,
    pub n_list: Vec<u64>,
    pub replications: usize,
    pub master_seed: u64,
    pub horizon: f64,
    pub fine_factor: usize,
    pub tail_tol: f64,
    /// Burn-in index for compound Poisson drivers; `None` picks the default.
    pub theta: Option<f64>,
    pub parallel: bool,
    pub tolerances: Tolerances,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

/// Key-value pairs with consumption tracking, so unknown keys are reported.
struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)))?;
            let key = key.trim().to_string();
            if !CONFIG_KEYS.iter().any(|(k, _)| *k == key) {
                return Err(cfg_err(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(Self(map))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.0
            .remove(key)
            .map(|v| v.parse::<T>().map_err(|_| cfg_err(format!("cannot parse {key} = '{v}'"))))
            .transpose()
    }

    fn get_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| cfg_err(format!("missing key '{key}'")))
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        self.0
            .remove(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|_| cfg_err(format!("cannot parse '{s}' in {key}"))))
                    .collect()
            })
            .transpose()
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            Some(key) => Err(cfg_err(format!("key '{key}' does not apply to this configuration"))),
            None => Ok(()),
        }
    }
}

fn as_cfg(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::ConfigInvalid(m),
        other => other,
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Parses and validates a configuration file body.
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let mode: Mode = e.require("mode")?;

        let family = match e.get_or("kernel", "gamma".to_string())?.as_str() {
            "gamma" => KernelFamily::Gamma,
            "power" => KernelFamily::Power,
            other => return Err(cfg_err(format!("unknown kernel '{other}'"))),
        };
        let c0 = e.get_or("c0", 1.0)?;
        let alpha: f64 = e.require("alpha")?;
        let delta = e.get_or("delta", 1.0)?;
        let default_g0 = if family == KernelFamily::Power { "equal" } else { "zero" };
        let g0 = match e.get_or("g0", default_g0.to_string())?.as_str() {
            "zero" => G0Mode::Zero,
            "equal" => G0Mode::EqualG,
            other => return Err(cfg_err(format!("unknown g0 mode '{other}'"))),
        };
        let decay = if family == KernelFamily::Gamma { e.get_or("lambda", 1.0)? } else { 0.0 };
        let kernel = KernelSpec::new(family, c0, alpha, decay, g0, delta).map_err(as_cfg)?;

        let driver = match e.require::<String>("driver")?.as_str() {
            "stable" => DriverSpec::stable(e.require("beta")?, e.get_or("gamma_scale", 1.0)?).map_err(as_cfg)?,
            "cp" => {
                let rate = e.require("rate")?;
                let law = match e.get_or("jump_law", "rademacher".to_string())?.as_str() {
                    "rademacher" => JumpLaw::Rademacher { size: e.get_or("jump_size", 1.0)? },
                    "pareto" => JumpLaw::TwoSidedPareto {
                        tail_index: e.require("tail_index")?,
                        min_size: e.get_or("min_size", 1.0)?,
                    },
                    "atoms" => JumpLaw::Atoms(parse_atoms(&e.require::<String>("atoms")?)?),
                    other => return Err(cfg_err(format!("unknown jump law '{other}'"))),
                };
                DriverSpec::compound_poisson(rate, law).map_err(as_cfg)?
            }
            other => return Err(cfg_err(format!("unknown driver '{other}'"))),
        };
        let theta = if driver.is_stable() { None } else { e.take("theta")? };

        let sigma = match e.get_or("sigma", "constant".to_string())?.as_str() {
            "constant" => SigmaSpec::Constant(e.get_or("sigma_level", 1.0)?),
            "step" => SigmaSpec::step(
                e.list("sigma_breakpoints")?.unwrap_or_default(),
                e.list("sigma_levels")?.ok_or_else(|| cfg_err("missing key 'sigma_levels'"))?,
            )
            .map_err(as_cfg)?,
            "linear" => SigmaSpec::Deterministic(DeterministicSigma::Linear {
                intercept: e.require("sigma_intercept")?,
                slope: e.require("sigma_slope")?,
            }),
            "periodic" => SigmaSpec::Deterministic(DeterministicSigma::Periodic {
                base: e.require("sigma_base")?,
                amplitude: e.require("sigma_amplitude")?,
                frequency: e.require("sigma_frequency")?,
            }),
            "ou" => {
                let jumps = DriverSpec::compound_poisson(
                    e.require("ou_rate")?,
                    JumpLaw::Rademacher { size: e.get_or("ou_jump_size", 1.0)? },
                )
                .map_err(as_cfg)?;
                SigmaSpec::ou(e.require("ou_mean")?, e.require("ou_reversion")?, jumps).map_err(as_cfg)?
            }
            other => return Err(cfg_err(format!("unknown sigma kind '{other}'"))),
        };

        let pgrid = match e.list("p_grid")? {
            Some(points) => PGrid::new(points).map_err(as_cfg)?,
            None => PGrid::default(),
        };
        let domain = ParamDomainJ::new(e.get_or("d_alpha", 0.01)?, e.get_or("d_beta", 0.01)?).map_err(as_cfg)?;
        let defaults = Tolerances::default();
        let config = Self {
            mode,
            kernel,
            driver,
            sigma,
            k: e.get_or("k", 1)?,
            p: e.get_or("p", 1.0)?,
            pgrid,
            domain,
            ratio_p: e.get_or("ratio_p", 0.5)?,
            ri_t: e.get_or("ri_t", 0.5)?,
            n_list: e.list("n_list")?.ok_or_else(|| cfg_err("missing key 'n_list'"))?,
            replications: e.get_or("replications", 100)?,
            master_seed: e.get_or("seed", 0)?,
            horizon: e.get_or("horizon", 1.0)?,
            fine_factor: e.get_or("fine_factor", 8)?,
            tail_tol: e.get_or("tail_tol", 1e-6)?,
            theta,
            parallel: e.get_or("parallel", true)?,
            tolerances: Tolerances {
                rel_error: e.get_or("rel_tol", defaults.rel_error)?,
                ucp: e.get_or("ucp_tol", defaults.ucp)?,
                pass_fraction: e.get_or("pass_fraction", defaults.pass_fraction)?,
            },
        };
        e.finish()?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical configuration text; parsing it gives back an equal config.
    pub fn to_config_string(&self) -> Result<String> {
        let mut lines: Vec<(String, String)> = vec![("mode".into(), self.mode.to_string())];
        let mut push = |k: &str, v: String| lines.push((k.to_string(), v));
        let kn = &self.kernel;
        push("kernel", if kn.family() == KernelFamily::Gamma { "gamma" } else { "power" }.into());
        push("c0", kn.c0().to_string());
        push("alpha", kn.alpha().to_string());
        if kn.family() == KernelFamily::Gamma {
            push("lambda", kn.decay().to_string());
        }
        push("g0", if kn.g0_mode() == G0Mode::Zero { "zero" } else { "equal" }.into());
        push("delta", kn.delta().to_string());
        match &self.driver {
            DriverSpec::Stable { beta, gamma_scale } => {
                push("driver", "stable".into());
                push("beta", beta.to_string());
                push("gamma_scale", gamma_scale.to_string());
            }
            DriverSpec::CompoundPoisson { rate, jump_law } => {
                push("driver", "cp".into());
                push("rate", rate.to_string());
                match jump_law {
                    JumpLaw::Rademacher { size } => {
                        push("jump_law", "rademacher".into());
                        push("jump_size", size.to_string());
                    }
                    JumpLaw::TwoSidedPareto { tail_index, min_size } => {
                        push("jump_law", "pareto".into());
                        push("tail_index", tail_index.to_string());
                        push("min_size", min_size.to_string());
                    }
                    JumpLaw::Atoms(atoms) => {
                        push("jump_law", "atoms".into());
                        push("atoms", atoms.iter().map(|(s, w)| format!("{s}:{w}")).collect::<Vec<_>>().join("; "));
                    }
                }
                if let Some(theta) = self.theta {
                    push("theta", theta.to_string());
                }
            }
        }
        match &self.sigma {
            SigmaSpec::Constant(c) => {
                push("sigma", "constant".into());
                push("sigma_level", c.to_string());
            }
            SigmaSpec::Step { breakpoints, levels } => {
                push("sigma", "step".into());
                push("sigma_breakpoints", join(breakpoints));
                push("sigma_levels", join(levels));
            }
            SigmaSpec::Deterministic(DeterministicSigma::Linear { intercept, slope }) => {
                push("sigma", "linear".into());
                push("sigma_intercept", intercept.to_string());
                push("sigma_slope", slope.to_string());
            }
            SigmaSpec::Deterministic(DeterministicSigma::Periodic { base, amplitude, frequency }) => {
                push("sigma", "periodic".into());
                push("sigma_base", base.to_string());
                push("sigma_amplitude", amplitude.to_string());
                push("sigma_frequency", frequency.to_string());
            }
            SigmaSpec::Deterministic(DeterministicSigma::Custom { name, .. }) => {
                return Err(cfg_err(format!("custom volatility '{name}' has no text form")));
            }
            SigmaSpec::Ou { mean, reversion, jump_driver } => {
                let DriverSpec::CompoundPoisson { rate, jump_law: JumpLaw::Rademacher { size } } = jump_driver else {
                    return Err(cfg_err("OU volatility text form needs rademacher jumps"));
                };
                push("sigma", "ou".into());
                push("ou_mean", mean.to_string());
                push("ou_reversion", reversion.to_string());
                push("ou_rate", rate.to_string());
                push("ou_jump_size", size.to_string());
            }
        }
        push("k", self.k.to_string());
        push("p", self.p.to_string());
        push("p_grid", join(self.pgrid.points()));
        push("d_alpha", self.domain.d_alpha.to_string());
        push("d_beta", self.domain.d_beta.to_string());
        push("ratio_p", self.ratio_p.to_string());
        push("ri_t", self.ri_t.to_string());
        push("n_list", join(&self.n_list));
        push("replications", self.replications.to_string());
        push("seed", self.master_seed.to_string());
        push("horizon", self.horizon.to_string());
        push("fine_factor", self.fine_factor.to_string());
        push("tail_tol", self.tail_tol.to_string());
        push("parallel", self.parallel.to_string());
        push("rel_tol", self.tolerances.rel_error.to_string());
        push("ucp_tol", self.tolerances.ucp.to_string());
        push("pass_fraction", self.tolerances.pass_fraction.to_string());
        Ok(lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect())
    }

    /// First 16 hex digits of the SHA-256 of the canonical text, with the
    /// `parallel` switch removed since it never changes results.
    pub fn hash(&self) -> Result<String> {
        let text: String =
            self.to_config_string()?.lines().filter(|l| !l.starts_with("parallel")).map(|l| format!("{l}\n")).collect();
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn beta(&self) -> f64 {
        blumenthal_getoor(&self.driver)
    }

    /// Regime of `(alpha, BG(driver), p, k)`.
    pub fn regime(&self) -> RegimeTag {
        regime_classify(self.kernel.alpha(), self.beta(), self.p, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(cfg_err("n_list must hold frequencies of at least 2"));
        }
        if self.replications == 0 {
            return Err(cfg_err("replications must be positive"));
        }
        if self.k == 0 {
            return Err(cfg_err("k must be at least 1"));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(cfg_err(format!("p must be positive, got {}", self.p)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(cfg_err(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.fine_factor == 0 || !(self.tail_tol > 0.0) {
            return Err(cfg_err("fine_factor and tail_tol must be positive"));
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta <= 2.0) {
                return Err(cfg_err(format!("theta must lie in (0, 2], got {theta}")));
            }
        }
        if !(self.ratio_p > 0.0 && self.ratio_p <= 1.0) {
            return Err(cfg_err(format!("ratio_p must lie in (0, 1], got {}", self.ratio_p)));
        }
        if !(self.ri_t > 0.0 && self.ri_t <= 1.0) {
            return Err(cfg_err(format!("ri_t must lie in (0, 1], got {}", self.ri_t)));
        }
        let t = &self.tolerances;
        if !(t.rel_error > 0.0 && t.ucp > 0.0 && t.pass_fraction > 0.0 && t.pass_fraction <= 1.0) {
            return Err(cfg_err("tolerances must be positive and pass_fraction at most 1"));
        }
        if let Some(wanted) = self.mode.regime() {
            let found = self.regime();
            let (alpha, beta, p, k) = (self.kernel.alpha(), self.beta(), self.p, self.k);
            match found {
                RegimeTag::Critical => {
                    return Err(cfg_err(format!(
                        "(alpha, beta, p, k) = ({alpha}, {beta}, {p}, {k}) lies on a critical boundary \
                         (p = beta, alpha = k - 1/p or alpha = k - 1/beta) where the limit theorem gives no \
                         statement; move p or alpha off the boundary"
                    )))
                }
                RegimeTag::Uncovered => {
                    return Err(cfg_err(format!(
                        "(alpha, beta, p, k) = ({alpha}, {beta}, {p}, {k}) is covered by no limit regime"
                    )))
                }
                tag if tag != wanted => {
                    return Err(cfg_err(format!(
                        "mode {} needs regime {wanted}, but (alpha, beta, p, k) = ({alpha}, {beta}, {p}, {k}) \
                         falls in regime {tag}",
                        self.mode
                    )))
                }
                _ => {}
            }
            if self.mode == Mode::VerifyI && self.driver.is_stable() {
                return Err(cfg_err("verify_i compares against per-path jump marks and needs a cp driver"));
            }
        }
        if self.mode == Mode::Estimate {
            if !self.driver.is_stable() {
                return Err(cfg_err("estimate mode needs a stable driver"));
            }
            if self.horizon != 1.0 {
                return Err(cfg_err("estimate mode works on [0, 1]; set horizon = 1"));
            }
        }
        Ok(())
    }

    /// Burn-in index: `beta` for stable drivers, `theta` otherwise.
    fn burn_in_index(&self) -> f64 {
        match &self.driver {
            DriverSpec::Stable { beta, .. } => *beta,
            DriverSpec::CompoundPoisson { jump_law, .. } => self.theta.unwrap_or(match jump_law {
                JumpLaw::TwoSidedPareto { tail_index, .. } => tail_index.min(2.0),
                _ => 2.0,
            }),
        }
    }
}

fn parse_atoms(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (s, w) = pair.split_once(':').ok_or_else(|| cfg_err(format!("atom '{pair}' is not size:prob")))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| cfg_err(format!("cannot parse atom '{pair}'")));
            Ok((parse(s)?, parse(w)?))
        })
        .collect()
}

/// One summary line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    pub statistic: String,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub target: Option<f64>,
    /// `|median - target| / |target|` where a target exists.
    pub rel_error: Option<f64>,
}

/// One raw replication value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub n: u64,
    pub replication: usize,
    pub statistic: String,
    pub value: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCReport {
    pub mode: Mode,
    pub config_hash: String,
    pub master_seed: u64,
    pub rows: Vec<ReportRow>,
    pub samples: Vec<Sample>,
    /// Every statistic and every oracle value vanished.
    pub degenerate: bool,
}

impl MCReport {
    pub fn row(&self, n: u64, statistic: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.n == n && r.statistic == statistic)
    }

    /// Raw samples of one statistic at one frequency, in replication order.
    pub fn samples_of(&self, n: u64, statistic: &str) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.n == n && s.statistic == statistic).collect()
    }
}

/// `|v - z| / |z|`; zero for `0/0` and infinite when only the target vanishes.
pub fn relative_error(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (value - target).abs() / target.abs()
    }
}

fn summarize(n: u64, statistic: &str, values: &[f64], target: Option<f64>) -> ReportRow {
    let s = sorted(values);
    let median = quantile(&s, 0.5);
    ReportRow {
        n,
        statistic: statistic.to_string(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median,
        q05: quantile(&s, 0.05),
        q95: quantile(&s, 0.95),
        target,
        rel_error: target.map(|t| relative_error(median, t)),
    }
}

/// Runs `f` for every replication, concurrently or not, in replication order.
fn replicate<T: Send>(config: &ExperimentConfig, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if config.parallel {
        (0..config.replications).into_par_iter().map(f).collect()
    } else {
        (0..config.replications).map(f).collect()
    }
}

/// Per-frequency simulation geometry shared by all replications.
enum Engine {
    Cp { burn_in: f64, eval_times: Vec<f64> },
    Stable(Box<StableSimulator>),
}

struct Realization {
    sigma: SigmaPath,
    driver: DriverPath,
    path: LssPath,
}

impl Engine {
    fn new(config: &ExperimentConfig, n: u64) -> Result<Self> {
        let engine = match &config.driver {
            DriverSpec::Stable { beta, gamma_scale } => {
                let mut cfg = SimConfig::for_kernel(&config.kernel, *beta, n, config.horizon)?;
                cfg.fine_factor = config.fine_factor;
                cfg.tail_tol = config.tail_tol;
                cfg.burn_in =
                    burnin_truncation_for_horizon(&config.kernel, *beta, config.tail_tol, config.horizon.max(1.0))?;
                Engine::Stable(Box::new(StableSimulator::new(&config.kernel, *beta, *gamma_scale, &cfg)?))
            }
            DriverSpec::CompoundPoisson { .. } => {
                let burn_in = burnin_truncation_for_horizon(
                    &config.kernel,
                    config.burn_in_index(),
                    config.tail_tol,
                    config.horizon.max(1.0),
                )?;
                let count = (n as f64 * config.horizon + 1e-9).floor() as usize + 1;
                Engine::Cp { burn_in, eval_times: (0..count).map(|i| i as f64 / n as f64).collect() }
            }
        };
        if let SigmaSpec::Ou { jump_driver: DriverSpec::CompoundPoisson { rate, .. }, .. } = &config.sigma {
            if rate * engine.burn_in() > MAX_SIGMA_JUMPS {
                return Err(cfg_err(format!(
                    "OU volatility over a burn-in of {} would need about {} jumps",
                    engine.burn_in(),
                    rate * engine.burn_in()
                )));
            }
        }
        Ok(engine)
    }

    fn burn_in(&self) -> f64 {
        match self {
            Engine::Cp { burn_in, .. } => *burn_in,
            Engine::Stable(sim) => sim.config().burn_in,
        }
    }

    fn realize(&self, config: &ExperimentConfig, n: u64, rep: usize) -> Result<Realization> {
        let mut driver_rng = stream_rng(config.master_seed, rep as u64, Stream::Driver);
        let mut sigma_rng = stream_rng(config.master_seed, rep as u64, Stream::Sigma);
        let end = config.horizon.max(1.0);
        let sigma = simulate_sigma(&config.sigma, -self.burn_in(), end, 1.0 / n as f64, &mut sigma_rng)?;
        match self {
            Engine::Cp { burn_in, eval_times } => {
                let driver = simulate_compound_poisson(&config.driver, -burn_in, end, &mut driver_rng)?;
                let path = simulate_lss_cp(&config.kernel, &sigma, &driver, eval_times)?;
                Ok(Realization { sigma, driver, path })
            }
            Engine::Stable(sim) => {
                let driver = sim.sample_driver(&mut driver_rng)?;
                let path = sim.evaluate(&sigma, &driver)?;
                Ok(Realization { sigma, driver, path })
            }
        }
    }
}

/// One path of replication `rep` at frequency `n`, as simulated by the pipelines.
pub fn simulate_path(config: &ExperimentConfig, n: u64, rep: usize) -> Result<LssPath> {
    if n < 2 {
        return Err(cfg_err("n must be at least 2"));
    }
    let mut path = Engine::new(config, n)?.realize(config, n, rep)?.path;
    path.provenance.seed = Some(crate::rng::derive_seed(config.master_seed, rep as u64, Stream::Driver));
    Ok(path)
}

/// Fixed time grid `t j / UCP_POINTS`, `j = 1..=UCP_POINTS`.
pub fn ucp_grid(t: f64) -> Vec<f64> {
    (1..=UCP_POINTS).map(|j| t * j as f64 / UCP_POINTS as f64).collect()
}

/// Limit functional `t -> L_t` of the requested regime along one realization.
fn limit_values(config: &ExperimentConfig, n: u64, r: &Realization, times: &[f64]) -> Result<Vec<f64>> {
    let (kernel, k, p) = (&config.kernel, config.k, config.p);
    match config.mode {
        Mode::VerifyI => {
            let marks = marked_jumps(r.driver.jumps()?, &r.sigma, n as f64, config.horizon)?;
            times.iter().map(|&t| stable_limit_z(&marks, kernel.c0(), kernel.alpha(), k, p, t)).collect()
        }
        Mode::VerifyII => {
            let DriverSpec::Stable { beta, gamma_scale } = config.driver else {
                return Err(cfg_err("verify_ii needs a stable driver"));
            };
            let mp =
                crate::oracles::global_cache().mp_constant(kernel.c0(), gamma_scale, kernel.alpha(), k, beta, p)?;
            times.iter().map(|&t| Ok(mp * r.sigma.power_integral(p, t)?)).collect()
        }
        Mode::VerifyIII => match r.driver.jumps {
            Some(ref jumps) => {
                let sum = JumpSum::new(kernel, &r.sigma, jumps)?;
                let kinks: Vec<f64> = jumps.iter().map(|j| j.time).collect();
                times.iter().map(|&t| f_power_integral_adaptive(|u| sum.f(k, u), &kinks, t, p)).collect()
            }
            None => times
                .iter()
                .map(|&t| {
                    let grid: Vec<f64> = (0..=STABLE_F_GRID).map(|i| t * i as f64 / STABLE_F_GRID as f64).collect();
                    let f = compute_f_path(kernel, k, &r.sigma, &r.driver, &grid)?;
                    f_power_integral_grid(&grid, &f, p)
                })
                .collect(),
        },
        Mode::Estimate | Mode::Oracle => Err(cfg_err("limit functionals exist only for verify modes")),
    }
}

/// Verification of the limit theorem for the configured regime.
///
/// Per replication the statistic is the normalized `V(p;k)_t^n` at the
/// horizon, the target its per-path limit; regimes (ii) and (iii) also record
/// `sup_j |V_{t_j} - L_{t_j}| / L_t` over `ucp_grid`.
pub fn run_verify(config: &ExperimentConfig) -> Result<MCReport> {
    config.validate()?;
    let tag = config.mode.regime().ok_or_else(|| cfg_err(format!("mode {} is not a verify mode", config.mode)))?;
    let (alpha, beta, p, k) = (config.kernel.alpha(), config.beta(), config.p, config.k);
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut degenerate = true;
    for &n in &config.n_list {
        let engine = Engine::new(config, n)?;
        let norm = normalization_factor(tag, n as f64, p, k, alpha, beta)?;
        let with_ucp = tag != RegimeTag::I;
        let results = replicate(config, |rep| {
            let r = engine.realize(config, n, rep)?;
            let series = power_variation(&r.path, p, k)?;
            let times = if with_ucp { ucp_grid(config.horizon) } else { vec![config.horizon] };
            let limits = limit_values(config, n, &r, &times)?;
            let value = norm * series.value_at(config.horizon);
            let target = *limits.last().expect("nonempty time grid");
            let ucp = with_ucp.then(|| {
                let sup =
                    times.iter().zip(&limits).map(|(&t, &l)| (norm * series.value_at(t) - l).abs()).fold(0.0, f64::max);
                relative_error(target + sup, target)
            });
            Ok((value, target, ucp))
        })?;
        let values: Vec<f64> = results.iter().map(|r| r.0).collect();
        let targets: Vec<f64> = results.iter().map(|r| r.1).collect();
        let errors: Vec<f64> = results.iter().map(|r| relative_error(r.0, r.1)).collect();
        degenerate &= values.iter().chain(&targets).all(|&v| v == 0.0);
        let target_median = quantile(&sorted(&targets), 0.5);
        rows.push(summarize(n, "normalized_v", &values, Some(target_median)));
        rows.push(summarize(n, "oracle", &targets, None));
        rows.push(summarize(n, "rel_error", &errors, None));
        let passing = errors.iter().filter(|&&e| e < config.tolerances.rel_error).count() as f64;
        let fraction = passing / errors.len() as f64;
        rows.push(summarize(n, "pass_fraction", &[fraction], Some(config.tolerances.pass_fraction)));
        for (rep, res) in results.iter().enumerate() {
            let base = |statistic: &str, value: f64, target: f64| Sample {
                n,
                replication: rep,
                statistic: statistic.to_string(),
                value,
                target,
            };
            samples.push(base("normalized_v", res.0, res.1));
            if let Some(u) = res.2 {
                samples.push(base("ucp", u, 0.0));
            }
        }
        if with_ucp {
            let ucp: Vec<f64> = results.iter().filter_map(|r| r.2).collect();
            rows.push(summarize(n, "ucp", &ucp, None));
        }
    }
    Ok(MCReport {
        mode: config.mode,
        config_hash: config.hash()?,
        master_seed: config.master_seed,
        rows,
        samples,
        degenerate,
    })
}

/// Estimates from one path observed at `X_{i/n}`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimates {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// Ratio-statistic estimate of `alpha + 1/beta`.
    pub h_hat: f64,
    pub ri_hat: f64,
}

pub fn estimate_path(values: &[f64], n: u64, config: &ExperimentConfig) -> Result<PathEstimates> {
    let v = variations_on_grid(values, &config.pgrid)?;
    let fit = fit_alpha_beta(&scale_stat(&v, n as f64)?, &config.pgrid, &config.domain)?;
    let h_hat = estimate_h(ratio_stat(values, config.ratio_p)?, config.ratio_p)?;
    let series = power_variation_values(values, n as f64, config.p, 1)?;
    let ri_hat = relative_intermittency(&series, config.ri_t)?;
    Ok(PathEstimates { alpha_hat: fit.alpha_hat, beta_hat: fit.beta_hat, h_hat, ri_hat })
}

/// Extracts `(estimate, truth)` from one replication.
type Pick<'a> = Box<dyn Fn(&(PathEstimates, f64)) -> (f64, f64) + 'a>;

/// Distribution of `(alpha_hat, beta_hat, H_hat, RI)` and their absolute errors per frequency.
pub fn run_estimate(config: &ExperimentConfig) -> Result<MCReport> {
    config.validate()?;
    if config.mode != Mode::Estimate {
        return Err(cfg_err(format!("run_estimate needs mode = estimate, got {}", config.mode)));
    }
    let alpha0 = config.kernel.alpha();
    let beta0 = config.beta();
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut degenerate = true;
    for &n in &config.n_list {
        let engine = Engine::new(config, n)?;
        let results = replicate(config, |rep| {
            let r = engine.realize(config, n, rep)?;
            let est = estimate_path(&r.path.values, n, config)?;
            let ri0 = r.sigma.power_integral(config.p, config.ri_t)? / r.sigma.power_integral(config.p, 1.0)?;
            Ok((est, ri0))
        })?;
        let named: [(&str, Pick<'_>); 4] = [
            ("alpha_hat", Box::new(|r| (r.0.alpha_hat, alpha0))),
            ("beta_hat", Box::new(|r| (r.0.beta_hat, beta0))),
            ("h_hat", Box::new(|r| (r.0.h_hat, alpha0 + 1.0 / beta0))),
            ("ri_hat", Box::new(|r| (r.0.ri_hat, r.1))),
        ];
        for (name, get) in &named {
            let pairs: Vec<(f64, f64)> = results.iter().map(get).collect();
            let values: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let errors: Vec<f64> = pairs.iter().map(|x| (x.0 - x.1).abs()).collect();
            degenerate &= values.iter().all(|&v| v == 0.0);
            let target = quantile(&sorted(&pairs.iter().map(|x| x.1).collect::<Vec<_>>()), 0.5);
            rows.push(summarize(n, name, &values, Some(target)));
            let err_name = format!("{}_abs_error", name.trim_end_matches("_hat"));
            rows.push(summarize(n, &err_name, &errors, None));
            for (rep, &(value, target)) in pairs.iter().enumerate() {
                samples.push(Sample { n, replication: rep, statistic: name.to_string(), value, target });
            }
        }
    }
    Ok(MCReport {
        mode: config.mode,
        config_hash: config.hash()?,
        master_seed: config.master_seed,
        rows,
        samples,
        degenerate,
    })
}

/// Oracle constants for the configured parameters; entries that do not
/// apply (divergent moments, uncovered regimes) are skipped.
pub fn run_oracle(config: &ExperimentConfig) -> Result<Vec<(String, f64)>> {
    let (alpha, k, p) = (config.kernel.alpha(), config.k, config.p);
    let mut out = Vec::new();
    if let DriverSpec::Stable { beta, gamma_scale } = config.driver {
        if p < beta {
            out.push((format!("abs_moment_stable(beta={beta},p={p})"), abs_moment_stable(beta, p)?));
        }
        if let Ok(hk) = hk_abs_power_integral(HkParams::new(alpha, k)?, beta) {
            out.push((format!("hk_abs_power_integral(alpha={alpha},k={k},q={beta})"), hk.value));
        }
        if let Ok(mp) = mp_constant(config.kernel.c0(), gamma_scale, alpha, k, beta, p) {
            out.push((format!("mp_constant(alpha={alpha},k={k},beta={beta},p={p})"), mp));
        }
    }
    for u in [0.0, 0.25, 0.5, 0.75] {
        if let Ok(v) = vm_series(alpha, k, p, u) {
            out.push((format!("vm_series(alpha={alpha},k={k},p={p},u={u})"), v));
        }
    }
    if config.mode.regime().is_some() || config.mode == Mode::Oracle {
        let tag = config.regime();
        if let Ok(f) = normalization_factor(tag, 1.0, p, k, alpha, config.beta()) {
            out.push((format!("normalization_at_n1(regime={tag})"), f));
        }
    }
    Ok(out)
}
