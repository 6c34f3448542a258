//! Monte Carlo experiments: convergence of the quantile functionals along
//! Donsker walks, continuity diagnostics, the compound Poisson
//! counterexample, payoff prices and J1 certificates.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]. Paths are
//! drawn from per-path ChaCha streams and evaluated in parallel with rayon;
//! results are collected in path order, so reports do not depend on the
//! number of worker threads.

mod continuity;
mod counterexample;
mod j1;
mod joint;
mod marginal;
pub mod oracle;
mod pricing;
mod report;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use continuity::run_continuity_diagnostics;
pub use counterexample::run_counterexample;
pub use j1::run_j1_certificates;
pub use joint::run_joint_convergence;
pub use marginal::run_marginal_convergence;
pub use pricing::run_pricing;
pub use report::{Comparison, ConvergenceReport, Criterion, ReportRow};

use crate::brownian_law::BrownianSpec;
use crate::error::{check_alpha, check_horizon};
use crate::generators::{gen_walk, CompoundPoissonSpec, IncrementLaw, JumpLaw, WalkSpec};
use crate::hitting_time::hitting_time_at_level;
use crate::paths::{Projection, ScalarPath};
use crate::quantile::occupation_cdf;
use crate::rng::RngConfig;
use crate::skorokhod::SearchParams;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Marginal,
    Joint,
    Continuity,
    Counterexample,
    Pricing,
    J1,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Marginal,
        ExperimentKind::Joint,
        ExperimentKind::Continuity,
        ExperimentKind::Counterexample,
        ExperimentKind::Pricing,
        ExperimentKind::J1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Marginal => "marginal",
            ExperimentKind::Joint => "joint",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Pricing => "pricing",
            ExperimentKind::J1 => "j1",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffKind {
    /// `f(m) = max(m, 0)`.
    PositivePart,
    /// `f(m) = max(m − strike, 0)`.
    Call { strike: f64 },
    /// `f ≡ 1`.
    Constant,
}

/// `g(m, u) = f(m) 1{u > v}` with the growth bound `|f(z)|^p <= D (1 + |z|^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayoffConfig {
    pub kind: PayoffKind,
    pub p: f64,
    #[serde(alias = "D")]
    pub d: f64,
    pub v: f64,
}

impl Default for PayoffConfig {
    fn default() -> Self {
        PayoffConfig { kind: PayoffKind::PositivePart, p: 2.0, d: 2.0, v: 0.3 }
    }
}

impl PayoffConfig {
    pub fn f(&self, m: f64) -> f64 {
        match self.kind {
            PayoffKind::PositivePart => m.max(0.0),
            PayoffKind::Call { strike } => (m - strike).max(0.0),
            PayoffKind::Constant => 1.0,
        }
    }

    pub fn payoff(&self, m: f64, tau: f64) -> f64 {
        if tau > self.v {
            self.f(m)
        } else {
            0.0
        }
    }

    /// Whether the growth bound holds at `m`.
    pub fn growth_ok(&self, m: f64) -> bool {
        self.f(m).abs().powf(self.p) <= self.d * (1.0 + m.abs().powf(self.p))
    }
}

/// High-resolution Brownian grid sample standing in for the limit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    pub paths: usize,
    /// Directory for the on-disk cache; `QP_CACHE_DIR` or the system temp dir when unset.
    pub cache_dir: Option<PathBuf>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { n: 10_000, paths: 100_000, cache_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityConfig {
    /// Grid resolution of the Brownian paths.
    pub bm_n: usize,
    /// Paths checked for flats on the α-grid.
    pub paths: usize,
    pub alpha_grid: usize,
    /// Resolution of the coarse walk control group.
    pub control_n: usize,
    /// Size of the M-sample used for the atom check.
    pub atom_paths: usize,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig { bm_n: 1_000, paths: 1_000, alpha_grid: 99, control_n: 10, atom_paths: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub paths: usize,
    pub process: CompoundPoissonSpec,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            paths: 1_000,
            process: CompoundPoissonSpec { rate: 1.0, jump_law: JumpLaw::Exp { mean: 1.0 }, horizon: 10.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct J1Config {
    /// Coarse resolutions; each is compared with `factor` times finer.
    pub n_list: Vec<usize>,
    pub factor: usize,
    pub replications: usize,
    /// Horizons `N = 1..n_max`; `ceil(T) + 1` when unset.
    pub n_max: Option<u32>,
    pub search: SearchParams,
    /// Minimum median δ required of independent (uncoupled) pairs.
    pub control_min: f64,
}

impl Default for J1Config {
    fn default() -> Self {
        J1Config {
            n_list: vec![100, 1_000],
            factor: 4,
            replications: 100,
            n_max: None,
            search: SearchParams::default(),
            control_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    /// Further levels evaluated on the same paths by the marginal experiment.
    pub extra_alphas: Vec<f64>,
    #[serde(alias = "T")]
    pub horizon: f64,
    pub gamma: Vec<f64>,
    /// Covariance factor `Σ`; identity of dimension `gamma.len()` when unset.
    #[serde(alias = "Sigma")]
    pub sigma: Option<Matrix>,
    pub increment_law: IncrementLaw,
    pub n_list: Vec<usize>,
    /// Paths per resolution.
    #[serde(alias = "N")]
    pub paths: usize,
    pub seed: u64,
    /// Independent replications behind every monotone-in-median criterion.
    pub replications: usize,
    pub replication_paths: usize,
    pub ks_level: f64,
    /// Pass threshold for KS distances between a walk sample and the limit law.
    pub ks_max: f64,
    pub mean_tolerance: f64,
    /// Added to statistical thresholds for walk-versus-limit comparisons.
    pub discretization_allowance: f64,
    /// `(m0, v0)` of the joint event `{M > m0, τ > v0}`.
    pub rectangle: (f64, f64),
    pub rectangle_max_gap: f64,
    pub payoff: PayoffConfig,
    pub oracle: OracleConfig,
    pub continuity: ContinuityConfig,
    pub counterexample: CounterexampleConfig,
    pub j1: J1Config,
    /// Largest number of random increments a run may draw.
    pub budget: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: 0.5,
            extra_alphas: Vec::new(),
            horizon: 1.0,
            gamma: vec![1.0],
            sigma: None,
            increment_law: IncrementLaw::Rademacher,
            n_list: vec![100, 1_000, 10_000],
            paths: 10_000,
            seed: 0,
            replications: 100,
            replication_paths: 1_000,
            ks_level: 0.01,
            ks_max: 0.02,
            mean_tolerance: 0.01,
            discretization_allowance: 0.01,
            rectangle: (0.2, 0.3),
            rectangle_max_gap: 0.02,
            payoff: PayoffConfig::default(),
            oracle: OracleConfig::default(),
            continuity: ContinuityConfig::default(),
            counterexample: CounterexampleConfig::default(),
            j1: J1Config::default(),
            budget: 6e10,
            output: None,
        }
    }
}

/// Increments per second assumed by budget estimates (one core).
const ASSUMED_RATE: f64 = 4e7;
/// Smallest sample size for which asymptotic KS thresholds are used.
pub const MIN_KS_PATHS: usize = 1_000;

impl ExperimentConfig {
    pub fn sigma_matrix(&self) -> Matrix {
        self.sigma.clone().unwrap_or_else(|| Matrix::identity(self.gamma.len()))
    }

    pub fn projection(&self) -> Result<Projection> {
        Projection::new(self.gamma.clone())
    }

    pub fn brownian(&self) -> Result<BrownianSpec> {
        BrownianSpec::new(self.sigma_matrix(), self.projection()?, self.horizon)
    }

    pub fn alphas(&self) -> Vec<f64> {
        let mut a = vec![self.alpha];
        for &x in &self.extra_alphas {
            if !a.contains(&x) {
                a.push(x);
            }
        }
        a
    }

    pub fn walk(&self, n: usize) -> Result<WalkSpec> {
        WalkSpec::new(n, self.sigma_matrix(), self.increment_law, self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        for &a in &self.alphas() {
            check_alpha(a)?;
        }
        check_horizon(self.horizon)?;
        let spec = self.brownian()?;
        if spec.effective_sigma() <= 0.0 {
            return Err(Error::param("projected volatility ‖γ'Σ‖ must be positive"));
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 {
            return Err(Error::param("n_list must be nonempty with positive entries"));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("n_list must be strictly increasing"));
        }
        if self.paths < 2 || self.replications == 0 || self.replication_paths < 2 {
            return Err(Error::param("path counts must be at least 2 and replications at least 1"));
        }
        if !(self.ks_level > 0.0 && self.ks_level < 1.0) {
            return Err(Error::param(format!("ks_level must lie in (0,1), got {}", self.ks_level)));
        }
        if !(self.payoff.p >= 1.0 && self.payoff.d > 0.0 && self.payoff.v >= 0.0) {
            return Err(Error::param("payoff needs p >= 1, D > 0 and v >= 0"));
        }
        if self.oracle.n == 0 || self.oracle.paths < 2 {
            return Err(Error::param("oracle needs n >= 1 and at least 2 paths"));
        }
        if !(self.budget > 0.0) {
            return Err(Error::param("budget must be positive"));
        }
        Ok(())
    }

    /// Sample sizes behind KS criteria must be in the asymptotic regime.
    fn require_ks_sizes(&self) -> Result<()> {
        if self.paths < MIN_KS_PATHS {
            return Err(Error::param(format!(
                "KS-based criteria need at least {MIN_KS_PATHS} paths per resolution, got {}",
                self.paths
            )));
        }
        Ok(())
    }

    fn walk_increments(&self, n: usize, paths: usize) -> f64 {
        (n as f64 * self.horizon).ceil() * paths as f64 * self.gamma.len() as f64
    }

    fn oracle_increments(&self) -> f64 {
        if oracle::is_cached(self) {
            0.0
        } else {
            (self.oracle.n as f64 * self.horizon).ceil() * self.oracle.paths as f64
        }
    }

    /// Random increments `kind` will draw.
    pub fn estimated_increments(&self, kind: ExperimentKind) -> f64 {
        let main: f64 = self.n_list.iter().map(|&n| self.walk_increments(n, self.paths)).sum();
        match kind {
            ExperimentKind::Marginal => {
                let reps: f64 = self
                    .n_list
                    .iter()
                    .map(|&n| self.walk_increments(n, self.replication_paths) * self.replications as f64)
                    .sum();
                main + reps + self.oracle_increments()
            }
            ExperimentKind::Joint | ExperimentKind::Pricing => main + self.oracle_increments(),
            ExperimentKind::Continuity => {
                let c = &self.continuity;
                (c.bm_n as f64 * self.horizon).ceil() * (c.paths + c.atom_paths) as f64
                    + (c.control_n as f64 * self.horizon).ceil() * c.paths as f64
            }
            ExperimentKind::Counterexample => {
                let c = &self.counterexample;
                2.0 * c.paths as f64 * (c.process.rate * c.process.horizon + 1.0)
            }
            ExperimentKind::J1 => {
                let j = &self.j1;
                j.n_list
                    .iter()
                    .map(|&n| 3.0 * self.walk_increments(n * j.factor, j.replications))
                    .sum()
            }
        }
    }

    /// Rejects runs whose size exceeds the configured budget.
    pub fn check_budget(&self, kind: ExperimentKind) -> Result<()> {
        let inc = self.estimated_increments(kind);
        if inc > self.budget {
            return Err(Error::BudgetExceeded(format!(
                "{} experiment would draw about {inc:.2e} random increments (about {:.0} s on one core \
                 at {ASSUMED_RATE:.0e}/s), above the budget of {:.2e}; reduce paths or n_list, or raise `budget`",
                kind.name(),
                inc / ASSUMED_RATE,
                self.budget
            )));
        }
        Ok(())
    }
}

/// Runs one experiment kind.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    match kind {
        ExperimentKind::Marginal => run_marginal_convergence(cfg),
        ExperimentKind::Joint => run_joint_convergence(cfg),
        ExperimentKind::Continuity => run_continuity_diagnostics(cfg),
        ExperimentKind::Counterexample => run_counterexample(cfg),
        ExperimentKind::Pricing => run_pricing(cfg),
        ExperimentKind::J1 => run_j1_certificates(cfg),
    }
}

/// Quantile levels and hitting times of one path, one entry per α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub m: Vec<f64>,
    pub tau: Vec<f64>,
}

/// `M_{T,α}` and `τ` for each α, checking `inf <= M <= sup` on the way.
pub fn path_functionals(path: &ScalarPath, horizon: f64, alphas: &[f64]) -> Result<Functionals> {
    let cdf = occupation_cdf(path, horizon)?;
    let (lo, hi) = (cdf.y_min(), cdf.y_max());
    let mut out = Functionals { m: Vec::with_capacity(alphas.len()), tau: Vec::with_capacity(alphas.len()) };
    for &a in alphas {
        let m = cdf.quantile(a)?.value;
        if !(lo <= m && m <= hi) {
            return Err(Error::Invariant(format!("quantile {m} outside [{lo}, {hi}] at alpha {a}")));
        }
        let h = hitting_time_at_level(path, horizon, m);
        if h.never_hit || h.tau > horizon {
            return Err(Error::Invariant(format!("level {m} not reached by time {horizon}")));
        }
        out.m.push(m);
        out.tau.push(h.tau);
    }
    Ok(out)
}

/// Evaluates `count` independently drawn paths in parallel, path `i` on stream `i`.
pub(crate) fn simulate<G>(count: usize, base: RngConfig, horizon: f64, alphas: &[f64], gen: G) -> Result<Vec<Functionals>>
where
    G: Fn(&RngConfig) -> Result<ScalarPath> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| path_functionals(&gen(&base.with_stream(i as u64))?, horizon, alphas))
        .collect()
}

/// Projected walk paths at resolution `n`.
pub(crate) fn simulate_walks(cfg: &ExperimentConfig, n: usize, count: usize, base: RngConfig) -> Result<Vec<Functionals>> {
    let spec = cfg.walk(n)?;
    let gamma = cfg.projection()?;
    simulate(count, base, cfg.horizon, &cfg.alphas(), |r| gen_walk(&spec, r)?.project(&gamma))
}

/// Seed families, so that arms of different experiments never share streams
/// unless they are meant to (the main walk sample at a given `n` is shared).
pub(crate) mod tags {
    pub const WALK: u64 = 1 << 40;
    pub const REPLICATION: u64 = 2 << 40;
    pub const ORACLE: u64 = 3 << 40;
    pub const CONTINUITY: u64 = 4 << 40;
    pub const CONTROL: u64 = 5 << 40;
    pub const ATOMS: u64 = 6 << 40;
    pub const POISSON: u64 = 7 << 40;
    pub const COUPLED: u64 = 8 << 40;
    pub const UNCOUPLED: u64 = 9 << 40;
}

pub(crate) fn arm(cfg: &ExperimentConfig, tag: u64) -> RngConfig {
    RngConfig::new(cfg.seed, 0).derive(tag)
}

pub(crate) fn column(fs: &[Functionals], k: usize, pick: fn(&Functionals) -> &Vec<f64>) -> Vec<f64> {
    fs.iter().map(|f| pick(f)[k]).collect()
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Fraction of `true` values, with the count.
pub(crate) fn indicator_mean(xs: impl Iterator<Item = bool>) -> (f64, usize) {
    let mut hits = 0usize;
    let mut n = 0usize;
    for x in xs {
        n += 1;
        hits += x as usize;
    }
    (hits as f64 / n.max(1) as f64, n)
}
