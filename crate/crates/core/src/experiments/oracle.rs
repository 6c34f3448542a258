//! The Brownian-grid reference sample for laws with no closed form here
//! (joint events of `(M, τ)`, payoff prices), cached on disk because it is
//! by far the most expensive part of a run.
//!
//! `γ·X` is a one-dimensional Brownian motion with volatility `‖γ'Σ‖`, so
//! the sample is drawn in one dimension at that volatility.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{arm, simulate, tags, ExperimentConfig, Functionals};
use crate::generators::{gen_bm_grid, IncrementLaw, WalkSpec};
use crate::rng::splitmix64;
use crate::{Error, Matrix, Result, SCHEMA_VERSION};

/// Levels always included, so that runs at different α share one sample.
pub const ORACLE_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleKey {
    pub sigma_eff: f64,
    pub horizon: f64,
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
}

impl OracleKey {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let mut alphas: Vec<f64> = ORACLE_ALPHAS.to_vec();
        alphas.extend(cfg.alphas());
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        Ok(OracleKey {
            sigma_eff: cfg.brownian()?.effective_sigma(),
            horizon: cfg.horizon,
            n: cfg.oracle.n,
            paths: cfg.oracle.paths,
            seed: cfg.seed,
            alphas,
        })
    }

    fn fingerprint(&self) -> u64 {
        let mut h = splitmix64(SCHEMA_VERSION as u64);
        let words = [self.sigma_eff.to_bits(), self.horizon.to_bits(), self.n as u64, self.paths as u64, self.seed];
        for w in words.into_iter().chain(self.alphas.iter().map(|a| a.to_bits())) {
            h = splitmix64(h ^ w);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub schema_version: u32,
    pub key: OracleKey,
    /// `m[k][i]`: quantile at `key.alphas[k]` on path `i`.
    pub m: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
}

impl OracleSample {
    /// `(M, τ)` columns at `alpha`.
    pub fn column(&self, alpha: f64) -> Result<(&[f64], &[f64])> {
        let k = self
            .key
            .alphas
            .iter()
            .position(|&a| a == alpha)
            .ok_or_else(|| Error::param(format!("oracle sample has no level {alpha}")))?;
        Ok((&self.m[k], &self.tau[k]))
    }

    pub fn len(&self) -> usize {
        self.key.paths
    }

    pub fn is_empty(&self) -> bool {
        self.key.paths == 0
    }
}

fn cache_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.oracle
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("QP_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| std::env::temp_dir().join("qp-cache"))
}

pub fn cache_path(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let key = OracleKey::from_config(cfg)?;
    Ok(cache_dir(cfg).join(format!("bm-oracle-{:016x}.json", key.fingerprint())))
}

fn read_cached(cfg: &ExperimentConfig) -> Option<OracleSample> {
    let key = OracleKey::from_config(cfg).ok()?;
    let text = fs::read_to_string(cache_path(cfg).ok()?).ok()?;
    let sample: OracleSample = serde_json::from_str(&text).ok()?;
    (sample.schema_version == SCHEMA_VERSION && sample.key == key).then_some(sample)
}

pub fn is_cached(cfg: &ExperimentConfig) -> bool {
    read_cached(cfg).is_some()
}

/// Simulates the sample without touching the cache.
pub fn build(cfg: &ExperimentConfig) -> Result<OracleSample> {
    let key = OracleKey::from_config(cfg)?;
    let spec = WalkSpec::new(key.n, Matrix::from_rows(vec![vec![key.sigma_eff]])?, IncrementLaw::Gaussian, key.horizon)?;
    let fs: Vec<Functionals> = simulate(key.paths, arm(cfg, tags::ORACLE), key.horizon, &key.alphas, |r| {
        Ok(gen_bm_grid(&spec, r)?.coordinate(0))
    })?;
    let m = (0..key.alphas.len()).map(|k| fs.iter().map(|f| f.m[k]).collect()).collect();
    let tau = (0..key.alphas.len()).map(|k| fs.iter().map(|f| f.tau[k]).collect()).collect();
    Ok(OracleSample { schema_version: SCHEMA_VERSION, key, m, tau })
}

/// Cached sample if present and matching, otherwise simulate and store it.
pub fn load_or_build(cfg: &ExperimentConfig) -> Result<OracleSample> {
    if let Some(s) = read_cached(cfg) {
        return Ok(s);
    }
    let sample = build(cfg)?;
    let path = cache_path(cfg)?;
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, serde_json::to_vec(&sample).expect("oracle serializes")).map_err(io)?;
    fs::rename(&tmp, &path).map_err(io)?;
    Ok(sample)
}
