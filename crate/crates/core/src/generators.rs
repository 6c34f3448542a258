//! Seeded path generators: Donsker walks, Brownian grids, compound Poisson paths.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::paths::{CadlagPath, Interpolation};
use crate::rng::RngConfig;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IncrementLaw {
    /// Independent ±1 coordinates.
    #[default]
    Rademacher,
    Gaussian,
}

/// A random walk `X^n_t = n^{-1/2} Σ_{k <= nt} Σ ξ_k` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub n: usize,
    pub sigma: Matrix,
    pub increment_law: IncrementLaw,
    pub horizon: f64,
}

impl WalkSpec {
    pub fn new(n: usize, sigma: Matrix, increment_law: IncrementLaw, horizon: f64) -> Result<Self> {
        let spec = WalkSpec { n, sigma, increment_law, horizon };
        spec.validate()?;
        Ok(spec)
    }

    /// One-dimensional walk with unit volatility.
    pub fn scalar(n: usize, increment_law: IncrementLaw, horizon: f64) -> Result<Self> {
        Self::new(n, Matrix::identity(1), increment_law, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("walk resolution n must be at least 1"));
        }
        if !self.sigma.is_square() {
            return Err(Error::param("covariance factor must be square"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::NonPositiveHorizon(self.horizon));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    /// Number of increments, `ceil(n T)`.
    pub fn steps(&self) -> usize {
        (self.n as f64 * self.horizon).ceil() as usize
    }

    fn breakpoints(&self, n: usize, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| k as f64 / n as f64).collect()
    }
}

/// Fills `steps` scaled, Σ-correlated increments into cumulative values.
fn cumulative_values<R: RngCore>(spec: &WalkSpec, n: usize, steps: usize, law: IncrementLaw, rng: &mut R) -> Vec<f64> {
    let d = spec.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let mut values = vec![0.0; (steps + 1) * d];
    let mut xi = vec![0.0; d];
    let mut inc = vec![0.0; d];
    let mut bits = 0u64;
    let mut nbits = 0u32;
    for k in 1..=steps {
        for x in xi.iter_mut() {
            *x = match law {
                IncrementLaw::Rademacher => {
                    if nbits == 0 {
                        bits = rng.next_u64();
                        nbits = 64;
                    }
                    let s = if bits & 1 == 1 { 1.0 } else { -1.0 };
                    bits >>= 1;
                    nbits -= 1;
                    s
                }
                IncrementLaw::Gaussian => rng.sample(StandardNormal),
            };
        }
        spec.sigma.mul_vec_into(&xi, &mut inc);
        let (prev, cur) = values.split_at_mut(k * d);
        let prev = &prev[(k - 1) * d..];
        for j in 0..d {
            cur[j] = prev[j] + inc[j] * scale;
        }
    }
    values
}

/// Step path of the walk at breakpoints `k/n`, `k = 0..=ceil(nT)`.
pub fn gen_walk(spec: &WalkSpec, rng: &RngConfig) -> Result<CadlagPath> {
    spec.validate()?;
    let steps = spec.steps();
    let values = cumulative_values(spec, spec.n, steps, spec.increment_law, &mut rng.rng());
    CadlagPath::from_flat(spec.breakpoints(spec.n, steps), values, spec.dim(), Interpolation::Step)
}

/// Linear interpolation of exact Gaussian increments on the grid `k/n`.
pub fn gen_bm_grid(spec: &WalkSpec, rng: &RngConfig) -> Result<CadlagPath> {
    spec.validate()?;
    if spec.increment_law != IncrementLaw::Gaussian {
        return Err(Error::param("Brownian grid requires Gaussian increments"));
    }
    let steps = spec.steps();
    let values = cumulative_values(spec, spec.n, steps, IncrementLaw::Gaussian, &mut rng.rng());
    CadlagPath::from_flat(spec.breakpoints(spec.n, steps), values, spec.dim(), Interpolation::Linear)
}

/// Gaussian walks at resolutions `n` and `factor * n` sharing the same
/// Brownian increments. The coarse path is a step walk whose values are the
/// fine values at `k/n`; the fine path is linearly interpolated and plays the
/// role of the Brownian motion.
pub fn gen_coupled(spec: &WalkSpec, factor: usize, rng: &RngConfig) -> Result<(CadlagPath, CadlagPath)> {
    spec.validate()?;
    if factor == 0 {
        return Err(Error::param("coupling factor must be at least 1"));
    }
    let d = spec.dim();
    let fine_n = spec.n * factor;
    let coarse_steps = spec.steps();
    let fine_steps = coarse_steps * factor;
    let fine_vals = cumulative_values(spec, fine_n, fine_steps, IncrementLaw::Gaussian, &mut rng.rng());
    let coarse_vals: Vec<f64> = (0..=coarse_steps)
        .flat_map(|k| fine_vals[k * factor * d..(k * factor + 1) * d].iter().copied())
        .collect();
    let coarse = CadlagPath::from_flat(spec.breakpoints(spec.n, coarse_steps), coarse_vals, d, Interpolation::Step)?;
    let fine = CadlagPath::from_flat(spec.breakpoints(fine_n, fine_steps), fine_vals, d, Interpolation::Linear)?;
    Ok((coarse, fine))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JumpLaw {
    Exp { mean: f64 },
}

impl Default for JumpLaw {
    fn default() -> Self {
        JumpLaw::Exp { mean: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    pub rate: f64,
    #[serde(default)]
    pub jump_law: JumpLaw,
    pub horizon: f64,
}

impl CompoundPoissonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::param(format!("jump rate must be positive, got {}", self.rate)));
        }
        let JumpLaw::Exp { mean } = self.jump_law;
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::param(format!("jump mean must be positive, got {mean}")));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::NonPositiveHorizon(self.horizon));
        }
        Ok(())
    }
}

/// Nondecreasing compound Poisson step path started at 0, jumps on `(0, T]`.
pub fn gen_compound_poisson(spec: &CompoundPoissonSpec, rng: &RngConfig) -> Result<CadlagPath> {
    spec.validate()?;
    let mut r = rng.rng();
    let arrivals = Exp::new(spec.rate).map_err(|e| Error::param(e.to_string()))?;
    let JumpLaw::Exp { mean } = spec.jump_law;
    let sizes = Exp::new(1.0 / mean).map_err(|e| Error::param(e.to_string()))?;
    let mut times = vec![0.0];
    let mut values = vec![0.0];
    let mut t = 0.0;
    loop {
        t += arrivals.sample(&mut r);
        if t > spec.horizon {
            break;
        }
        let jump: f64 = sizes.sample(&mut r);
        if t > *times.last().unwrap() && jump > 0.0 {
            times.push(t);
            values.push(values.last().unwrap() + jump);
        }
    }
    CadlagPath::from_flat(times, values, 1, Interpolation::Step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Projection;
    use crate::special::norm_cdf;
    use crate::stats::{ks_one_sample, Sample};

    #[test]
    fn single_rademacher_step() {
        let spec = WalkSpec::scalar(1, IncrementLaw::Rademacher, 1.0).unwrap();
        let p = gen_walk(&spec, &RngConfig::new(1, 0)).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 1.0]);
        assert_eq!(p.value(0), &[0.0]);
        assert_eq!(p.value(1)[0].abs(), 1.0);
        assert_eq!(p.coordinate(0).eval(0.99), 0.0);
    }

    #[test]
    fn determinism() {
        let spec = WalkSpec::new(50, Matrix::identity(2), IncrementLaw::Gaussian, 2.0).unwrap();
        let rng = RngConfig::new(99, 5);
        assert_eq!(gen_walk(&spec, &rng).unwrap(), gen_walk(&spec, &rng).unwrap());
        assert_ne!(gen_walk(&spec, &rng).unwrap(), gen_walk(&spec, &rng.with_stream(6)).unwrap());
        let cp = CompoundPoissonSpec { rate: 1.0, jump_law: JumpLaw::default(), horizon: 10.0 };
        assert_eq!(gen_compound_poisson(&cp, &rng).unwrap(), gen_compound_poisson(&cp, &rng).unwrap());
    }

    #[test]
    fn rademacher_increments_are_centered() {
        // Exact martingale property: increments are ±n^{-1/2} with the sign drawn from one fair bit.
        let spec = WalkSpec::scalar(16, IncrementLaw::Rademacher, 4.0).unwrap();
        let p = gen_walk(&spec, &RngConfig::new(3, 0)).unwrap().coordinate(0);
        for w in p.values().windows(2) {
            assert!(((w[1] - w[0]).abs() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn terminal_covariance_matches() {
        // X_T has covariance T ΣΣ'; check the sample covariance within 3 MC standard errors.
        let sigma = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.75f64.sqrt()]]).unwrap();
        let spec = WalkSpec::new(4, sigma.clone(), IncrementLaw::Rademacher, 2.0).unwrap();
        let n = 100_000usize;
        let mut s = [[0.0f64; 2]; 2];
        let mut s4 = [[0.0f64; 2]; 2];
        for i in 0..n {
            let p = gen_walk(&spec, &RngConfig::new(11, i as u64)).unwrap();
            let x = p.value(p.len() - 1);
            for a in 0..2 {
                for b in 0..2 {
                    s[a][b] += x[a] * x[b];
                    s4[a][b] += (x[a] * x[b]).powi(2);
                }
            }
        }
        let g = sigma.gram();
        for a in 0..2 {
            for b in 0..2 {
                let mean = s[a][b] / n as f64;
                let var = s4[a][b] / n as f64 - mean * mean;
                let se = (var / n as f64).sqrt();
                let expect = 2.0 * g.get(a, b);
                assert!((mean - expect).abs() <= 3.0 * se, "({a},{b}): {mean} vs {expect} ± {se}");
            }
        }
    }

    #[test]
    fn bm_grid_marginal_passes_ks() {
        let spec = WalkSpec::new(8, Matrix::identity(2), IncrementLaw::Gaussian, 1.5).unwrap();
        let gamma = Projection::new(vec![1.0, 1.0]).unwrap();
        let mut xs = Vec::with_capacity(10_000);
        let mut sum_sq = 0.0;
        for i in 0..10_000u64 {
            let p = gen_bm_grid(&spec, &RngConfig::new(5, i)).unwrap().project(&gamma).unwrap();
            assert!(p.jump_times().is_empty());
            let x = p.eval(1.5);
            sum_sq += x * x;
            xs.push(x);
        }
        // γ·X_T ~ N(0, T ‖γ'Σ‖²) = N(0, 3).
        let sd = 3.0f64.sqrt();
        let ks = ks_one_sample(&Sample::new(xs).unwrap(), |x| norm_cdf(x / sd));
        assert!(ks.statistic <= ks.threshold(0.01), "{ks:?}");
        let var = sum_sq / 10_000.0;
        // Var of the sample second moment is 2σ⁴ / N.
        assert!((var - 3.0).abs() <= 3.0 * (2.0 * 9.0 / 10_000.0f64).sqrt());
        assert!(gen_bm_grid(&WalkSpec::scalar(4, IncrementLaw::Rademacher, 1.0).unwrap(), &RngConfig::new(1, 1)).is_err());
    }

    #[test]
    fn coupled_paths_agree_on_coarse_grid() {
        let spec = WalkSpec::scalar(10, IncrementLaw::Gaussian, 1.0).unwrap();
        let (c, f) = gen_coupled(&spec, 4, &RngConfig::new(2, 2)).unwrap();
        assert_eq!(c.len(), 11);
        assert_eq!(f.len(), 41);
        for k in 0..=10 {
            assert_eq!(c.value(k), f.value(4 * k));
        }
        assert_eq!(c.interpolation(), Interpolation::Step);
        assert_eq!(f.interpolation(), Interpolation::Linear);
    }

    #[test]
    fn compound_poisson_properties() {
        let tiny = CompoundPoissonSpec { rate: 1e-12, jump_law: JumpLaw::default(), horizon: 1.0 };
        let p = gen_compound_poisson(&tiny, &RngConfig::new(1, 1)).unwrap();
        assert_eq!(p.len(), 1);

        let spec = CompoundPoissonSpec { rate: 1.0, jump_law: JumpLaw::Exp { mean: 1.0 }, horizon: 10.0 };
        let n = 20_000;
        let mut jumps = 0usize;
        for i in 0..n {
            let p = gen_compound_poisson(&spec, &RngConfig::new(4, i)).unwrap().coordinate(0);
            assert!(p.values().windows(2).all(|w| w[1] > w[0]));
            assert!(p.last_time() <= 10.0);
            jumps += p.len() - 1;
        }
        let mean = jumps as f64 / n as f64;
        // Poisson(10): standard error sqrt(10 / n).
        assert!((mean - 10.0).abs() <= 3.0 * (10.0 / n as f64).sqrt(), "{mean}");
        assert!(gen_compound_poisson(&CompoundPoissonSpec { rate: 0.0, ..spec }, &RngConfig::new(1, 1)).is_err());
    }
}
