//! Reference laws for the α-quantile of a projected Brownian motion.
//!
//! For `X = ΣW` and a hyperplane normal `γ`, `γ·X` is a Brownian motion with
//! volatility `σ = ‖γ'Σ‖`. Its α-quantile over `[0,T]` is distributed as
//! `S + I`, where `S` is the running maximum of a Brownian motion over
//! `[0, αT]` and `I` the running minimum of an independent one over
//! `[0, (1−α)T]`: a half-normal minus an independent half-normal.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, check_horizon};
use crate::paths::Projection;
use crate::quadrature::integrate;
use crate::special::{norm_cdf, norm_pdf};
use crate::{Error, Matrix, Result};

/// Tolerance used when none is given.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Quadrature ranges stop this many scale units past the mode.
const TRUNCATION_SDS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianSpec {
    pub sigma: Matrix,
    pub gamma: Projection,
    pub horizon: f64,
}

impl BrownianSpec {
    pub fn new(sigma: Matrix, gamma: Projection, horizon: f64) -> Result<Self> {
        let spec = BrownianSpec { sigma, gamma, horizon };
        spec.validate()?;
        Ok(spec)
    }

    /// One-dimensional Brownian motion with volatility `sigma`.
    pub fn scalar(sigma: f64, horizon: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("volatility must be positive, got {sigma}")));
        }
        Self::new(Matrix::from_rows(vec![vec![sigma]])?, Projection::new(vec![1.0])?, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_square() {
            return Err(Error::param("covariance factor must be square"));
        }
        if self.gamma.dim() != self.sigma.rows() {
            return Err(Error::DimensionMismatch { expected: self.sigma.rows(), got: self.gamma.dim() });
        }
        check_horizon(self.horizon)
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    /// `ΣΣ'` positive definite.
    pub fn is_nondegenerate(&self) -> bool {
        self.sigma.gram().is_positive_definite()
    }

    /// `‖γ'Σ‖`.
    pub fn effective_sigma(&self) -> f64 {
        self.sigma.left_mul_vec(self.gamma.as_slice()).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn positive_sigma(&self) -> Result<f64> {
        let s = self.effective_sigma();
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::param("projected volatility ‖γ'Σ‖ is zero"))
        }
    }
}

pub fn effective_sigma(spec: &BrownianSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.effective_sigma())
}

/// `E[M_{T,α}] = σ(√(2αT) − √(2(1−α)T))/√π`.
pub fn mean_quantile(spec: &BrownianSpec, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    spec.validate()?;
    let t = spec.horizon;
    Ok(spec.effective_sigma() * ((2.0 * alpha * t).sqrt() - (2.0 * (1.0 - alpha) * t).sqrt()) / PI.sqrt())
}

/// The law of `M_{T,α}` for a Brownian motion of volatility `sigma_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileLaw {
    pub alpha: f64,
    pub horizon: f64,
    pub sigma_eff: f64,
    /// `E[S] + E[I]` from the half-normal means.
    pub mean: f64,
    pub quad_tol: f64,
    /// Scale of the maximum part `S`, `σ√(αT)`.
    sup_scale: f64,
    /// Scale of the minimum part `I`, `σ√((1−α)T)`.
    inf_scale: f64,
}

pub fn quantile_law(spec: &BrownianSpec, alpha: f64, quad_tol: f64) -> Result<QuantileLaw> {
    check_alpha(alpha)?;
    spec.validate()?;
    if quad_tol.is_nan() || quad_tol <= 0.0 {
        return Err(Error::param(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let sigma = spec.positive_sigma()?;
    let a = sigma * (alpha * spec.horizon).sqrt();
    let b = sigma * ((1.0 - alpha) * spec.horizon).sqrt();
    let half_normal_mean = FRAC_2_PI.sqrt();
    Ok(QuantileLaw {
        alpha,
        horizon: spec.horizon,
        sigma_eff: sigma,
        mean: (a - b) * half_normal_mean,
        quad_tol,
        sup_scale: a,
        inf_scale: b,
    })
}

impl QuantileLaw {
    fn sup_density(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            2.0 / self.sup_scale * norm_pdf(s / self.sup_scale)
        }
    }

    /// `P(I <= z)`.
    fn inf_cdf(&self, z: f64) -> f64 {
        if z > 0.0 {
            1.0
        } else {
            2.0 * norm_cdf(z / self.inf_scale)
        }
    }

    /// Integration range over `s` where both factors are non-negligible.
    fn s_range(&self, m: f64) -> (f64, f64) {
        let lo = m.max(0.0);
        let hi = (lo + TRUNCATION_SDS * self.inf_scale).min((TRUNCATION_SDS * self.sup_scale).max(lo));
        (lo, hi)
    }

    /// `P(M <= m) = P(S <= m) + ∫_{s > max(m,0)} f_S(s) P(I <= m − s) ds`.
    pub fn cdf(&self, m: f64) -> f64 {
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        if m == f64::INFINITY {
            return 1.0;
        }
        let below = if m > 0.0 { 2.0 * norm_cdf(m / self.sup_scale) - 1.0 } else { 0.0 };
        let (lo, hi) = self.s_range(m);
        let tail = if hi > lo {
            integrate(|s| self.sup_density(s) * self.inf_cdf(m - s), lo, hi, self.quad_tol)
                .expect("finite bounds and positive tolerance")
                .value
        } else {
            0.0
        };
        (below + tail).clamp(0.0, 1.0)
    }

    /// Density of `S + I` by convolution.
    pub fn pdf(&self, m: f64) -> f64 {
        if !m.is_finite() {
            return 0.0;
        }
        let b = self.inf_scale;
        let (lo, hi) = self.s_range(m);
        if hi <= lo {
            return 0.0;
        }
        integrate(|s| self.sup_density(s) * 2.0 / b * norm_pdf((m - s) / b), lo, hi, self.quad_tol)
            .expect("finite bounds and positive tolerance")
            .value
            .max(0.0)
    }

    /// Interval carrying all but a negligible amount of mass.
    pub fn support_hint(&self) -> (f64, f64) {
        (-TRUNCATION_SDS * self.inf_scale, TRUNCATION_SDS * self.sup_scale)
    }

    /// `inf{m : cdf(m) >= p}` by bisection to `tol`.
    pub fn inverse_cdf(&self, p: f64, tol: f64) -> Result<f64> {
        check_alpha(p)?;
        let (mut lo, mut hi) = self.support_hint();
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// `E[1{M_{1,β} > 0} τ]` for a standard Brownian motion on `[0,1]`:
/// `(arcsin √β − √(β(1−β)))/π`.
pub fn expected_tau_positive(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("beta must lie in (0,1], got {beta}")));
    }
    Ok((beta.sqrt().asin() - (beta * (1.0 - beta)).sqrt()) / PI)
}

/// Density in `(u, b)` of `(τ, M)` on the event `{M > 0}`:
/// `b / (π √(u³(1−u))) · exp(−b²/(2u))`.
pub fn joint_density_positive(u: f64, b: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::param(format!("time must lie in (0,1), got {u}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param(format!("level must be positive, got {b}")));
    }
    Ok(b / (PI * (u * u * u * (1.0 - u)).sqrt()) * (-b * b / (2.0 * u)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(alpha: f64) -> QuantileLaw {
        quantile_law(&BrownianSpec::scalar(1.0, 1.0).unwrap(), alpha, DEFAULT_QUAD_TOL).unwrap()
    }

    #[test]
    fn effective_sigma_examples() {
        let id = Matrix::identity(2);
        let s = |g: Vec<f64>, m: &Matrix| BrownianSpec::new(m.clone(), Projection::new(g).unwrap(), 1.0).unwrap().effective_sigma();
        assert_eq!(s(vec![1.0, 0.0], &id), 1.0);
        assert!((s(vec![1.0, 1.0], &id) - 2f64.sqrt()).abs() < 1e-15);
        let rho = 0.5f64;
        let corr = Matrix::from_rows(vec![vec![1.0, 0.0], vec![rho, (1.0 - rho * rho).sqrt()]]).unwrap();
        assert!((s(vec![1.0, 1.0], &corr) - 3f64.sqrt()).abs() < 1e-15);
        assert!(BrownianSpec::new(id, Projection::new(vec![1.0, 1.0, 1.0]).unwrap(), 1.0).is_err());
        let singular = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let spec = BrownianSpec::new(singular, Projection::new(vec![1.0, -1.0]).unwrap(), 1.0).unwrap();
        assert!(!spec.is_nondegenerate());
        assert_eq!(spec.effective_sigma(), 0.0);
        assert!(quantile_law(&spec, 0.5, 1e-8).is_err());
    }

    #[test]
    fn mean_examples() {
        let unit = BrownianSpec::scalar(1.0, 1.0).unwrap();
        assert!(mean_quantile(&unit, 0.5).unwrap().abs() < 1e-16);
        let m = mean_quantile(&unit, 0.75).unwrap();
        // (√1.5 − √0.5)/√π evaluated to 17 digits.
        assert!((m - 0.292_046_018_541_238_2).abs() < 1e-15, "{m}");
        let big = BrownianSpec::scalar(2.0, 4.0).unwrap();
        assert!((mean_quantile(&big, 0.75).unwrap() - 4.0 * m).abs() < 1e-14);
        assert!((mean_quantile(&big, 0.75).unwrap() - 1.168_184_074_164_953).abs() < 1e-14);
        assert!(mean_quantile(&unit, 0.0).is_err());
    }

    #[test]
    fn mean_monotone_and_antisymmetric() {
        let unit = BrownianSpec::scalar(1.3, 2.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..100 {
            let a = k as f64 / 100.0;
            let m = mean_quantile(&unit, a).unwrap();
            assert!(m > prev);
            assert!((m + mean_quantile(&unit, 1.0 - a).unwrap()).abs() < 1e-14);
            prev = m;
        }
    }

    #[test]
    fn cdf_examples() {
        let law = unit(0.5);
        assert!((law.cdf(0.0) - 0.5).abs() < 1e-8);
        assert_eq!(law.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(law.cdf(f64::INFINITY), 1.0);
        assert!(law.cdf(-20.0) < 1e-8);
        assert!(law.cdf(20.0) > 1.0 - 1e-8);
        let bad = quantile_law(&BrownianSpec::scalar(1.0, 1.0).unwrap(), 0.5, 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn cdf_matches_closed_form_at_half() {
        // For α = 1/2, S + I is the difference of two iid half-normals of scale
        // 1/√2; an independent evaluation by direct 2-d quadrature of the joint density.
        let law = unit(0.5);
        let s = 0.5f64.sqrt();
        for &m in &[-1.0, -0.3, 0.2, 0.9] {
            let direct = integrate(
                |x| {
                    let fx = 2.0 / s * norm_pdf(x / s);
                    // P(Y >= x - m) for Y half-normal of scale s.
                    let y0 = (x - m).max(0.0);
                    fx * 2.0 * (1.0 - norm_cdf(y0 / s))
                },
                0.0,
                10.0,
                1e-12,
            )
            .unwrap()
            .value;
            assert!((law.cdf(m) - direct).abs() < 1e-8, "{m}: {} vs {direct}", law.cdf(m));
        }
    }

    #[test]
    fn pdf_normalizes_and_mean_agrees() {
        for &alpha in &[0.2, 0.5, 0.75] {
            let law = unit(alpha);
            let (lo, hi) = law.support_hint();
            let mass = integrate(|m| law.pdf(m), lo, hi, 1e-9).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-7, "{alpha}: {mass}");
            let mean = integrate(|m| m * law.pdf(m), lo, hi, 1e-9).unwrap().value;
            let closed = mean_quantile(&BrownianSpec::scalar(1.0, 1.0).unwrap(), alpha).unwrap();
            assert!((mean - closed).abs() < 10.0 * law.quad_tol, "{alpha}: {mean} vs {closed}");
            assert!((law.mean - closed).abs() < 1e-15);
            // pdf is the derivative of cdf.
            for &m in &[-0.7, 0.1, 0.8] {
                let h = 1e-4;
                let fd = (law.cdf(m + h) - law.cdf(m - h)) / (2.0 * h);
                assert!((fd - law.pdf(m)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn scaling() {
        let (sigma, t) = (1.7, 3.2);
        let base = unit(0.3);
        let scaled = quantile_law(&BrownianSpec::scalar(sigma, t).unwrap(), 0.3, DEFAULT_QUAD_TOL).unwrap();
        let c = sigma * t.sqrt();
        for &m in &[-2.0, -0.5, 0.0, 0.4, 1.5] {
            assert!((scaled.cdf(c * m) - base.cdf(m)).abs() < DEFAULT_QUAD_TOL * 10.0);
        }
    }

    #[test]
    fn cdf_is_atomless() {
        let law = unit(0.6);
        let max_jump = |h: f64| {
            let n = (6.0 / h) as usize;
            let vals: Vec<f64> = (0..=n).map(|i| law.cdf(-3.0 + i as f64 * h)).collect();
            vals.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        };
        let (j1, j2, j3) = (max_jump(0.1), max_jump(0.01), max_jump(0.001));
        assert!(j1 > j2 && j2 > j3);
        assert!(j3 < 1e-3);
        assert!(j3 <= 0.02 * j1);
    }

    #[test]
    fn tau_mean_examples() {
        assert!((expected_tau_positive(1.0).unwrap() - 0.5).abs() < 1e-15);
        let v = expected_tau_positive(0.5).unwrap();
        assert!((v - (0.25 - 0.5 / PI)).abs() < 1e-15);
        assert!((v - 0.090_845).abs() < 1e-6);
        assert!(expected_tau_positive(1e-12).unwrap() < 1e-15);
        assert!(expected_tau_positive(0.0).is_err());
        assert!(expected_tau_positive(1.5).is_err());
        let mut prev = 0.0;
        for k in 1..=1000 {
            let v = expected_tau_positive(k as f64 / 1000.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        // Continuity at the right end, where the slope is unbounded.
        for &h in &[1e-4, 1e-6, 1e-8] {
            assert!(0.5 - expected_tau_positive(1.0 - h).unwrap() < 2.0 * h.sqrt());
        }
    }

    /// `∫_0^β w(u) ∫_0^∞ density(u, b) db du` by nested quadrature, with
    /// `u = v²` to tame the endpoint singularity.
    fn double_integral(beta: f64, weight: impl Fn(f64) -> f64) -> f64 {
        integrate(
            |v| {
                let u = v * v;
                if u <= 0.0 {
                    return 0.0;
                }
                let inner = integrate(|b| joint_density_positive(u, b).unwrap_or(0.0), 0.0, 12.0 * u.sqrt(), 1e-11)
                    .unwrap()
                    .value;
                2.0 * v * weight(u) * inner
            },
            0.0,
            beta.sqrt(),
            1e-9,
        )
        .unwrap()
        .value
    }

    #[test]
    fn joint_density_reproduces_tau_mean() {
        let v = double_integral(0.5, |u| u);
        assert!((v - 0.090_845).abs() < 1e-4, "{v}");
        assert!((v - expected_tau_positive(0.5).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn joint_density_is_subprobability() {
        for &beta in &[0.1, 0.5, 0.9, 0.999] {
            let mass = double_integral(beta, |_| 1.0);
            assert!(mass <= 1.0 + 1e-8, "{beta}: {mass}");
            assert!((mass - 2.0 / PI * beta.sqrt().asin()).abs() < 1e-6);
        }
        assert!(joint_density_positive(0.3, 1.0).unwrap() >= 0.0);
        assert!(joint_density_positive(0.0, 1.0).is_err());
        assert!(joint_density_positive(0.5, -1.0).is_err());
    }
}
