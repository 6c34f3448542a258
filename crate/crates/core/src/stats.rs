//! Empirical distributions, Kolmogorov–Smirnov statistics, atoms and MC errors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A finite sample, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("sample must be nonempty"));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::param(format!("sample contains non-finite value {x}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right-continuous empirical CDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Lower empirical median, `inf{x : F̂(x) >= 1/2}`.
    pub fn median(&self) -> f64 {
        self.values[(self.len() - 1) / 2]
    }

    /// Distinct values with the number of observations below and at-or-below each.
    fn steps(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= self.values.len() {
                return None;
            }
            let x = self.values[i];
            let start = i;
            while i < self.values.len() && self.values[i] == x {
                i += 1;
            }
            Some((x, start, i))
        })
    }
}

/// Asymptotic Kolmogorov critical value `c(level)`, `P(sup|B| > c) ≈ level`.
pub fn kolmogorov_critical(level: f64) -> f64 {
    if level == 0.05 {
        1.358
    } else if level == 0.01 {
        1.628
    } else {
        (-(level / 2.0).ln() / 2.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// `n` for one sample, `n_a n_b / (n_a + n_b)` for two.
    pub effective_n: f64,
}

impl KsResult {
    pub fn threshold(&self, level: f64) -> f64 {
        kolmogorov_critical(level) / self.effective_n.sqrt()
    }

    pub fn passes(&self, level: f64) -> bool {
        self.statistic <= self.threshold(level)
    }
}

/// `D = sup_x |F̂(x) − F(x)|`, taking both one-sided gaps at every distinct
/// sample value. `cdf` is treated as continuous at sample points.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &Sample, cdf: F) -> KsResult {
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (x, before, at) in sample.steps() {
        let (before, at) = (before as f64 / n, at as f64 / n);
        let f = cdf(x);
        d = d.max((at - f).abs()).max((before - f).abs());
    }
    KsResult { statistic: d.min(1.0), effective_n: sample.len() as f64 }
}

pub fn ks_two_sample(a: &Sample, b: &Sample) -> KsResult {
    let (va, vb) = (a.values(), b.values());
    let (na, nb) = (va.len() as f64, vb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < va.len() && va[i] == x {
            i += 1;
        }
        while j < vb.len() && vb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsResult { statistic: d, effective_n: na * nb / (na + nb) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub fraction: f64,
}

/// Most frequent exactly-repeated value; ties go to the smallest value.
pub fn largest_atom(sample: &Sample) -> Atom {
    let (mut value, mut count) = (sample.values[0], 0);
    for (x, before, at) in sample.steps() {
        if at - before > count {
            (value, count) = (x, at - before);
        }
    }
    Atom { value, fraction: count as f64 / sample.len() as f64 }
}

/// Sample mean and its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub fn mean_estimate(xs: &[f64]) -> Result<MeanEstimate> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::param("need at least two observations for a standard error"));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(MeanEstimate { mean, std_error: (var / n as f64).sqrt(), n })
}

/// Standard error of a proportion `p` estimated from `n` trials.
pub fn proportion_std_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngConfig;
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_sample(seed: u64, stream: u64, n: usize) -> Sample {
        let mut r = RngConfig::new(seed, stream).rng();
        Sample::new((0..n).map(|_| r.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn thresholds() {
        let r = KsResult { statistic: 0.0, effective_n: 10_000.0 };
        assert!((r.threshold(0.05) - 0.01358).abs() < 1e-12);
        assert!((r.threshold(0.01) - 0.01628).abs() < 1e-12);
        assert!((kolmogorov_critical(0.1) - 1.2239).abs() < 1e-3);
    }

    #[test]
    fn constant_sample_against_continuous_cdf() {
        let s = Sample::new(vec![0.3; 5]).unwrap();
        let r = ks_one_sample(&s, |x| x.clamp(0.0, 1.0));
        assert_eq!(r.statistic, 0.7);
    }

    #[test]
    fn three_point_step_cdf() {
        // Against its own step function only the left gaps survive: one step, 1/3.
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = ks_one_sample(&s, |x| s.ecdf(x));
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
        // Midpoint interpolant sits half a step from both sides.
        let mid = |x: f64| s.ecdf(x) - 1.0 / 6.0;
        assert!((ks_one_sample(&s, mid).statistic - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ks_one_sample_calibration() {
        let passes = (0..100)
            .filter(|&i| ks_one_sample(&uniform_sample(21, i, 10_000), |x| x.clamp(0.0, 1.0)).passes(0.01))
            .count();
        assert!(passes >= 98, "{passes}");
    }

    #[test]
    fn ks_two_sample_cases() {
        let a = Sample::new(vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        let b = Sample::new(vec![6.0, 7.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).statistic, 1.0);
        assert_eq!(ks_two_sample(&a, &b).effective_n, 8.0 / 6.0);
        let passes = (0..100)
            .filter(|&i| ks_two_sample(&uniform_sample(22, 2 * i, 10_000), &uniform_sample(22, 2 * i + 1, 10_000)).passes(0.01))
            .count();
        assert!(passes >= 98, "{passes}");
    }

    #[test]
    fn atoms() {
        let s = Sample::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(largest_atom(&s).fraction, 1.0 / 3.0);
        let c = Sample::new(vec![4.0; 7]).unwrap();
        assert_eq!(largest_atom(&c), Atom { value: 4.0, fraction: 1.0 });
        let m = Sample::new(vec![0.0, 1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(largest_atom(&m), Atom { value: 2.0, fraction: 0.5 });
    }

    #[test]
    fn mean_and_proportion_errors() {
        let e = mean_estimate(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - ((5.0 / 3.0) / 4.0f64).sqrt()).abs() < 1e-12);
        assert!(mean_estimate(&[1.0]).is_err());
        assert_eq!(proportion_std_error(0.5, 100), 0.05);
    }

    #[test]
    fn ecdf_and_median() {
        let s = Sample::new(vec![2.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.ecdf(0.5), 0.0);
        assert_eq!(s.ecdf(2.0), 0.5);
        assert_eq!(s.median(), 2.0);
        assert_eq!(s.mean(), 2.5);
    }

    fn arb_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((-20i32..20).prop_map(|k| k as f64 / 4.0), 1..40)
    }

    proptest! {
        #[test]
        fn statistic_in_unit_interval(a in arb_values(), b in arb_values()) {
            let (sa, sb) = (Sample::new(a).unwrap(), Sample::new(b).unwrap());
            let d1 = ks_one_sample(&sa, |x| 1.0 / (1.0 + (-x).exp())).statistic;
            prop_assert!((0.0..=1.0).contains(&d1));
            let d = ks_two_sample(&sa, &sb).statistic;
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_two_sample(&sb, &sa).statistic);
        }

        #[test]
        fn invariant_under_increasing_maps(a in arb_values()) {
            let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
            let s = Sample::new(a.clone()).unwrap();
            let g = |x: f64| x * x * x + x;
            let ginv = |y: f64| {
                // Bisection inverse of g on a generous bracket.
                let (mut lo, mut hi) = (-10.0f64, 10.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) < y { lo = mid } else { hi = mid }
                }
                0.5 * (lo + hi)
            };
            let t = Sample::new(a.iter().map(|&x| g(x)).collect()).unwrap();
            let d0 = ks_one_sample(&s, logistic).statistic;
            let d1 = ks_one_sample(&t, |y| logistic(ginv(y))).statistic;
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
