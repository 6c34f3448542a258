//! First time the projected path reaches its own α-quantile.

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, check_horizon};
use crate::paths::{Interpolation, ScalarPath};
use crate::quantile::occupation_cdf;
use crate::{Error, Result};

/// Default step for the one-sided limit diagnostics.
pub const DEFAULT_ONE_SIDED_STEP: f64 = 1e-3;

/// Sign of `M_{T,α}(x) - x_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitCase {
    AboveStart,
    AtStart,
    BelowStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingTime {
    /// `+inf` when the level is never reached.
    pub tau: f64,
    pub case: HitCase,
    /// The quantile level `M_{T,α}`.
    pub level: f64,
    pub never_hit: bool,
    /// `tau > T`.
    pub beyond_horizon: bool,
}

impl HittingTime {
    fn new(tau: Option<f64>, case: HitCase, level: f64, horizon: f64) -> Self {
        let t = tau.unwrap_or(f64::INFINITY);
        HittingTime {
            tau: t,
            case,
            level,
            never_hit: tau.is_none(),
            beyond_horizon: t > horizon,
        }
    }
}

/// Time at which the affine segment `(t0,v0) -> (t1,v1)` takes the value `level`.
#[inline]
fn crossing(t0: f64, t1: f64, v0: f64, v1: f64, level: f64) -> f64 {
    if v0 == level {
        return t0;
    }
    if v1 == level {
        return t1;
    }
    (t0 + (level - v0) / (v1 - v0) * (t1 - t0)).clamp(t0, t1)
}

/// `inf{t > 0 : sup_{s<=t} x_s >= level}`.
pub fn first_passage_above(path: &ScalarPath, level: f64) -> Option<f64> {
    let (bps, vals) = (path.breakpoints(), path.values());
    if vals[0] >= level {
        return Some(0.0);
    }
    let k = vals.iter().position(|&v| v >= level)?;
    Some(match path.interpolation() {
        Interpolation::Step => bps[k],
        Interpolation::Linear => crossing(bps[k - 1], bps[k], vals[k - 1], vals[k], level),
    })
}

/// `inf{t > 0 : inf_{s<=t} x_s <= level}`.
pub fn first_passage_below(path: &ScalarPath, level: f64) -> Option<f64> {
    let (bps, vals) = (path.breakpoints(), path.values());
    if vals[0] <= level {
        return Some(0.0);
    }
    let k = vals.iter().position(|&v| v <= level)?;
    Some(match path.interpolation() {
        Interpolation::Step => bps[k],
        Interpolation::Linear => crossing(bps[k - 1], bps[k], vals[k - 1], vals[k], level),
    })
}

/// `τ_{M_{T,α}}` by the three-case running-extremum definition.
pub fn hitting_time(path: &ScalarPath, horizon: f64, alpha: f64) -> Result<HittingTime> {
    check_alpha(alpha)?;
    check_horizon(horizon)?;
    let level = occupation_cdf(path, horizon)?.quantile(alpha)?.value;
    Ok(hitting_time_at_level(path, horizon, level))
}

/// Three-case hitting time of a precomputed quantile level.
pub fn hitting_time_at_level(path: &ScalarPath, horizon: f64, level: f64) -> HittingTime {
    let x0 = path.initial();
    if level > x0 {
        HittingTime::new(first_passage_above(path, level), HitCase::AboveStart, level, horizon)
    } else if level < x0 {
        HittingTime::new(first_passage_below(path, level), HitCase::BelowStart, level, horizon)
    } else {
        HittingTime::new(Some(0.0), HitCase::AtStart, level, horizon)
    }
}

/// `inf{t : x_t = M_{T,α}}` for continuous paths, by scanning for the first
/// segment whose closed value range contains the level.
pub fn hitting_time_continuous(path: &ScalarPath, horizon: f64, alpha: f64) -> Result<HittingTime> {
    if !path.is_continuous() {
        return Err(Error::NotContinuous);
    }
    check_alpha(alpha)?;
    check_horizon(horizon)?;
    let level = occupation_cdf(path, horizon)?.quantile(alpha)?.value;
    let x0 = path.initial();
    let case = match level.partial_cmp(&x0) {
        Some(std::cmp::Ordering::Greater) => HitCase::AboveStart,
        Some(std::cmp::Ordering::Less) => HitCase::BelowStart,
        _ => return Ok(HittingTime::new(Some(0.0), HitCase::AtStart, level, horizon)),
    };
    let (bps, vals) = (path.breakpoints(), path.values());
    let tau = bps.windows(2).zip(vals.windows(2)).find_map(|(t, v)| {
        let (lo, hi) = if v[0] <= v[1] { (v[0], v[1]) } else { (v[1], v[0]) };
        (lo <= level && level <= hi).then(|| crossing(t[0], t[1], v[0], v[1], level))
    });
    Ok(HittingTime::new(tau, case, level, horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSidedLimits {
    /// `τ` at `α - h`.
    pub left: f64,
    /// `τ` at `α + h`.
    pub right: f64,
    pub at: HittingTime,
}

impl OneSidedLimits {
    /// Whether the side that matters for the case of `at` is within `tol` of `τ`:
    /// the right side above the start, the left side below it.
    pub fn relevant_side_matches(&self, tol: f64) -> bool {
        match self.at.case {
            HitCase::AboveStart => (self.right - self.at.tau).abs() <= tol,
            HitCase::BelowStart => (self.left - self.at.tau).abs() <= tol,
            HitCase::AtStart => (self.left - self.at.tau).abs() <= tol && (self.right - self.at.tau).abs() <= tol,
        }
    }
}

/// `τ` at `α ∓ h`, a finite-difference view of `lim_{β→α} τ_{M_{T,β}}`.
pub fn tau_one_sided_limits(path: &ScalarPath, horizon: f64, alpha: f64, h: f64) -> Result<OneSidedLimits> {
    if !(h > 0.0 && alpha - h > 0.0 && alpha + h < 1.0) {
        return Err(Error::param(format!("step {h} does not keep alpha ± h inside (0,1)")));
    }
    check_horizon(horizon)?;
    let cdf = occupation_cdf(path, horizon)?;
    let tau = |a: f64| -> Result<HittingTime> {
        Ok(hitting_time_at_level(path, horizon, cdf.quantile(a)?.value))
    };
    Ok(OneSidedLimits {
        left: tau(alpha - h)?.tau,
        right: tau(alpha + h)?.tau,
        at: tau(alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::arb_scalar_path;
    use proptest::prelude::*;

    fn identity() -> ScalarPath {
        ScalarPath::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    fn tent() -> ScalarPath {
        ScalarPath::linear(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn step01() -> ScalarPath {
        ScalarPath::step(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn hitting_time_examples() {
        let h = hitting_time(&identity(), 1.0, 0.3).unwrap();
        assert_eq!(h.case, HitCase::AboveStart);
        assert!((h.level - 0.3).abs() < 1e-15 && (h.tau - 0.3).abs() < 1e-15);

        let down = ScalarPath::linear(vec![0.0, 1.0], vec![0.0, -1.0]).unwrap();
        let h = hitting_time(&down, 1.0, 0.3).unwrap();
        assert_eq!(h.case, HitCase::BelowStart);
        assert!((h.level + 0.7).abs() < 1e-15 && (h.tau - 0.7).abs() < 1e-15);

        let h = hitting_time(&step01(), 2.0, 0.75).unwrap();
        assert_eq!((h.level, h.tau, h.case), (1.0, 1.0, HitCase::AboveStart));
        assert!(!h.never_hit && !h.beyond_horizon);
    }

    #[test]
    fn continuous_examples() {
        let h = hitting_time_continuous(&identity(), 1.0, 0.3).unwrap();
        assert!((h.tau - 0.3).abs() < 1e-15);
        // Tent: F(y) = y on [0,1], so M = 0.5, first crossing at 0.5.
        let h = hitting_time_continuous(&tent(), 2.0, 0.5).unwrap();
        assert!((h.level - 0.5).abs() < 1e-12 && (h.tau - 0.5).abs() < 1e-12);
        let flat = ScalarPath::linear(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let h = hitting_time_continuous(&flat, 1.0, 0.4).unwrap();
        assert_eq!((h.level, h.tau, h.case), (0.0, 0.0, HitCase::AtStart));
        assert_eq!(hitting_time_continuous(&step01(), 2.0, 0.5), Err(Error::NotContinuous));
    }

    #[test]
    fn one_sided_examples() {
        let l = tau_one_sided_limits(&identity(), 1.0, 0.3, 0.01).unwrap();
        assert!((l.left - 0.29).abs() < 1e-12 && (l.right - 0.31).abs() < 1e-12);
        let l = tau_one_sided_limits(&step01(), 2.0, 0.5, 0.01).unwrap();
        assert_eq!((l.left, l.right), (0.0, 1.0));
        let l = tau_one_sided_limits(&tent(), 2.0, 0.5, 0.01).unwrap();
        assert!((l.left - 0.49).abs() < 1e-12 && (l.right - 0.51).abs() < 1e-12);
        assert!(l.relevant_side_matches(0.011));
        assert!(tau_one_sided_limits(&tent(), 2.0, 0.005, 0.01).is_err());
    }

    #[test]
    fn passage_maps_one_sided_continuity() {
        // Step path 0, 1, 3: ν -> first passage above is left-continuous, jumps after 1.
        let p = ScalarPath::step(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(first_passage_above(&p, 1.0), Some(1.0));
        assert_eq!(first_passage_above(&p, 1.0f64.next_down()), Some(1.0));
        assert_eq!(first_passage_above(&p, 1.0f64.next_up()), Some(2.0));
        assert_eq!(first_passage_above(&p, 3.5), None);
        // Below: right-continuous, nonincreasing.
        let q = ScalarPath::step(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, -3.0]).unwrap();
        assert_eq!(first_passage_below(&q, -1.0), Some(1.0));
        assert_eq!(first_passage_below(&q, (-1.0f64).next_up()), Some(1.0));
        assert_eq!(first_passage_below(&q, (-1.0f64).next_down()), Some(2.0));
    }

    #[test]
    fn lower_semicontinuity_under_small_perturbations() {
        // x satisfies the continuity conditions: M != x_0, F continuous and strictly increasing.
        let x = ScalarPath::linear(vec![0.0, 0.4, 1.0], vec![0.0, 1.0, -0.5]).unwrap();
        let base = hitting_time(&x, 1.0, 0.6).unwrap();
        assert_ne!(base.case, HitCase::AtStart);
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            // Time change through the middle knot plus a uniform value shift.
            let xn = ScalarPath::linear(vec![0.0, 0.4 * (1.0 + eps), 1.0], vec![0.0, 1.0 + eps, -0.5 - eps]).unwrap();
            let h = hitting_time(&xn, 1.0, 0.6).unwrap();
            assert!((h.tau - base.tau).abs() <= 5.0 * eps, "eps={eps}: {} vs {}", h.tau, base.tau);
        }
    }

    proptest! {
        #[test]
        fn continuous_variants_agree(path in arb_scalar_path(), alpha in 0.01f64..0.99) {
            if path.is_continuous() {
                let t = path.last_time().max(0.5);
                let a = hitting_time(&path, t, alpha).unwrap();
                let b = hitting_time_continuous(&path, t, alpha).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn level_is_always_reached(path in arb_scalar_path(), alpha in 0.01f64..0.99) {
            let t = path.last_time().max(0.5);
            let h = hitting_time(&path, t, alpha).unwrap();
            prop_assert!(!h.never_hit);
            prop_assert!(h.tau <= t);
            prop_assert_eq!(h.case == HitCase::AtStart, h.tau == 0.0 && h.level == path.initial());
            if h.case == HitCase::AboveStart && path.interpolation() == Interpolation::Step {
                prop_assert!(path.running_sup(h.tau) >= h.level);
                for &b in path.breakpoints().iter().filter(|&&b| b < h.tau) {
                    prop_assert!(path.running_sup(b) < h.level);
                }
            }
        }

        #[test]
        fn passage_maps_monotone(path in arb_scalar_path(), nus in prop::collection::vec(-3.5f64..3.5, 2..30)) {
            let mut nus = nus;
            nus.sort_by(f64::total_cmp);
            let up = |v: f64| first_passage_above(&path, v).unwrap_or(f64::INFINITY);
            let down = |v: f64| first_passage_below(&path, v).unwrap_or(f64::INFINITY);
            for w in nus.windows(2) {
                prop_assert!(up(w[0]) <= up(w[1]));
                prop_assert!(down(w[0]) >= down(w[1]));
            }
            // Left-continuity of the upward map / right-continuity of the downward map at path values.
            for &v in path.values() {
                prop_assert!((up(v.next_down()) - up(v)).abs() <= 1e-9 || up(v).is_infinite());
                prop_assert!((down(v.next_up()) - down(v)).abs() <= 1e-9 || down(v).is_infinite());
            }
        }
    }
}
