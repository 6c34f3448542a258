//! Exact occupation-time CDF and its left-continuous generalized inverse.
//!
//! For a scalar path `x` and horizon `t`, the occupation CDF is
//! `F(y) = (1/t) |{s in [0,t] : x_s <= y}|`. On finite-breakpoint paths it is a
//! finite mixture of atoms (constant sojourns) and uniform ramps (affine
//! segments), so it is stored exactly as a sorted list of [`Knot`]s between
//! which `F` is affine. The α-quantile `M_{t,α} = inf{y : F(y) >= α}` is read
//! off the same knots, so `F(y) >= α ⟺ M_{t,α} <= y` holds bit-for-bit.

use serde::Serialize;

use crate::error::{check_alpha, check_horizon};
use crate::paths::{Interpolation, ScalarPath};
use crate::Result;

/// A level where `F` is not affine: it may jump (`f_left < f_right`) or change slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub level: f64,
    /// `F(level-)`.
    pub f_left: f64,
    /// `F(level)`.
    pub f_right: f64,
    /// `F` is constant on `(level, next level)`: no occupation there.
    pub gap_after: bool,
    /// Slope of `F` on `(level, next level)`; zero on the last knot.
    slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationCdf {
    horizon: f64,
    y_min: f64,
    y_max: f64,
    knots: Vec<Knot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileResult {
    pub alpha: f64,
    pub value: f64,
    /// `α` lies strictly inside a jump of `F`, so `M` is locally constant in `α`.
    pub flat: bool,
}

/// The finite set `U(x,t)` of `α` where `α -> M_{t,α}` jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscontinuitySet {
    pub alphas: Vec<f64>,
}

impl DiscontinuitySet {
    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }
}

/// Occupation contributions before normalization.
#[derive(Default)]
struct Contributions {
    atoms: Vec<(f64, f64)>,
    ramps: Vec<(f64, f64, f64)>,
    total: f64,
}

impl Contributions {
    fn from_path(path: &ScalarPath, t: f64) -> Self {
        let bps = path.breakpoints();
        let vals = path.values();
        let n = bps.len();
        let mut c = Contributions::default();
        match path.interpolation() {
            Interpolation::Step => {
                c.atoms.reserve(n);
                for k in 0..n {
                    if bps[k] >= t {
                        break;
                    }
                    let end = if k + 1 < n { bps[k + 1].min(t) } else { t };
                    c.push_atom(vals[k], end - bps[k]);
                }
            }
            Interpolation::Linear => {
                c.ramps.reserve(n);
                for k in 0..n {
                    if bps[k] >= t {
                        break;
                    }
                    if k + 1 == n {
                        c.push_atom(vals[k], t - bps[k]);
                        break;
                    }
                    let (a, t1) = (vals[k], bps[k + 1]);
                    let (end, b) = if t1 <= t { (t1, vals[k + 1]) } else { (t, path.eval(t)) };
                    let dur = end - bps[k];
                    if a == b {
                        c.push_atom(a, dur);
                    } else if dur > 0.0 {
                        c.ramps.push((a.min(b), a.max(b), dur));
                        c.total += dur;
                    }
                }
            }
        }
        c
    }

    fn push_atom(&mut self, level: f64, dur: f64) {
        if dur > 0.0 {
            self.atoms.push((level, dur));
            self.total += dur;
        }
    }

    fn into_knots(mut self) -> Vec<Knot> {
        let total = self.total;
        if self.ramps.is_empty() {
            // Pure step case: sort sojourns, merge ties, accumulate.
            self.atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut knots: Vec<Knot> = Vec::with_capacity(self.atoms.len());
            let mut cum = 0.0;
            for (level, mass) in self.atoms {
                cum += mass;
                match knots.last_mut() {
                    Some(k) if k.level == level => k.f_right = (cum / total).min(1.0),
                    _ => {
                        let f_left = knots.last().map_or(0.0, |k| k.f_right);
                        knots.push(Knot {
                            level,
                            f_left,
                            f_right: (cum / total).min(1.0).max(f_left),
                            gap_after: true,
                            slope: 0.0,
                        });
                    }
                }
            }
            if let Some(k) = knots.last_mut() {
                k.f_right = 1.0;
            }
            return knots;
        }

        #[derive(Clone, Copy)]
        enum Ev {
            Atom(f64),
            Start(f64),
            End(f64),
        }
        let mut events: Vec<(f64, Ev)> = Vec::with_capacity(self.atoms.len() + 2 * self.ramps.len());
        events.extend(self.atoms.iter().map(|&(l, m)| (l, Ev::Atom(m / total))));
        for &(lo, hi, m) in &self.ramps {
            let density = m / total / (hi - lo);
            events.push((lo, Ev::Start(density)));
            events.push((hi, Ev::End(density)));
        }
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut knots: Vec<Knot> = Vec::new();
        let mut f = 0.0;
        let mut f_before = 0.0;
        let mut density = 0.0;
        let mut active = 0usize;
        let mut atom = 0.0;
        let mut i = 0;
        while i < events.len() {
            let level = events[i].0;
            f_before = f;
            let f_left = match knots.last() {
                Some(prev) if active > 0 => (f + density * (level - prev.level)).clamp(f, 1.0),
                _ => f,
            };
            atom = 0.0;
            while i < events.len() && events[i].0 == level {
                match events[i].1 {
                    Ev::Atom(m) => atom += m,
                    Ev::Start(d) => {
                        density += d;
                        active += 1;
                    }
                    Ev::End(d) => {
                        density -= d;
                        active -= 1;
                    }
                }
                i += 1;
            }
            if active == 0 {
                density = 0.0;
            }
            let f_right = (f_left + atom).min(1.0);
            knots.push(Knot { level, f_left, f_right, gap_after: active == 0, slope: 0.0 });
            f = f_right;
        }
        // The ramps reach the top level with rounding drift; only a genuine
        // atom there may leave a jump.
        if let Some(k) = knots.last_mut() {
            k.f_right = 1.0;
            k.f_left = (1.0 - atom).clamp(f_before, 1.0);
        }
        knots
    }
}

/// Monotone map from finite floats to integers (adjacent floats differ by 1).
fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    b ^ (((b >> 63) as u64) >> 1) as i64
}

fn from_order_key(k: i64) -> f64 {
    f64::from_bits((k ^ (((k >> 63) as u64) >> 1) as i64) as u64)
}

/// Exact occupation CDF of `path` over `[0, t]`.
pub fn occupation_cdf(path: &ScalarPath, t: f64) -> Result<OccupationCdf> {
    check_horizon(t)?;
    let mut knots = Contributions::from_path(path, t).into_knots();
    for i in 0..knots.len().saturating_sub(1) {
        let (a, b) = (knots[i], knots[i + 1]);
        knots[i].slope = if a.gap_after { 0.0 } else { (b.f_left - a.f_right) / (b.level - a.level) };
        if knots[i].slope <= 0.0 {
            // No mass accumulated on the interval after rounding: treat as a gap.
            knots[i].slope = 0.0;
            knots[i].gap_after = true;
        }
    }
    Ok(OccupationCdf {
        horizon: t,
        y_min: path.running_inf(t),
        y_max: path.running_sup(t),
        knots,
    })
}

impl OccupationCdf {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// `F(y)`, right-continuous.
    pub fn eval(&self, y: f64) -> f64 {
        let ks = &self.knots;
        let i = ks.partition_point(|k| k.level <= y);
        if i == 0 {
            return 0.0;
        }
        let k = &ks[i - 1];
        if k.level == y || i == ks.len() || k.gap_after {
            return k.f_right;
        }
        // Strictly inside a ramp F stays below its value at the next knot.
        (k.f_right + (y - k.level) * k.slope).min(ks[i].f_left.next_down()).max(k.f_right)
    }

    /// `F(y-)`.
    pub fn eval_left(&self, y: f64) -> f64 {
        let i = self.knots.partition_point(|k| k.level < y);
        match self.knots.get(i) {
            Some(k) if k.level == y => k.f_left,
            _ => self.eval(y),
        }
    }

    /// Sizes of the jumps of `F`, as `(level, mass)`.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots
            .iter()
            .filter(|k| k.f_right > k.f_left)
            .map(|k| (k.level, k.f_right - k.f_left))
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms().next().is_none()
    }

    pub fn total_variation(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.f_right)
    }

    /// `M_{t,α}`: the smallest `y` with `F(y) >= α`.
    pub fn quantile(&self, alpha: f64) -> Result<QuantileResult> {
        check_alpha(alpha)?;
        Ok(self.quantile_unchecked(alpha))
    }

    fn quantile_unchecked(&self, alpha: f64) -> QuantileResult {
        let ks = &self.knots;
        let j = ks.partition_point(|k| k.f_right < alpha).min(ks.len() - 1);
        if j > 0 && !ks[j - 1].gap_after && alpha <= ks[j].f_left {
            let value = self.invert_ramp(j - 1, alpha);
            return QuantileResult { alpha, value, flat: false };
        }
        let k = &ks[j];
        QuantileResult {
            alpha,
            value: k.level,
            flat: k.f_left < alpha && alpha < k.f_right,
        }
    }

    /// Smallest float `y` in `(L_i, L_{i+1}]` with `F(y) >= α`, found by
    /// bisection over the ordered bit patterns of the bracket. Plain
    /// algebraic inversion of the affine piece can miss the exact float
    /// boundary by many ulps when the slope is tiny.
    fn invert_ramp(&self, i: usize, alpha: f64) -> f64 {
        let (mut lo, mut hi) = (order_key(self.knots[i].level) as i128, order_key(self.knots[i + 1].level) as i128);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.eval(from_order_key(mid as i64)) >= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        from_order_key(hi as i64) + 0.0
    }

    /// α-values at which `α -> M_{t,α}` jumps: the levels of interior flats of `F`.
    pub fn discontinuity_set(&self) -> DiscontinuitySet {
        let n = self.knots.len();
        let mut alphas: Vec<f64> = self.knots[..n.saturating_sub(1)]
            .iter()
            .filter(|k| k.gap_after && k.f_right > 0.0 && k.f_right < 1.0)
            .map(|k| k.f_right)
            .collect();
        alphas.dedup();
        DiscontinuitySet { alphas }
    }

    pub fn curve(&self) -> QuantileCurve {
        QuantileCurve::from_cdf(self.clone())
    }
}

/// A piece of `α -> M_{t,α}` on the half-open interval `(alpha_lo, alpha_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePiece {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub kind: CurvePieceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurvePieceKind {
    /// `M` constant (an atom of `F`).
    Flat { level: f64 },
    /// `M` increases from `y_lo` (limit at `alpha_lo+`) to `y_hi`.
    Increasing { y_lo: f64, y_hi: f64 },
}

impl CurvePiece {
    /// Value at the right end (attained, by left-continuity).
    pub fn right_value(&self) -> f64 {
        match self.kind {
            CurvePieceKind::Flat { level } => level,
            CurvePieceKind::Increasing { y_hi, .. } => y_hi,
        }
    }

    /// Limit at `alpha_lo+`.
    pub fn left_limit(&self) -> f64 {
        match self.kind {
            CurvePieceKind::Flat { level } => level,
            CurvePieceKind::Increasing { y_lo, .. } => y_lo,
        }
    }
}

/// The full generalized inverse `α -> M_{t,α}` as a finite piecewise structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileCurve {
    pieces: Vec<CurvePiece>,
    #[serde(skip)]
    cdf: OccupationCdf,
}

impl QuantileCurve {
    fn from_cdf(cdf: OccupationCdf) -> Self {
        let ks = cdf.knots();
        let mut pieces = Vec::with_capacity(2 * ks.len());
        for (i, k) in ks.iter().enumerate() {
            if k.f_right > k.f_left {
                pieces.push(CurvePiece {
                    alpha_lo: k.f_left,
                    alpha_hi: k.f_right,
                    kind: CurvePieceKind::Flat { level: k.level },
                });
            }
            if let Some(next) = ks.get(i + 1) {
                if !k.gap_after && next.f_left > k.f_right {
                    pieces.push(CurvePiece {
                        alpha_lo: k.f_right,
                        alpha_hi: next.f_left,
                        kind: CurvePieceKind::Increasing { y_lo: k.level, y_hi: next.level },
                    });
                }
            }
        }
        QuantileCurve { pieces, cdf }
    }

    pub fn pieces(&self) -> &[CurvePiece] {
        &self.pieces
    }

    pub fn cdf(&self) -> &OccupationCdf {
        &self.cdf
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        Ok(self.cdf.quantile(alpha)?.value)
    }

    /// No flat pieces: `α -> M` strictly increasing on `(0,1)`.
    pub fn is_strictly_increasing(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p.kind, CurvePieceKind::Increasing { .. }))
    }

    /// Boundaries `α ∈ (0,1)` where the next piece starts above the current one ends.
    pub fn jump_alphas(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .filter(|w| w[1].left_limit() > w[0].right_value() && w[0].alpha_hi < 1.0)
            .map(|w| w[0].alpha_hi)
            .collect()
    }
}

/// `M_{t,α}(x)` for the scalar path `x`.
pub fn quantile(path: &ScalarPath, t: f64, alpha: f64) -> Result<QuantileResult> {
    check_alpha(alpha)?;
    occupation_cdf(path, t)?.quantile(alpha)
}

pub fn quantile_curve(path: &ScalarPath, t: f64) -> Result<QuantileCurve> {
    Ok(occupation_cdf(path, t)?.curve())
}

pub fn discontinuity_set(path: &ScalarPath, t: f64) -> Result<DiscontinuitySet> {
    Ok(occupation_cdf(path, t)?.discontinuity_set())
}
