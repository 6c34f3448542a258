//! Computable upper bounds on the Skorokhod J1 metric.
//!
//! With `k_N` the piecewise-linear cutoff that is 1 on `[0, N]`, 0 after
//! `N + 1` and linear in between,
//!
//! ```text
//! δ_N(x, y) = inf_λ ( |||λ||| + ‖(k_N x)∘λ − k_N y‖_∞ ),    δ = Σ_N 2^{−N} (1 ∧ δ_N),
//! ```
//!
//! where `|||λ|||` is the sup of `|log slope|` of the time change. The
//! infimum is taken here over piecewise-linear `λ` whose knots send jump
//! times of `y` to nearby jump times of `x`, found by a beam search over
//! monotone matchings. The identity is always a candidate, so every reported
//! `δ_N` is bounded by the uniform distance of the truncated paths. The
//! uniform norm is the plain sup over `[0, ∞)`; both truncated paths vanish
//! after `N + 1` up to the time shift of `λ`.

use serde::{Deserialize, Serialize};

use crate::paths::{Piece, ScalarPath};
use crate::{Error, Result};

/// The product `k_N · x` of a path with the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<'a> {
    path: &'a ScalarPath,
    n: f64,
}

/// `k_N(t)`.
pub fn cutoff(n: u32, t: f64) -> f64 {
    let n = n as f64;
    if t <= n {
        1.0
    } else if t < n + 1.0 {
        n + 1.0 - t
    } else {
        0.0
    }
}

pub fn truncate(path: &ScalarPath, n: u32) -> Result<Truncated<'_>> {
    if n == 0 {
        return Err(Error::param("truncation level N must be at least 1"));
    }
    Ok(Truncated { path, n: n as f64 })
}

impl Truncated<'_> {
    pub fn eval(&self, t: f64) -> f64 {
        cutoff(self.n as u32, t) * self.path.eval(t)
    }

    pub fn eval_left(&self, t: f64) -> f64 {
        cutoff(self.n as u32, t) * self.path.eval_left(t)
    }

    /// Times where the product may fail to be affine: the path's breakpoints
    /// before `N + 1` and the two ends of the taper.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.path.breakpoints().iter().copied().filter(|&t| t < self.n + 1.0).collect();
        for e in [self.n, self.n + 1.0] {
            if !b.contains(&e) {
                b.push(e);
            }
        }
        b.sort_by(f64::total_cmp);
        b
    }
}

/// Continuous, strictly increasing piecewise-linear `λ` with `λ(0) = 0`,
/// through the given knots and with slope 1 after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    /// `(s_i, λ(s_i))`, starting at `(0, 0)`, strictly increasing in both.
    knots: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn identity() -> Self {
        TimeChange { knots: vec![(0.0, 0.0)] }
    }

    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.first() != Some(&(0.0, 0.0)) {
            knots.insert(0, (0.0, 0.0));
        }
        if knots.iter().any(|(s, r)| !s.is_finite() || !r.is_finite()) {
            return Err(Error::param("time change knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(Error::param("time change knots must be strictly increasing"));
        }
        Ok(TimeChange { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_identity(&self) -> bool {
        self.knots.iter().all(|(s, r)| s == r)
    }

    fn piece(&self, k: usize) -> Affine {
        let (s, r) = self.knots[k];
        let slope = match self.knots.get(k + 1) {
            Some(&(s1, r1)) => (r1 - r) / (s1 - s),
            None => 1.0,
        };
        Affine { s, r, slope }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|&(s, _)| s <= t).saturating_sub(1);
        self.piece(k).at(t)
    }

    /// `sup |log slope|` over the linear pieces.
    pub fn norm(&self) -> f64 {
        (0..self.knots.len()).map(|k| self.piece(k).slope.ln().abs()).fold(0.0, f64::max)
    }

    pub fn inverse(&self) -> TimeChange {
        TimeChange { knots: self.knots.iter().map(|&(s, r)| (r, s)).collect() }
    }
}

/// `λ(t) = r + slope·(t − s)`.
#[derive(Debug, Clone, Copy)]
struct Affine {
    s: f64,
    r: f64,
    slope: f64,
}

impl Affine {
    fn through(s: f64, r: f64, u: f64, v: f64) -> Self {
        Affine { s, r, slope: (v - r) / (u - s) }
    }

    fn shift(s: f64, r: f64) -> Self {
        Affine { s, r, slope: 1.0 }
    }

    #[inline]
    fn at(&self, t: f64) -> f64 {
        self.r + self.slope * (t - self.s)
    }

    #[inline]
    fn inv(&self, tau: f64) -> f64 {
        self.s + (tau - self.r) / self.slope
    }
}

/// `(value at the left end, slope)` of an affine factor on an elementary interval.
type Lin = (f64, f64);

fn cutoff_factor(n: f64, tau_mid: f64, tau_start: f64, dtau: f64) -> Lin {
    if tau_mid <= n {
        (1.0, 0.0)
    } else if tau_mid < n + 1.0 {
        (n + 1.0 - tau_start, -dtau)
    } else {
        (0.0, 0.0)
    }
}

fn path_factor(piece: Piece, tau_start: f64, dtau: f64) -> Lin {
    match piece {
        Piece::Const(c) => (c, 0.0),
        Piece::Affine { slope, .. } => (piece.eval(tau_start), slope * dtau),
    }
}

/// Sorted, deduplicated elementary points of `[a, b]` for `g = (k x)∘λ − k y`.
fn elementary_points(x: &ScalarPath, y: &ScalarPath, n: f64, lam: Affine, a: f64, b: f64) -> Vec<f64> {
    let inside = |t: f64| t > a && t < b;
    let mut exact = vec![a, b];
    let yb = y.breakpoints();
    let lo = yb.partition_point(|&t| t <= a);
    let hi = yb.partition_point(|&t| t < b);
    exact.extend_from_slice(&yb[lo..hi]);
    exact.extend([n, n + 1.0].into_iter().filter(|&t| inside(t)));
    exact.sort_by(f64::total_cmp);

    let (ta, tb) = (lam.at(a), lam.at(b));
    let xb = x.breakpoints();
    let lo = xb.partition_point(|&v| v <= ta);
    let hi = xb.partition_point(|&v| v < tb);
    let near_exact = |t: f64| {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = exact.partition_point(|&e| e < t);
        (i < exact.len() && exact[i] - t <= tol) || (i > 0 && t - exact[i - 1] <= tol)
    };
    let approx = xb[lo..hi]
        .iter()
        .copied()
        .chain([n, n + 1.0].into_iter().filter(|&v| v > ta && v < tb))
        .map(|v| lam.inv(v))
        .filter(|&t| inside(t) && !near_exact(t))
        .collect::<Vec<_>>();
    exact.extend(approx);
    exact.sort_by(f64::total_cmp);
    exact.dedup_by(|p, q| *p - *q <= 1e-12 * q.abs().max(1.0));
    exact
}

/// `sup_{t ∈ [a, b)} |k_N(λt) x(λt) − k_N(t) y(t)|`, including the left limit at `b`.
/// On each elementary interval the difference is a quadratic in `t`.
fn segment_sup(x: &ScalarPath, y: &ScalarPath, n: f64, lam: Affine, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let pts = elementary_points(x, y, n, lam, a, b);
    let mut sup = 0.0f64;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let h = q - p;
        if h <= 0.0 {
            continue;
        }
        let mid = 0.5 * (p + q);
        let (tau_p, tau_mid) = (lam.at(p), lam.at(mid));
        let a_f = cutoff_factor(n, tau_mid, tau_p, lam.slope);
        let b_f = path_factor(x.piece_at(tau_mid), tau_p, lam.slope);
        let c_f = cutoff_factor(n, mid, p, 1.0);
        let d_f = path_factor(y.piece_at(mid), p, 1.0);
        let c0 = a_f.0 * b_f.0 - c_f.0 * d_f.0;
        // Paired so that identical terms cancel exactly.
        let c1 = (a_f.0 * b_f.1 - c_f.0 * d_f.1) + (a_f.1 * b_f.0 - c_f.1 * d_f.0);
        let c2 = a_f.1 * b_f.1 - c_f.1 * d_f.1;
        let g = |u: f64| c0 + u * (c1 + u * c2);
        sup = sup.max(g(0.0).abs()).max(g(h).abs());
        if c2 != 0.0 {
            let u = -c1 / (2.0 * c2);
            if u > 0.0 && u < h {
                sup = sup.max(g(u).abs());
            }
        }
    }
    sup
}

/// Right end of the range where either truncated path can be nonzero under `λ` with final piece `lam`.
fn support_end(n: f64, lam: Affine) -> f64 {
    (n + 1.0).max(lam.inv(n + 1.0))
}

/// `sup_t |(k_N x)∘λ − k_N y|` for a given time change.
pub fn sup_distance(x: &ScalarPath, y: &ScalarPath, n: u32, lambda: &TimeChange) -> f64 {
    let nf = n as f64;
    let k = lambda.knots.len();
    let mut sup = 0.0f64;
    for i in 0..k {
        let lam = lambda.piece(i);
        let a = lambda.knots[i].0;
        let b = if i + 1 < k { lambda.knots[i + 1].0 } else { support_end(nf, lam) };
        sup = sup.max(segment_sup(x, y, nf, lam, a, b));
    }
    sup
}

/// `‖k_N x − k_N y‖_∞`, the identity time change.
pub fn uniform_distance(x: &ScalarPath, y: &ScalarPath, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("truncation level N must be at least 1"));
    }
    Ok(sup_distance(x, y, n, &TimeChange::identity()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// States kept after each jump of the matching search.
    pub beam_width: usize,
    /// Jumps of `x` (nearest in time) considered as images of each jump of `y`.
    pub candidates_per_jump: usize,
    /// Grid size for the knot returning `λ` to the identity.
    pub tail_grid: usize,
    /// Number of times the return-knot grid is refined around its best point.
    pub refinement_levels: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { beam_width: 64, candidates_per_jump: 4, tail_grid: 16, refinement_levels: 2 }
    }
}

impl SearchParams {
    fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.tail_grid == 0 {
            return Err(Error::param("beam width and tail grid must be positive"));
        }
        Ok(())
    }
}

/// Best witness found for one horizon `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonBound {
    pub n: u32,
    /// `|||λ||| + sup_distance`; an upper bound on `δ_N`.
    pub delta_n: f64,
    pub lambda_norm: f64,
    pub sup_distance: f64,
    /// Uniform distance of the truncated paths (the identity candidate).
    pub uniform: f64,
    /// Time change for `(k_N x)∘λ` against `k_N y`.
    pub witness: TimeChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct J1Distance {
    /// `Σ_{N ≤ N_max} 2^{−N} (1 ∧ δ_N)`.
    pub delta: f64,
    /// Bound on the omitted terms, `2^{−N_max}`.
    pub tail_bound: f64,
    pub per_n: Vec<HorizonBound>,
}

#[derive(Clone)]
struct State {
    s: f64,
    r: f64,
    knots: Vec<(f64, f64)>,
    /// Max `|log slope|` over closed segments.
    l: f64,
    /// Sup distance over closed segments, i.e. on `[0, s)`.
    d: f64,
    /// Sup distance on `[s, cursor)` if `λ` continued with slope 1 from `(s, r)`.
    open_d: f64,
    cursor: f64,
}

impl State {
    fn rank(&self) -> f64 {
        self.l + self.d.max(self.open_d)
    }
}

struct Search<'a> {
    x: &'a ScalarPath,
    y: &'a ScalarPath,
    n: f64,
    params: SearchParams,
}

impl Search<'_> {
    fn extend_open(&self, st: &mut State, to: f64) {
        if to > st.cursor {
            let lam = Affine::shift(st.s, st.r);
            st.open_d = st.open_d.max(segment_sup(self.x, self.y, self.n, lam, st.cursor, to));
            st.cursor = to;
        }
    }

    /// Nearest jumps of `x` to `u`, at most `k`, strictly after `r`.
    fn candidates(&self, xj: &[f64], u: f64, r: f64) -> Vec<f64> {
        let k = self.params.candidates_per_jump;
        let i = xj.partition_point(|&v| v < u);
        let lo = i.saturating_sub(k);
        let hi = (i + k).min(xj.len());
        let mut c: Vec<f64> = xj[lo..hi].iter().copied().filter(|&v| v > r).collect();
        c.sort_by(|a, b| (a - u).abs().total_cmp(&(b - u).abs()));
        c.truncate(k);
        c
    }

    /// Best completion of a state: slope-1 tail, or a return knot `(q, q)`.
    fn finish(&self, st: &State) -> (f64, f64, f64, Vec<(f64, f64)>) {
        let shift = Affine::shift(st.s, st.r);
        let d_shift = segment_sup(self.x, self.y, self.n, shift, st.s, support_end(self.n, shift));
        let mut best = (st.l + st.d.max(d_shift), st.l, st.d.max(d_shift), st.knots.clone());
        if st.s == st.r {
            return best;
        }
        let identity = Affine::shift(0.0, 0.0);
        let start = st.s.max(st.r);
        let end = support_end(self.n, shift).max(self.n + 1.0) + (st.s - st.r).abs();
        let eval_q = |q: f64| {
            let lam = Affine::through(st.s, st.r, q, q);
            let l = st.l.max(lam.slope.ln().abs());
            let d = st
                .d
                .max(segment_sup(self.x, self.y, self.n, lam, st.s, q))
                .max(segment_sup(self.x, self.y, self.n, identity, q, support_end(self.n, identity)));
            (l + d, l, d)
        };
        let g = self.params.tail_grid;
        let (mut lo, mut hi) = (start, end);
        for _ in 0..=self.params.refinement_levels {
            let step = (hi - lo) / g as f64;
            let mut best_q = None;
            for i in 1..=g {
                let q = lo + step * i as f64;
                if q <= start {
                    continue;
                }
                let (cost, l, d) = eval_q(q);
                if cost < best.0 {
                    let mut knots = st.knots.clone();
                    knots.push((q, q));
                    best = (cost, l, d, knots);
                    best_q = Some(q);
                }
            }
            match best_q {
                Some(q) => {
                    lo = (q - step).max(start);
                    hi = q + step;
                }
                None => break,
            }
        }
        best
    }

    /// Best `(delta, norm, sup, knots)` for `(k x)∘λ` against `k y`.
    fn run(&self) -> (f64, f64, f64, Vec<(f64, f64)>) {
        let horizon = self.n + 1.0;
        let yj: Vec<f64> = self.y.jump_times().into_iter().filter(|&t| t < horizon).collect();
        let xj: Vec<f64> = self.x.jump_times().into_iter().filter(|&t| t < horizon).collect();
        let first_cursor = yj.first().copied().unwrap_or(horizon);
        let mut root = State { s: 0.0, r: 0.0, knots: vec![(0.0, 0.0)], l: 0.0, d: 0.0, open_d: 0.0, cursor: 0.0 };
        self.extend_open(&mut root, first_cursor);
        let mut beam = vec![root];
        if !xj.is_empty() {
            for (i, &u) in yj.iter().enumerate() {
                let next = yj.get(i + 1).copied().unwrap_or(horizon);
                let mut grown = Vec::with_capacity(beam.len() * (1 + self.params.candidates_per_jump));
                for st in &beam {
                    for v in self.candidates(&xj, u, st.r) {
                        let lam = Affine::through(st.s, st.r, u, v);
                        let mut knots = st.knots.clone();
                        knots.push((u, v));
                        let mut child = State {
                            s: u,
                            r: v,
                            knots,
                            l: st.l.max(lam.slope.ln().abs()),
                            d: st.d.max(segment_sup(self.x, self.y, self.n, lam, st.s, u)),
                            open_d: 0.0,
                            cursor: u,
                        };
                        self.extend_open(&mut child, next);
                        grown.push(child);
                    }
                    let mut skip = st.clone();
                    self.extend_open(&mut skip, next);
                    grown.push(skip);
                }
                grown.sort_by(|a, b| a.rank().total_cmp(&b.rank()));
                let mut kept: Vec<State> = Vec::with_capacity(self.params.beam_width);
                for st in grown {
                    if kept.len() == self.params.beam_width {
                        break;
                    }
                    if !kept.iter().any(|k| k.s == st.s && k.r == st.r) {
                        kept.push(st);
                    }
                }
                beam = kept;
            }
        }
        beam.iter()
            .map(|st| self.finish(st))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("beam is never empty")
    }
}

/// Upper bound on `δ_N(x, y)` for one `N`, searching both orientations.
pub fn j1_horizon(x: &ScalarPath, y: &ScalarPath, n: u32, params: &SearchParams) -> Result<HorizonBound> {
    if n == 0 {
        return Err(Error::param("truncation level N must be at least 1"));
    }
    params.validate()?;
    let nf = n as f64;
    let forward = Search { x, y, n: nf, params: *params }.run();
    // A witness μ for (y, x) gives λ = μ^{-1} for (x, y) with the same cost.
    let backward = Search { x: y, y: x, n: nf, params: *params }.run();
    let (delta_n, lambda_norm, sup, witness) = if backward.0 < forward.0 {
        (backward.0, backward.1, backward.2, TimeChange { knots: backward.3 }.inverse())
    } else {
        (forward.0, forward.1, forward.2, TimeChange { knots: forward.3 })
    };
    Ok(HorizonBound {
        n,
        delta_n,
        lambda_norm,
        sup_distance: sup,
        uniform: sup_distance(x, y, n, &TimeChange::identity()),
        witness,
    })
}

/// `δ(x, y)` truncated after `n_max` horizons, each `δ_N` an in-family upper bound.
pub fn j1_distance(x: &ScalarPath, y: &ScalarPath, n_max: u32, params: &SearchParams) -> Result<J1Distance> {
    if n_max == 0 {
        return Err(Error::param("N_max must be at least 1"));
    }
    let per_n = (1..=n_max).map(|n| j1_horizon(x, y, n, params)).collect::<Result<Vec<_>>>()?;
    let delta = per_n.iter().map(|h| 0.5f64.powi(h.n as i32) * h.delta_n.min(1.0)).sum();
    Ok(J1Distance { delta, tail_bound: 0.5f64.powi(n_max as i32), per_n })
}

/// `ceil(T) + 1`, enough horizons to see everything on `[0, T]`.
pub fn default_n_max(horizon: f64) -> u32 {
    horizon.max(0.0).ceil() as u32 + 1
}
