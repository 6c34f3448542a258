//! Finite representations of càdlàg paths.
//!
//! A path is given by strictly increasing breakpoints `0 = t_0 < … < t_K` and
//! one value per breakpoint. [`Interpolation::Step`] holds `value_k` on
//! `[t_k, t_{k+1})`; [`Interpolation::Linear`] interpolates affinely. Both
//! extend constantly past `t_K`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Step,
    Linear,
}

/// One smooth piece of a path, valid on the half-open interval it was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Const(f64),
    Affine { t0: f64, v0: f64, slope: f64 },
}

impl Piece {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Piece::Const(c) => c,
            Piece::Affine { t0, v0, slope } => v0 + (t - t0) * slope,
        }
    }
}

fn validate_breakpoints(breakpoints: &[f64]) -> Result<()> {
    if breakpoints.is_empty() {
        return Err(Error::InvalidPath("no breakpoints".into()));
    }
    if breakpoints[0] != 0.0 {
        return Err(Error::InvalidPath(format!(
            "first breakpoint must be 0, got {}",
            breakpoints[0]
        )));
    }
    if breakpoints.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidPath("non-finite breakpoint".into()));
    }
    if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPath(format!(
            "breakpoints not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Index of the last breakpoint `<= t` (0 for negative `t`).
#[inline]
pub(crate) fn segment_index(breakpoints: &[f64], t: f64) -> usize {
    breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
}

/// An `R^d`-valued càdlàg path with finitely many breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    breakpoints: Vec<f64>,
    /// Row-major, `breakpoints.len() * dim` entries.
    values: Vec<f64>,
    dim: usize,
    interpolation: Interpolation,
}

impl CadlagPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<f64>>, interpolation: Interpolation) -> Result<Self> {
        let dim = values.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidPath("values must be non-empty vectors".into()));
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        Self::from_flat(breakpoints, flat, dim, interpolation)
    }

    /// Builds a path from row-major values (`dim` entries per breakpoint).
    pub fn from_flat(breakpoints: Vec<f64>, values: Vec<f64>, dim: usize, interpolation: Interpolation) -> Result<Self> {
        validate_breakpoints(&breakpoints)?;
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if values.len() != breakpoints.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints but {} values of dimension {}",
                breakpoints.len(),
                values.len() / dim,
                dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite value".into()));
        }
        Ok(CadlagPath { breakpoints, values, dim, interpolation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (0..self.dim).map(|i| self.coordinate_eval(i, t)).collect()
    }

    fn coordinate_eval(&self, i: usize, t: f64) -> f64 {
        let k = segment_index(&self.breakpoints, t);
        let v = self.values[k * self.dim + i];
        match self.interpolation {
            Interpolation::Step => v,
            Interpolation::Linear if k + 1 < self.breakpoints.len() && t > self.breakpoints[k] => {
                let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
                let v1 = self.values[(k + 1) * self.dim + i];
                v + (t - t0) / (t1 - t0) * (v1 - v)
            }
            Interpolation::Linear => v,
        }
    }

    /// The `i`-th coordinate as a scalar path.
    pub fn coordinate(&self, i: usize) -> ScalarPath {
        let values = (0..self.len()).map(|k| self.values[k * self.dim + i]).collect();
        ScalarPath {
            breakpoints: self.breakpoints.clone(),
            values,
            interpolation: self.interpolation,
        }
    }

    /// `s -> gamma · x_s`, breakpoint by breakpoint.
    pub fn project(&self, gamma: &Projection) -> Result<ScalarPath> {
        if gamma.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: gamma.dim() });
        }
        let values = self.values.chunks_exact(self.dim).map(|v| gamma.dot(v)).collect();
        Ok(ScalarPath {
            breakpoints: self.breakpoints.clone(),
            values,
            interpolation: self.interpolation,
        })
    }
}

impl From<ScalarPath> for CadlagPath {
    fn from(p: ScalarPath) -> Self {
        CadlagPath {
            breakpoints: p.breakpoints,
            values: p.values,
            dim: 1,
            interpolation: p.interpolation,
        }
    }
}

/// On-disk JSON layout shared by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFile {
    pub interpolation: Interpolation,
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TryFrom<PathFile> for CadlagPath {
    type Error = Error;
    fn try_from(f: PathFile) -> Result<Self> {
        CadlagPath::new(f.breakpoints, f.values, f.interpolation)
    }
}

impl From<&CadlagPath> for PathFile {
    fn from(p: &CadlagPath) -> Self {
        PathFile {
            interpolation: p.interpolation,
            breakpoints: p.breakpoints.clone(),
            values: p.values.chunks_exact(p.dim).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Serialize for CadlagPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PathFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CadlagPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = PathFile::deserialize(d)?;
        CadlagPath::try_from(f).map_err(serde::de::Error::custom)
    }
}

/// The direction `gamma` of a hyperplane projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Projection {
    gamma: Vec<f64>,
}

impl Projection {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::param("projection vector must be non-empty"));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::param("projection entries must be finite"));
        }
        Ok(Projection { gamma })
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    #[inline]
    pub fn dot(&self, z: &[f64]) -> f64 {
        self.gamma.iter().zip(z).map(|(g, x)| g * x).sum()
    }
}

impl TryFrom<Vec<f64>> for Projection {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Projection::new(v)
    }
}

impl From<Projection> for Vec<f64> {
    fn from(p: Projection) -> Self {
        p.gamma
    }
}

/// Free-function form of [`CadlagPath::project`].
pub fn project(path: &CadlagPath, gamma: &Projection) -> Result<ScalarPath> {
    path.project(gamma)
}

/// A real-valued càdlàg path, typically `gamma · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl ScalarPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        validate_breakpoints(&breakpoints)?;
        if values.len() != breakpoints.len() {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite value".into()));
        }
        Ok(ScalarPath { breakpoints, values, interpolation })
    }

    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(breakpoints, values, Interpolation::Step)
    }

    pub fn linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(breakpoints, values, Interpolation::Linear)
    }

    pub fn constant(value: f64) -> Self {
        ScalarPath {
            breakpoints: vec![0.0],
            values: vec![value],
            interpolation: Interpolation::Step,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn is_continuous(&self) -> bool {
        self.interpolation == Interpolation::Linear
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.breakpoints.last().expect("validated non-empty")
    }

    /// The smooth piece active on `[t_k, t_{k+1})` for the `k` containing `t`.
    #[inline]
    pub fn piece_at(&self, t: f64) -> Piece {
        let k = segment_index(&self.breakpoints, t);
        self.piece(k)
    }

    #[inline]
    pub(crate) fn piece(&self, k: usize) -> Piece {
        match self.interpolation {
            Interpolation::Linear if k + 1 < self.breakpoints.len() => {
                let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
                let (v0, v1) = (self.values[k], self.values[k + 1]);
                Piece::Affine { t0, v0, slope: (v1 - v0) / (t1 - t0) }
            }
            _ => Piece::Const(self.values[k]),
        }
    }

    /// Right-continuous evaluation `x_t`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let k = segment_index(&self.breakpoints, t);
        let v = self.values[k];
        match self.interpolation {
            Interpolation::Linear if k + 1 < self.breakpoints.len() && t > self.breakpoints[k] => {
                let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
                v + (t - t0) / (t1 - t0) * (self.values[k + 1] - v)
            }
            _ => v,
        }
    }

    /// Left limit `x_{t-}` (equal to `x_0` at `t = 0`).
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.interpolation {
            Interpolation::Linear => self.eval(t),
            Interpolation::Step => {
                let k = self.breakpoints.partition_point(|&b| b < t).saturating_sub(1);
                self.values[k]
            }
        }
    }

    /// Exact `sup_{s <= t} x_s`.
    pub fn running_sup(&self, t: f64) -> f64 {
        self.running_extremum(t, f64::max)
    }

    /// Exact `inf_{s <= t} x_s`.
    pub fn running_inf(&self, t: f64) -> f64 {
        self.running_extremum(t, f64::min)
    }

    fn running_extremum(&self, t: f64, pick: fn(f64, f64) -> f64) -> f64 {
        let k = segment_index(&self.breakpoints, t.max(0.0));
        let mut acc = self.values[..=k].iter().copied().fold(self.values[0], pick);
        if self.interpolation == Interpolation::Linear {
            acc = pick(acc, self.eval(t.max(0.0)));
        }
        acc
    }

    /// Times at which the path jumps (`x_t != x_{t-}`); empty for linear paths.
    pub fn jump_times(&self) -> Vec<f64> {
        match self.interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::Step => self
                .values
                .windows(2)
                .zip(&self.breakpoints[1..])
                .filter(|(w, _)| w[0] != w[1])
                .map(|(_, &t)| t)
                .collect(),
        }
    }
}

/// Free-function form of [`ScalarPath::running_sup`].
pub fn running_sup(path: &ScalarPath, t: f64) -> f64 {
    path.running_sup(t)
}

/// Free-function form of [`ScalarPath::running_inf`].
pub fn running_inf(path: &ScalarPath, t: f64) -> f64 {
    path.running_inf(t)
}

/// Free-function form of [`ScalarPath::jump_times`].
pub fn jump_times(path: &ScalarPath) -> Vec<f64> {
    path.jump_times()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step01() -> ScalarPath {
        ScalarPath::step(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn project_examples() {
        let p = CadlagPath::new(vec![0.0, 1.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]], Interpolation::Step).unwrap();
        let s = p.project(&Projection::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(s.values(), &[5.0, 5.0]);

        let z = p.project(&Projection::new(vec![0.0, 0.0]).unwrap()).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let l = CadlagPath::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![1.0, -1.0]], Interpolation::Linear).unwrap();
        let s = l.project(&Projection::new(vec![1.0, 1.0]).unwrap()).unwrap();
        for t in [0.0, 0.3, 0.9, 1.0, 5.0] {
            assert_eq!(s.eval(t), 0.0);
        }
    }

    #[test]
    fn project_rejects_dimension_mismatch() {
        let p = CadlagPath::new(vec![0.0], vec![vec![1.0, 1.0]], Interpolation::Step).unwrap();
        let err = p.project(&Projection::new(vec![1.0]).unwrap()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn running_extrema_examples() {
        let id = ScalarPath::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((id.running_sup(0.7) - 0.7).abs() < 1e-15);
        assert_eq!(id.running_inf(0.7), 0.0);

        let s = step01();
        assert_eq!(s.running_sup(1.0), 1.0);
        assert_eq!(s.running_inf(1.0), 0.0);

        let down = ScalarPath::step(vec![0.0, 1.0], vec![0.0, -2.0]).unwrap();
        assert_eq!(down.running_sup(0.5), 0.0);
        assert_eq!(down.running_inf(0.5), 0.0);
        assert_eq!(down.running_inf(1.0), -2.0);
    }

    #[test]
    fn jump_time_examples() {
        let l = ScalarPath::linear(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, -1.0]).unwrap();
        assert!(l.jump_times().is_empty());
        let s = ScalarPath::step(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.jump_times(), vec![1.0]);
        let s = ScalarPath::step(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(s.jump_times(), vec![1.0, 2.0]);
    }

    #[test]
    fn step_is_cadlag() {
        let s = step01();
        assert_eq!(s.eval(1.0), 1.0);
        assert_eq!(s.eval_left(1.0), 0.0);
        assert_eq!(s.eval(0.999), 0.0);
        assert_eq!(s.eval(7.0), 1.0);
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(ScalarPath::step(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(ScalarPath::step(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(ScalarPath::step(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(ScalarPath::step(vec![], vec![]).is_err());
        assert!(ScalarPath::linear(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn json_layout() {
        let p = CadlagPath::new(vec![0.0, 1.0], vec![vec![1.0, 2.0], vec![3.0, 4.0]], Interpolation::Linear).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"interpolation":"linear","breakpoints":[0.0,1.0],"values":[[1.0,2.0],[3.0,4.0]]}"#);
        let back: CadlagPath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<CadlagPath>(r#"{"interpolation":"step","breakpoints":[1.0],"values":[[1.0]]}"#).is_err());
    }

    fn arb_path(d: usize) -> impl Strategy<Value = CadlagPath> {
        (1usize..12, any::<bool>()).prop_flat_map(move |(k, linear)| {
            (
                prop::collection::vec(0.01f64..1.0, k - 1),
                prop::collection::vec(-5.0f64..5.0, k * d),
                Just(linear),
            )
                .prop_map(move |(gaps, vals, linear)| {
                    let mut bps = vec![0.0];
                    for g in gaps {
                        let last = *bps.last().unwrap();
                        bps.push(last + g);
                    }
                    let interp = if linear { Interpolation::Linear } else { Interpolation::Step };
                    CadlagPath::from_flat(bps, vals, d, interp).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn projection_is_linear(path in arb_path(3), g1 in prop::collection::vec(-2.0f64..2.0, 3),
                                g2 in prop::collection::vec(-2.0f64..2.0, 3), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let combo: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
            let lhs = path.project(&Projection::new(combo).unwrap()).unwrap();
            let p1 = path.project(&Projection::new(g1).unwrap()).unwrap();
            let p2 = path.project(&Projection::new(g2).unwrap()).unwrap();
            for k in 0..path.len() {
                let rhs = a * p1.values()[k] + b * p2.values()[k];
                prop_assert!((lhs.values()[k] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn running_extrema_monotone(path in arb_path(1), ts in prop::collection::vec(0.0f64..12.0, 2..20)) {
            let s = path.coordinate(0);
            let mut ts = ts;
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                prop_assert!(s.running_sup(w[0]) <= s.running_sup(w[1]));
                prop_assert!(s.running_inf(w[0]) >= s.running_inf(w[1]));
            }
            if s.interpolation() == Interpolation::Step {
                for &t in &ts {
                    let brute = s.breakpoints().iter().zip(s.values())
                        .filter(|(&b, _)| b <= t).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert_eq!(s.running_sup(t), brute);
                }
            }
        }

        #[test]
        fn projected_jumps_within_coordinate_jumps(path in arb_path(2), g in prop::collection::vec(-2.0f64..2.0, 2)) {
            let proj = path.project(&Projection::new(g).unwrap()).unwrap();
            let mut union: Vec<f64> = (0..2).flat_map(|i| path.coordinate(i).jump_times()).collect();
            union.sort_by(f64::total_cmp);
            for t in proj.jump_times() {
                prop_assert!(union.binary_search_by(|u| u.total_cmp(&t)).is_ok());
            }
        }
    }
}
