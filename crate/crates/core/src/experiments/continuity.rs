//! Strict monotonicity of `α ↦ M_{T,α}` and atomlessness of `M` on
//! Brownian-grid paths, with a coarse random walk as the control group.

use rayon::prelude::*;

use super::{arm, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, ReportRow};
use crate::generators::{gen_bm_grid, gen_walk, IncrementLaw, WalkSpec};
use crate::paths::{Projection, ScalarPath};
use crate::quantile::occupation_cdf;
use crate::rng::RngConfig;
use crate::stats::{largest_atom, Sample};
use crate::Result;

#[derive(Default, Clone, Copy)]
struct Flats {
    /// Paths whose quantile map has a jump.
    discontinuous: usize,
    /// Paths whose quantile curve has a flat piece.
    with_flat_piece: usize,
    /// Consecutive α-grid points with equal quantiles, summed over paths.
    flat_pairs: usize,
    /// Paths with at least one such pair.
    paths_with_flat_pairs: usize,
}

fn scan(count: usize, base: RngConfig, horizon: f64, grid: &[f64], gen: impl Fn(&RngConfig) -> Result<ScalarPath> + Sync) -> Result<Flats> {
    let per_path = (0..count)
        .into_par_iter()
        .map(|i| {
            let cdf = occupation_cdf(&gen(&base.with_stream(i as u64))?, horizon)?;
            let qs = grid.iter().map(|&a| Ok(cdf.quantile(a)?.value)).collect::<Result<Vec<f64>>>()?;
            let pairs = qs.windows(2).filter(|w| w[0] == w[1]).count();
            Ok((!cdf.discontinuity_set().is_empty(), !cdf.curve().is_strictly_increasing(), pairs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_path.into_iter().fold(Flats::default(), |mut acc, (disc, flat, pairs)| {
        acc.discontinuous += disc as usize;
        acc.with_flat_piece += flat as usize;
        acc.flat_pairs += pairs;
        acc.paths_with_flat_pairs += (pairs > 0) as usize;
        acc
    }))
}

pub fn run_continuity_diagnostics(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.check_budget(ExperimentKind::Continuity)?;
    let c = &cfg.continuity;
    let mut report = ConvergenceReport::new(ExperimentKind::Continuity, cfg);
    let gamma: Projection = cfg.projection()?;
    let grid: Vec<f64> = (1..=c.alpha_grid).map(|i| i as f64 / (c.alpha_grid + 1) as f64).collect();

    let bm = WalkSpec::new(c.bm_n, cfg.sigma_matrix(), IncrementLaw::Gaussian, cfg.horizon)?;
    let bm_path = |r: &RngConfig| gen_bm_grid(&bm, r)?.project(&gamma);
    let b = scan(c.paths, arm(cfg, tags::CONTINUITY), cfg.horizon, &grid, bm_path)?;
    report.row(ReportRow::value("bm_grid_flat_pairs", Some(c.bm_n), c.paths, b.flat_pairs as f64).checked(0.0));
    report.row(ReportRow::value("bm_grid_discontinuous_paths", Some(c.bm_n), c.paths, b.discontinuous as f64).checked(0.0));
    report.criterion(Criterion::at_most(
        "bm_grid_flat_pairs",
        b.flat_pairs as f64,
        0.0,
        format!("{} Brownian-grid paths x {} alpha-grid points", c.paths, c.alpha_grid),
    ));
    report.criterion(Criterion::at_most(
        "bm_grid_empty_discontinuity_sets",
        (b.discontinuous + b.with_flat_piece) as f64,
        0.0,
        "paths with a nonempty discontinuity set or a flat quantile piece",
    ));

    let walk = WalkSpec::new(c.control_n, cfg.sigma_matrix(), IncrementLaw::Rademacher, cfg.horizon)?;
    let walk_path = |r: &RngConfig| gen_walk(&walk, r)?.project(&gamma);
    let w = scan(c.paths, arm(cfg, tags::CONTROL), cfg.horizon, &grid, walk_path)?;
    report.row(ReportRow::value("control_walk_flat_pairs", Some(c.control_n), c.paths, w.flat_pairs as f64));
    report.row(ReportRow::value("control_walk_paths_with_flats", Some(c.control_n), c.paths, w.paths_with_flat_pairs as f64));
    report.criterion(Criterion::at_least(
        "control_walk_has_flats",
        w.flat_pairs as f64,
        1.0,
        format!("Rademacher walk n={}: {} of {} paths show flats", c.control_n, w.paths_with_flat_pairs, c.paths),
    ));

    let base = arm(cfg, tags::ATOMS);
    let ms = (0..c.atom_paths)
        .into_par_iter()
        .map(|i| Ok(occupation_cdf(&bm_path(&base.with_stream(i as u64))?, cfg.horizon)?.quantile(cfg.alpha)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let atom = largest_atom(&Sample::new(ms)?);
    let bound = 2.0 / c.atom_paths as f64;
    report.row(ReportRow::value("bm_grid_largest_atom", Some(c.bm_n), c.atom_paths, atom.fraction).checked(bound));
    report.criterion(Criterion::at_most(
        "bm_grid_largest_atom",
        atom.fraction,
        bound,
        format!("most frequent M value {} on {} Brownian-grid paths", atom.value, c.atom_paths),
    ));
    Ok(report)
}
