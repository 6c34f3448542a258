//! Compound Poisson paths: every fixed level is a.s. unoccupied, yet the
//! occupation CDF has atoms and the quantile map has flats and jumps.

use rayon::prelude::*;

use super::{arm, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, ReportRow};
use crate::generators::gen_compound_poisson;
use crate::quantile::{occupation_cdf, CurvePieceKind};
use crate::stats::{largest_atom, proportion_std_error, Sample};
use crate::Result;

struct PathCheck {
    jumps: usize,
    has_atom: bool,
    has_flat: bool,
    has_jump: bool,
    terminal: f64,
}

pub fn run_counterexample(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.check_budget(ExperimentKind::Counterexample)?;
    let c = &cfg.counterexample;
    c.process.validate()?;
    let t = c.process.horizon;
    let mut report = ConvergenceReport::new(ExperimentKind::Counterexample, cfg);
    let base = arm(cfg, tags::POISSON);
    let checks = (0..c.paths)
        .into_par_iter()
        .map(|i| {
            let path = gen_compound_poisson(&c.process, &base.with_stream(i as u64))?.coordinate(0);
            let jumps = path.jump_times().into_iter().filter(|&u| u < t).count();
            let cdf = occupation_cdf(&path, t)?;
            let curve = cdf.curve();
            let has_atom = cdf.atoms().any(|(_, mass)| mass > 0.0 && mass < 1.0);
            Ok(PathCheck {
                jumps,
                has_atom,
                has_flat: curve.pieces().iter().any(|p| matches!(p.kind, CurvePieceKind::Flat { .. }) && p.alpha_hi - p.alpha_lo < 1.0),
                has_jump: !cdf.discontinuity_set().is_empty(),
                terminal: path.eval(t),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let eligible: Vec<&PathCheck> = checks.iter().filter(|c| c.jumps >= 2).collect();
    let detected = eligible.iter().filter(|c| c.has_atom && c.has_flat && c.has_jump).count();
    let frac_detected = detected as f64 / eligible.len().max(1) as f64;
    report.row(ReportRow::value("paths_with_two_jumps", None, c.paths, eligible.len() as f64));
    report.row(ReportRow::value("detected_atom_flat_jump", None, eligible.len(), detected as f64));
    report.criterion(Criterion::at_least(
        "atom_and_flat_on_every_two_jump_path",
        frac_detected,
        1.0,
        format!("{detected} of {} paths with >= 2 jumps before T = {t}", eligible.len()),
    ));

    let lt = c.process.rate * t;
    let expected = 1.0 - (-lt).exp() * (1.0 + lt);
    let frac = eligible.len() as f64 / c.paths as f64;
    let se = proportion_std_error(expected, c.paths);
    report.row(ReportRow::value("fraction_two_jumps", None, c.paths, frac).with_se(se));
    report.criterion(Criterion::at_most(
        "fraction_two_jumps",
        (frac - expected).abs(),
        3.0 * se,
        format!("observed {frac} vs 1 - e^(-{lt})(1 + {lt}) = {expected}"),
    ));

    let atom = largest_atom(&Sample::new(checks.iter().map(|c| c.terminal).collect())?);
    let bound = 2.0 / c.paths as f64;
    report.row(ReportRow::value("terminal_largest_atom", None, c.paths, atom.fraction).checked(bound));
    report.criterion(Criterion::at_most(
        "terminal_value_atomless",
        atom.fraction,
        bound,
        format!("most frequent Y_T value {}", atom.value),
    ));
    Ok(report)
}
