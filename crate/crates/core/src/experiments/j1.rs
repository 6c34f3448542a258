//! J1 certificates for coupled walk resolutions.

use rayon::prelude::*;

use super::{arm, median, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, ReportRow};
use crate::generators::{gen_coupled, IncrementLaw, WalkSpec};
use crate::skorokhod::{default_n_max, j1_distance};
use crate::Result;

/// Median δ between a Gaussian walk at `n` (step) and the same Brownian
/// increments at `factor·n` (linear), along `n`; plus identity and
/// independent-pair controls.
pub fn run_j1_certificates(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.check_budget(ExperimentKind::J1)?;
    let j = &cfg.j1;
    if j.n_list.is_empty() || j.n_list.windows(2).any(|w| w[1] <= w[0]) || j.factor < 2 || j.replications == 0 {
        return Err(crate::Error::param("j1 needs an increasing n_list, factor >= 2 and replications >= 1"));
    }
    let mut report = ConvergenceReport::new(ExperimentKind::J1, cfg);
    let gamma = cfg.projection()?;
    let n_max = j.n_max.unwrap_or_else(|| default_n_max(cfg.horizon));
    let mut medians = Vec::new();
    for &n in &j.n_list {
        let spec = WalkSpec::new(n, cfg.sigma_matrix(), IncrementLaw::Gaussian, cfg.horizon)?;
        let base = arm(cfg, tags::COUPLED ^ n as u64);
        let deltas = (0..j.replications)
            .into_par_iter()
            .map(|r| {
                let (coarse, fine) = gen_coupled(&spec, j.factor, &base.with_stream(r as u64))?;
                Ok(j1_distance(&coarse.project(&gamma)?, &fine.project(&gamma)?, n_max, &j.search)?.delta)
            })
            .collect::<Result<Vec<f64>>>()?;
        let med = median(deltas);
        report.row(ReportRow::value("median_delta_coupled", Some(n), j.replications, med));
        medians.push(med);
    }
    report.criterion(Criterion::strictly_decreasing(
        "median_delta_decreasing",
        &medians,
        format!("coupled n vs {}n over {} seeds, n = {:?}: {:?}", j.factor, j.replications, j.n_list, medians),
    ));

    let n0 = j.n_list[0];
    let spec = WalkSpec::new(n0, cfg.sigma_matrix(), IncrementLaw::Gaussian, cfg.horizon)?;
    let (x, _) = gen_coupled(&spec, j.factor, &arm(cfg, tags::UNCOUPLED))?;
    let x = x.project(&gamma)?;
    let self_delta = j1_distance(&x, &x, n_max, &j.search)?.delta;
    report.criterion(Criterion::at_most("identity_delta_zero", self_delta, 0.0, "delta(x, x)"));

    let base = arm(cfg, tags::UNCOUPLED);
    let control = (0..j.replications)
        .into_par_iter()
        .map(|r| {
            let (a, _) = gen_coupled(&spec, j.factor, &base.with_stream(2 * r as u64 + 1))?;
            let (_, b) = gen_coupled(&spec, j.factor, &base.with_stream(2 * r as u64 + 2))?;
            Ok(j1_distance(&a.project(&gamma)?, &b.project(&gamma)?, n_max, &j.search)?.delta)
        })
        .collect::<Result<Vec<f64>>>()?;
    let med = median(control);
    report.row(ReportRow::value("median_delta_independent", Some(n0), j.replications, med));
    report.criterion(Criterion::at_least(
        "independent_pairs_bounded_away",
        med,
        j.control_min,
        format!("independent walks at n = {n0} vs {}n", j.factor),
    ));
    Ok(report)
}
