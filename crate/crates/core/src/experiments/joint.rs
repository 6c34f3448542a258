//! Joint convergence of `(M_{T,α}, τ)` along Donsker walks.

use super::{arm, indicator_mean, oracle, simulate_walks, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, Functionals, ReportRow};
use crate::brownian_law::expected_tau_positive;
use crate::stats::{ks_two_sample, mean_estimate, proportion_std_error, Sample};
use crate::Result;

fn tau_positive(m: &[f64], tau: &[f64]) -> Vec<f64> {
    m.iter().zip(tau).map(|(&m, &t)| if m > 0.0 { t } else { 0.0 }).collect()
}

fn rectangle(m: &[f64], tau: &[f64], (m0, v0): (f64, f64)) -> (f64, usize) {
    indicator_mean(m.iter().zip(tau).map(|(&m, &t)| m > m0 && t > v0))
}

/// `E[1{M>0}τ]` against its closed form (on walks and on the Brownian grid),
/// the joint event `{M > m0, τ > v0}` against the Brownian-grid oracle, and a
/// two-sample KS comparison of the τ-samples at the finest walk.
pub fn run_joint_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.require_ks_sizes()?;
    cfg.check_budget(ExperimentKind::Joint)?;
    let mut report = ConvergenceReport::new(ExperimentKind::Joint, cfg);
    // τ scales with T; the sign of M does not depend on the volatility.
    let closed = cfg.horizon * expected_tau_positive(cfg.alpha)?;
    let sample = oracle::load_or_build(cfg)?;
    let (om, otau) = sample.column(cfg.alpha)?;
    let oracle_rect = rectangle(om, otau, cfg.rectangle).0;
    let oracle_tp = mean_estimate(&tau_positive(om, otau))?;
    report.row(ReportRow::value("bm_grid_tau_positive_mean", Some(sample.key.n), sample.len(), oracle_tp.mean).with_se(oracle_tp.std_error));
    report.row(ReportRow::value("bm_grid_rectangle_probability", Some(sample.key.n), sample.len(), oracle_rect));
    report.criterion(Criterion::at_most(
        "bm_grid_tau_positive_mean",
        (oracle_tp.mean - closed).abs(),
        cfg.mean_tolerance,
        format!("Brownian grid estimate {} (se {}) vs closed form {closed}", oracle_tp.mean, oracle_tp.std_error),
    ));

    let n_final = *cfg.n_list.last().expect("validated nonempty");
    let mut gaps = Vec::new();
    let mut final_walk: Option<Vec<Functionals>> = None;
    for &n in &cfg.n_list {
        let fs = simulate_walks(cfg, n, cfg.paths, arm(cfg, tags::WALK ^ n as u64))?;
        let m: Vec<f64> = fs.iter().map(|f| f.m[0]).collect();
        let tau: Vec<f64> = fs.iter().map(|f| f.tau[0]).collect();
        let tp = mean_estimate(&tau_positive(&m, &tau))?;
        let (rect, count) = rectangle(&m, &tau, cfg.rectangle);
        let gap = (rect - oracle_rect).abs();
        let se = (proportion_std_error(rect, count).powi(2) + proportion_std_error(oracle_rect, sample.len()).powi(2)).sqrt();
        gaps.push(gap);
        report.row(ReportRow::value("tau_positive_mean", Some(n), cfg.paths, tp.mean).with_se(tp.std_error));
        report.row(ReportRow::value("rectangle_probability", Some(n), cfg.paths, rect).with_se(proportion_std_error(rect, count)));
        report.row(ReportRow::value("rectangle_gap", Some(n), cfg.paths, gap).with_se(se));
        if n == n_final {
            report.criterion(Criterion::at_most(
                "tau_positive_mean_final",
                (tp.mean - closed).abs(),
                cfg.mean_tolerance,
                format!("walk n={n}: {} (se {}) vs closed form {closed}", tp.mean, tp.std_error),
            ));
            report.criterion(Criterion::at_most(
                "rectangle_gap_final",
                gap,
                cfg.rectangle_max_gap,
                format!("P(M > {}, tau > {}) walk {rect} vs Brownian grid {oracle_rect} (combined se {se})", cfg.rectangle.0, cfg.rectangle.1),
            ));
            final_walk = Some(fs);
        }
    }
    let trend = if gaps.windows(2).all(|w| w[1] < w[0]) { "decreasing" } else { "not monotone" };
    report.note(format!("rectangle gaps along n = {:?}: {:?} ({trend}; single seed, informational)", cfg.n_list, gaps));

    let walk_tau: Vec<f64> = final_walk.expect("n_list nonempty").iter().map(|f| f.tau[0]).collect();
    let ks = ks_two_sample(&Sample::new(walk_tau)?, &Sample::new(otau.to_vec())?);
    let threshold = ks.threshold(cfg.ks_level) + cfg.discretization_allowance;
    report.row(ReportRow::value("ks_tau_two_sample", Some(n_final), cfg.paths, ks.statistic).checked(threshold));
    report.criterion(Criterion::at_most(
        "ks_tau_two_sample_final",
        ks.statistic,
        threshold,
        format!(
            "tau at walk n={n_final} vs Brownian grid; level {} threshold {:.5} + allowance {}",
            cfg.ks_level,
            ks.threshold(cfg.ks_level),
            cfg.discretization_allowance
        ),
    ));
    Ok(report)
}
