//! Weak convergence of `M_{T,α}` along Donsker walks.

use super::{arm, column, median, oracle, simulate_walks, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, ReportRow};
use crate::brownian_law::{mean_quantile, quantile_law, QuantileLaw, DEFAULT_QUAD_TOL};
use crate::stats::{kolmogorov_critical, ks_one_sample, mean_estimate, Sample};
use crate::Result;

fn ks_against(law: &QuantileLaw, xs: Vec<f64>) -> Result<f64> {
    Ok(ks_one_sample(&Sample::new(xs)?, |m| law.cdf(m)).statistic)
}

/// For each `n`: KS distance of the walk's `M`-sample to the Brownian law,
/// the sample mean against the closed form, and the median KS distance over
/// independent replications. The Brownian-grid oracle mean is reported too.
pub fn run_marginal_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.require_ks_sizes()?;
    cfg.check_budget(ExperimentKind::Marginal)?;
    let mut report = ConvergenceReport::new(ExperimentKind::Marginal, cfg);
    let spec = cfg.brownian()?;
    let alphas = cfg.alphas();
    let laws = alphas.iter().map(|&a| quantile_law(&spec, a, DEFAULT_QUAD_TOL)).collect::<Result<Vec<_>>>()?;
    let means = alphas.iter().map(|&a| mean_quantile(&spec, a)).collect::<Result<Vec<_>>>()?;
    let n_final = *cfg.n_list.last().expect("validated nonempty");
    report.note(format!(
        "sigma_eff = {}; KS level {} threshold c/sqrt(N) = {:.5} plus discretization allowance {}",
        spec.effective_sigma(),
        cfg.ks_level,
        kolmogorov_critical(cfg.ks_level) / (cfg.paths as f64).sqrt(),
        cfg.discretization_allowance
    ));

    let mut medians = vec![Vec::new(); alphas.len()];
    for &n in &cfg.n_list {
        let fs = simulate_walks(cfg, n, cfg.paths, arm(cfg, tags::WALK ^ n as u64))?;
        for (k, &a) in alphas.iter().enumerate() {
            let ms = column(&fs, k, |f| &f.m);
            let est = mean_estimate(&ms)?;
            let d = ks_against(&laws[k], ms)?;
            report.row(ReportRow::value(&format!("ks_m_alpha_{a}"), Some(n), cfg.paths, d));
            report.row(ReportRow::value(&format!("mean_m_alpha_{a}"), Some(n), cfg.paths, est.mean).with_se(est.std_error));
            if n == n_final {
                report.criterion(Criterion::at_most(
                    &format!("ks_final_alpha_{a}"),
                    d,
                    cfg.ks_max,
                    format!("walk n={n}, N={} vs Brownian quantile law", cfg.paths),
                ));
                report.criterion(Criterion::at_most(
                    &format!("mean_final_alpha_{a}"),
                    (est.mean - means[k]).abs(),
                    cfg.mean_tolerance,
                    format!("sample mean {} (se {}) vs closed form {}", est.mean, est.std_error, means[k]),
                ));
            }
        }

        let mut per_rep = vec![Vec::with_capacity(cfg.replications); alphas.len()];
        for r in 0..cfg.replications {
            let tag = tags::REPLICATION ^ ((r as u64) << 24) ^ n as u64;
            let fs = simulate_walks(cfg, n, cfg.replication_paths, arm(cfg, tag))?;
            for (k, reps) in per_rep.iter_mut().enumerate() {
                reps.push(ks_against(&laws[k], column(&fs, k, |f| &f.m))?);
            }
        }
        for (k, &a) in alphas.iter().enumerate() {
            let med = median(per_rep[k].clone());
            report.row(ReportRow::value(&format!("median_ks_m_alpha_{a}"), Some(n), cfg.replication_paths, med));
            medians[k].push(med);
        }
    }
    for (k, &a) in alphas.iter().enumerate() {
        report.criterion(Criterion::strictly_decreasing(
            &format!("median_ks_decreasing_alpha_{a}"),
            &medians[k],
            format!(
                "median over {} replications of {} paths along n = {:?}: {:?}",
                cfg.replications, cfg.replication_paths, cfg.n_list, medians[k]
            ),
        ));
    }

    let sample = oracle::load_or_build(cfg)?;
    let (ms, _) = sample.column(cfg.alpha)?;
    let est = mean_estimate(ms)?;
    report.row(ReportRow::value(&format!("bm_grid_mean_m_alpha_{}", cfg.alpha), Some(sample.key.n), sample.len(), est.mean).with_se(est.std_error));
    report.criterion(Criterion::at_most(
        &format!("bm_grid_mean_alpha_{}", cfg.alpha),
        (est.mean - means[0]).abs(),
        cfg.mean_tolerance,
        format!("Brownian grid n={}, N={}: mean {} (se {}) vs closed form {}", sample.key.n, sample.len(), est.mean, est.std_error, means[0]),
    ));
    Ok(report)
}
