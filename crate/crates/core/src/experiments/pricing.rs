//! Prices `E[f(M) 1{τ > v}]` along Donsker walks.

use super::{arm, oracle, simulate_walks, tags, ConvergenceReport, Criterion, ExperimentConfig, ExperimentKind, PayoffConfig, PayoffKind, ReportRow};
use crate::brownian_law::{quantile_law, DEFAULT_QUAD_TOL};
use crate::quadrature::integrate;
use crate::stats::{largest_atom, mean_estimate, MeanEstimate, Sample};
use crate::Result;

fn price(payoff: &PayoffConfig, m: &[f64], tau: &[f64]) -> Result<MeanEstimate> {
    mean_estimate(&m.iter().zip(tau).map(|(&m, &t)| payoff.payoff(m, t)).collect::<Vec<_>>())
}

/// Walk prices per `n` against the Brownian-grid price; the `v = 0`
/// variant against quadrature of `f` under the quantile law; and `f ≡ 1`.
pub fn run_pricing(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    cfg.check_budget(ExperimentKind::Pricing)?;
    let mut report = ConvergenceReport::new(ExperimentKind::Pricing, cfg);
    let payoff = cfg.payoff;
    let sample = oracle::load_or_build(cfg)?;
    let (om, otau) = sample.column(cfg.alpha)?;
    let oracle_price = price(&payoff, om, otau)?;
    report.row(ReportRow::value("bm_grid_price", Some(sample.key.n), sample.len(), oracle_price.mean).with_se(oracle_price.std_error));

    // The limit price is continuous in v only if v is not an atom of τ.
    let tau_sample = Sample::new(otau.to_vec())?;
    let at_v = otau.iter().filter(|&&t| t == payoff.v).count() as f64 / otau.len() as f64;
    report.note(format!(
        "Brownian-grid tau sample: fraction exactly at v = {} is {at_v}; largest atom fraction {}",
        payoff.v,
        largest_atom(&tau_sample).fraction
    ));
    report.criterion(Criterion::at_most(
        "tau_no_atom_at_v",
        at_v,
        2.0 / otau.len() as f64,
        "empirical P(tau = v) on the Brownian grid",
    ));

    let n_final = *cfg.n_list.last().expect("validated nonempty");
    let mut final_sample = None;
    let mut growth_violations = 0usize;
    for &n in &cfg.n_list {
        let fs = simulate_walks(cfg, n, cfg.paths, arm(cfg, tags::WALK ^ n as u64))?;
        let m: Vec<f64> = fs.iter().map(|f| f.m[0]).collect();
        let tau: Vec<f64> = fs.iter().map(|f| f.tau[0]).collect();
        growth_violations += m.iter().filter(|&&x| !payoff.growth_ok(x)).count();
        let p = price(&payoff, &m, &tau)?;
        let gap = (p.mean - oracle_price.mean).abs();
        let se = (p.std_error.powi(2) + oracle_price.std_error.powi(2)).sqrt();
        report.row(ReportRow::value("price", Some(n), cfg.paths, p.mean).with_se(p.std_error));
        report.row(ReportRow::value("price_gap", Some(n), cfg.paths, gap).with_se(se));
        if n == n_final {
            report.criterion(Criterion::at_most(
                "price_gap_final",
                gap,
                2.0 * se + cfg.discretization_allowance,
                format!("walk n={n} price {} vs Brownian grid {} (combined se {se})", p.mean, oracle_price.mean),
            ));
            final_sample = Some((m, tau));
        }
    }
    if growth_violations > 0 {
        report.note(format!(
            "warning: payoff violates |f(z)|^p <= D(1+|z|^p) at {growth_violations} sampled quantiles"
        ));
    }

    let (m, tau) = final_sample.expect("n_list nonempty");
    // v = 0: the indicator is 1{τ > 0}, a.s. 1 in the limit.
    let at_zero = PayoffConfig { v: 0.0, ..payoff };
    let p0 = price(&at_zero, &m, &tau)?;
    let law = quantile_law(&cfg.brownian()?, cfg.alpha, DEFAULT_QUAD_TOL)?;
    let (lo, hi) = law.support_hint();
    let quad = integrate(|x| payoff.f(x) * law.pdf(x), lo, hi, 1e-7)?.value;
    report.row(ReportRow::value("price_v0", Some(n_final), cfg.paths, p0.mean).with_se(p0.std_error));
    report.row(ReportRow::value("quadrature_price_v0", None, 0, quad));
    report.criterion(Criterion::at_most(
        "price_v0_vs_quadrature",
        (p0.mean - quad).abs(),
        cfg.mean_tolerance,
        format!("walk n={n_final}: {} (se {}) vs quadrature of f against the quantile law {quad}", p0.mean, p0.std_error),
    ));
    let unit = PayoffConfig { kind: PayoffKind::Constant, v: 0.0, ..payoff };
    let p1 = price(&unit, &m, &tau)?;
    report.row(ReportRow::value("price_unit_v0", Some(n_final), cfg.paths, p1.mean));
    report.criterion(Criterion::at_most(
        "price_unit_v0",
        (p1.mean - 1.0).abs(),
        cfg.mean_tolerance,
        "f = 1, v = 0: fraction of paths with tau > 0",
    ));
    Ok(report)
}
