//! Experiment reports: JSON documents and a flat CSV view.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentKind};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Below => "<",
            Comparison::Above => ">",
        }
    }

    fn holds(self, statistic: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => statistic <= threshold,
            Comparison::AtLeast => statistic >= threshold,
            Comparison::Below => statistic < threshold,
            Comparison::Above => statistic > threshold,
        }
    }
}

/// A pass/fail check with its statistic and threshold spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub statistic: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    pub fn new(name: &str, statistic: f64, comparison: Comparison, threshold: f64, detail: impl Into<String>) -> Self {
        Criterion {
            name: name.to_string(),
            statistic,
            comparison,
            threshold,
            pass: comparison.holds(statistic, threshold),
            detail: detail.into(),
        }
    }

    pub fn at_most(name: &str, statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, statistic, Comparison::AtMost, threshold, detail)
    }

    pub fn at_least(name: &str, statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self::new(name, statistic, Comparison::AtLeast, threshold, detail)
    }

    /// Passes when `values` strictly decrease; the statistic is the largest
    /// consecutive difference `v[i+1] − v[i]`, which must be negative.
    pub fn strictly_decreasing(name: &str, values: &[f64], detail: impl Into<String>) -> Self {
        let worst = values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let worst = if worst.is_finite() { worst } else { -1.0 };
        Self::new(name, worst, Comparison::Below, 0.0, detail)
    }
}

/// One line of tabular output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub n: Option<usize>,
    /// Sample size behind the statistic.
    #[serde(rename = "N")]
    pub paths: usize,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pass: Option<bool>,
}

impl ReportRow {
    pub fn value(metric: &str, n: Option<usize>, paths: usize, statistic: f64) -> Self {
        ReportRow { metric: metric.to_string(), n, paths, statistic, std_error: None, threshold: None, pass: None }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn checked(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.pass = Some(self.statistic <= threshold);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    /// Seconds since the Unix epoch; left empty for reproducible output.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_unix: Option<u64>,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn new(kind: ExperimentKind, config: &ExperimentConfig) -> Self {
        ConvergenceReport {
            schema_version: SCHEMA_VERSION,
            kind,
            generated_unix: None,
            config: config.clone(),
            rows: Vec::new(),
            criteria: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }

    pub fn row(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn criterion(&mut self, c: Criterion) {
        self.passed &= c.pass;
        self.criteria.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn criterion_named(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Rows, then criteria (with empty `n`), one per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,N,statistic,threshold,pass,metric,schema_version\n");
        let opt = |x: Option<String>| x.unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                opt(r.n.map(|n| n.to_string())),
                r.paths,
                r.statistic,
                opt(r.threshold.map(|t| t.to_string())),
                opt(r.pass.map(|p| p.to_string())),
                r.metric,
                self.schema_version
            );
        }
        for c in &self.criteria {
            let _ = writeln!(
                out,
                ",,{},{},{},criterion:{},{}",
                c.statistic, c.threshold, c.pass, c.name, self.schema_version
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_and_csv() {
        let mut r = ConvergenceReport::new(ExperimentKind::Marginal, &ExperimentConfig::default());
        r.row(ReportRow::value("ks", Some(100), 1000, 0.05).checked(0.04));
        r.criterion(Criterion::strictly_decreasing("trend", &[0.3, 0.2, 0.1], ""));
        assert!(r.passed);
        r.criterion(Criterion::at_most("final", 0.03, 0.02, ""));
        assert!(!r.passed);
        assert!(!Criterion::strictly_decreasing("flat", &[0.1, 0.1], "").pass);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,N,statistic,threshold,pass,metric,schema_version");
        assert_eq!(lines[1], "100,1000,0.05,0.04,false,ks,1");
        assert!(lines[3].starts_with(",,0.03,0.02,false,criterion:final"));
        let back: ConvergenceReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
