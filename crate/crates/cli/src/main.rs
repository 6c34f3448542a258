//! `qp`: quantile functionals, J1 bounds, Brownian reference laws and
//! Monte Carlo experiments from the command line.
//!
//! Every command prints one JSON document (to stdout, or to `--out`).
//! Exit status: 0 on success, 2 on invalid input (with a JSON error on
//! stderr), 1 on internal failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use quantile_core::brownian_law::{expected_tau_positive, mean_quantile, quantile_law, BrownianSpec, DEFAULT_QUAD_TOL};
use quantile_core::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use quantile_core::generators::{
    gen_bm_grid, gen_compound_poisson, gen_walk, CompoundPoissonSpec, IncrementLaw, JumpLaw, WalkSpec,
};
use quantile_core::paths::PathFile;
use quantile_core::{
    hitting_time, j1_distance, quantile, CadlagPath, Matrix, Projection, RngConfig, ScalarPath, SearchParams,
    SCHEMA_VERSION,
};

#[derive(Parser, Debug)]
#[command(name = "qp", version, about = "Exact hyperplane quantile functionals on cadlag paths")]
struct Cli {
    /// Seed for all random draws; the QP_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave `generated_unix` out of experiment reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and print it in the path-file format.
    Gen(GenArgs),
    /// α-quantile of the occupation measure on [0, t].
    Quantile(FunctionalArgs),
    /// First hitting time of the α-quantile.
    Tau(FunctionalArgs),
    /// Upper bound on the J1 distance between two paths.
    J1(J1Args),
    /// Brownian reference law of the α-quantile.
    Law(LawArgs),
    /// Run a Monte Carlo experiment and emit its report.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    /// Random walk with Rademacher increments (step path).
    Walk,
    /// Brownian motion on a grid, linearly interpolated.
    Bm,
    /// Compound Poisson process with exponential jumps.
    Cpp,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Steps per unit time (walk, bm).
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Dimension, with identity covariance (walk, bm).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Jump intensity (cpp).
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Mean jump size (cpp).
    #[arg(long, default_value_t = 1.0)]
    jump_mean: f64,
    /// Substream of the seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Args, Debug)]
struct FunctionalArgs {
    #[arg(long)]
    path_file: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Projection direction, comma separated; required for paths of dimension > 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct J1Args {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 2)]
    n_max: u32,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    candidates_per_jump: Option<usize>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("query").args(["cdf_at", "pdf_at", "mean", "tau_mean"]))]
struct LawArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, allow_negative_numbers = true)]
    cdf_at: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pdf_at: Option<f64>,
    #[arg(long)]
    mean: bool,
    /// `E[1{M > 0} τ]` at level BETA (scaled by t).
    #[arg(long, value_name = "BETA", allow_negative_numbers = true)]
    tau_mean: Option<f64>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    kind: ExperimentKind,
    /// JSON configuration; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Bad input: reported with exit status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report_error("usage", &e.render().to_string(), 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<Usage>() {
                return report_error("usage", &u.0, 2);
            }
            if let Some(core) = e.downcast_ref::<quantile_core::Error>() {
                let (kind, code) = if core.is_validation() { ("validation", 2) } else { ("internal", 1) };
                return report_error(kind, &format!("{e:#}"), code);
            }
            report_error("internal", &format!("{e:#}"), 1)
        }
    }
}

fn report_error(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = json!({ "schema_version": SCHEMA_VERSION, "error": kind, "message": message.trim_end() });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn seed(cli: &Cli) -> anyhow::Result<Option<u64>> {
    match std::env::var("QP_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| usage(format!("QP_SEED is not an unsigned integer: {s:?}"))),
        Err(_) => Ok(cli.seed),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k as usize)
            .build_global()
            .context("starting the worker pool")?;
    }
    let seed = seed(&cli)?;
    let out = match &cli.command {
        Command::Gen(a) => gen(a, seed.unwrap_or(0))?,
        Command::Quantile(a) => {
            let path = scalar_path(&a.path_file, a.gamma.as_deref())?;
            let q = quantile(&path, a.t, a.alpha)?;
            json!({
                "schema_version": SCHEMA_VERSION,
                "alpha": q.alpha,
                "value": q.value,
                "flat": q.flat,
                "bounds": { "inf": path.running_inf(a.t), "sup": path.running_sup(a.t) },
            })
        }
        Command::Tau(a) => {
            let path = scalar_path(&a.path_file, a.gamma.as_deref())?;
            let h = hitting_time(&path, a.t, a.alpha)?;
            json!({
                "schema_version": SCHEMA_VERSION,
                // JSON has no infinity; a level never reached has no time.
                "tau": h.tau.is_finite().then_some(h.tau),
                "case": h.case,
                "level": h.level,
                "never_hit": h.never_hit,
                "beyond_horizon": h.beyond_horizon,
            })
        }
        Command::J1(a) => j1(a)?,
        Command::Law(a) => law(a)?,
        Command::Experiment(a) => {
            let mut cfg = match &a.config {
                Some(p) => {
                    let text = read(p)?;
                    serde_json::from_str::<ExperimentConfig>(&text)
                        .map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => ExperimentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let mut report = run_experiment(a.kind, &cfg)?;
            if !cli.no_timestamp {
                report.generated_unix = Some(SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs());
            }
            if let Some(csv) = &a.csv {
                write(csv, &report.to_csv())?;
            }
            let target = cli.out.clone().or_else(|| cfg.output.clone());
            return emit(target.as_deref(), &serde_json::to_value(&report)?);
        }
    };
    emit(cli.out.as_deref(), &out)
}

fn emit(out: Option<&Path>, value: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))
}

fn write(p: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn load_path(p: &Path) -> anyhow::Result<CadlagPath> {
    let file: PathFile = serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    Ok(CadlagPath::try_from(file)?)
}

fn scalar_path(p: &Path, gamma: Option<&[f64]>) -> anyhow::Result<ScalarPath> {
    let path = load_path(p)?;
    match gamma {
        Some(g) => Ok(path.project(&Projection::new(g.to_vec())?)?),
        None if path.dim() == 1 => Ok(path.coordinate(0)),
        None => Err(usage(format!("{} has dimension {}; pass --gamma", p.display(), path.dim()))),
    }
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    inner: &'a T,
}

fn gen(a: &GenArgs, seed: u64) -> anyhow::Result<Value> {
    let rng = RngConfig::new(seed, a.stream);
    let path = match a.kind {
        GenKind::Walk | GenKind::Bm => {
            let law = if matches!(a.kind, GenKind::Walk) { IncrementLaw::Rademacher } else { IncrementLaw::Gaussian };
            if a.dim == 0 {
                return Err(usage("--dim must be at least 1"));
            }
            let spec = WalkSpec::new(a.n, Matrix::identity(a.dim), law, a.t)?;
            if matches!(a.kind, GenKind::Walk) {
                gen_walk(&spec, &rng)?
            } else {
                gen_bm_grid(&spec, &rng)?
            }
        }
        GenKind::Cpp => {
            let spec = CompoundPoissonSpec { rate: a.rate, jump_law: JumpLaw::Exp { mean: a.jump_mean }, horizon: a.t };
            gen_compound_poisson(&spec, &rng)?
        }
    };
    Ok(serde_json::to_value(Versioned { schema_version: SCHEMA_VERSION, inner: &PathFile::from(&path) })?)
}

fn j1(a: &J1Args) -> anyhow::Result<Value> {
    let x = scalar_path(&a.a, a.gamma.as_deref())?;
    let y = scalar_path(&a.b, a.gamma.as_deref())?;
    let mut params = SearchParams::default();
    if let Some(w) = a.beam_width {
        params.beam_width = w;
    }
    if let Some(k) = a.candidates_per_jump {
        params.candidates_per_jump = k;
    }
    let d = j1_distance(&x, &y, a.n_max, &params)?;
    let per_n: Vec<Value> = d
        .per_n
        .iter()
        .map(|h| {
            json!({
                "N": h.n,
                "delta_n": h.delta_n,
                "lambda_norm": h.lambda_norm,
                "sup_distance": h.sup_distance,
                "uniform": h.uniform,
                "witness": h.witness.knots(),
            })
        })
        .collect();
    Ok(json!({ "schema_version": SCHEMA_VERSION, "delta": d.delta, "tail_bound": d.tail_bound, "per_N": per_n }))
}

fn law(a: &LawArgs) -> anyhow::Result<Value> {
    let spec = BrownianSpec::scalar(a.sigma, a.t)?;
    let mut out = json!({ "schema_version": SCHEMA_VERSION, "alpha": a.alpha, "sigma": a.sigma, "t": a.t });
    let obj = out.as_object_mut().expect("object literal");
    if let Some(beta) = a.tau_mean {
        obj.insert("beta".into(), json!(beta));
        obj.insert("tau_mean".into(), json!(a.t * expected_tau_positive(beta)?));
        return Ok(out);
    }
    let law = quantile_law(&spec, a.alpha, DEFAULT_QUAD_TOL)?;
    if let Some(m) = a.cdf_at {
        obj.insert("m".into(), json!(m));
        obj.insert("cdf".into(), json!(law.cdf(m)));
    } else if let Some(m) = a.pdf_at {
        obj.insert("m".into(), json!(m));
        obj.insert("pdf".into(), json!(law.pdf(m)));
    } else {
        obj.insert("mean".into(), json!(mean_quantile(&spec, a.alpha)?));
    }
    Ok(out)
}
