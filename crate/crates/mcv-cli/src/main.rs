//! Command-line interface: compute dispersion metrics, whiten datasets,
//! verify the metric property matrix, run the seeded experiments, and probe
//! influence functions.
//!
//! Exit codes: 0 on success, 1 on input or validation errors (the message
//! names the failing precondition), 2 on internal errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcv_core::error::{McvError, Result};
use mcv_core::io::{self, Input};
use mcv_core::metrics::{
    corrected_metrics, evaluate, g2, gamma_az, gamma_reyment, gamma_vanvalen, gamma_vn,
    influence_fd, influence_g2, MetricId, MetricReport,
};
use mcv_core::moments::{estimate_moments, Convention, MomentSummary};
use mcv_core::properties::{self, counterexample_suite, PropertyId, SuiteReport, Verdict};
use mcv_core::sims::{simulate, Experiment, ExperimentConfig};
use mcv_core::whitening::{
    apply_whitening, cholesky_whitening, zca_cor_whitening, WhiteningTransform,
    CONDITION_WARN_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "mcv",
    version,
    about = "Multivariate coefficients of variation and Gini-type dispersion indexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Population,
    Unbiased,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Convention {
        match c {
            ConventionArg::Population => Convention::Population,
            ConventionArg::Unbiased => Convention::Unbiased,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    #[value(name = "zca-cor")]
    ZcaCor,
    Cholesky,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute metrics from a CSV dataset or a moment-summary JSON
    Compute {
        /// CSV with a header row, or JSON {"mean", "cov", "convention"}
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated metric ids (default: all applicable)
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Moment convention for estimation from data
        #[arg(long, value_enum, default_value = "population")]
        convention: ConventionArg,
        /// Orders for the q-norm index (one report per value)
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Whiten a dataset, or print the whitening transform of a summary
    Whiten {
        #[arg(long)]
        input: PathBuf,
        /// Whitening construction
        #[arg(long, value_enum, default_value = "zca-cor")]
        kind: KindArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the property checks and print the verdict matrix
    Verify {
        /// Run the full matrix and compare against the expected verdicts
        #[arg(long)]
        all: bool,
        /// Restrict the printed matrix to these metrics
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Restrict the printed matrix to these properties
        #[arg(long, value_delimiter = ',')]
        properties: Vec<String>,
        /// Seed for randomized searches (falls back to MCV_DEFAULT_SEED,
        /// then to a built-in constant)
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a seeded experiment sweep
    Simulate {
        #[arg(long)]
        experiment: String,
        /// Seed (required: experiments must be reproducible)
        #[arg(long)]
        seed: u64,
        /// Sweep points (dimensions or horizons), strictly increasing
        #[arg(long, value_delimiter = ',')]
        points: Vec<usize>,
        /// Samples per cell (Gaussian) or particles (random walk)
        #[arg(long)]
        samples: Option<usize>,
        /// Comma-separated metric ids
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Uniform-mean sweep: reuse one master mean draw across dimensions
        #[arg(long)]
        nested_means: bool,
        /// Random walk: include the start position as the first column
        #[arg(long)]
        include_start: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Influence of a contamination point: closed form next to finite
    /// differences
    Influence {
        #[arg(long)]
        input: PathBuf,
        /// Contamination point, comma-separated (default: the column means)
        #[arg(long)]
        point: Option<String>,
        /// Contamination weight for the finite-difference probe
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::from(0),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error");
            ExitCode::from(2)
        }
    }
}

fn emit(mut text: String, output: Option<&Path>) -> Result<()> {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| McvError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            use std::io::Write;
            match std::io::stdout().write_all(text.as_bytes()) {
                Ok(()) => Ok(()),
                // A downstream reader such as `head` closing the pipe is
                // not an error worth reporting.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(McvError::Io(e.to_string())),
            }
        }
    }
}

fn parse_metrics(raw: &[String]) -> Result<Vec<MetricId>> {
    raw.iter().map(|s| MetricId::from_str(s)).collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Compute {
            input,
            metrics,
            convention,
            q,
            out,
        } => run_compute(&input, &metrics, convention.into(), &q, &out),
        Command::Whiten { input, kind, out } => run_whiten(&input, kind, &out),
        Command::Verify {
            all,
            metrics,
            properties,
            seed,
            out,
        } => run_verify(all, &metrics, &properties, seed, &out),
        Command::Simulate {
            experiment,
            seed,
            points,
            samples,
            metrics,
            nested_means,
            include_start,
            out,
        } => run_simulate(
            &experiment,
            seed,
            &points,
            samples,
            &metrics,
            nested_means,
            include_start,
            &out,
        ),
        Command::Influence {
            input,
            point,
            eps,
            out,
        } => run_influence(&input, point.as_deref(), eps, &out),
    }
}

/// Evaluates a moment-level metric directly on a summary.
fn evaluate_on_summary(id: MetricId, ms: &MomentSummary) -> Result<MetricReport> {
    match id {
        MetricId::GammaVn => gamma_vn(ms),
        MetricId::GammaR => gamma_reyment(ms),
        MetricId::GammaVv => gamma_vanvalen(ms),
        MetricId::GammaAz => gamma_az(ms),
        MetricId::G2 => g2(ms),
        MetricId::SqrtnGammaR => Ok(corrected_metrics(ms)?.0),
        MetricId::SqrtnGammaAz => Ok(corrected_metrics(ms)?.1),
        other => Err(McvError::InvalidInput(format!(
            "{other} needs observation-level data, not a moment summary"
        ))),
    }
}

fn default_metrics_for_data(n_vars: usize) -> Vec<MetricId> {
    if n_vars == 1 {
        MetricId::ALL.to_vec()
    } else {
        MetricId::ALL
            .iter()
            .copied()
            .filter(|id| !matches!(id, MetricId::Cv | MetricId::Gini))
            .collect()
    }
}

fn reports_csv(reports: &[MetricReport]) -> String {
    let mut text = String::from("metric_id,value,n,convention,q\n");
    for r in reports {
        let q = r.q.map_or(String::new(), |q| format!("{q}"));
        text.push_str(&format!(
            "{},{},{},{},{q}\n",
            r.metric_id, r.value, r.n, r.convention
        ));
    }
    text
}

fn reports_table(reports: &[MetricReport]) -> String {
    let mut text = format!(
        "{:<16} {:>22} {:>4}  {}\n",
        "metric", "value", "n", "convention"
    );
    for r in reports {
        let label = match r.q {
            Some(q) => format!("{} (q={q})", r.metric_id),
            None => r.metric_id.to_string(),
        };
        text.push_str(&format!(
            "{label:<16} {:>22.16} {:>4}  {}\n",
            r.value, r.n, r.convention
        ));
    }
    text
}

fn run_compute(
    input: &Path,
    metric_names: &[String],
    convention: Convention,
    q_values: &[f64],
    out: &OutputArgs,
) -> Result<()> {
    for &q in q_values {
        if !(q.is_finite() && q >= 1.0) {
            return Err(McvError::InvalidInput(format!(
                "q must be a finite number >= 1, got {q}"
            )));
        }
    }
    let qs: Vec<f64> = if q_values.is_empty() {
        vec![2.0]
    } else {
        q_values.to_vec()
    };
    let mut reports = Vec::new();
    match io::read_input(input)? {
        Input::Data(data) => {
            let ids = if metric_names.is_empty() {
                default_metrics_for_data(data.n_vars())
            } else {
                parse_metrics(metric_names)?
            };
            for id in ids {
                if id == MetricId::Gq {
                    for &q in &qs {
                        reports.push(evaluate(id, &data, convention, Some(q))?);
                    }
                } else {
                    reports.push(evaluate(id, &data, convention, None)?);
                }
            }
        }
        Input::Moments(ms) => {
            let ids = if metric_names.is_empty() {
                vec![
                    MetricId::GammaVn,
                    MetricId::GammaR,
                    MetricId::GammaVv,
                    MetricId::GammaAz,
                    MetricId::G2,
                    MetricId::SqrtnGammaR,
                    MetricId::SqrtnGammaAz,
                ]
            } else {
                parse_metrics(metric_names)?
            };
            for id in ids {
                reports.push(evaluate_on_summary(id, &ms)?);
            }
        }
    }
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&reports)
            .map_err(|e| McvError::Parse(format!("report serialization: {e}")))?,
        Format::Csv => reports_csv(&reports),
        Format::Table => reports_table(&reports),
    };
    emit(text, out.output.as_deref())
}

fn build_transform(kind: KindArg, ms: &MomentSummary) -> Result<WhiteningTransform> {
    let t = match kind {
        KindArg::ZcaCor => zca_cor_whitening(ms)?,
        KindArg::Cholesky => cholesky_whitening(ms)?,
    };
    if t.condition() > CONDITION_WARN_THRESHOLD {
        eprintln!(
            "warning: whitening condition ratio {:.3e} exceeds {CONDITION_WARN_THRESHOLD:.0e}; results may be unstable",
            t.condition()
        );
    }
    Ok(t)
}

fn matrix_rows(t: &WhiteningTransform) -> Vec<Vec<f64>> {
    (0..t.dim()).map(|i| t.matrix().row(i).to_vec()).collect()
}

fn run_whiten(input: &Path, kind: KindArg, out: &OutputArgs) -> Result<()> {
    match io::read_input(input)? {
        Input::Data(data) => {
            let ms = estimate_moments(&data, Convention::Population)?;
            let t = build_transform(kind, &ms)?;
            let white = apply_whitening(&t, &data)?;
            let text = match out.format.unwrap_or(Format::Csv) {
                Format::Csv | Format::Table => io::dataset_to_csv(&white),
                Format::Json => serde_json::json!({
                    "kind": t.kind().to_string(),
                    "condition": t.condition(),
                    "names": white.names(),
                    "rows": (0..white.n_obs()).map(|i| white.row(i).to_vec()).collect::<Vec<_>>(),
                })
                .to_string(),
            };
            emit(text, out.output.as_deref())
        }
        Input::Moments(ms) => {
            let t = build_transform(kind, &ms)?;
            let text = serde_json::json!({
                "kind": t.kind().to_string(),
                "condition": t.condition(),
                "matrix": matrix_rows(&t),
            })
            .to_string();
            emit(text, out.output.as_deref())
        }
    }
}

fn resolve_verify_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("MCV_DEFAULT_SEED") {
        Ok(raw) => raw.parse::<u64>().map_err(|_| {
            McvError::InvalidInput(format!(
                "MCV_DEFAULT_SEED must be an unsigned integer, got `{raw}`"
            ))
        }),
        Err(_) => Ok(properties::DEFAULT_SEED),
    }
}

fn verdict_letter(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "H",
        Verdict::Violated => "V",
        Verdict::Inconclusive => "I",
    }
}

fn suite_table(report: &SuiteReport, metrics: &[MetricId], props: &[PropertyId]) -> String {
    let mut text = format!("{:<16}", "metric");
    for p in props {
        text.push_str(&format!(" {:>20}", p.as_str()));
    }
    text.push('\n');
    for m in metrics {
        text.push_str(&format!("{:<16}", m.as_str()));
        for p in props {
            let letter = report
                .verdicts
                .iter()
                .find(|v| v.metric_id == *m && v.property_id == *p)
                .map_or("-", |v| verdict_letter(v.verdict));
            text.push_str(&format!(" {letter:>20}"));
        }
        text.push('\n');
    }
    text.push_str(&format!(
        "\nseed {}; H = holds, V = violated (witness recorded), I = inconclusive\n",
        report.seed
    ));
    if report.mismatches.is_empty() {
        text.push_str("0 mismatches against the expected matrix\n");
    } else {
        for m in &report.mismatches {
            text.push_str(&format!("MISMATCH: {m}\n"));
        }
    }
    text
}

fn run_verify(
    all: bool,
    metric_names: &[String],
    property_names: &[String],
    seed_flag: Option<u64>,
    out: &OutputArgs,
) -> Result<()> {
    let seed = resolve_verify_seed(seed_flag)?;
    let full = counterexample_suite(seed)?;
    let metrics: Vec<MetricId> = if all || metric_names.is_empty() {
        properties::matrix_metrics().to_vec()
    } else {
        parse_metrics(metric_names)?
    };
    let props: Vec<PropertyId> = if all || property_names.is_empty() {
        PropertyId::ALL.to_vec()
    } else {
        property_names
            .iter()
            .map(|s| PropertyId::from_str(s))
            .collect::<Result<Vec<_>>>()?
    };
    let filtered = SuiteReport {
        seed: full.seed,
        verdicts: full
            .verdicts
            .iter()
            .filter(|v| metrics.contains(&v.metric_id) && props.contains(&v.property_id))
            .cloned()
            .collect(),
        mismatches: full.mismatches.clone(),
    };
    let text = match out.format.unwrap_or(Format::Table) {
        Format::Table => suite_table(&filtered, &metrics, &props),
        Format::Json => serde_json::to_string_pretty(&filtered)
            .map_err(|e| McvError::Parse(format!("report serialization: {e}")))?,
        Format::Csv => {
            let mut text = String::from("metric_id,property_id,verdict\n");
            for v in &filtered.verdicts {
                text.push_str(&format!(
                    "{},{},{}\n",
                    v.metric_id, v.property_id, v.verdict
                ));
            }
            text
        }
    };
    emit(text, out.output.as_deref())?;
    if all && !full.mismatches.is_empty() {
        return Err(McvError::InvalidInput(format!(
            "verdict matrix has {} mismatches",
            full.mismatches.len()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    experiment: &str,
    seed: u64,
    points: &[usize],
    samples: Option<usize>,
    metric_names: &[String],
    nested_means: bool,
    include_start: bool,
    out: &OutputArgs,
) -> Result<()> {
    let experiment = Experiment::from_str(experiment)?;
    let mut config = ExperimentConfig::new(experiment, seed);
    if !points.is_empty() {
        config.points = points.to_vec();
    }
    if let Some(samples) = samples {
        config.sample_count = samples;
    }
    if !metric_names.is_empty() {
        config.metrics = parse_metrics(metric_names)?;
    }
    config.nested_means = nested_means;
    config.include_start = include_start;
    let result = simulate(&config)?;
    let text = match out.format.unwrap_or(Format::Csv) {
        Format::Csv | Format::Table => io::experiment_result_csv(&result),
        Format::Json => serde_json::to_string_pretty(&result)
            .map_err(|e| McvError::Parse(format!("result serialization: {e}")))?,
    };
    emit(text, out.output.as_deref())
}

fn parse_point(raw: &str, expected: usize) -> Result<Vec<f64>> {
    let point: Vec<f64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| McvError::Parse(format!("point component `{s}` is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if point.len() != expected {
        return Err(McvError::DimensionMismatch {
            expected,
            got: point.len(),
        });
    }
    Ok(point)
}

fn run_influence(input: &Path, point: Option<&str>, eps: f64, out: &OutputArgs) -> Result<()> {
    let data = match io::read_input(input)? {
        Input::Data(data) => data,
        Input::Moments(_) => {
            return Err(McvError::InvalidInput(
                "influence needs observation-level data: the finite-difference probe \
                 reweights observations"
                    .into(),
            ))
        }
    };
    let ms = estimate_moments(&data, Convention::Population)?;
    let x = match point {
        Some(raw) => parse_point(raw, data.n_vars())?,
        None => ms.mean().to_vec(),
    };
    let formula = influence_g2(&x, &ms)?;
    let fd = influence_fd(&x, &data, eps)?;
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::json!({
            "point": x,
            "eps": fd.eps,
            "formula": formula,
            "fd_at_eps": fd.at_eps,
            "fd_at_half_eps": fd.at_half_eps,
            "convergence_gap": fd.convergence_gap(),
        })
        .to_string(),
        Format::Csv => format!(
            "source,value\nformula,{formula}\nfd_eps,{}\nfd_half_eps,{}\n",
            fd.at_eps, fd.at_half_eps
        ),
        Format::Table => format!(
            "point            {x:?}\nformula          {formula:.12}\nfd (eps={})     {:.12}\nfd (eps={})    {:.12}\ngap              {:.3e}\n",
            fd.eps,
            fd.at_eps,
            fd.eps / 2.0,
            fd.at_half_eps,
            fd.convergence_gap()
        ),
    };
    emit(text, out.output.as_deref())
}
