//! Command-line front end for the trial bounds library.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 incompatible
//! bounds (lower above upper), 4 failed oracle verification.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use trialbounds::estimation::{bootstrap_ci, DEFAULT_LEVEL, DEFAULT_REPLICATES};
use trialbounds::oracle::{verify, ModelFigure, VerifyReport};
use trialbounds::records::read_records_csv;
use trialbounds::simulation::{self, Experiment, ExperimentConfig};
use trialbounds::{
    bounds, BootstrapResult, BoundsResult, Estimand, Figure, ObservedTable, ScenarioTag,
};

#[derive(Parser, Debug)]
#[command(
    name = "trialbounds",
    version,
    about = "Bounds on causal risk differences in trials with missing outcomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate closed-form bounds on a probability table.
    Bounds {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// JSON probability table.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Estimate bounds from trial records with bootstrap intervals.
    Estimate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// CSV of trial records with columns r, x, y, o.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a simulation experiment.
    Simulate {
        #[arg(long)]
        experiment: Experiment,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n_distributions: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
        /// Generating figures, comma separated (1a..2e).
        #[arg(long = "figure", value_delimiter = ',')]
        figures: Vec<ModelFigure>,
        /// Trial sizes for the coverage study, comma separated.
        #[arg(long, value_delimiter = ',')]
        trial_sizes: Vec<usize>,
        /// Target effects for the coverage study, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thetas: Vec<f64>,
        /// Grid of g1 values for the missingness curve, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma1_grid: Vec<f64>,
        /// Also write the JSON summary here (with `--format csv`).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare closed-form bounds with the linear-programming oracle and
    /// the true effects of sampled models.
    Verify {
        /// 1a, 1b, 1c, 2a, 2b, 2c, 2d, 2e, or 2cde for all of 2c-2e.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        no_defiers: bool,
        #[arg(long, default_value_t = 500)]
        n_distributions: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// bw, 1a, 1b, 1c, 2a, 2b or 2cde.
    #[arg(long)]
    figure: Figure,
    #[arg(long)]
    no_defiers: bool,
    #[arg(long, default_value = "theta")]
    estimand: Estimand,
}

impl ScenarioArgs {
    fn tag(&self) -> trialbounds::Result<ScenarioTag> {
        ScenarioTag::new(self.figure, self.no_defiers, self.estimand)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Serialize, Debug)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    seed: Option<u64>,
    scenario: String,
    input_sha256: String,
}

impl Provenance {
    fn new(seed: Option<u64>, scenario: String, input: &[u8]) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            scenario,
            input_sha256: hex::encode(Sha256::digest(input)),
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# tool={} version={} seed={} scenario={} input_sha256={}\n",
            self.tool,
            self.version,
            self.seed.map_or("none".to_string(), |s| s.to_string()),
            self.scenario,
            self.input_sha256
        )
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: T,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Incompatible,
    Verification,
}

impl From<trialbounds::Error> for Failure {
    fn from(e: trialbounds::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Invalid(format!("{}: {e}", path.display()))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn emit(out: &OutputArgs, body: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, body).map_err(|e| io_err(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Invalid(format!("stdout: {e}")))
        }
    }
}

fn json<T: Serialize>(provenance: &Provenance, result: T) -> String {
    let mut s =
        serde_json::to_string_pretty(&Envelope { provenance, result }).expect("outputs serialize");
    s.push('\n');
    s
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn diagnostics_field(b: &BoundsResult) -> String {
    b.diagnostics
        .iter()
        .map(|d| serde_json::to_value(d).expect("diagnostics serialize"))
        .filter_map(|v| v.as_str().map(str::to_string))
        .collect::<Vec<_>>()
        .join(";")
}

fn report_incompatible(b: &BoundsResult) -> Result<(), Failure> {
    if b.is_incompatible() {
        eprintln!(
            "incompatible bounds for {}: lower {} exceeds upper {} (diagnostics: {})",
            b.scenario,
            b.lower,
            b.upper,
            diagnostics_field(b)
        );
        return Err(Failure::Incompatible);
    }
    Ok(())
}

fn run_bounds(scenario: &ScenarioArgs, input: &Path, out: &OutputArgs) -> Result<(), Failure> {
    let tag = scenario.tag()?;
    let raw = read_input(input)?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| Failure::Invalid(format!("{}: not UTF-8", input.display())))?;
    let table = ObservedTable::from_json_str(&text)?;
    let b = bounds(tag, &table)?;
    let prov = Provenance::new(None, tag.to_string(), &raw);
    let body = match out.format {
        Format::Json => json(&prov, &b),
        Format::Csv => {
            let mut s = prov.csv_header();
            s.push_str("scenario,estimand,no_defiers,lower,upper,lower_term_index,upper_term_index,diagnostics\n");
            s.push_str(&csv_line(&[
                tag.figure.to_string(),
                tag.estimand.to_string(),
                tag.no_defiers.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
                b.lower_term_index.to_string(),
                b.upper_term_index.to_string(),
                diagnostics_field(&b),
            ]));
            s
        }
    };
    emit(out, &body)?;
    report_incompatible(&b)
}

/// One row of an estimate table: each bound with its interval.
#[derive(Serialize)]
struct EstimateRow<'a> {
    scenario: Figure,
    estimand: Estimand,
    no_defiers: bool,
    lower: f64,
    lower_ci: [f64; 2],
    upper: f64,
    upper_ci: [f64; 2],
    outer_interval: [f64; 2],
    level: f64,
    replicates: usize,
    redraws: usize,
    point: &'a BoundsResult,
}

impl<'a> EstimateRow<'a> {
    fn new(tag: ScenarioTag, r: &'a BootstrapResult) -> Self {
        EstimateRow {
            scenario: tag.figure,
            estimand: tag.estimand,
            no_defiers: tag.no_defiers,
            lower: r.point.lower,
            lower_ci: [r.ci_lower_of_lower, r.ci_upper_of_lower],
            upper: r.point.upper,
            upper_ci: [r.ci_lower_of_upper, r.ci_upper_of_upper],
            outer_interval: [r.outer_interval.0, r.outer_interval.1],
            level: r.level,
            replicates: r.replicates,
            redraws: r.redraws,
            point: &r.point,
        }
    }
}

fn run_estimate(
    scenario: &ScenarioArgs,
    input: &Path,
    replicates: usize,
    level: f64,
    seed: u64,
    out: &OutputArgs,
) -> Result<(), Failure> {
    let tag = scenario.tag()?;
    let raw = read_input(input)?;
    let records = read_records_csv(raw.as_slice())?;
    let r = bootstrap_ci(&records, tag, replicates, level, seed)?;
    let prov = Provenance::new(Some(seed), tag.to_string(), &raw);
    let body = match out.format {
        Format::Json => json(&prov, EstimateRow::new(tag, &r)),
        Format::Csv => {
            let mut s = prov.csv_header();
            s.push_str("scenario,estimand,no_defiers,lower,lower_ci_low,lower_ci_high,upper,upper_ci_low,upper_ci_high,outer_low,outer_high,level,replicates,redraws\n");
            s.push_str(&csv_line(&[
                tag.figure.to_string(),
                tag.estimand.to_string(),
                tag.no_defiers.to_string(),
                r.point.lower.to_string(),
                r.ci_lower_of_lower.to_string(),
                r.ci_upper_of_lower.to_string(),
                r.point.upper.to_string(),
                r.ci_lower_of_upper.to_string(),
                r.ci_upper_of_upper.to_string(),
                r.outer_interval.0.to_string(),
                r.outer_interval.1.to_string(),
                r.level.to_string(),
                r.replicates.to_string(),
                r.redraws.to_string(),
            ]));
            s
        }
    };
    emit(out, &body)?;
    report_incompatible(&r.point)
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    experiment: Experiment,
    seed: u64,
    n_distributions: Option<usize>,
    replicates: Option<usize>,
    level: Option<f64>,
    figures: Vec<ModelFigure>,
    trial_sizes: Vec<usize>,
    thetas: Vec<f64>,
    gamma1_grid: Vec<f64>,
    summary: Option<PathBuf>,
    out: &OutputArgs,
) -> Result<(), Failure> {
    let mut config = ExperimentConfig::new(experiment, seed);
    if let Some(n) = n_distributions {
        config.n_distributions = n;
    }
    if let Some(b) = replicates {
        config.replicates = b;
    }
    if let Some(l) = level {
        config.level = l;
    }
    if !figures.is_empty() {
        config.scenarios = figures;
    }
    if !trial_sizes.is_empty() {
        config.trial_sizes = trial_sizes;
    }
    if !thetas.is_empty() {
        config.coverage.thetas = thetas;
    }
    if !gamma1_grid.is_empty() {
        config.curve.gamma1_grid = gamma1_grid;
    }
    let config_json = serde_json::to_vec(&config).expect("config serializes");
    let result = simulation::run(&config)?;
    let prov = Provenance::new(Some(seed), experiment.to_string(), &config_json);
    let summary_json = json(&prov, result.summary());
    if let Some(path) = &summary {
        fs::write(path, &summary_json).map_err(|e| io_err(path, e))?;
    }
    let body = match out.format {
        Format::Json => summary_json,
        Format::Csv => {
            let mut buf = prov.csv_header().into_bytes();
            simulation::write_rows_csv(&result.rows(), &mut buf)?;
            String::from_utf8(buf).expect("csv output is UTF-8")
        }
    };
    emit(out, &body)
}

#[derive(Serialize)]
struct VerifyOutput {
    passed: bool,
    reports: Vec<VerifyReport>,
}

fn run_verify(
    figure: &str,
    no_defiers: bool,
    n: usize,
    seed: u64,
    out: &OutputArgs,
) -> Result<(), Failure> {
    let figures = if figure.eq_ignore_ascii_case("2cde") {
        vec![ModelFigure::F2c, ModelFigure::F2d, ModelFigure::F2e]
    } else {
        vec![figure.parse::<ModelFigure>()?]
    };
    if no_defiers && figures.iter().any(|f| !f.is_noncompliance()) {
        return Err(Failure::Invalid(
            "--no-defiers requires a noncompliance figure".into(),
        ));
    }
    if n == 0 {
        return Err(Failure::Invalid(
            "--n-distributions must be positive".into(),
        ));
    }
    let reports = figures
        .iter()
        .map(|&f| verify(f, no_defiers, n, seed))
        .collect::<trialbounds::Result<Vec<_>>>()?;
    let passed = reports.iter().all(VerifyReport::passed);
    let scenario = if no_defiers {
        format!("{figure}-nodefiers")
    } else {
        figure.to_string()
    };
    let input = format!("figure={figure} no_defiers={no_defiers} n={n}");
    let prov = Provenance::new(Some(seed), scenario, input.as_bytes());
    let body = match out.format {
        Format::Json => json(
            &prov,
            VerifyOutput {
                passed,
                reports: reports.clone(),
            },
        ),
        Format::Csv => {
            let mut s = prov.csv_header();
            s.push_str("figure,no_defiers,n_tables,max_abs_gap_lower,max_abs_gap_upper,n_validity_violations,passed\n");
            let gap = |g: Option<f64>| g.map_or(String::new(), |g| g.to_string());
            for r in &reports {
                s.push_str(&csv_line(&[
                    r.figure.to_string(),
                    r.no_defiers.to_string(),
                    r.n_tables.to_string(),
                    gap(r.max_abs_gap_lower),
                    gap(r.max_abs_gap_upper),
                    r.n_validity_violations.to_string(),
                    r.passed().to_string(),
                ]));
            }
            s
        }
    };
    emit(out, &body)?;
    if !passed {
        eprintln!("verification failed");
        return Err(Failure::Verification);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bounds {
            scenario,
            input,
            out,
        } => run_bounds(&scenario, &input, &out),
        Command::Estimate {
            scenario,
            input,
            replicates,
            level,
            seed,
            out,
        } => run_estimate(&scenario, &input, replicates, level, seed, &out),
        Command::Simulate {
            experiment,
            seed,
            n_distributions,
            replicates,
            level,
            figures,
            trial_sizes,
            thetas,
            gamma1_grid,
            summary,
            out,
        } => run_simulate(
            experiment,
            seed,
            n_distributions,
            replicates,
            level,
            figures,
            trial_sizes,
            thetas,
            gamma1_grid,
            summary,
            &out,
        ),
        Command::Verify {
            figure,
            no_defiers,
            n_distributions,
            seed,
            out,
        } => run_verify(&figure, no_defiers, n_distributions, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Incompatible) => ExitCode::from(3),
        Err(Failure::Verification) => ExitCode::from(4),
    }
}
