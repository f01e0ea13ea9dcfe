//! Simulation experiments comparing the bounds across diagrams.
//!
//! Every experiment draws its distributions from the logistic coefficient
//! models of [`crate::oracle::model`]. Draw `i` of generating figure `f`
//! uses its own random stream, so results depend only on the configuration
//! and the seed. Outputs are long-format rows for plotting plus a typed
//! summary.

mod coverage;
mod curve;
mod width;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{
    observed_from_model, sample_structural_model, ModelFigure, ModelOutcome, NormalQuadrature,
    StructuralModel,
};

pub use coverage::{calibrate, experiment_coverage, Calibration, CoverageCell, CoverageResult};
pub use curve::{experiment_missingness_curve, CurvePoint, CurveResult};
pub use width::{
    experiment_nodefiers_compare, experiment_relative_width, experiment_validity_width,
    FamilyStats, NodefiersResult, NodefiersStats, WidthResult,
};

/// Distributions with an observed cell below this are redrawn in width
/// experiments.
pub const MIN_CELL: f64 = 1e-6;
/// Draw attempts per distribution before giving up on the cell filter.
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    RelativeWidth,
    ValidityWidth,
    NodefiersCompare,
    MissingnessCurve,
    Coverage,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::RelativeWidth,
        Experiment::ValidityWidth,
        Experiment::NodefiersCompare,
        Experiment::MissingnessCurve,
        Experiment::Coverage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::RelativeWidth => "relative_width",
            Experiment::ValidityWidth => "validity_width",
            Experiment::NodefiersCompare => "nodefiers_compare",
            Experiment::MissingnessCurve => "missingness_curve",
            Experiment::Coverage => "coverage",
        }
    }

    /// Generating figures used when the configuration does not name any.
    pub fn default_scenarios(self) -> Vec<ModelFigure> {
        use ModelFigure::*;
        match self {
            Experiment::RelativeWidth => vec![F1a, F1b, F1c],
            Experiment::ValidityWidth | Experiment::NodefiersCompare => {
                vec![F2a, F2b, F2c, F2d, F2e]
            }
            Experiment::MissingnessCurve => vec![F1a, F1b, F1c, F2a, F2b, F2c],
            Experiment::Coverage => vec![F1a, F1b, F1c, F2e],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

/// Settings of the missingness curve: fixed `b3` and `g2`, and the grid of
/// `g1` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveConfig {
    pub beta3: f64,
    pub gamma2: f64,
    pub gamma1_grid: Vec<f64>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            beta3: 1.0,
            gamma2: 1.0,
            gamma1_grid: (0..10).map(|k| k as f64).collect(),
        }
    }
}

/// Settings of the coverage study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageConfig {
    pub thetas: Vec<f64>,
    pub missing: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            thetas: vec![-0.2, -0.1, 0.0],
            missing: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Distributions per generating figure, grid point, or coverage cell
    /// (Monte Carlo trials).
    pub n_distributions: usize,
    pub trial_sizes: Vec<usize>,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub scenarios: Vec<ModelFigure>,
    pub curve: CurveConfig,
    pub coverage: CoverageConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            n_distributions: 1000,
            trial_sizes: vec![200, 2000],
            replicates: crate::estimation::DEFAULT_REPLICATES,
            level: crate::estimation::DEFAULT_LEVEL,
            seed,
            scenarios: experiment.default_scenarios(),
            curve: CurveConfig::default(),
            coverage: CoverageConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_distributions == 0 {
            return bad("n_distributions must be positive".into());
        }
        if self.scenarios.is_empty() {
            return bad("scenario set is empty".into());
        }
        let allowed: fn(ModelFigure) -> bool = match self.experiment {
            Experiment::RelativeWidth => |f| !f.is_noncompliance(),
            Experiment::ValidityWidth | Experiment::NodefiersCompare => |f| f.is_noncompliance(),
            Experiment::MissingnessCurve => |_| true,
            Experiment::Coverage => |f| f != ModelFigure::F2a && f != ModelFigure::F2b,
        };
        if let Some(f) = self.scenarios.iter().find(|f| !allowed(**f)) {
            return bad(format!(
                "figure {f} is not supported by {}",
                self.experiment
            ));
        }
        match self.experiment {
            Experiment::MissingnessCurve if self.curve.gamma1_grid.is_empty() => {
                bad("gamma1 grid is empty".into())
            }
            Experiment::Coverage => {
                if self.trial_sizes.is_empty() || self.trial_sizes.contains(&0) {
                    return bad("trial sizes must be nonempty and positive".into());
                }
                if self.coverage.thetas.is_empty() {
                    return bad("theta grid is empty".into());
                }
                if !(self.coverage.missing > 0.0 && self.coverage.missing < 1.0) {
                    return bad("missingness must lie in (0, 1)".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// One long-format output record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: &'static str,
    pub scenario: String,
    pub draw: usize,
    pub statistic: String,
    pub value: f64,
}

/// Typed result of any experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentOutput {
    RelativeWidth(WidthResult),
    ValidityWidth(WidthResult),
    NodefiersCompare(NodefiersResult),
    MissingnessCurve(CurveResult),
    Coverage(CoverageResult),
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<Row> {
        match self {
            ExperimentOutput::RelativeWidth(r) => r.rows(Experiment::RelativeWidth),
            ExperimentOutput::ValidityWidth(r) => r.rows(Experiment::ValidityWidth),
            ExperimentOutput::NodefiersCompare(r) => r.rows(),
            ExperimentOutput::MissingnessCurve(r) => r.rows(),
            ExperimentOutput::Coverage(r) => r.rows(),
        }
    }

    /// The result without per-draw detail, for JSON summaries.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("experiment output serializes")
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::RelativeWidth => {
            ExperimentOutput::RelativeWidth(experiment_relative_width(config)?)
        }
        Experiment::ValidityWidth => {
            ExperimentOutput::ValidityWidth(experiment_validity_width(config)?)
        }
        Experiment::NodefiersCompare => {
            ExperimentOutput::NodefiersCompare(experiment_nodefiers_compare(config)?)
        }
        Experiment::MissingnessCurve => {
            ExperimentOutput::MissingnessCurve(experiment_missingness_curve(config)?)
        }
        Experiment::Coverage => ExperimentOutput::Coverage(experiment_coverage(config)?),
    })
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[Row], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Stream index of draw `i` for generating figure `figure` within block
/// `block`; distinct for every combination.
pub(crate) fn stream(figure: ModelFigure, block: u64, i: usize) -> u64 {
    let f = ModelFigure::ALL
        .iter()
        .position(|g| *g == figure)
        .expect("known figure") as u64;
    (f << 56) | (block << 32) | i as u64
}

/// Samples coefficient models until every observed cell is at least
/// [`MIN_CELL`]. Returns the outcome, the coefficients and the number of
/// rejected draws.
pub(crate) fn draw_filtered<R: Rng + ?Sized>(
    figure: ModelFigure,
    no_defiers: bool,
    quad: &NormalQuadrature,
    rng: &mut R,
) -> Result<(ModelOutcome, usize)> {
    for rejected in 0..MAX_REDRAWS {
        let c = sample_structural_model(figure, no_defiers, rng);
        let out = observed_from_model(&StructuralModel::Coefficients(c), quad);
        if out.table.min_observed_cell() >= MIN_CELL {
            return Ok((out, rejected));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no {figure} distribution passed the cell filter in {MAX_REDRAWS} draws"
    )))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut num = 0.0;
    let (mut da, mut db) = (0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da * db).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut end = k + 1;
        while end < idx.len() && v[idx[end]] == v[idx[k]] {
            end += 1;
        }
        let rank = (k + end + 1) as f64 / 2.0;
        for &i in &idx[k..end] {
            out[i] = rank;
        }
        k = end;
    }
    out
}

pub(crate) fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub(crate) fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
