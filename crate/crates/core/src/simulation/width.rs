//! Width and validity of the bounds on true observable laws.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{draw_filtered, flag, mean, stream, Experiment, ExperimentConfig, Row};
use crate::bounds::bounds;
use crate::error::Result;
use crate::oracle::{ModelFigure, NormalQuadrature, VALIDITY_SLACK};
use crate::rng::task_rng;
use crate::scenario::{Figure, ScenarioTag};

/// Strict-narrowing margin in the no-defiers comparison.
pub const NARROWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyStats {
    pub generation: ModelFigure,
    pub bounds: String,
    pub n: usize,
    pub mean_width: f64,
    /// Width minus the best/worst width.
    pub mean_width_diff: f64,
    pub min_width_diff: f64,
    pub max_width_diff: f64,
    /// Draws whose true `theta` lies outside the bounds.
    pub n_invalid: usize,
    pub invalid_fraction: f64,
    pub n_incompatible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthDraw {
    pub generation: ModelFigure,
    pub index: usize,
    pub theta: f64,
    /// `(lower, upper)` per family, in the order of `WidthResult::families`.
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthResult {
    pub families: Vec<String>,
    pub stats: Vec<FamilyStats>,
    /// Draws rejected by the cell filter, per generating figure.
    pub resampled: BTreeMap<String, usize>,
    /// Invalid draws for the bounds matching the generating figure.
    pub matched_violations: usize,
    #[serde(skip)]
    pub draws: Vec<WidthDraw>,
}

impl WidthResult {
    pub fn stat(&self, generation: ModelFigure, family: &str) -> Option<&FamilyStats> {
        self.stats
            .iter()
            .find(|s| s.generation == generation && s.bounds == family)
    }

    pub fn rows(&self, experiment: Experiment) -> Vec<Row> {
        let mut rows = Vec::new();
        for d in &self.draws {
            rows.push(Row {
                experiment: experiment.as_str(),
                scenario: d.generation.to_string(),
                draw: d.index,
                statistic: "theta".into(),
                value: d.theta,
            });
            let bw_width = d.intervals[0].1 - d.intervals[0].0;
            for (family, &(lo, hi)) in self.families.iter().zip(&d.intervals) {
                let scenario = format!("{}:{family}", d.generation);
                let mut push = |statistic: &str, value: f64| {
                    rows.push(Row {
                        experiment: experiment.as_str(),
                        scenario: scenario.clone(),
                        draw: d.index,
                        statistic: statistic.into(),
                        value,
                    })
                };
                push("lower", lo);
                push("upper", hi);
                push("width", hi - lo);
                if experiment == Experiment::RelativeWidth {
                    push("width_diff", hi - lo - bw_width);
                }
                push("valid", flag(covers(lo, hi, d.theta)));
            }
        }
        rows
    }
}

fn covers(lo: f64, hi: f64, v: f64) -> bool {
    v >= lo - VALIDITY_SLACK && v <= hi + VALIDITY_SLACK
}

/// Bound families evaluated on every draw; the first is the best/worst
/// interval, against which widths are compared.
fn families(experiment: Experiment) -> Vec<(String, ScenarioTag)> {
    let tags = match experiment {
        Experiment::RelativeWidth => vec![
            ScenarioTag::theta(Figure::BestWorst),
            ScenarioTag::theta(Figure::F1a),
            ScenarioTag::theta(Figure::F1b),
            ScenarioTag::theta(Figure::F1c),
        ],
        _ => vec![
            ScenarioTag::tau(Figure::BestWorst),
            ScenarioTag::theta(Figure::F2a),
            ScenarioTag::theta(Figure::F2b),
            ScenarioTag::theta(Figure::F2cde),
        ],
    };
    tags.into_iter()
        .map(|t| (t.figure.to_string(), t))
        .collect()
}

fn width_experiment(config: &ExperimentConfig, experiment: Experiment) -> Result<WidthResult> {
    config.validate()?;
    let fams = families(experiment);
    let quad = NormalQuadrature::default();
    let mut draws = Vec::new();
    let mut resampled = BTreeMap::new();
    for &generation in &config.scenarios {
        let per: Vec<(WidthDraw, usize)> = (0..config.n_distributions)
            .into_par_iter()
            .map(|i| {
                let mut rng = task_rng(config.seed, stream(generation, 0, i));
                let (out, rejected) = draw_filtered(generation, false, &quad, &mut rng)?;
                let intervals = fams
                    .iter()
                    .map(|(_, tag)| bounds(*tag, &out.table).map(|b| (b.lower, b.upper)))
                    .collect::<Result<_>>()?;
                let draw = WidthDraw {
                    generation,
                    index: i,
                    theta: out.theta,
                    intervals,
                };
                Ok((draw, rejected))
            })
            .collect::<Result<_>>()?;
        resampled.insert(
            generation.to_string(),
            per.iter().map(|p| p.1).sum::<usize>(),
        );
        draws.extend(per.into_iter().map(|p| p.0));
    }

    let mut stats = Vec::new();
    let mut matched_violations = 0;
    for &generation in &config.scenarios {
        let mine: Vec<&WidthDraw> = draws
            .iter()
            .filter(|d| d.generation == generation)
            .collect();
        for (k, (name, _)) in fams.iter().enumerate() {
            let widths: Vec<f64> = mine
                .iter()
                .map(|d| d.intervals[k].1 - d.intervals[k].0)
                .collect();
            let diffs: Vec<f64> = mine
                .iter()
                .zip(&widths)
                .map(|(d, w)| w - (d.intervals[0].1 - d.intervals[0].0))
                .collect();
            let n_invalid = mine
                .iter()
                .filter(|d| !covers(d.intervals[k].0, d.intervals[k].1, d.theta))
                .count();
            if generation.bound_figure().as_str() == name {
                matched_violations += n_invalid;
            }
            stats.push(FamilyStats {
                generation,
                bounds: name.clone(),
                n: mine.len(),
                mean_width: mean(widths.iter().copied()),
                mean_width_diff: mean(diffs.iter().copied()),
                min_width_diff: diffs.iter().copied().fold(f64::INFINITY, f64::min),
                max_width_diff: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                n_invalid,
                invalid_fraction: n_invalid as f64 / mine.len() as f64,
                n_incompatible: widths.iter().filter(|w| **w < 0.0).count(),
            });
        }
    }
    Ok(WidthResult {
        families: fams.into_iter().map(|f| f.0).collect(),
        stats,
        resampled,
        matched_violations,
        draws,
    })
}

/// Perfect-compliance generation; every Figure-1 family and best/worst
/// evaluated on each law.
pub fn experiment_relative_width(config: &ExperimentConfig) -> Result<WidthResult> {
    width_experiment(config, Experiment::RelativeWidth)
}

/// Noncompliance generation; best/worst (targeting the assignment effect)
/// and the `theta` bounds of 2a, 2b and 2c-2e evaluated on each law.
pub fn experiment_validity_width(config: &ExperimentConfig) -> Result<WidthResult> {
    width_experiment(config, Experiment::ValidityWidth)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodefiersStats {
    pub generation: ModelFigure,
    pub bounds: Figure,
    pub n: usize,
    /// Draws where the no-defiers interval is strictly narrower.
    pub n_narrower: usize,
    pub fraction_narrower: f64,
    pub mean_general_width: f64,
    pub mean_nodefiers_width: f64,
    pub n_general_invalid: usize,
    pub n_nodefiers_invalid: usize,
    /// Draws where the no-defiers interval is not inside the general one.
    pub n_not_subset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodefiersDraw {
    pub generation: ModelFigure,
    pub index: usize,
    pub theta: f64,
    pub general: (f64, f64),
    pub nodefiers: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodefiersResult {
    pub stats: Vec<NodefiersStats>,
    pub resampled: BTreeMap<String, usize>,
    #[serde(skip)]
    pub draws: Vec<NodefiersDraw>,
}

impl NodefiersResult {
    pub fn stat(&self, generation: ModelFigure) -> Option<&NodefiersStats> {
        self.stats.iter().find(|s| s.generation == generation)
    }

    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for d in &self.draws {
            let scenario = d.generation.to_string();
            let mut push = |statistic: &str, value: f64| {
                rows.push(Row {
                    experiment: Experiment::NodefiersCompare.as_str(),
                    scenario: scenario.clone(),
                    draw: d.index,
                    statistic: statistic.into(),
                    value,
                })
            };
            push("theta", d.theta);
            push("general_lower", d.general.0);
            push("general_upper", d.general.1);
            push("nodefiers_lower", d.nodefiers.0);
            push("nodefiers_upper", d.nodefiers.1);
            push("narrower", flag(narrower(d)));
        }
        rows
    }
}

fn narrower(d: &NodefiersDraw) -> bool {
    d.nodefiers.1 - d.nodefiers.0 < d.general.1 - d.general.0 - NARROWER_TOL
}

/// Generation with `a3 > 0` (no defiers); compares the no-defiers bounds of
/// the matching figure with its general bounds.
pub fn experiment_nodefiers_compare(config: &ExperimentConfig) -> Result<NodefiersResult> {
    config.validate()?;
    let quad = NormalQuadrature::default();
    let mut stats = Vec::new();
    let mut draws = Vec::new();
    let mut resampled = BTreeMap::new();
    for &generation in &config.scenarios {
        let figure = generation.bound_figure();
        let general_tag = ScenarioTag::theta(figure);
        let nd_tag = ScenarioTag::theta_no_defiers(figure);
        let per: Vec<(NodefiersDraw, usize)> = (0..config.n_distributions)
            .into_par_iter()
            .map(|i| {
                let mut rng = task_rng(config.seed, stream(generation, 1, i));
                let (out, rejected) = draw_filtered(generation, true, &quad, &mut rng)?;
                let g = bounds(general_tag, &out.table)?;
                let nd = bounds(nd_tag, &out.table)?;
                let draw = NodefiersDraw {
                    generation,
                    index: i,
                    theta: out.theta,
                    general: (g.lower, g.upper),
                    nodefiers: (nd.lower, nd.upper),
                };
                Ok((draw, rejected))
            })
            .collect::<Result<_>>()?;
        resampled.insert(
            generation.to_string(),
            per.iter().map(|p| p.1).sum::<usize>(),
        );
        let mine: Vec<NodefiersDraw> = per.into_iter().map(|p| p.0).collect();
        let n = mine.len();
        let n_narrower = mine.iter().filter(|d| narrower(d)).count();
        stats.push(NodefiersStats {
            generation,
            bounds: figure,
            n,
            n_narrower,
            fraction_narrower: n_narrower as f64 / n as f64,
            mean_general_width: mean(mine.iter().map(|d| d.general.1 - d.general.0)),
            mean_nodefiers_width: mean(mine.iter().map(|d| d.nodefiers.1 - d.nodefiers.0)),
            n_general_invalid: mine
                .iter()
                .filter(|d| !covers(d.general.0, d.general.1, d.theta))
                .count(),
            n_nodefiers_invalid: mine
                .iter()
                .filter(|d| !covers(d.nodefiers.0, d.nodefiers.1, d.theta))
                .count(),
            n_not_subset: mine
                .iter()
                .filter(|d| {
                    d.nodefiers.0 < d.general.0 - NARROWER_TOL
                        || d.nodefiers.1 > d.general.1 + NARROWER_TOL
                })
                .count(),
        });
        draws.extend(mine);
    }
    Ok(NodefiersResult {
        stats,
        resampled,
        draws,
    })
}
