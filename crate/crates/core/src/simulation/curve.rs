//! Bound width as a function of the proportion of missing outcomes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{mean, spearman, stream, CurveConfig, Experiment, ExperimentConfig, Row, MIN_CELL};
use crate::bounds::bounds;
use crate::error::{Error, Result};
use crate::oracle::{
    observed_from_model, sample_structural_model, ModelFigure, NormalQuadrature, StructuralModel,
};
use crate::rng::task_rng;
use crate::scenario::ScenarioTag;

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub scenario: ModelFigure,
    pub grid_index: usize,
    pub gamma1: f64,
    pub n: usize,
    pub mean_observed: f64,
    pub mean_missing: f64,
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveResult {
    pub curve: CurveConfig,
    pub points: Vec<CurvePoint>,
    /// Rank correlation of mean missingness and mean width per scenario.
    pub spearman: BTreeMap<String, f64>,
    pub resampled: BTreeMap<String, usize>,
    /// `(scenario, draw, grid index, proportion observed, width)`.
    #[serde(skip)]
    pub draws: Vec<(ModelFigure, usize, usize, f64, f64)>,
}

impl CurveResult {
    pub fn curve_for(&self, scenario: ModelFigure) -> Vec<&CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.scenario == scenario)
            .collect()
    }

    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for &(scenario, draw, k, observed, width) in &self.draws {
            let label = format!("{scenario}:gamma1={}", self.curve.gamma1_grid[k]);
            for (statistic, value) in [("p_obs", observed), ("width", width)] {
                rows.push(Row {
                    experiment: Experiment::MissingnessCurve.as_str(),
                    scenario: label.clone(),
                    draw,
                    statistic: statistic.into(),
                    value,
                });
            }
        }
        rows
    }
}

/// Fixes `b3` and `g2` and sweeps `g1` over the grid. Each draw keeps its
/// other coefficients across the whole grid, so the curves are built from
/// common random numbers. A draw is rejected if any grid point has an
/// observed cell below the filter threshold.
pub fn experiment_missingness_curve(config: &ExperimentConfig) -> Result<CurveResult> {
    config.validate()?;
    let quad = NormalQuadrature::default();
    let grid = &config.curve.gamma1_grid;
    let mut points = Vec::new();
    let mut draws = Vec::new();
    let mut rho = BTreeMap::new();
    let mut resampled = BTreeMap::new();
    for &scenario in &config.scenarios {
        let tag = ScenarioTag::theta(scenario.bound_figure());
        let per: Vec<(Vec<(f64, f64)>, usize)> = (0..config.n_distributions)
            .into_par_iter()
            .map(|i| {
                let mut rng = task_rng(config.seed, stream(scenario, 2, i));
                'draw: for rejected in 0..MAX_REDRAWS {
                    let mut c = sample_structural_model(scenario, false, &mut rng);
                    c.beta[2] = config.curve.beta3;
                    c.gamma[1] = config.curve.gamma2;
                    let mut curve = Vec::with_capacity(grid.len());
                    for &g1 in grid {
                        c.gamma[0] = g1;
                        let out =
                            observed_from_model(&StructuralModel::Coefficients(c.clone()), &quad);
                        if out.table.min_observed_cell() < MIN_CELL {
                            continue 'draw;
                        }
                        let b = bounds(tag, &out.table)?;
                        curve.push((out.table.p_obs(), b.width()));
                    }
                    return Ok((curve, rejected));
                }
                Err(Error::InvalidArgument(format!(
                    "no {scenario} curve passed the cell filter in {MAX_REDRAWS} draws"
                )))
            })
            .collect::<Result<_>>()?;
        resampled.insert(scenario.to_string(), per.iter().map(|p| p.1).sum::<usize>());
        for (k, &g1) in grid.iter().enumerate() {
            let mean_observed = mean(per.iter().map(|p| p.0[k].0));
            points.push(CurvePoint {
                scenario,
                grid_index: k,
                gamma1: g1,
                n: per.len(),
                mean_observed,
                mean_missing: 1.0 - mean_observed,
                mean_width: mean(per.iter().map(|p| p.0[k].1)),
            });
        }
        for (i, p) in per.iter().enumerate() {
            for (k, &(o, w)) in p.0.iter().enumerate() {
                draws.push((scenario, i, k, o, w));
            }
        }
        let mine: Vec<&CurvePoint> = points.iter().filter(|p| p.scenario == scenario).collect();
        let missing: Vec<f64> = mine.iter().map(|p| p.mean_missing).collect();
        let width: Vec<f64> = mine.iter().map(|p| p.mean_width).collect();
        rho.insert(scenario.to_string(), spearman(&missing, &width));
    }
    Ok(CurveResult {
        curve: config.curve.clone(),
        points,
        spearman: rho,
        resampled,
        draws,
    })
}
