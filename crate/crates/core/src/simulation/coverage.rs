//! Coverage of bootstrap intervals for the bound endpoints, at fixed
//! coefficient sets calibrated to a target effect and missingness.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{flag, mean, stream, Experiment, ExperimentConfig, Row};
use crate::bounds::bounds;
use crate::error::{Error, Result};
use crate::estimation::bootstrap_from_counts;
use crate::oracle::{
    observed_from_model, Coefficients, ModelFigure, ModelOutcome, NormalQuadrature, StructuralModel,
};
use crate::records::CellCounts;
use crate::rng::{multinomial, task_rng};
use crate::scenario::ScenarioTag;

/// Intervention coefficient used for nonzero targets; zero targets use 0.
pub const NONZERO_BETA3: f64 = -1.5;
const BISECTION_STEPS: usize = 200;
const MAX_TRIAL_ATTEMPTS: usize = 1000;

/// A fixed coefficient set and the quantities it was calibrated to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub scenario: ModelFigure,
    pub theta_target: f64,
    pub missing_target: f64,
    pub coefficients: Coefficients,
    pub theta: f64,
    pub missing: f64,
    pub true_lower: f64,
    pub true_upper: f64,
}

/// Base coefficients shared by every calibrated set; `b1`, `b3` and `g1`
/// are filled in by [`calibrate`].
fn base_coefficients(figure: ModelFigure) -> Coefficients {
    let mut c = Coefficients::zero(figure);
    if figure.is_noncompliance() {
        c.alpha = [-1.0, 0.5, 2.0];
    }
    c.beta = [0.0, 1.0, 0.0];
    c.gamma = [0.0, 1.0, 1.0, 0.5, 0.5];
    c.p_r1 = 0.5;
    c
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn outcome(c: &Coefficients, quad: &NormalQuadrature) -> ModelOutcome {
    observed_from_model(&StructuralModel::Coefficients(c.clone()), quad)
}

/// Solves for `b1` so the true effect equals `theta` and then for `g1` so
/// the overall proportion missing equals `missing`. A zero target sets
/// `b3 = 0`; otherwise `b3` is [`NONZERO_BETA3`] and `b1` is taken on the
/// side of the effect curve where `Y` is mostly 1.
pub fn calibrate(
    figure: ModelFigure,
    theta: f64,
    missing: f64,
    quad: &NormalQuadrature,
) -> Result<Calibration> {
    let mut c = base_coefficients(figure);
    if theta != 0.0 {
        if theta > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "calibration supports nonpositive targets, got {theta}"
            )));
        }
        c.beta[2] = NONZERO_BETA3;
        let centre = -NONZERO_BETA3 / 2.0;
        let effect = |b1: f64| {
            let mut d = c.clone();
            d.beta[0] = b1;
            quad.expect(|u| d.p_y1(u, 1) - d.p_y1(u, 0))
        };
        if effect(centre) > theta {
            return Err(Error::InvalidArgument(format!(
                "target {theta} is beyond the reachable effect {}",
                effect(centre)
            )));
        }
        c.beta[0] = bisect(centre, centre + 40.0, |b1| effect(b1) - theta);
    }
    let miss = |g1: f64| {
        let mut d = c.clone();
        d.gamma[0] = g1;
        1.0 - outcome(&d, quad).table.p_obs()
    };
    c.gamma[0] = bisect(-40.0, 40.0, |g1| miss(g1) - missing);
    let out = outcome(&c, quad);
    let truth = bounds(ScenarioTag::theta(figure.bound_figure()), &out.table)?;
    Ok(Calibration {
        scenario: figure,
        theta_target: theta,
        missing_target: missing,
        theta: out.theta,
        missing: 1.0 - out.table.p_obs(),
        true_lower: truth.lower,
        true_upper: truth.upper,
        coefficients: c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub scenario: ModelFigure,
    /// Bound family evaluated, e.g. `2cde`.
    pub bounds: String,
    pub theta_target: f64,
    pub n: usize,
    pub trials: usize,
    pub true_theta: f64,
    pub true_lower: f64,
    pub true_upper: f64,
    pub coverage_lower: f64,
    pub coverage_upper: f64,
    /// Fraction of trials whose outer interval contains the true effect.
    pub coverage_outer: f64,
    /// Simulated trials discarded because no bootstrap was possible.
    pub discarded_trials: usize,
    pub mean_redraws: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageDraw {
    pub cell: usize,
    pub trial: usize,
    pub lower_covered: bool,
    pub upper_covered: bool,
    pub outer_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub level: f64,
    pub replicates: usize,
    pub calibrations: Vec<Calibration>,
    pub cells: Vec<CoverageCell>,
    #[serde(skip)]
    pub draws: Vec<CoverageDraw>,
}

impl CoverageResult {
    pub fn cell(&self, scenario: ModelFigure, theta: f64, n: usize) -> Option<&CoverageCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.theta_target == theta && c.n == n)
    }

    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for d in &self.draws {
            let c = &self.cells[d.cell];
            let scenario = format!("{}:theta={}:n={}", c.bounds, c.theta_target, c.n);
            for (statistic, v) in [
                ("lower_covered", d.lower_covered),
                ("upper_covered", d.upper_covered),
                ("outer_covered", d.outer_covered),
            ] {
                rows.push(Row {
                    experiment: Experiment::Coverage.as_str(),
                    scenario: scenario.clone(),
                    draw: d.trial,
                    statistic: statistic.into(),
                    value: flag(v),
                });
            }
        }
        rows
    }
}

/// For every target effect, trial size and generating figure: simulate
/// `n_distributions` trials from the calibrated law, bootstrap each, and
/// count how often the endpoint intervals cover the true endpoints.
pub fn experiment_coverage(config: &ExperimentConfig) -> Result<CoverageResult> {
    config.validate()?;
    let quad = NormalQuadrature::default();
    let mut calibrations = Vec::new();
    let mut cells = Vec::new();
    let mut draws = Vec::new();
    for (ti, &theta) in config.coverage.thetas.iter().enumerate() {
        for &scenario in &config.scenarios {
            let cal = calibrate(scenario, theta, config.coverage.missing, &quad)?;
            let out = outcome(&cal.coefficients, &quad);
            let probs = out.table.cell_probabilities();
            let tag = ScenarioTag::theta(scenario.bound_figure());
            for (ni, &n) in config.trial_sizes.iter().enumerate() {
                let block = 16 + (ti as u64) * 64 + ni as u64;
                let per: Vec<(Option<[bool; 3]>, usize)> = (0..config.n_distributions)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = task_rng(config.seed, stream(scenario, block, t));
                        for attempt in 0..MAX_TRIAL_ATTEMPTS {
                            let counts =
                                CellCounts::from_cells(&multinomial(n as u64, &probs, &mut rng));
                            let boot_seed: u64 = rng.random();
                            let Ok(b) = bootstrap_from_counts(
                                &counts,
                                tag,
                                config.replicates,
                                config.level,
                                boot_seed,
                            ) else {
                                continue;
                            };
                            let covered = [
                                b.ci_lower_of_lower <= cal.true_lower
                                    && cal.true_lower <= b.ci_upper_of_lower,
                                b.ci_lower_of_upper <= cal.true_upper
                                    && cal.true_upper <= b.ci_upper_of_upper,
                                b.outer_contains(out.theta),
                            ];
                            return (Some(covered), attempt + b.redraws);
                        }
                        (None, MAX_TRIAL_ATTEMPTS)
                    })
                    .collect();
                let ok: Vec<(usize, [bool; 3])> = per
                    .iter()
                    .enumerate()
                    .filter_map(|(t, p)| p.0.map(|c| (t, c)))
                    .collect();
                if ok.is_empty() {
                    return Err(Error::NonviableData {
                        failed: per.len(),
                        attempted: per.len(),
                    });
                }
                let rate =
                    |k: usize| ok.iter().filter(|(_, c)| c[k]).count() as f64 / ok.len() as f64;
                let idx = cells.len();
                cells.push(CoverageCell {
                    scenario,
                    bounds: scenario.bound_figure().to_string(),
                    theta_target: theta,
                    n,
                    trials: ok.len(),
                    true_theta: out.theta,
                    true_lower: cal.true_lower,
                    true_upper: cal.true_upper,
                    coverage_lower: rate(0),
                    coverage_upper: rate(1),
                    coverage_outer: rate(2),
                    discarded_trials: per.len() - ok.len(),
                    mean_redraws: mean(per.iter().map(|p| p.1 as f64)),
                });
                draws.extend(ok.into_iter().map(|(t, c)| CoverageDraw {
                    cell: idx,
                    trial: t,
                    lower_covered: c[0],
                    upper_covered: c[1],
                    outer_covered: c[2],
                }));
            }
            calibrations.push(cal);
        }
    }
    Ok(CoverageResult {
        level: config.level,
        replicates: config.replicates,
        calibrations,
        cells,
        draws,
    })
}
