//! Plug-in bound estimates from trial records and percentile bootstrap
//! intervals for both endpoints.
//!
//! A bootstrap replicate resamples the records with replacement at the
//! original size. Because the bounds depend on the records only through the
//! ten cells of [`CellCounts`], this is carried out as one multinomial draw
//! over the cells. Replicate `i` uses stream `i` under the master seed, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bounds, BoundsResult};
use crate::error::{Error, Result};
use crate::records::{CellCounts, Compliance, TrialRecord, N_CELLS};
use crate::rng::{multinomial, task_rng};
use crate::scenario::{Estimand, ScenarioTag};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const MIN_REPLICATES: usize = 100;
/// Attempts per replicate before the replicate is declared failed.
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub point: BoundsResult,
    pub ci_lower_of_lower: f64,
    pub ci_upper_of_lower: f64,
    pub ci_lower_of_upper: f64,
    pub ci_upper_of_upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Resamples discarded because the bounds could not be evaluated on them.
    pub redraws: usize,
    /// Lower limit of the lower bound to upper limit of the upper bound,
    /// widened if needed to contain the point interval.
    pub outer_interval: (f64, f64),
}

impl BootstrapResult {
    pub fn lower_ci(&self) -> (f64, f64) {
        (self.ci_lower_of_lower, self.ci_upper_of_lower)
    }

    pub fn upper_ci(&self) -> (f64, f64) {
        (self.ci_lower_of_upper, self.ci_upper_of_upper)
    }

    pub fn outer_contains(&self, value: f64) -> bool {
        value >= self.outer_interval.0 && value <= self.outer_interval.1
    }
}

/// Layout of the data a scenario needs: perfect-compliance formulas read
/// the `(X, Y, O)` table, everything else the table stratified by `R`.
pub fn compliance_for(scenario: ScenarioTag) -> Compliance {
    if scenario.estimand == Estimand::Theta && !scenario.figure.is_noncompliance() {
        Compliance::Perfect
    } else {
        Compliance::General
    }
}

pub fn estimate_bounds(records: &[TrialRecord], scenario: ScenarioTag) -> Result<BoundsResult> {
    scenario.check()?;
    if records.is_empty() {
        return Err(Error::EmptyArm(0));
    }
    let counts = CellCounts::from_records(records, compliance_for(scenario))?;
    estimate_from_counts(&counts, scenario)
}

pub fn estimate_from_counts(counts: &CellCounts, scenario: ScenarioTag) -> Result<BoundsResult> {
    bounds(scenario, &counts.table(compliance_for(scenario))?)
}

pub fn bootstrap_ci(
    records: &[TrialRecord],
    scenario: ScenarioTag,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    scenario.check()?;
    if records.is_empty() {
        return Err(Error::EmptyArm(0));
    }
    let counts = CellCounts::from_records(records, compliance_for(scenario))?;
    bootstrap_from_counts(&counts, scenario, replicates, level, seed)
}

pub fn bootstrap_from_counts(
    counts: &CellCounts,
    scenario: ScenarioTag,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "replicates must be at least {MIN_REPLICATES}, got {replicates}"
        )));
    }
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0.5, 1), got {level}"
        )));
    }
    let point = estimate_from_counts(counts, scenario)?;

    let n = counts.total();
    let probs: [f64; N_CELLS] = counts.cells().map(|c| c as f64);
    let draws: Vec<(Option<(f64, f64)>, usize)> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            for attempt in 0..MAX_ATTEMPTS {
                let cells = multinomial(n, &probs, &mut rng);
                if let Ok(b) = estimate_from_counts(&CellCounts::from_cells(&cells), scenario) {
                    return (Some((b.lower, b.upper)), attempt);
                }
            }
            (None, MAX_ATTEMPTS)
        })
        .collect();

    let redraws: usize = draws.iter().map(|d| d.1).sum();
    let exhausted = draws.iter().filter(|d| d.0.is_none()).count();
    let attempted = redraws + replicates - exhausted;
    if exhausted > 0 || 2 * redraws > attempted {
        return Err(Error::NonviableData {
            failed: redraws,
            attempted,
        });
    }

    let mut lows: Vec<f64> = draws.iter().filter_map(|d| d.0.map(|v| v.0)).collect();
    let mut highs: Vec<f64> = draws.iter().filter_map(|d| d.0.map(|v| v.1)).collect();
    lows.sort_by(f64::total_cmp);
    highs.sort_by(f64::total_cmp);
    let (a, b) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let ci_lower_of_lower = quantile(&lows, a);
    let ci_upper_of_upper = quantile(&highs, b);
    Ok(BootstrapResult {
        ci_upper_of_lower: quantile(&lows, b),
        ci_lower_of_upper: quantile(&highs, a),
        outer_interval: (
            ci_lower_of_lower.min(point.lower),
            ci_upper_of_upper.max(point.upper),
        ),
        ci_lower_of_lower,
        ci_upper_of_upper,
        point,
        level,
        replicates,
        seed,
        redraws,
    })
}

/// Linear-interpolation sample quantile of sorted data (R type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
