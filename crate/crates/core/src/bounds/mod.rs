//! Closed-form bounds on the risk difference.
//!
//! Every bound is a max (lower) or min (upper) over a list of terms in the
//! observable probabilities. [`BoundsResult`] keeps the full evaluated lists
//! and the index of the active term so callers can see which vertex binds.

mod fig1;
mod fig2;

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

pub use fig1::{
    bounds_best_worst, bounds_fig1a, bounds_fig1a_refined, bounds_fig1b, bounds_fig1c,
    bounds_gabriel_xy_confounded,
};
pub use fig2::{
    bounds_fig2a_general, bounds_fig2a_general_with, bounds_fig2a_nodefiers, bounds_fig2b_general,
    bounds_fig2b_nodefiers, bounds_fig2cde, bounds_fig2cde_nodefiers, Fig2aReading,
};

use crate::error::{Error, Result};
use crate::scenario::{Estimand, Figure, ScenarioTag};
use crate::table::{Fig1Table, Fig2Table, ObservedTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Diagnostic {
    /// An odds ratio was undefined; the bounds were computed under `x* = 1 - x`.
    UndefinedRatioRecoded,
    /// Undefined under both codings; conservative factors 1 (max) and 0 (min) used.
    UndefinedRatioFallback,
    /// Terms containing an undefined odds ratio were removed from the lists.
    UndefinedTermDropped,
    /// The lower bound exceeds the upper bound: the table contradicts the diagram.
    Incompatible,
}

/// One evaluated term of a max/min list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTerm {
    pub source: String,
    pub value: f64,
}

impl BoundTerm {
    pub fn new(source: impl Into<String>, value: f64) -> Self {
        BoundTerm {
            source: source.into(),
            value,
        }
    }
}

pub(crate) fn terms(source: &str, values: &[f64]) -> Vec<BoundTerm> {
    values.iter().map(|&v| BoundTerm::new(source, v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsResult {
    pub scenario: ScenarioTag,
    pub lower: f64,
    pub upper: f64,
    pub lower_term_index: usize,
    pub upper_term_index: usize,
    pub lower_terms: Vec<BoundTerm>,
    pub upper_terms: Vec<BoundTerm>,
    pub diagnostics: BTreeSet<Diagnostic>,
}

/// Index of the first maximal (`want_max`) or minimal value.
fn arg_extreme(terms: &[BoundTerm], want_max: bool) -> usize {
    let mut best = 0;
    for (i, t) in terms.iter().enumerate().skip(1) {
        let better = if want_max {
            t.value > terms[best].value
        } else {
            t.value < terms[best].value
        };
        if better {
            best = i;
        }
    }
    best
}

impl BoundsResult {
    /// Lower = max of `lower_terms`, upper = min of `upper_terms`; ties go to
    /// the lowest index. Both lists must be nonempty.
    pub fn from_terms(
        scenario: ScenarioTag,
        lower_terms: Vec<BoundTerm>,
        upper_terms: Vec<BoundTerm>,
        mut diagnostics: BTreeSet<Diagnostic>,
    ) -> Self {
        assert!(
            !lower_terms.is_empty() && !upper_terms.is_empty(),
            "bound term lists must be nonempty"
        );
        let li = arg_extreme(&lower_terms, true);
        let ui = arg_extreme(&upper_terms, false);
        let lower = lower_terms[li].value;
        let upper = upper_terms[ui].value;
        if lower > upper {
            diagnostics.insert(Diagnostic::Incompatible);
        } else {
            diagnostics.remove(&Diagnostic::Incompatible);
        }
        BoundsResult {
            scenario,
            lower,
            upper,
            lower_term_index: li,
            upper_term_index: ui,
            lower_terms,
            upper_terms,
            diagnostics,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }

    pub fn is_incompatible(&self) -> bool {
        self.diagnostics.contains(&Diagnostic::Incompatible)
    }

    pub fn has(&self, d: Diagnostic) -> bool {
        self.diagnostics.contains(&d)
    }

    /// Bounds for `-effect`: the interval `[-upper, -lower]` with the term
    /// lists swapped and negated.
    pub(crate) fn negated(self) -> Self {
        let neg = |ts: Vec<BoundTerm>| {
            ts.into_iter()
                .map(|t| BoundTerm::new(t.source, -t.value))
                .collect::<Vec<_>>()
        };
        BoundsResult::from_terms(
            self.scenario,
            neg(self.upper_terms),
            neg(self.lower_terms),
            self.diagnostics,
        )
    }

    pub(crate) fn with_scenario(mut self, scenario: ScenarioTag) -> Self {
        self.scenario = scenario;
        self
    }

    /// Componentwise intersection; term lists are concatenated with each
    /// constituent's prefix prepended to its term sources.
    pub fn intersect(scenario: ScenarioTag, parts: &[(&str, &BoundsResult)]) -> Self {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut diagnostics = BTreeSet::new();
        for (prefix, part) in parts {
            let relabel = |t: &BoundTerm| {
                let source = if t.source == *prefix || prefix.is_empty() {
                    t.source.clone()
                } else {
                    format!("{prefix}:{}", t.source)
                };
                BoundTerm::new(source, t.value)
            };
            lower.extend(part.lower_terms.iter().map(relabel));
            upper.extend(part.upper_terms.iter().map(relabel));
            diagnostics.extend(part.diagnostics.iter().copied());
        }
        BoundsResult::from_terms(scenario, lower, upper, diagnostics)
    }
}

impl Serialize for BoundsResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            scenario: Figure,
            estimand: Estimand,
            no_defiers: bool,
            lower: f64,
            upper: f64,
            lower_term_index: usize,
            upper_term_index: usize,
            lower_terms: &'a [BoundTerm],
            upper_terms: &'a [BoundTerm],
            diagnostics: &'a BTreeSet<Diagnostic>,
        }
        Out {
            scenario: self.scenario.figure,
            estimand: self.scenario.estimand,
            no_defiers: self.scenario.no_defiers,
            lower: self.lower,
            upper: self.upper,
            lower_term_index: self.lower_term_index,
            upper_term_index: self.upper_term_index,
            lower_terms: &self.lower_terms,
            upper_terms: &self.upper_terms,
            diagnostics: &self.diagnostics,
        }
        .serialize(s)
    }
}

fn fig1_theta(figure: Figure, t: &Fig1Table) -> Result<BoundsResult> {
    match figure {
        Figure::BestWorst => Ok(bounds_best_worst(t)),
        Figure::F1a => bounds_fig1a_refined(t),
        Figure::F1b => Ok(bounds_fig1b(t)),
        Figure::F1c => Ok(bounds_fig1c(t)),
        _ => unreachable!("caller restricts to perfect-compliance figures"),
    }
}

fn fig2_theta(figure: Figure, no_defiers: bool, t: &Fig2Table) -> Result<BoundsResult> {
    match (figure, no_defiers) {
        (Figure::F2a, false) => bounds_fig2a_general(t),
        (Figure::F2a, true) => bounds_fig2a_nodefiers(t, true),
        (Figure::F2b, false) => Ok(bounds_fig2b_general(t)),
        (Figure::F2b, true) => Ok(bounds_fig2b_nodefiers(t)),
        (Figure::F2cde, false) => Ok(bounds_fig2cde(t)),
        (Figure::F2cde, true) => Ok(bounds_fig2cde_nodefiers(t)),
        _ => unreachable!("caller restricts to noncompliance figures"),
    }
}

/// Evaluates the bounds named by `scenario` on `table`.
///
/// Assignment-effect (`tau`) bounds on a noncompliance table use the
/// perfect-compliance counterpart of the figure on the table with R in
/// place of X: 2a uses the refined 1a bounds, 2b uses 1b, 2c-2e use 1c, and
/// best/worst is evaluated on the same marginal table.
pub fn bounds(scenario: ScenarioTag, table: &ObservedTable) -> Result<BoundsResult> {
    scenario.check()?;
    let mismatch = || Error::ScenarioTableMismatch {
        scenario: scenario.to_string(),
        table: table.kind(),
    };
    let result = match (table, scenario.estimand) {
        (ObservedTable::Fig1(t), Estimand::Theta) => {
            if scenario.figure.is_noncompliance() {
                return Err(mismatch());
            }
            fig1_theta(scenario.figure, t)?
        }
        (ObservedTable::Fig1(_), Estimand::Tau) => return Err(mismatch()),
        (ObservedTable::Fig2(t), Estimand::Theta) => {
            if !scenario.figure.is_noncompliance() {
                return Err(mismatch());
            }
            fig2_theta(scenario.figure, scenario.no_defiers, t)?
        }
        (ObservedTable::Fig2(t), Estimand::Tau) => {
            let target = match scenario.figure {
                Figure::BestWorst => Figure::BestWorst,
                f => f.assignment_counterpart().ok_or_else(mismatch)?,
            };
            fig1_theta(target, &t.marginalize())?
        }
    };
    Ok(result.with_scenario(scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag() -> ScenarioTag {
        ScenarioTag::theta(Figure::F1b)
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let r = BoundsResult::from_terms(
            tag(),
            terms("t", &[0.1, 0.3, 0.3]),
            terms("t", &[0.5, 0.4, 0.4]),
            BTreeSet::new(),
        );
        assert_eq!(r.lower_term_index, 1);
        assert_eq!(r.upper_term_index, 1);
        assert!(!r.is_incompatible());
    }

    #[test]
    fn crossing_lists_flag_incompatible() {
        let r = BoundsResult::from_terms(
            tag(),
            terms("t", &[0.5]),
            terms("t", &[0.2]),
            BTreeSet::new(),
        );
        assert!(r.is_incompatible());
    }

    #[test]
    fn negation_swaps_and_flips() {
        let r = BoundsResult::from_terms(
            tag(),
            terms("t", &[-0.2, 0.1]),
            terms("t", &[0.6, 0.4]),
            BTreeSet::new(),
        )
        .negated();
        assert_eq!((r.lower, r.upper), (-0.4, -0.1));
        assert_eq!(r.lower_terms[r.lower_term_index].value, r.lower);
        assert_eq!(r.upper_terms[r.upper_term_index].value, r.upper);
    }

    #[test]
    fn serializes_documented_keys() {
        let r = BoundsResult::from_terms(
            tag(),
            terms("1b", &[0.1]),
            terms("1b", &[0.2]),
            BTreeSet::new(),
        );
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "scenario",
            "estimand",
            "no_defiers",
            "lower",
            "upper",
            "lower_term_index",
            "upper_term_index",
            "lower_terms",
            "upper_terms",
            "diagnostics",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["scenario"], "1b");
        assert_eq!(v["estimand"], "theta");
    }
}
