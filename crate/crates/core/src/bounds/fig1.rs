//! Perfect-compliance bounds (X is both assigned and received).
//!
//! Notation: `p(y, x) = p{Y=y, O=1 | X=x}`, `m(x) = p{O=0 | X=x}`.

use std::collections::BTreeSet;

use super::{terms, BoundTerm, BoundsResult, Diagnostic};
use crate::error::{Error, Result};
use crate::scenario::{Figure, ScenarioTag};
use crate::table::Fig1Table;

/// Below this, `p{O=0}` is treated as zero and the slack terms vanish.
const NO_MISSING_TOL: f64 = 1e-12;

/// Imputation interval: missing outcomes set to the most and least
/// favourable values.
pub fn bounds_best_worst(t: &Fig1Table) -> BoundsResult {
    let identified = t.p(1, 1) - t.p(1, 0);
    BoundsResult::from_terms(
        ScenarioTag::tau(Figure::BestWorst),
        terms("bw", &[identified - t.p_miss_x(0)]),
        terms("bw", &[identified + t.p_miss_x(1)]),
        BTreeSet::new(),
    )
}

pub fn bounds_fig1c(t: &Fig1Table) -> BoundsResult {
    BoundsResult::from_terms(
        ScenarioTag::theta(Figure::F1c),
        terms("1c", &[t.p(0, 0) + t.p(1, 1) - 1.0]),
        terms("1c", &[1.0 - t.p(0, 1) - t.p(1, 0)]),
        BTreeSet::new(),
    )
}

pub fn bounds_fig1b(t: &Fig1Table) -> BoundsResult {
    let (p00, p01, p10, p11) = (t.p(0, 0), t.p(0, 1), t.p(1, 0), t.p(1, 1));
    BoundsResult::from_terms(
        ScenarioTag::theta(Figure::F1b),
        terms(
            "1b",
            &[
                p00 + p11 - 1.0,
                -p10 + 2.0 * p11 - 1.0,
                2.0 * p00 - p01 - 1.0,
            ],
        ),
        terms(
            "1b",
            &[
                1.0 - p01 - p10,
                1.0 - 2.0 * p10 + p11,
                1.0 + p00 - 2.0 * p01,
            ],
        ),
        BTreeSet::new(),
    )
}

/// Max and min of `{1/(1+A(1,1)), A(0,1)/(1+A(0,1))}` where
/// `A(y,1) = q_{1y.1}/q_{0y.1}`; `None` when either ratio is undefined.
fn ratio_factors(t: &Fig1Table) -> Option<(f64, f64)> {
    let (a0, b0) = (t.joint_obs(0, 0), t.joint_obs(1, 0));
    let (a1, b1) = (t.joint_obs(0, 1), t.joint_obs(1, 1));
    if a0 <= 0.0 || a1 <= 0.0 {
        return None;
    }
    // 1/(1+A) = q0/(q0+q1) and A/(1+A) = q1/(q0+q1), written without the ratio.
    let f1 = a1 / (a1 + b1);
    let f2 = b0 / (a0 + b0);
    Some((f1.max(f2), f1.min(f2)))
}

fn check_observed(t: &Fig1Table) -> Result<()> {
    for x in 0..2 {
        if t.p_obs_x(x) <= 0.0 {
            return Err(Error::DegenerateObservation(format!(
                "no observed outcomes in arm x={x}"
            )));
        }
    }
    Ok(())
}

/// Applies the undefined-ratio policy around a term builder that receives
/// `(max_factor, min_factor)`: original coding, then the swapped coding
/// (negating the result), then conservative factors 1 and 0.
fn with_ratio_policy(
    t: &Fig1Table,
    tag: ScenarioTag,
    build: impl Fn(&Fig1Table, f64, f64) -> (Vec<BoundTerm>, Vec<BoundTerm>),
) -> BoundsResult {
    if let Some((fmax, fmin)) = ratio_factors(t) {
        let (lo, up) = build(t, fmax, fmin);
        return BoundsResult::from_terms(tag, lo, up, BTreeSet::new());
    }
    let swapped = t.recoded();
    if let Some((fmax, fmin)) = ratio_factors(&swapped) {
        let (lo, up) = build(&swapped, fmax, fmin);
        let diag = BTreeSet::from([Diagnostic::UndefinedRatioRecoded]);
        return BoundsResult::from_terms(tag, lo, up, diag).negated();
    }
    let (lo, up) = build(t, 1.0, 0.0);
    BoundsResult::from_terms(
        tag,
        lo,
        up,
        BTreeSet::from([Diagnostic::UndefinedRatioFallback]),
    )
}

/// Bounds when missingness depends on the outcome only.
///
/// The raw lists carry a trivial second term (-1 below, 1 above) so the
/// result stays inside `[-1, 1]` even where the slack term overshoots.
/// The slack multiplier `p{O=0|X=x}/p{X=x|O=0}` is evaluated as
/// `p{O=0}/p{X=x}`, which is the same quantity and stays defined when an
/// arm has no missing mass.
pub fn bounds_fig1a(t: &Fig1Table) -> Result<BoundsResult> {
    check_observed(t)?;
    let tag = ScenarioTag::theta(Figure::F1a);
    let identified = |t: &Fig1Table| 1.0 - t.p(0, 1) - t.p(1, 0);
    let p_miss = t.p_miss();
    if p_miss <= NO_MISSING_TOL {
        let v = identified(t);
        return Ok(BoundsResult::from_terms(
            tag,
            vec![BoundTerm::new("1a", v), BoundTerm::new("trivial", -1.0)],
            vec![BoundTerm::new("1a", v), BoundTerm::new("trivial", 1.0)],
            BTreeSet::new(),
        ));
    }
    Ok(with_ratio_policy(t, tag, |t, fmax, fmin| {
        let c = [p_miss / t.p_x(0), p_miss / t.p_x(1)];
        let (cmax, cmin) = (c[0].max(c[1]), c[0].min(c[1]));
        let base = identified(t);
        (
            vec![
                BoundTerm::new("1a", base - fmax * cmax),
                BoundTerm::new("trivial", -1.0),
            ],
            vec![
                BoundTerm::new("1a", base - fmin * cmin),
                BoundTerm::new("trivial", 1.0),
            ],
        )
    }))
}

/// Bounds when the intervention and the outcome share an unmeasured cause
/// of missingness.
pub fn bounds_gabriel_xy_confounded(t: &Fig1Table) -> Result<BoundsResult> {
    check_observed(t)?;
    let tag = ScenarioTag::theta(Figure::F1a);
    // (q_{10.1} + q_{01.1}) q, i.e. the discordant observed mass.
    let discordant = |t: &Fig1Table| t.joint_obs(1, 0) + t.joint_obs(0, 1);
    let p_miss = t.p_miss();
    if p_miss <= NO_MISSING_TOL {
        let d = discordant(t);
        return Ok(BoundsResult::from_terms(
            tag,
            terms("xy-confounded", &[-d]),
            terms("xy-confounded", &[1.0 - d]),
            BTreeSet::new(),
        ));
    }
    Ok(with_ratio_policy(t, tag, |t, fmax, fmin| {
        let d = discordant(t);
        (
            terms("xy-confounded", &[-d - fmax * p_miss]),
            terms("xy-confounded", &[1.0 - d - fmin * p_miss]),
        )
    }))
}

/// Intersection of the outcome-dependent-missingness bounds with the
/// 1c and confounded-missingness bounds, all valid under the same diagram.
pub fn bounds_fig1a_refined(t: &Fig1Table) -> Result<BoundsResult> {
    let a = bounds_fig1a(t)?;
    let c = bounds_fig1c(t);
    let f = bounds_gabriel_xy_confounded(t)?;
    Ok(BoundsResult::intersect(
        ScenarioTag::theta(Figure::F1a),
        &[("1a", &a), ("1c", &c), ("xy-confounded", &f)],
    ))
}
