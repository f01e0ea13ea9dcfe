//! Noncompliance bounds (R assigned, X received).
//!
//! Notation: `p(x, y, r) = p{X=x, Y=y, O=1 | R=r}`, `q_r = p{O=1 | R=r}` and
//! `m_r = 1 - q_r`. For the outcome-dependent-missingness lists the odds
//! ratio `B(y, r) = p(1, y, r) / p(0, y, r)` enters only through
//! `B/(1+B)`, `1/(1+B)` and `(1-B)/(1+B)`, which are evaluated directly
//! from the two cells.

use std::collections::BTreeSet;

use super::{terms, BoundTerm, BoundsResult, Diagnostic};
use crate::error::{Error, Result};
use crate::scenario::{Figure, ScenarioTag};
use crate::table::Fig2Table;

pub fn bounds_fig2cde(t: &Fig2Table) -> BoundsResult {
    let p = |x, y, r| t.p(x, y, r);
    let lower = [
        p(0, 0, 1) + p(1, 1, 1) - 1.0,
        p(0, 0, 0) + p(1, 1, 1) - 1.0,
        p(0, 0, 1) + p(1, 1, 0) - 1.0,
        p(0, 0, 0) + p(1, 1, 0) - 1.0,
        2.0 * p(0, 0, 1) + p(0, 1, 0) + p(1, 1, 0) + p(1, 1, 1) - 2.0,
        2.0 * p(0, 0, 0) + p(0, 1, 1) + p(1, 1, 0) + p(1, 1, 1) - 2.0,
        p(0, 0, 0) + p(0, 0, 1) + p(1, 0, 0) + 2.0 * p(1, 1, 1) - 2.0,
        p(0, 0, 0) + p(0, 0, 1) + p(1, 0, 1) + 2.0 * p(1, 1, 0) - 2.0,
    ];
    let upper = [
        1.0 - p(1, 0, 0) - p(0, 1, 0),
        1.0 - p(1, 0, 0) - p(0, 1, 1),
        1.0 - p(1, 0, 1) - p(0, 1, 0),
        1.0 - p(1, 0, 1) - p(0, 1, 1),
        2.0 - p(0, 0, 0) - p(1, 0, 0) - p(1, 0, 1) - 2.0 * p(0, 1, 1),
        2.0 - p(0, 0, 1) - p(1, 0, 0) - p(1, 0, 1) - 2.0 * p(0, 1, 0),
        2.0 - 2.0 * p(1, 0, 0) - p(0, 1, 0) - p(0, 1, 1) - p(1, 1, 1),
        2.0 - 2.0 * p(1, 0, 1) - p(0, 1, 0) - p(0, 1, 1) - p(1, 1, 0),
    ];
    BoundsResult::from_terms(
        ScenarioTag::theta(Figure::F2cde),
        terms("2cde", &lower),
        terms("2cde", &upper),
        BTreeSet::new(),
    )
}

pub fn bounds_fig2cde_nodefiers(t: &Fig2Table) -> BoundsResult {
    let p = |x, y, r| t.p(x, y, r);
    let lower = [
        p(0, 0, 0) + p(1, 1, 0) - 1.0,
        p(0, 0, 1) + p(1, 1, 0) - 1.0,
        p(0, 0, 1) + p(1, 1, 1) - 1.0,
        p(0, 0, 0) + p(1, 1, 1) - 1.0,
    ];
    let upper = [
        1.0 - p(1, 0, 1) - p(0, 1, 0),
        1.0 - p(1, 0, 0) - p(0, 1, 1),
        1.0 - p(1, 0, 0) - p(0, 1, 0),
        1.0 - p(1, 0, 1) - p(0, 1, 1),
    ];
    BoundsResult::from_terms(
        ScenarioTag::theta_no_defiers(Figure::F2cde),
        terms("2cde-nd", &lower),
        terms("2cde-nd", &upper),
        BTreeSet::new(),
    )
}

pub fn bounds_fig2b_general(t: &Fig2Table) -> BoundsResult {
    let p = |x, y, r| t.p(x, y, r);
    let lower = [
        p(0, 0, 1) - p(0, 1, 0) - p(1, 1, 0) + 2.0 * p(1, 1, 1) - 1.0,
        p(0, 0, 1) + p(1, 1, 0) - 1.0,
        p(0, 0, 0) + p(1, 1, 1) - 1.0,
        p(0, 0, 1) + p(1, 1, 1) - 1.0,
        p(0, 0, 0) - p(0, 1, 1) + 2.0 * p(1, 1, 0) - p(1, 1, 1) - 1.0,
        -p(0, 0, 0) + 2.0 * p(0, 0, 1) - p(1, 0, 0) + p(1, 1, 1) - 1.0,
        p(0, 0, 0) + p(1, 1, 0) - 1.0,
        2.0 * p(0, 0, 0) - p(0, 0, 1) - p(1, 0, 1) + p(1, 1, 0) - 1.0,
        2.0 * p(0, 0, 0) - p(0, 0, 1) - p(1, 0, 1) - p(0, 1, 1) + 2.0 * p(1, 1, 0)
            - p(1, 1, 1)
            - 1.0,
        -p(0, 0, 0) + 2.0 * p(0, 0, 1) - p(1, 0, 0) - p(0, 1, 0) - p(1, 1, 0) + 2.0 * p(1, 1, 1)
            - 1.0,
    ];
    let upper = [
        1.0 - p(1, 0, 0) - 2.0 * p(0, 1, 0) + p(0, 1, 1) + p(1, 1, 1),
        1.0 - p(1, 0, 1) + p(0, 1, 0) - 2.0 * p(0, 1, 1) + p(1, 1, 0),
        1.0 + p(0, 0, 1) - 2.0 * p(1, 0, 0) + p(1, 0, 1) - p(0, 1, 0),
        1.0 - p(1, 0, 0) - p(0, 1, 1),
        1.0 - p(1, 0, 1) - p(0, 1, 0),
        1.0 - p(1, 0, 0) - p(0, 1, 0),
        1.0 + p(0, 0, 1) - 2.0 * p(1, 0, 0) + p(1, 0, 1) - 2.0 * p(0, 1, 0)
            + p(0, 1, 1)
            + p(1, 1, 1),
        1.0 - p(1, 0, 1) - p(0, 1, 1),
        1.0 + p(0, 0, 0) + p(1, 0, 0) - 2.0 * p(1, 0, 1) - p(0, 1, 1),
        1.0 + p(0, 0, 0) + p(1, 0, 0) - 2.0 * p(1, 0, 1) + p(0, 1, 0) - 2.0 * p(0, 1, 1)
            + p(1, 1, 0),
    ];
    BoundsResult::from_terms(
        ScenarioTag::theta(Figure::F2b),
        terms("2b", &lower),
        terms("2b", &upper),
        BTreeSet::new(),
    )
}

pub fn bounds_fig2b_nodefiers(t: &Fig2Table) -> BoundsResult {
    let p = |x, y, r| t.p(x, y, r);
    let lower = [
        p(0, 0, 0) + p(1, 1, 1) - 1.0,
        p(0, 0, 1) - p(0, 1, 0) + p(0, 1, 1) - p(1, 1, 0) + 2.0 * p(1, 1, 1) - 1.0,
        2.0 * p(0, 0, 0) - p(0, 0, 1) + p(1, 0, 0) - p(1, 0, 1) + p(1, 1, 0) - 1.0,
    ];
    let upper = [
        1.0 - p(1, 0, 1) - p(0, 1, 0),
        1.0 - p(1, 0, 0) - 2.0 * p(0, 1, 0) + p(0, 1, 1) - p(1, 1, 0) + p(1, 1, 1),
        1.0 + p(0, 0, 0) - p(0, 0, 1) + p(1, 0, 0) - 2.0 * p(1, 0, 1) - p(0, 1, 1),
    ];
    BoundsResult::from_terms(
        ScenarioTag::theta_no_defiers(Figure::F2b),
        terms("2b-nd", &lower),
        terms("2b-nd", &upper),
        BTreeSet::new(),
    )
}

/// Which transcription of the general 2a term lists to evaluate.
///
/// Each slack factor is the extreme of a linear function over a segment of
/// the arm's unobserved cell simplex. `Fig2aReading::default()` uses both
/// segment endpoints everywhere; [`Fig2aReading::literal`] is the
/// term-by-term transcription in which some factors use one endpoint or a
/// different missing mass. Checked against sampled structural models, the
/// literal lower terms 3 and 4 and upper term 3 exclude the true effect on
/// sparse response-function models, while the default reading never did.
/// The literal `B/B` and `1/B` factors are valid but looser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fig2aReading {
    /// Lower terms 3 and 4: use both endpoints of the segment,
    /// `max{B(0,r)/(1+B(0,r)), (1-B(1,r))/(1+B(1,r))}`, instead of the
    /// first alone.
    pub lower_two_endpoints: bool,
    /// Upper terms 4, 7 and 8: `B/(1+B)` and `1/(1+B)` in place of
    /// `B/B` and `1/B`.
    pub upper_ratio_forms: bool,
    /// Upper term 3: arm-0 slack multiplied by `1 - q_0` rather than `q_0`.
    pub upper_term3_missing_mass: bool,
}

impl Default for Fig2aReading {
    fn default() -> Self {
        Fig2aReading {
            lower_two_endpoints: true,
            upper_ratio_forms: true,
            upper_term3_missing_mass: true,
        }
    }
}

impl Fig2aReading {
    /// The term-by-term transcription.
    pub fn literal() -> Self {
        Fig2aReading {
            lower_two_endpoints: false,
            upper_ratio_forms: false,
            upper_term3_missing_mass: false,
        }
    }
}

/// Ratio helpers for one `(y, r)` pair; `None` when `B(y, r)` is undefined.
struct Ratio {
    p0: f64,
    p1: f64,
}

impl Ratio {
    fn defined(&self) -> bool {
        self.p0 > 0.0
    }
    /// `B/(1+B)`.
    fn share(&self) -> Option<f64> {
        self.defined().then(|| self.p1 / (self.p0 + self.p1))
    }
    /// `1/(1+B)`.
    fn inv_share(&self) -> Option<f64> {
        self.defined().then(|| self.p0 / (self.p0 + self.p1))
    }
    /// `(1-B)/(1+B)`.
    fn diff_share(&self) -> Option<f64> {
        self.defined()
            .then(|| (self.p0 - self.p1) / (self.p0 + self.p1))
    }
    /// `1/B`, undefined also when `p1 = 0`.
    fn reciprocal(&self) -> Option<f64> {
        (self.defined() && self.p1 > 0.0).then(|| self.p0 / self.p1)
    }
}

fn max2(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a?.max(b?))
}

/// General bounds under outcome-dependent missingness with noncompliance,
/// using the derived reading of the term lists.
pub fn bounds_fig2a_general(t: &Fig2Table) -> Result<BoundsResult> {
    bounds_fig2a_general_with(t, Fig2aReading::default())
}

/// As [`bounds_fig2a_general`] with an explicit transcription choice.
///
/// Terms whose ratio is undefined are removed and the result is flagged
/// `UNDEFINED_TERM_DROPPED`; the first lower and upper terms involve no
/// ratio so the lists never become empty.
pub fn bounds_fig2a_general_with(t: &Fig2Table, reading: Fig2aReading) -> Result<BoundsResult> {
    for r in 0..2 {
        if t.q(r) <= 0.0 {
            return Err(Error::DegenerateObservation(format!(
                "no observed outcomes in arm r={r}"
            )));
        }
    }
    let p = |x, y, r| t.p(x, y, r);
    let m = [t.p_miss_r(0), t.p_miss_r(1)];
    let b = |y: usize, r: usize| Ratio {
        p0: p(0, y, r),
        p1: p(1, y, r),
    };
    let neg = |v: Option<f64>| v.map(|v| -v);

    let lower_slack = |r: usize| {
        if reading.lower_two_endpoints {
            max2(b(0, r).share(), b(1, r).diff_share())
        } else {
            b(0, r).share()
        }
    };
    let lower: [Option<f64>; 8] = [
        Some(p(1, 1, 1) + p(0, 0, 0) - 1.0),
        Some(p(1, 1, 0) + p(0, 0, 1) - 1.0),
        lower_slack(0).map(|f| {
            p(1, 1, 0) - p(1, 0, 0) - p(0, 1, 0) - (p(1, 1, 1) + p(0, 1, 1)) - f * m[0] - m[1]
        }),
        lower_slack(1).map(|f| {
            p(1, 1, 1) - p(1, 0, 1) - p(0, 1, 1) - (p(1, 1, 0) + p(0, 1, 0)) - f * m[1] - m[0]
        }),
        max2(b(1, 1).inv_share(), b(0, 1).share()).map(|f| -(p(1, 0, 1) + p(0, 1, 1)) - f * m[1]),
        max2(b(1, 0).inv_share(), b(0, 0).share()).map(|f| -(p(1, 0, 0) + p(0, 1, 0)) - f * m[0]),
        max2(b(1, 1).inv_share(), neg(b(0, 1).diff_share())).map(|f| {
            p(0, 0, 1) - p(1, 0, 1) - p(0, 1, 1) - (p(1, 0, 0) + p(0, 0, 0)) - f * m[1] - m[0]
        }),
        max2(b(1, 0).inv_share(), neg(b(0, 0).diff_share())).map(|f| {
            p(0, 0, 0) - p(1, 0, 0) - p(0, 1, 0) - (p(1, 0, 1) + p(0, 0, 1)) - f * m[0] - m[1]
        }),
    ];

    let term3_mass = if reading.upper_term3_missing_mass {
        m[0]
    } else {
        t.q(0)
    };
    let term4_share = if reading.upper_ratio_forms {
        b(1, 1).share()
    } else {
        b(1, 1).defined().then_some(1.0)
    };
    let inv_or_reciprocal = |y, r| {
        if reading.upper_ratio_forms {
            b(y, r).inv_share()
        } else {
            b(y, r).reciprocal()
        }
    };
    let upper: [Option<f64>; 8] = [
        Some(1.0 - p(1, 0, 1) - p(0, 1, 0)),
        Some(1.0 - p(1, 0, 0) - p(0, 1, 1)),
        max2(b(0, 0).diff_share(), b(1, 0).share()).map(|f| {
            (p(1, 0, 1) + p(0, 0, 1))
                + (p(1, 1, 0) + p(0, 0, 0) - p(1, 0, 0))
                + m[1]
                + f * term3_mass
        }),
        max2(b(0, 1).diff_share(), term4_share).map(|f| {
            (p(1, 1, 1) + p(0, 0, 1) - p(1, 0, 1)) + (p(1, 0, 0) + p(0, 0, 0)) + f * m[1] + m[0]
        }),
        max2(b(0, 1).inv_share(), b(1, 1).share()).map(|f| p(1, 1, 1) + p(0, 0, 1) + f * m[1]),
        max2(b(0, 0).inv_share(), b(1, 0).share()).map(|f| p(1, 1, 0) + p(0, 0, 0) + f * m[0]),
        max2(inv_or_reciprocal(0, 1), neg(b(1, 1).diff_share())).map(|f| {
            (p(1, 1, 1) + p(0, 0, 1) - p(0, 1, 1)) + (p(1, 1, 0) + p(0, 1, 0)) + f * m[1] + m[0]
        }),
        max2(inv_or_reciprocal(0, 0), neg(b(1, 0).diff_share())).map(|f| {
            (p(1, 1, 0) + p(0, 0, 0) - p(0, 1, 0)) + (p(1, 1, 1) + p(0, 1, 1)) + f * m[0] + m[1]
        }),
    ];

    let mut diagnostics = BTreeSet::new();
    let mut keep = |vals: &[Option<f64>]| {
        let mut out = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            match v {
                Some(v) => out.push(BoundTerm::new(format!("2a[{}]", i + 1), *v)),
                None => {
                    diagnostics.insert(Diagnostic::UndefinedTermDropped);
                }
            }
        }
        out
    };
    let lower = keep(&lower);
    let upper = keep(&upper);
    Ok(BoundsResult::from_terms(
        ScenarioTag::theta(Figure::F2a),
        lower,
        upper,
        diagnostics,
    ))
}

/// Bounds under outcome-dependent missingness with no defiers. With
/// `intersect` the general 2a lists (also valid here) are appended.
pub fn bounds_fig2a_nodefiers(t: &Fig2Table, intersect: bool) -> Result<BoundsResult> {
    let p = |x, y, r| t.p(x, y, r);
    let tag = ScenarioTag::theta_no_defiers(Figure::F2a);
    let own = BoundsResult::from_terms(
        tag,
        terms("2a-nd", &[p(1, 1, 1) + p(0, 0, 0) - 1.0]),
        terms("2a-nd", &[1.0 - p(1, 0, 1) - p(0, 1, 0)]),
        BTreeSet::new(),
    );
    if !intersect {
        return Ok(own);
    }
    let general = bounds_fig2a_general(t)?;
    Ok(BoundsResult::intersect(tag, &[("", &own), ("", &general)]))
}
