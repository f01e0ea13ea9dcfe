//! Observable probability tables.
//!
//! A [`Fig1Table`] holds the law a perfect-compliance trial identifies:
//! `p{X=1}` and the four joint probabilities `p{Y=y, O=1 | X=x}`.
//! A [`Fig2Table`] holds the noncompliance analogue: `p{R=1}` and the eight
//! probabilities `p{X=x, Y=y, O=1 | R=r}`. Everything else (missing mass per
//! arm, conditional-on-observed laws, `q_{xy.o}`) is derived.
//!
//! Tables are validated at construction and immutable afterwards.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for sum constraints.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: String) {
        self.violations.push(msg);
    }

    fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidTable(self.violations))
        }
    }
}

fn check_entry(report: &mut ValidationReport, name: &str, v: f64) {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        report.push(format!("{name} = {v} is not a probability"));
    }
}

/// Checks every invariant of a perfect-compliance table. `p_y1_x[y][x]`.
pub fn validate_fig1(p_x1: f64, p_y1_x: &[[f64; 2]; 2]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !p_x1.is_finite() || p_x1 <= 0.0 || p_x1 >= 1.0 {
        report.push(format!("p_x1 = {p_x1} must lie strictly inside (0, 1)"));
    }
    for x in 0..2 {
        for y in 0..2 {
            check_entry(&mut report, &format!("p_y1_x[y{y}_x{x}]"), p_y1_x[y][x]);
        }
        let arm = p_y1_x[0][x] + p_y1_x[1][x];
        if arm > 1.0 + SUM_TOL {
            report.push(format!("arm mass exceeds 1 for x={x}: {arm}"));
        }
    }
    report
}

/// Checks every invariant of a noncompliance table. `p_xy1_r[x][y][r]`.
pub fn validate_fig2(p_r1: f64, p_xy1_r: &[[[f64; 2]; 2]; 2]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !p_r1.is_finite() || p_r1 <= 0.0 || p_r1 >= 1.0 {
        report.push(format!("p_r1 = {p_r1} must lie strictly inside (0, 1)"));
    }
    for r in 0..2 {
        let mut arm = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let v = p_xy1_r[x][y][r];
                check_entry(&mut report, &format!("p_xy1_r[x{x}_y{y}_r{r}]"), v);
                arm += v;
            }
        }
        if arm > 1.0 + SUM_TOL {
            report.push(format!("arm mass exceeds 1 for r={r}: {arm}"));
        }
    }
    report
}

/// Observable law under perfect compliance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig1Table {
    p_x1: f64,
    p_y1_x: [[f64; 2]; 2],
}

impl Fig1Table {
    /// `p_y1_x[y][x] = p{Y=y, O=1 | X=x}`.
    pub fn new(p_x1: f64, p_y1_x: [[f64; 2]; 2]) -> Result<Self> {
        validate_fig1(p_x1, &p_y1_x).into_result()?;
        Ok(Fig1Table { p_x1, p_y1_x })
    }

    /// Builds a table from per-arm observation rates and outcome rates among
    /// the observed: `p{Y=1, O=1 | X=x} = p_obs[x] * p_y1_obs[x]`.
    pub fn from_rates(p_x1: f64, p_obs: [f64; 2], p_y1_obs: [f64; 2]) -> Result<Self> {
        let mut t = [[0.0; 2]; 2];
        for x in 0..2 {
            t[1][x] = p_obs[x] * p_y1_obs[x];
            t[0][x] = p_obs[x] * (1.0 - p_y1_obs[x]);
        }
        Fig1Table::new(p_x1, t)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_fig1(self.p_x1, &self.p_y1_x)
    }

    pub fn p_x1(&self) -> f64 {
        self.p_x1
    }

    /// `p{X=x}`.
    pub fn p_x(&self, x: usize) -> f64 {
        if x == 1 {
            self.p_x1
        } else {
            1.0 - self.p_x1
        }
    }

    /// `p{Y=y, O=1 | X=x}`.
    pub fn p(&self, y: usize, x: usize) -> f64 {
        self.p_y1_x[y][x]
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.p_y1_x
    }

    /// `p{O=1 | X=x}`.
    pub fn p_obs_x(&self, x: usize) -> f64 {
        self.p_y1_x[0][x] + self.p_y1_x[1][x]
    }

    /// `p{O=0 | X=x}`, clamped at zero against rounding.
    pub fn p_miss_x(&self, x: usize) -> f64 {
        (1.0 - self.p_obs_x(x)).max(0.0)
    }

    /// `p{Y=y | X=x, O=1}`; `None` when the arm has no observed mass.
    pub fn p_y_given_obs(&self, y: usize, x: usize) -> Option<f64> {
        let obs = self.p_obs_x(x);
        (obs > 0.0).then(|| self.p_y1_x[y][x] / obs)
    }

    /// `p{X=x, Y=y, O=1}`.
    pub fn joint_obs(&self, x: usize, y: usize) -> f64 {
        self.p_x(x) * self.p_y1_x[y][x]
    }

    /// `p{O=1}`.
    pub fn p_obs(&self) -> f64 {
        self.p_x(0) * self.p_obs_x(0) + self.p_x(1) * self.p_obs_x(1)
    }

    /// `p{O=0}`.
    pub fn p_miss(&self) -> f64 {
        self.p_x(0) * self.p_miss_x(0) + self.p_x(1) * self.p_miss_x(1)
    }

    /// The same law with the intervention coding swapped (`x* = 1 - x`).
    pub fn recoded(&self) -> Fig1Table {
        let mut t = [[0.0; 2]; 2];
        for y in 0..2 {
            t[y][0] = self.p_y1_x[y][1];
            t[y][1] = self.p_y1_x[y][0];
        }
        Fig1Table {
            p_x1: 1.0 - self.p_x1,
            p_y1_x: t,
        }
    }
}

/// Conditional laws `q_{xy.o} = p{X=x, Y=y | O=o}` that the data identify.
///
/// Only the observed stratum is identified cell by cell; for `O=0` the data
/// identify the intervention margin `p{X=x | O=0}` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTable {
    observed: Option<[[f64; 2]; 2]>,
    missing_x: Option<[f64; 2]>,
    p_obs: f64,
}

impl QTable {
    /// `q_{xy.1}`.
    pub fn q_obs(&self, x: usize, y: usize) -> Result<f64> {
        self.observed
            .map(|q| q[x][y])
            .ok_or(Error::AbsentStratum(1))
    }

    /// `p{X=x | O=0}`.
    pub fn p_x_given_missing(&self, x: usize) -> Result<f64> {
        self.missing_x.map(|m| m[x]).ok_or(Error::AbsentStratum(0))
    }

    pub fn has_stratum(&self, o: u8) -> bool {
        match o {
            1 => self.observed.is_some(),
            _ => self.missing_x.is_some(),
        }
    }

    /// `p{O=1}`.
    pub fn p_obs(&self) -> f64 {
        self.p_obs
    }
}

/// Derives `q_{xy.1}` and `p{X=x | O=0}` from a perfect-compliance table.
pub fn derive_q(table: &Fig1Table) -> QTable {
    let p_obs = table.p_obs();
    let p_miss = table.p_miss();
    let observed = (p_obs > 0.0).then(|| {
        let mut q = [[0.0; 2]; 2];
        for (x, row) in q.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell = table.joint_obs(x, y) / p_obs;
            }
        }
        q
    });
    let missing_x =
        (p_miss > 0.0).then(|| [0, 1].map(|x| table.p_x(x) * table.p_miss_x(x) / p_miss));
    QTable {
        observed,
        missing_x,
        p_obs,
    }
}

/// Observable law under noncompliance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Table {
    p_r1: f64,
    p_xy1_r: [[[f64; 2]; 2]; 2],
}

impl Fig2Table {
    /// `p_xy1_r[x][y][r] = p{X=x, Y=y, O=1 | R=r}`.
    pub fn new(p_r1: f64, p_xy1_r: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        validate_fig2(p_r1, &p_xy1_r).into_result()?;
        Ok(Fig2Table { p_r1, p_xy1_r })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_fig2(self.p_r1, &self.p_xy1_r)
    }

    pub fn p_r1(&self) -> f64 {
        self.p_r1
    }

    pub fn p_r(&self, r: usize) -> f64 {
        if r == 1 {
            self.p_r1
        } else {
            1.0 - self.p_r1
        }
    }

    /// `p{X=x, Y=y, O=1 | R=r}`.
    pub fn p(&self, x: usize, y: usize, r: usize) -> f64 {
        self.p_xy1_r[x][y][r]
    }

    pub fn entries(&self) -> [[[f64; 2]; 2]; 2] {
        self.p_xy1_r
    }

    /// `q_r = p{O=1 | R=r}`.
    pub fn q(&self, r: usize) -> f64 {
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                s += self.p_xy1_r[x][y][r];
            }
        }
        s
    }

    /// `p{O=0 | R=r}`.
    pub fn p_miss_r(&self, r: usize) -> f64 {
        (1.0 - self.q(r)).max(0.0)
    }

    /// `p{X=x, Y=y | O=1, R=r}`; `None` when the arm has no observed mass.
    pub fn p_given_obs(&self, x: usize, y: usize, r: usize) -> Option<f64> {
        let q = self.q(r);
        (q > 0.0).then(|| self.p_xy1_r[x][y][r] / q)
    }

    /// True when every observed unit received its assigned intervention.
    pub fn is_perfect_compliance(&self) -> bool {
        (0..2).all(|r| (0..2).all(|y| self.p_xy1_r[1 - r][y][r] == 0.0))
    }

    /// The table in which R plays the role of X: `p{Y=y, O=1 | R=r}`.
    pub fn marginalize(&self) -> Fig1Table {
        let mut t = [[0.0; 2]; 2];
        for (y, row) in t.iter_mut().enumerate() {
            for (r, cell) in row.iter_mut().enumerate() {
                *cell = self.p_xy1_r[0][y][r] + self.p_xy1_r[1][y][r];
            }
        }
        Fig1Table {
            p_x1: self.p_r1,
            p_y1_x: t,
        }
    }
}

/// `fig2_to_fig1_marginal` as a free function.
pub fn fig2_to_fig1_marginal(table: &Fig2Table) -> Fig1Table {
    table.marginalize()
}

/// Either table kind, as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedTable {
    Fig1(Fig1Table),
    Fig2(Fig2Table),
}

impl ObservedTable {
    pub fn kind(&self) -> &'static str {
        match self {
            ObservedTable::Fig1(_) => "perfect-compliance",
            ObservedTable::Fig2(_) => "noncompliance",
        }
    }

    /// `p{O=1}`.
    pub fn p_obs(&self) -> f64 {
        match self {
            ObservedTable::Fig1(t) => t.p_obs(),
            ObservedTable::Fig2(t) => t.p_r(0) * t.q(0) + t.p_r(1) * t.q(1),
        }
    }

    /// Joint probabilities of the ten sampling cells, in the order of
    /// `CellCounts::cells`: observed `(x, y, r)` cells, then missing by arm.
    /// Under perfect compliance the arm is the received intervention.
    pub fn cell_probabilities(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        for (i, slot) in out.iter_mut().enumerate() {
            let (x, y, r) = (i >> 2, (i >> 1) & 1, i & 1);
            *slot = match (self, i) {
                (ObservedTable::Fig1(t), 0..=7) if x == r => t.p_x(x) * t.p(y, x),
                (ObservedTable::Fig1(_), 0..=7) => 0.0,
                (ObservedTable::Fig1(t), _) => t.p_x(i - 8) * t.p_miss_x(i - 8),
                (ObservedTable::Fig2(t), 0..=7) => t.p_r(r) * t.p(x, y, r),
                (ObservedTable::Fig2(t), _) => t.p_r(i - 8) * t.p_miss_r(i - 8),
            };
        }
        out
    }

    /// Smallest conditional observed-cell probability or arm probability.
    /// Structurally zero cells (crossovers under perfect compliance) are
    /// not counted.
    pub fn min_observed_cell(&self) -> f64 {
        match self {
            ObservedTable::Fig1(t) => t
                .entries()
                .iter()
                .flatten()
                .chain(&[t.p_x(0), t.p_x(1)])
                .fold(f64::INFINITY, |a, &b| a.min(b)),
            ObservedTable::Fig2(t) => t
                .entries()
                .iter()
                .flatten()
                .flatten()
                .chain(&[t.p_r(0), t.p_r(1)])
                .fold(f64::INFINITY, |a, &b| a.min(b)),
        }
    }
}

impl From<Fig1Table> for ObservedTable {
    fn from(t: Fig1Table) -> Self {
        ObservedTable::Fig1(t)
    }
}

impl From<Fig2Table> for ObservedTable {
    fn from(t: Fig2Table) -> Self {
        ObservedTable::Fig2(t)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFig1 {
    p_x1: f64,
    p_y1_x: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFig2 {
    p_r1: f64,
    p_xy1_r: BTreeMap<String, f64>,
}

fn take(map: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    map.get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
}

fn check_keys(map: &BTreeMap<String, f64>, expected: usize) -> Result<()> {
    if map.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} probability entries, found {}",
            map.len()
        )));
    }
    Ok(())
}

impl Serialize for Fig1Table {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for y in 0..2 {
            for x in 0..2 {
                map.insert(format!("y{y}_x{x}"), self.p_y1_x[y][x]);
            }
        }
        RawFig1 {
            p_x1: self.p_x1,
            p_y1_x: map,
        }
        .serialize(s)
    }
}

impl Serialize for Fig2Table {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                for r in 0..2 {
                    map.insert(format!("x{x}_y{y}_r{r}"), self.p_xy1_r[x][y][r]);
                }
            }
        }
        RawFig2 {
            p_r1: self.p_r1,
            p_xy1_r: map,
        }
        .serialize(s)
    }
}

impl TryFrom<RawFig1> for Fig1Table {
    type Error = Error;

    fn try_from(raw: RawFig1) -> Result<Self> {
        check_keys(&raw.p_y1_x, 4)?;
        let mut t = [[0.0; 2]; 2];
        for (y, row) in t.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = take(&raw.p_y1_x, &format!("y{y}_x{x}"))?;
            }
        }
        Fig1Table::new(raw.p_x1, t)
    }
}

impl TryFrom<RawFig2> for Fig2Table {
    type Error = Error;

    fn try_from(raw: RawFig2) -> Result<Self> {
        check_keys(&raw.p_xy1_r, 8)?;
        let mut t = [[[0.0; 2]; 2]; 2];
        for (x, plane) in t.iter_mut().enumerate() {
            for (y, row) in plane.iter_mut().enumerate() {
                for (r, cell) in row.iter_mut().enumerate() {
                    *cell = take(&raw.p_xy1_r, &format!("x{x}_y{y}_r{r}"))?;
                }
            }
        }
        Fig2Table::new(raw.p_r1, t)
    }
}

impl ObservedTable {
    /// Parses either JSON table schema, dispatching on the `p_x1`/`p_r1` key.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("table must be a JSON object".into()))?;
        if obj.contains_key("p_x1") {
            let raw: RawFig1 = serde_json::from_value(value)?;
            Ok(ObservedTable::Fig1(raw.try_into()?))
        } else if obj.contains_key("p_r1") {
            let raw: RawFig2 = serde_json::from_value(value)?;
            Ok(ObservedTable::Fig2(raw.try_into()?))
        } else {
            Err(Error::Parse(
                "table must contain either 'p_x1' or 'p_r1'".into(),
            ))
        }
    }

    pub fn to_json_string(&self) -> String {
        match self {
            ObservedTable::Fig1(t) => serde_json::to_string_pretty(t),
            ObservedTable::Fig2(t) => serde_json::to_string_pretty(t),
        }
        .expect("tables always serialize")
    }
}
