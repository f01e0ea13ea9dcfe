//! Response-function parameterization of the causal diagrams.
//!
//! Every endogenous node is replaced by a categorical variable whose level
//! selects a deterministic function of the node's parents. A level is an
//! integer whose bit `t` is the function's output at the `t`-th parent tuple,
//! with tuples ordered lexicographically (first-listed parent most
//! significant). For example O with parents (Y, X) outputs bit `2y + x`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Figure;
use crate::table::ObservedTable;

/// A diagram with a concrete missingness mechanism. Unlike [`Figure`], the
/// three noncompliance diagrams that share one formula are kept apart
/// because their response spaces differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFigure {
    #[serde(rename = "1a")]
    F1a,
    #[serde(rename = "1b")]
    F1b,
    #[serde(rename = "1c")]
    F1c,
    #[serde(rename = "2a")]
    F2a,
    #[serde(rename = "2b")]
    F2b,
    #[serde(rename = "2c")]
    F2c,
    #[serde(rename = "2d")]
    F2d,
    #[serde(rename = "2e")]
    F2e,
}

/// Parents of O besides the confounder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OParents {
    Y,
    YX,
    YR,
    YXR,
}

impl ModelFigure {
    pub const ALL: [ModelFigure; 8] = [
        ModelFigure::F1a,
        ModelFigure::F1b,
        ModelFigure::F1c,
        ModelFigure::F2a,
        ModelFigure::F2b,
        ModelFigure::F2c,
        ModelFigure::F2d,
        ModelFigure::F2e,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFigure::F1a => "1a",
            ModelFigure::F1b => "1b",
            ModelFigure::F1c => "1c",
            ModelFigure::F2a => "2a",
            ModelFigure::F2b => "2b",
            ModelFigure::F2c => "2c",
            ModelFigure::F2d => "2d",
            ModelFigure::F2e => "2e",
        }
    }

    pub fn is_noncompliance(self) -> bool {
        !matches!(self, ModelFigure::F1a | ModelFigure::F1b | ModelFigure::F1c)
    }

    /// False for the diagrams without an arrow from U to O, whose
    /// constraints are products of independent blocks.
    pub fn is_linear(self) -> bool {
        !matches!(self, ModelFigure::F1a | ModelFigure::F2a)
    }

    /// The bound family derived for this diagram.
    pub fn bound_figure(self) -> Figure {
        match self {
            ModelFigure::F1a => Figure::F1a,
            ModelFigure::F1b => Figure::F1b,
            ModelFigure::F1c => Figure::F1c,
            ModelFigure::F2a => Figure::F2a,
            ModelFigure::F2b => Figure::F2b,
            ModelFigure::F2c | ModelFigure::F2d | ModelFigure::F2e => Figure::F2cde,
        }
    }

    pub fn o_parents(self) -> OParents {
        match self {
            ModelFigure::F1a | ModelFigure::F1b | ModelFigure::F2a | ModelFigure::F2b => {
                OParents::Y
            }
            ModelFigure::F1c | ModelFigure::F2c => OParents::YX,
            ModelFigure::F2d => OParents::YR,
            ModelFigure::F2e => OParents::YXR,
        }
    }
}

impl fmt::Display for ModelFigure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFigure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFigure::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidScenario(format!("unknown model figure '{s}'")))
    }
}

/// `X(0) = 1, X(1) = 0`.
pub const DEFIER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseFunctionSpace {
    pub figure: ModelFigure,
    /// Levels of W_X: the two values of X under perfect compliance, the four
    /// functions of R otherwise.
    pub n_x: usize,
    pub n_y: usize,
    pub n_o: usize,
}

pub fn enumerate_response_space(figure: ModelFigure) -> ResponseFunctionSpace {
    let n_o = match figure.o_parents() {
        OParents::Y => 4,
        OParents::YX | OParents::YR => 16,
        OParents::YXR => 256,
    };
    ResponseFunctionSpace {
        figure,
        n_x: if figure.is_noncompliance() { 4 } else { 2 },
        n_y: 4,
        n_o,
    }
}

/// `Σ_j a[i][j] P_j = b[i]` over the joint response distribution `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl ResponseFunctionSpace {
    /// X as a function of assignment.
    pub fn f_x(&self, wx: usize, r: usize) -> usize {
        (wx >> r) & 1
    }

    pub fn f_y(&self, wy: usize, x: usize) -> usize {
        (wy >> x) & 1
    }

    pub fn f_o(&self, wo: usize, y: usize, x: usize, r: usize) -> usize {
        let t = match self.figure.o_parents() {
            OParents::Y => y,
            OParents::YX => 2 * y + x,
            OParents::YR => 2 * y + r,
            OParents::YXR => 4 * y + 2 * x + r,
        };
        (wo >> t) & 1
    }

    /// Size of the jointly distributed block. Under perfect compliance W_X is
    /// independent of (W_Y, W_O) and is factored out.
    pub fn n_unknowns(&self) -> usize {
        if self.figure.is_noncompliance() {
            self.n_x * self.n_y * self.n_o
        } else {
            self.n_y * self.n_o
        }
    }

    pub fn index(&self, wx: usize, wy: usize, wo: usize) -> usize {
        if self.figure.is_noncompliance() {
            (wx * self.n_y + wy) * self.n_o + wo
        } else {
            wy * self.n_o + wo
        }
    }

    /// Inverse of [`index`](Self::index); `wx` is 0 under perfect compliance.
    pub fn decode(&self, j: usize) -> (usize, usize, usize) {
        let wo = j % self.n_o;
        let rest = j / self.n_o;
        let wy = rest % self.n_y;
        let wx = rest / self.n_y;
        (wx, wy, wo)
    }

    /// Number of observed-probability rows: 4 under perfect compliance, 8 otherwise.
    pub fn n_observed_rows(&self) -> usize {
        if self.figure.is_noncompliance() {
            8
        } else {
            4
        }
    }

    /// Coefficient of unknown `j` in observed row `row`.
    ///
    /// Rows are ordered `x * 2 + y` for `p{Y=y, O=1 | X=x}` and
    /// `(r * 2 + x) * 2 + y` for `p{X=x, Y=y, O=1 | R=r}`.
    pub fn observed_coefficient(&self, row: usize, j: usize) -> f64 {
        let (wx, wy, wo) = self.decode(j);
        let y = row & 1;
        let x = (row >> 1) & 1;
        let r = row >> 2;
        let hit = if self.figure.is_noncompliance() {
            self.f_x(wx, r) == x && self.f_y(wy, x) == y && self.f_o(wo, y, x, r) == 1
        } else {
            self.f_y(wy, x) == y && self.f_o(wo, y, x, 0) == 1
        };
        f64::from(u8::from(hit))
    }

    /// Coefficient of unknown `j` in the missing-mass row for arm `arm`
    /// (`p{O=0 | X=arm}` or `p{O=0 | R=arm}`).
    pub fn missing_coefficient(&self, arm: usize, j: usize) -> f64 {
        let (wx, wy, wo) = self.decode(j);
        let (x, r) = if self.figure.is_noncompliance() {
            (self.f_x(wx, arm), arm)
        } else {
            (arm, 0)
        };
        let y = self.f_y(wy, x);
        f64::from(u8::from(self.f_o(wo, y, x, r) == 0))
    }

    /// Observed rows applied to a joint response distribution, in row order.
    pub fn observed_law(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n_observed_rows())
            .map(|row| {
                p.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| v * self.observed_coefficient(row, j))
                    .sum()
            })
            .collect()
    }

    /// Per-level contribution to the intervention effect:
    /// `f_Y(w_y, 1) - f_Y(w_y, 0)`.
    pub fn theta_coefficient(&self, j: usize) -> f64 {
        let (_, wy, _) = self.decode(j);
        self.f_y(wy, 1) as f64 - self.f_y(wy, 0) as f64
    }

    /// Per-level contribution to the assignment effect (noncompliance only).
    pub fn tau_coefficient(&self, j: usize) -> f64 {
        let (wx, wy, _) = self.decode(j);
        self.f_y(wy, self.f_x(wx, 1)) as f64 - self.f_y(wy, self.f_x(wx, 0)) as f64
    }

    pub fn is_defier(&self, j: usize) -> bool {
        self.figure.is_noncompliance() && self.decode(j).0 == DEFIER
    }

    fn table_rhs(&self, table: &ObservedTable) -> Result<(Vec<f64>, [f64; 2])> {
        match (table, self.figure.is_noncompliance()) {
            (ObservedTable::Fig1(t), false) => {
                let mut b = vec![0.0; 4];
                for x in 0..2 {
                    for y in 0..2 {
                        b[x * 2 + y] = t.p(y, x);
                    }
                }
                Ok((b, [t.p_miss_x(0), t.p_miss_x(1)]))
            }
            (ObservedTable::Fig2(t), true) => {
                let mut b = vec![0.0; 8];
                for r in 0..2 {
                    for x in 0..2 {
                        for y in 0..2 {
                            b[(r * 2 + x) * 2 + y] = t.p(x, y, r);
                        }
                    }
                }
                Ok((b, [t.p_miss_r(0), t.p_miss_r(1)]))
            }
            _ => Err(Error::ScenarioTableMismatch {
                scenario: self.figure.to_string(),
                table: table.kind(),
            }),
        }
    }

    /// Observed-probability rows, optional missing-mass rows, and the
    /// normalization row, for the linear diagrams.
    pub fn build_constraints(
        &self,
        table: &ObservedTable,
        include_missing_rows: bool,
    ) -> Result<LinearSystem> {
        if !self.figure.is_linear() {
            return Err(Error::NonlinearModel(self.figure.to_string()));
        }
        let (obs, miss) = self.table_rhs(table)?;
        let n = self.n_unknowns();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (row, rhs) in obs.into_iter().enumerate() {
            a.push((0..n).map(|j| self.observed_coefficient(row, j)).collect());
            b.push(rhs);
        }
        if include_missing_rows {
            for (arm, rhs) in miss.into_iter().enumerate() {
                a.push((0..n).map(|j| self.missing_coefficient(arm, j)).collect());
                b.push(rhs);
            }
        }
        a.push(vec![1.0; n]);
        b.push(1.0);
        Ok(LinearSystem { a, b })
    }
}
