//! Structural models: logistic coefficient models with a normal confounder,
//! and explicit distributions over response functions.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use super::quadrature::NormalQuadrature;
use super::response::{enumerate_response_space, ModelFigure, ResponseFunctionSpace};
use crate::table::{Fig1Table, Fig2Table, ObservedTable};

/// Standard deviation of the coefficient prior (variance 4).
pub const COEFFICIENT_SD: f64 = 2.0;

pub fn expit(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Logistic model with confounder `U ~ N(0, 1)`:
///
/// * perfect compliance: `p{X=1} = expit(a1)`,
///   `p{Y=1|U,X} = expit(b1 + d1 b2 U + b3 X)`,
///   `p{O=1|U,Y,X} = expit(g1 + d2 g2 U + g3 Y + d3 g4 X)`;
/// * noncompliance: `R ~ Bernoulli(p_r1)`,
///   `p{X=1|U,R} = expit(a1 + a2 U + a3 R)`, Y as above with `d1 = 1`,
///   `p{O=1|U,R,X,Y} = expit(g1 + e1 g2 U + g3 Y + e2 g4 X + e3 g5 R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    pub figure: ModelFigure,
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub gamma: [f64; 5],
    pub delta: [bool; 3],
    pub epsilon: [bool; 3],
    pub p_r1: f64,
}

/// `(delta, epsilon)` switches that generate data under `figure`.
pub fn figure_flags(figure: ModelFigure) -> ([bool; 3], [bool; 3]) {
    match figure {
        ModelFigure::F1a => ([false, false, false], [false; 3]),
        ModelFigure::F1b => ([true, true, false], [false; 3]),
        ModelFigure::F1c => ([true, true, true], [false; 3]),
        ModelFigure::F2a => ([true, false, false], [false, false, false]),
        ModelFigure::F2b => ([true, false, false], [true, false, false]),
        ModelFigure::F2c => ([true, false, false], [true, true, false]),
        ModelFigure::F2d => ([true, false, false], [true, false, true]),
        ModelFigure::F2e => ([true, false, false], [true, true, true]),
    }
}

fn on(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

impl Coefficients {
    /// All-zero coefficients with the switches for `figure`, `p_r1 = 0.5`.
    pub fn zero(figure: ModelFigure) -> Self {
        let (delta, epsilon) = figure_flags(figure);
        Coefficients {
            figure,
            alpha: [0.0; 3],
            beta: [0.0; 3],
            gamma: [0.0; 5],
            delta,
            epsilon,
            p_r1: 0.5,
        }
    }

    pub fn p_x1(&self, u: f64, r: usize) -> f64 {
        if self.figure.is_noncompliance() {
            expit(self.alpha[0] + self.alpha[1] * u + self.alpha[2] * r as f64)
        } else {
            expit(self.alpha[0])
        }
    }

    pub fn p_y1(&self, u: f64, x: usize) -> f64 {
        expit(self.beta[0] + on(self.delta[0]) * self.beta[1] * u + self.beta[2] * x as f64)
    }

    pub fn p_o1(&self, u: f64, y: usize, x: usize, r: usize) -> f64 {
        let g = &self.gamma;
        if self.figure.is_noncompliance() {
            let e = &self.epsilon;
            expit(
                g[0] + on(e[0]) * g[1] * u
                    + g[2] * y as f64
                    + on(e[1]) * g[3] * x as f64
                    + on(e[2]) * g[4] * r as f64,
            )
        } else {
            let d = &self.delta;
            expit(g[0] + on(d[1]) * g[1] * u + g[2] * y as f64 + on(d[2]) * g[3] * x as f64)
        }
    }
}

/// A distribution over the joint response-function block of a diagram,
/// plus the marginal probability of the randomized variable (X or R).
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseModel {
    pub space: ResponseFunctionSpace,
    pub p_assign: f64,
    pub joint: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructuralModel {
    Coefficients(Coefficients),
    Response(ResponseModel),
}

impl StructuralModel {
    pub fn figure(&self) -> ModelFigure {
        match self {
            StructuralModel::Coefficients(c) => c.figure,
            StructuralModel::Response(m) => m.space.figure,
        }
    }
}

/// Observable table and true effects implied by a model. `tau` is present
/// under noncompliance only.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub table: ObservedTable,
    pub theta: f64,
    pub tau: Option<f64>,
}

fn bern(p: f64, v: usize) -> f64 {
    if v == 1 {
        p
    } else {
        1.0 - p
    }
}

/// Observable law and true effects of `model`.
///
/// Coefficient models integrate U with `quad`. The table and the effects are
/// computed under the same discrete U distribution, so checks of bounds
/// against the truth are exact for that distribution.
pub fn observed_from_model(model: &StructuralModel, quad: &NormalQuadrature) -> ModelOutcome {
    match model {
        StructuralModel::Coefficients(c) => from_coefficients(c, quad),
        StructuralModel::Response(m) => from_response(m),
    }
}

fn from_coefficients(c: &Coefficients, quad: &NormalQuadrature) -> ModelOutcome {
    let theta = quad.expect(|u| c.p_y1(u, 1) - c.p_y1(u, 0));
    if !c.figure.is_noncompliance() {
        let mut t = [[0.0; 2]; 2];
        for (&u, &w) in quad.nodes.iter().zip(&quad.weights) {
            for x in 0..2 {
                let py = c.p_y1(u, x);
                for (y, row) in t.iter_mut().enumerate() {
                    row[x] += w * bern(py, y) * c.p_o1(u, y, x, 0);
                }
            }
        }
        let table = Fig1Table::new(c.p_x1(0.0, 0), t).expect("model tables are valid");
        return ModelOutcome {
            table: table.into(),
            theta,
            tau: None,
        };
    }
    let mut t = [[[0.0; 2]; 2]; 2];
    for (&u, &w) in quad.nodes.iter().zip(&quad.weights) {
        for r in 0..2 {
            let px = c.p_x1(u, r);
            for x in 0..2 {
                let py = c.p_y1(u, x);
                for y in 0..2 {
                    t[x][y][r] += w * bern(px, x) * bern(py, y) * c.p_o1(u, y, x, r);
                }
            }
        }
    }
    let tau = quad.expect(|u| (c.p_x1(u, 1) - c.p_x1(u, 0)) * (c.p_y1(u, 1) - c.p_y1(u, 0)));
    let table = Fig2Table::new(c.p_r1, t).expect("model tables are valid");
    ModelOutcome {
        table: table.into(),
        theta,
        tau: Some(tau),
    }
}

fn from_response(m: &ResponseModel) -> ModelOutcome {
    let s = &m.space;
    let law = s.observed_law(&m.joint);
    let theta = m
        .joint
        .iter()
        .enumerate()
        .map(|(j, p)| p * s.theta_coefficient(j))
        .sum();
    if !s.figure.is_noncompliance() {
        let mut t = [[0.0; 2]; 2];
        for x in 0..2 {
            for (y, row) in t.iter_mut().enumerate() {
                row[x] = law[x * 2 + y];
            }
        }
        let table = Fig1Table::new(m.p_assign, t).expect("model tables are valid");
        return ModelOutcome {
            table: table.into(),
            theta,
            tau: None,
        };
    }
    let mut t = [[[0.0; 2]; 2]; 2];
    for r in 0..2 {
        for (x, plane) in t.iter_mut().enumerate() {
            for (y, cell) in plane.iter_mut().enumerate() {
                cell[r] = law[(r * 2 + x) * 2 + y];
            }
        }
    }
    let tau = m
        .joint
        .iter()
        .enumerate()
        .map(|(j, p)| p * s.tau_coefficient(j))
        .sum();
    let table = Fig2Table::new(m.p_assign, t).expect("model tables are valid");
    ModelOutcome {
        table: table.into(),
        theta,
        tau: Some(tau),
    }
}

/// Draws logistic coefficients for `figure` from independent
/// `N(0, COEFFICIENT_SD^2)` priors, with `p_r1 ~ U(0.2, 0.8)` under
/// noncompliance. With `no_defiers`, `a3` is redrawn until positive, which
/// makes X monotone in R for every U.
pub fn sample_structural_model<R: Rng + ?Sized>(
    figure: ModelFigure,
    no_defiers: bool,
    rng: &mut R,
) -> Coefficients {
    let normal = Normal::new(0.0, COEFFICIENT_SD).expect("finite sd");
    let mut c = Coefficients::zero(figure);
    let mut draw = || normal.sample(rng);
    c.alpha[0] = draw();
    for b in c.beta.iter_mut() {
        *b = draw();
    }
    for g in c.gamma.iter_mut().take(4) {
        *g = draw();
    }
    if figure.is_noncompliance() {
        c.alpha[1] = draw();
        c.alpha[2] = draw();
        c.gamma[4] = draw();
        if no_defiers {
            while c.alpha[2] <= 0.0 {
                c.alpha[2] = draw();
            }
        }
        c.p_r1 = rng.random_range(0.2..0.8);
    }
    c
}

fn dirichlet<R: Rng + ?Sized>(len: usize, concentration: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let v: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            return v.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Draws a response-function distribution for `figure` from symmetric
/// Dirichlet priors with the given concentration, respecting the diagram's
/// independence structure. Small concentrations put most mass on a few
/// levels, which exercises the vertices of the constraint polytope.
pub fn sample_response_model<R: Rng + ?Sized>(
    figure: ModelFigure,
    no_defiers: bool,
    concentration: f64,
    rng: &mut R,
) -> ResponseModel {
    let space = enumerate_response_space(figure);
    let p_assign = rng.random_range(0.2..0.8);
    let n = space.n_unknowns();
    let mut joint = match figure {
        // W_Y and W_O independent.
        ModelFigure::F1a => {
            let wy = dirichlet(space.n_y, concentration, rng);
            let wo = dirichlet(space.n_o, concentration, rng);
            (0..n)
                .map(|j| {
                    let (_, y, o) = space.decode(j);
                    wy[y] * wo[o]
                })
                .collect()
        }
        // (W_X, W_Y) joint, W_O independent.
        ModelFigure::F2a => {
            let wxy = dirichlet(space.n_x * space.n_y, concentration, rng);
            let wo = dirichlet(space.n_o, concentration, rng);
            (0..n)
                .map(|j| {
                    let (x, y, o) = space.decode(j);
                    wxy[x * space.n_y + y] * wo[o]
                })
                .collect()
        }
        _ => dirichlet(n, concentration, rng),
    };
    if no_defiers && figure.is_noncompliance() {
        for (j, p) in joint.iter_mut().enumerate() {
            if space.is_defier(j) {
                *p = 0.0;
            }
        }
        let total: f64 = joint.iter().sum();
        if total > 0.0 {
            for p in joint.iter_mut() {
                *p /= total;
            }
        } else {
            joint = vec![0.0; n];
            joint[0] = 1.0;
        }
    }
    ResponseModel {
        space,
        p_assign,
        joint,
    }
}
