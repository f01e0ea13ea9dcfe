//! Independent numerical checks of the closed-form bounds.
//!
//! For diagrams whose constraints are linear in the response-function
//! distribution, the sharp bounds are the optima of a linear program; for
//! every diagram, structural models can be sampled forward and their true
//! effects compared against the bounds evaluated on their observable law.

pub mod model;
pub mod quadrature;
pub mod response;
pub mod simplex;

use rayon::prelude::*;
use serde::Serialize;

pub use model::{
    expit, figure_flags, observed_from_model, sample_response_model, sample_structural_model,
    Coefficients, ModelOutcome, ResponseModel, StructuralModel,
};
pub use quadrature::NormalQuadrature;
pub use response::{enumerate_response_space, LinearSystem, ModelFigure, ResponseFunctionSpace};

use crate::bounds::bounds;
use crate::error::{Error, Result};
use crate::rng::task_rng;
use crate::scenario::{Estimand, ScenarioTag};
use crate::table::ObservedTable;

/// Slack allowed when checking that a true effect lies inside bounds.
pub const VALIDITY_SLACK: f64 = 1e-10;
/// Largest closed-form vs LP gap accepted by [`verify`].
pub const TIGHTNESS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpBounds {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LpOptions {
    /// Remove the defier level of W_X.
    pub no_defiers: bool,
    /// Add the (redundant) missing-mass rows to the constraints.
    pub include_missing_rows: bool,
    /// Optimize the assignment effect instead of the intervention effect.
    pub tau: bool,
}

/// Sharp bounds on the intervention effect over all response-function
/// distributions of `space` that reproduce `table`.
pub fn lp_bounds(
    space: &ResponseFunctionSpace,
    table: &ObservedTable,
    no_defiers: bool,
) -> Result<LpBounds> {
    lp_bounds_with(
        space,
        table,
        LpOptions {
            no_defiers,
            ..LpOptions::default()
        },
    )
}

pub fn lp_bounds_with(
    space: &ResponseFunctionSpace,
    table: &ObservedTable,
    opts: LpOptions,
) -> Result<LpBounds> {
    if opts.no_defiers && !space.figure.is_noncompliance() {
        return Err(Error::InvalidScenario(
            "no-defiers applies only to noncompliance diagrams".into(),
        ));
    }
    if opts.tau && !space.figure.is_noncompliance() {
        return Err(Error::InvalidScenario(
            "tau is only defined under noncompliance".into(),
        ));
    }
    let system = space.build_constraints(table, opts.include_missing_rows)?;
    let keep: Vec<usize> = (0..space.n_unknowns())
        .filter(|&j| !(opts.no_defiers && space.is_defier(j)))
        .collect();
    let a: Vec<Vec<f64>> = system
        .a
        .iter()
        .map(|row| keep.iter().map(|&j| row[j]).collect())
        .collect();
    let c: Vec<f64> = keep
        .iter()
        .map(|&j| {
            if opts.tau {
                space.tau_coefficient(j)
            } else {
                space.theta_coefficient(j)
            }
        })
        .collect();
    let (min, max) = simplex::min_max(&a, &system.b, &c)?;
    Ok(LpBounds { min, max })
}

/// Outcome of checking one diagram against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub figure: ModelFigure,
    pub no_defiers: bool,
    pub n_tables: usize,
    /// Largest `|closed-form - LP|` per endpoint; absent for the nonlinear
    /// diagrams, which are checked for validity only.
    pub max_abs_gap_lower: Option<f64>,
    pub max_abs_gap_upper: Option<f64>,
    pub n_validity_violations: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        let gap_ok = |g: Option<f64>| g.is_none_or(|g| g <= TIGHTNESS_TOL);
        self.n_validity_violations == 0
            && gap_ok(self.max_abs_gap_lower)
            && gap_ok(self.max_abs_gap_upper)
    }
}

/// Samples `n` coefficient models under `figure`, evaluates the matching
/// closed-form bounds on each observable table, and compares them with the
/// true intervention effect and, where available, the LP optima.
/// Draw `i` uses stream `i` of `seed`.
pub fn verify(figure: ModelFigure, no_defiers: bool, n: usize, seed: u64) -> Result<VerifyReport> {
    let tag = if no_defiers {
        ScenarioTag::new(figure.bound_figure(), true, Estimand::Theta)?
    } else {
        ScenarioTag::theta(figure.bound_figure())
    };
    let space = enumerate_response_space(figure);
    let quad = NormalQuadrature::default();
    let per_draw: Vec<(Option<(f64, f64)>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let c = sample_structural_model(figure, no_defiers, &mut rng);
            let out = observed_from_model(&StructuralModel::Coefficients(c), &quad);
            let b = bounds(tag, &out.table)?;
            let valid = b.contains(out.theta, VALIDITY_SLACK);
            let gap = if figure.is_linear() {
                let lp = lp_bounds(&space, &out.table, no_defiers)?;
                Some(((b.lower - lp.min).abs(), (b.upper - lp.max).abs()))
            } else {
                None
            };
            Ok((gap, valid))
        })
        .collect::<Result<_>>()?;
    let fold = |k: usize| {
        per_draw
            .iter()
            .filter_map(|(g, _)| g.map(|g| if k == 0 { g.0 } else { g.1 }))
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
    };
    Ok(VerifyReport {
        figure,
        no_defiers,
        n_tables: n,
        max_abs_gap_lower: fold(0),
        max_abs_gap_upper: fold(1),
        n_validity_violations: per_draw.iter().filter(|(_, v)| !v).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bounds_fig1b, bounds_fig2cde};
    use crate::table::{Fig1Table, Fig2Table};
    use approx::assert_abs_diff_eq;
    use rand::seq::SliceRandom;

    fn cells(t: &ObservedTable) -> Vec<f64> {
        match t {
            ObservedTable::Fig1(t) => t.entries().iter().flatten().copied().collect(),
            ObservedTable::Fig2(t) => t.entries().iter().flatten().flatten().copied().collect(),
        }
    }

    fn fig1b_example() -> ObservedTable {
        Fig1Table::new(0.5, [[0.5, 0.2], [0.1, 0.4]])
            .unwrap()
            .into()
    }

    #[test]
    fn fig1b_example_matches_closed_form() {
        let space = enumerate_response_space(ModelFigure::F1b);
        let lp = lp_bounds(&space, &fig1b_example(), false).unwrap();
        assert_abs_diff_eq!(lp.min, -0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(lp.max, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn complete_perfect_compliance_is_point_identified() {
        let mut p = [[[0.0; 2]; 2]; 2];
        p[1][1][1] = 0.7;
        p[1][0][1] = 0.3;
        p[0][1][0] = 0.4;
        p[0][0][0] = 0.6;
        let t: ObservedTable = Fig2Table::new(0.5, p).unwrap().into();
        for f in [ModelFigure::F2c, ModelFigure::F2d, ModelFigure::F2e] {
            let lp = lp_bounds(&enumerate_response_space(f), &t, false).unwrap();
            assert_abs_diff_eq!(lp.min, 0.3, epsilon = 1e-9);
            assert_abs_diff_eq!(lp.max, 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn model_inconsistent_table_is_infeasible() {
        // Everyone observed takes the opposite of assignment: feasible only
        // with defiers.
        let mut p = [[[0.0; 2]; 2]; 2];
        p[1][1][0] = 1.0;
        p[0][1][1] = 1.0;
        let t: ObservedTable = Fig2Table::new(0.5, p).unwrap().into();
        let space = enumerate_response_space(ModelFigure::F2b);
        assert!(lp_bounds(&space, &t, false).is_ok());
        assert_eq!(lp_bounds(&space, &t, true), Err(Error::Infeasible));
    }

    #[test]
    fn nonlinear_diagrams_are_rejected() {
        let space = enumerate_response_space(ModelFigure::F1a);
        assert!(matches!(
            lp_bounds(&space, &fig1b_example(), false),
            Err(Error::NonlinearModel(_))
        ));
    }

    #[test]
    fn optimum_invariant_under_permutations() {
        let mut rng = task_rng(11, 0);
        let space = enumerate_response_space(ModelFigure::F2c);
        for _ in 0..20 {
            let m = sample_response_model(ModelFigure::F2c, false, 0.5, &mut rng);
            let out =
                observed_from_model(&StructuralModel::Response(m), &NormalQuadrature::point(0.0));
            let sys = space.build_constraints(&out.table, false).unwrap();
            let c: Vec<f64> = (0..space.n_unknowns())
                .map(|j| space.theta_coefficient(j))
                .collect();
            let base = simplex::min_max(&sys.a, &sys.b, &c).unwrap();

            let mut rows: Vec<usize> = (0..sys.a.len()).collect();
            let mut cols: Vec<usize> = (0..c.len()).collect();
            rows.shuffle(&mut rng);
            cols.shuffle(&mut rng);
            let a: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| cols.iter().map(|&j| sys.a[i][j]).collect())
                .collect();
            let b: Vec<f64> = rows.iter().map(|&i| sys.b[i]).collect();
            let cp: Vec<f64> = cols.iter().map(|&j| c[j]).collect();
            let perm = simplex::min_max(&a, &b, &cp).unwrap();
            assert_abs_diff_eq!(base.0, perm.0, epsilon = 1e-9);
            assert_abs_diff_eq!(base.1, perm.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn missing_mass_rows_are_redundant() {
        let mut rng = task_rng(12, 0);
        for f in [
            ModelFigure::F1b,
            ModelFigure::F1c,
            ModelFigure::F2b,
            ModelFigure::F2d,
        ] {
            let space = enumerate_response_space(f);
            for _ in 0..25 {
                let c = sample_structural_model(f, false, &mut rng);
                let out = observed_from_model(
                    &StructuralModel::Coefficients(c),
                    &NormalQuadrature::new(16),
                );
                let plain = lp_bounds(&space, &out.table, false).unwrap();
                let full = lp_bounds_with(
                    &space,
                    &out.table,
                    LpOptions {
                        include_missing_rows: true,
                        ..LpOptions::default()
                    },
                )
                .unwrap();
                assert_abs_diff_eq!(plain.min, full.min, epsilon = 1e-9);
                assert_abs_diff_eq!(plain.max, full.max, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn removing_defiers_never_widens() {
        let mut rng = task_rng(13, 0);
        for f in [ModelFigure::F2b, ModelFigure::F2c] {
            let space = enumerate_response_space(f);
            for _ in 0..25 {
                let c = sample_structural_model(f, true, &mut rng);
                let out = observed_from_model(
                    &StructuralModel::Coefficients(c),
                    &NormalQuadrature::new(16),
                );
                let g = lp_bounds(&space, &out.table, false).unwrap();
                let nd = lp_bounds(&space, &out.table, true).unwrap();
                assert!(nd.min >= g.min - 1e-9 && nd.max <= g.max + 1e-9);
            }
        }
    }

    #[test]
    fn perfect_compliance_noncompliance_space_matches_figure_one() {
        let mut rng = task_rng(14, 0);
        let pairs = [
            (ModelFigure::F2b, ModelFigure::F1b),
            (ModelFigure::F2c, ModelFigure::F1c),
            (ModelFigure::F2e, ModelFigure::F1c),
        ];
        for (f2, f1) in pairs {
            for _ in 0..10 {
                let mut c = sample_structural_model(f2, false, &mut rng);
                c.alpha = [-40.0, 0.0, 80.0];
                let out = observed_from_model(
                    &StructuralModel::Coefficients(c),
                    &NormalQuadrature::new(16),
                );
                let ObservedTable::Fig2(t) = out.table else {
                    unreachable!()
                };
                // Zero the (numerically negligible) noncomplier cells exactly.
                let mut p = t.entries();
                for y in 0..2 {
                    p[1][y][0] = 0.0;
                    p[0][y][1] = 0.0;
                }
                let t = Fig2Table::new(t.p_r1(), p).unwrap();
                let a = lp_bounds(&enumerate_response_space(f2), &t.into(), false).unwrap();
                let b = lp_bounds(
                    &enumerate_response_space(f1),
                    &t.marginalize().into(),
                    false,
                )
                .unwrap();
                assert_abs_diff_eq!(a.min, b.min, epsilon = 1e-9);
                assert_abs_diff_eq!(a.max, b.max, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sampled_tables_are_feasible_and_contain_truth() {
        let mut rng = task_rng(15, 0);
        for f in ModelFigure::ALL.into_iter().filter(|f| f.is_linear()) {
            let space = enumerate_response_space(f);
            for _ in 0..10 {
                let c = sample_structural_model(f, false, &mut rng);
                let out = observed_from_model(
                    &StructuralModel::Coefficients(c),
                    &NormalQuadrature::new(32),
                );
                let lp = lp_bounds(&space, &out.table, false).unwrap();
                assert!(lp.min - 1e-9 <= out.theta && out.theta <= lp.max + 1e-9);
            }
        }
    }

    #[test]
    fn closed_forms_match_lp_on_response_models() {
        let mut rng = task_rng(16, 0);
        for _ in 0..30 {
            let m = sample_response_model(ModelFigure::F1b, false, 0.4, &mut rng);
            let space = m.space;
            let out =
                observed_from_model(&StructuralModel::Response(m), &NormalQuadrature::point(0.0));
            let ObservedTable::Fig1(t) = out.table else {
                unreachable!()
            };
            let lp = lp_bounds(&space, &out.table, false).unwrap();
            let cf = bounds_fig1b(&t);
            assert_abs_diff_eq!(cf.lower, lp.min, epsilon = 1e-9);
            assert_abs_diff_eq!(cf.upper, lp.max, epsilon = 1e-9);
        }
        for _ in 0..10 {
            let m = sample_response_model(ModelFigure::F2e, false, 0.4, &mut rng);
            let space = m.space;
            let out =
                observed_from_model(&StructuralModel::Response(m), &NormalQuadrature::point(0.0));
            let ObservedTable::Fig2(t) = out.table else {
                unreachable!()
            };
            let lp = lp_bounds(&space, &out.table, false).unwrap();
            let cf = bounds_fig2cde(&t);
            assert_abs_diff_eq!(cf.lower, lp.min, epsilon = 1e-9);
            assert_abs_diff_eq!(cf.upper, lp.max, epsilon = 1e-9);
        }
    }

    #[test]
    fn quadrature_converges_when_panels_double() {
        use super::quadrature::{DEFAULT_ORDER, DEFAULT_PANELS};
        let mut rng = task_rng(17, 0);
        let q64 = NormalQuadrature::default();
        let q128 = NormalQuadrature::composite(2 * DEFAULT_PANELS, DEFAULT_ORDER);
        for f in ModelFigure::ALL {
            for _ in 0..200 {
                let c = sample_structural_model(f, false, &mut rng);
                let a = observed_from_model(&StructuralModel::Coefficients(c.clone()), &q64);
                let b = observed_from_model(&StructuralModel::Coefficients(c), &q128);
                assert_abs_diff_eq!(a.theta, b.theta, epsilon = 1e-8);
                for (x, y) in cells(&a.table).iter().zip(cells(&b.table)) {
                    assert_abs_diff_eq!(*x, y, epsilon = 1e-8);
                }
            }
        }
    }
}
