//! Scenario tags: which causal diagram the bounds assume and which effect they target.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Causal diagram family a bound formula is derived for.
///
/// `BestWorst` is the imputation interval; it assumes nothing about the
/// missingness mechanism and targets the assignment effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "bw")]
    BestWorst,
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
    #[serde(rename = "2cde")]
    F2cde,
}

impl Figure {
    pub fn is_perfect_compliance(self) -> bool {
        matches!(self, Figure::F1a | Figure::F1b | Figure::F1c)
    }

    pub fn is_noncompliance(self) -> bool {
        matches!(self, Figure::F2a | Figure::F2b | Figure::F2cde)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::BestWorst => "bw",
            Figure::F1a => "1a",
            Figure::F1b => "1b",
            Figure::F1c => "1c",
            Figure::F2a => "2a",
            Figure::F2b => "2b",
            Figure::F2cde => "2cde",
        }
    }

    /// The perfect-compliance diagram obtained by letting R play the role of X.
    pub fn assignment_counterpart(self) -> Option<Figure> {
        match self {
            Figure::F2a => Some(Figure::F1a),
            Figure::F2b => Some(Figure::F1b),
            Figure::F2cde => Some(Figure::F1c),
            _ => None,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bw" | "best-worst" | "bestworst" => Ok(Figure::BestWorst),
            "1a" => Ok(Figure::F1a),
            "1b" => Ok(Figure::F1b),
            "1c" => Ok(Figure::F1c),
            "2a" => Ok(Figure::F2a),
            "2b" => Ok(Figure::F2b),
            "2cde" | "2c-2e" => Ok(Figure::F2cde),
            other => Err(Error::InvalidScenario(format!("unknown figure '{other}'"))),
        }
    }
}

/// Target effect: `Theta` is the effect of receiving the intervention,
/// `Tau` the effect of being assigned to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimand {
    Theta,
    Tau,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::Theta => "theta",
            Estimand::Tau => "tau",
        })
    }
}

impl FromStr for Estimand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theta" => Ok(Estimand::Theta),
            "tau" => Ok(Estimand::Tau),
            other => Err(Error::InvalidScenario(format!(
                "unknown estimand '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioTag {
    pub figure: Figure,
    pub no_defiers: bool,
    pub estimand: Estimand,
}

impl ScenarioTag {
    /// Builds a tag, rejecting combinations that have no bound formula.
    pub fn new(figure: Figure, no_defiers: bool, estimand: Estimand) -> Result<Self> {
        let tag = ScenarioTag {
            figure,
            no_defiers,
            estimand,
        };
        tag.check()?;
        Ok(tag)
    }

    pub fn theta(figure: Figure) -> Self {
        ScenarioTag {
            figure,
            no_defiers: false,
            estimand: Estimand::Theta,
        }
    }

    pub fn theta_no_defiers(figure: Figure) -> Self {
        ScenarioTag {
            figure,
            no_defiers: true,
            estimand: Estimand::Theta,
        }
    }

    pub fn tau(figure: Figure) -> Self {
        ScenarioTag {
            figure,
            no_defiers: false,
            estimand: Estimand::Tau,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.no_defiers && !self.figure.is_noncompliance() {
            return Err(Error::InvalidScenario(format!(
                "no-defiers is only meaningful for noncompliance figures, got {}",
                self.figure
            )));
        }
        if self.estimand == Estimand::Tau && self.figure.is_perfect_compliance() {
            return Err(Error::InvalidScenario(format!(
                "tau is only defined under noncompliance, got {}",
                self.figure
            )));
        }
        if self.estimand == Estimand::Tau && self.no_defiers {
            return Err(Error::InvalidScenario(
                "assignment-effect bounds do not use the no-defiers assumption".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.figure)?;
        if self.no_defiers {
            f.write_str("-nodefiers")?;
        }
        write!(f, "/{}", self.estimand)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_requires_noncompliance_figure() {
        assert!(ScenarioTag::new(Figure::F1a, false, Estimand::Tau).is_err());
        assert!(ScenarioTag::new(Figure::F2a, false, Estimand::Tau).is_ok());
        assert!(ScenarioTag::new(Figure::BestWorst, false, Estimand::Tau).is_ok());
    }

    #[test]
    fn no_defiers_rejected_for_figure_one() {
        assert!(ScenarioTag::new(Figure::F1b, true, Estimand::Theta).is_err());
        assert!(ScenarioTag::new(Figure::F2b, true, Estimand::Theta).is_ok());
    }

    #[test]
    fn figure_round_trips_through_str() {
        for f in [
            Figure::BestWorst,
            Figure::F1a,
            Figure::F1b,
            Figure::F1c,
            Figure::F2a,
            Figure::F2b,
            Figure::F2cde,
        ] {
            assert_eq!(f.as_str().parse::<Figure>().unwrap(), f);
        }
    }
}
