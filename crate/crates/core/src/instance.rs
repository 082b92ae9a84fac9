//! JSON instance files: contests with budgets and optional strategies, plus
//! one value function per designer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rounding::{interim_of_prizes, PrizeVector, DEFAULT_ENVELOPE_PIECES};
use crate::stepcalc::StepFn;

/// Slack allowed when comparing spend against a budget.
pub const BUDGET_TOL: f64 = 1e-9;

/// Step function as written in a file, validated on use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStep {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl RawStep {
    pub fn to_step(&self) -> Result<StepFn> {
        StepFn::new(self.breaks.clone(), self.values.clone())
    }
}

impl From<&StepFn> for RawStep {
    fn from(f: &StepFn) -> Self {
        RawStep {
            breaks: f.breaks().to_vec(),
            values: f.values().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StrategySpec {
    Step { breaks: Vec<f64>, values: Vec<f64> },
    Prizes { w: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contest {
    pub budget: f64,
    #[serde(default)]
    pub strategy: Option<StrategySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub contests: Vec<Contest>,
    pub values: Vec<RawStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

/// A contest's strategy resolved to the forms the solvers consume.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Step(StepFn),
    Prizes(PrizeVector),
}

impl Strategy {
    /// Interim allocation; prize vectors use the conservative lower envelope.
    pub fn interim(&self) -> Result<StepFn> {
        match self {
            Strategy::Step(f) => Ok(f.clone()),
            Strategy::Prizes(w) => interim_of_prizes(w).lower_envelope(DEFAULT_ENVELOPE_PIECES),
        }
    }
}

impl Instance {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed instance JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn contests(&self) -> usize {
        self.contests.len()
    }

    /// Checks every invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        if self.contests.is_empty() {
            return Err(Error::Validation("instance needs at least one contest".into()));
        }
        if self.values.len() != self.contests.len() {
            return Err(Error::Validation(format!(
                "{} value functions for {} contests",
                self.values.len(),
                self.contests.len()
            )));
        }
        if self.n == Some(0) {
            return Err(Error::Validation("n must be positive".into()));
        }
        for j in 0..self.contests.len() {
            let t = self.contests[j].budget;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Validation(format!(
                    "contest {j}: budget {t} must be finite and non-negative"
                )));
            }
            self.value(j)?;
            self.strategy(j)?;
        }
        Ok(())
    }

    pub fn budget(&self, j: usize) -> f64 {
        self.contests[j].budget
    }

    /// Sum of all other budgets.
    pub fn opponent_budget(&self, j: usize) -> f64 {
        (0..self.contests.len()).filter(|&k| k != j).map(|k| self.budget(k)).sum()
    }

    pub fn value(&self, j: usize) -> Result<StepFn> {
        self.values
            .get(j)
            .ok_or_else(|| Error::Validation(format!("no value function for contest {j}")))?
            .to_step()
            .map_err(|e| Error::Validation(format!("value function {j}: {e}")))
    }

    /// Validated strategy of contest `j`, if any.
    pub fn strategy(&self, j: usize) -> Result<Option<Strategy>> {
        let c = self
            .contests
            .get(j)
            .ok_or_else(|| Error::Validation(format!("no contest {j}")))?;
        let t = c.budget;
        match &c.strategy {
            None => Ok(None),
            Some(StrategySpec::Step { breaks, values }) => {
                let f = StepFn::new(breaks.clone(), values.clone())
                    .map_err(|e| Error::Validation(format!("contest {j} strategy: {e}")))?;
                if f.budget() > t + BUDGET_TOL {
                    return Err(Error::Validation(format!(
                        "contest {j}: strategy integral {} exceeds budget {t}",
                        f.budget()
                    )));
                }
                Ok(Some(Strategy::Step(f)))
            }
            Some(StrategySpec::Prizes { w }) => {
                let n = self.n.ok_or_else(|| {
                    Error::Validation(format!("contest {j}: prize vector given but instance has no n"))
                })?;
                if w.len() != n {
                    return Err(Error::Validation(format!(
                        "contest {j}: {} prizes but n = {n}",
                        w.len()
                    )));
                }
                let pv = PrizeVector::new(w.clone()).map_err(|e| Error::Validation(format!("contest {j}: {e}")))?;
                let cap = n as f64 * t;
                if pv.sum() > cap + BUDGET_TOL {
                    return Err(Error::Validation(format!(
                        "contest {j}: prize total {} exceeds n·budget = {cap}",
                        pv.sum()
                    )));
                }
                Ok(Some(Strategy::Prizes(pv)))
            }
        }
    }

    /// Interim allocation of contest `j`; errors when it has no strategy.
    pub fn interim(&self, j: usize) -> Result<StepFn> {
        self.strategy(j)?
            .ok_or_else(|| Error::Infeasible(format!("contest {j} has no strategy")))?
            .interim()
    }

    /// Interim allocations of every contest except `j`.
    pub fn others(&self, j: usize) -> Result<Vec<StepFn>> {
        (0..self.contests.len()).filter(|&k| k != j).map(|k| self.interim(k)).collect()
    }

    pub fn check_contest(&self, j: usize) -> Result<()> {
        if j >= self.contests.len() {
            return Err(Error::Domain(format!(
                "contest {j} out of range (instance has {})",
                self.contests.len()
            )));
        }
        Ok(())
    }
}
