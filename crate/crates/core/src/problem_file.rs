//! JSON problem files.
//!
//! Formulas are never parsed: a file names a built-in problem in `base` and
//! may replace its scenario set, ordering cone and sampling box, or rename it.
//!
//! ```json
//! {
//!   "name": "EX1-wide",
//!   "base": "EX1",
//!   "n": 1, "m": 2,
//!   "scenario_grid": { "lower": [0.1], "upper": [0.4], "count": 7 },
//!   "cone": { "rows": [[1, 0], [0, 1]], "interior_point": [1, 1] },
//!   "bounds": { "lower": [-3], "upper": [3] }
//! }
//! ```
//!
//! `n` and `m` are optional and, when present, must match the base problem.
//! `scenarios` (explicit list) and `scenario_grid` are mutually exclusive.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeSpec, PolyhedralCone};
use crate::error::{Error, Result};
use crate::problem::{Bounds, ScenarioGrid, UncertainProblem};
use crate::registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub base: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_grid: Option<ScenarioGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("problem file: {e}")))
    }

    pub fn build(&self) -> Result<UncertainProblem> {
        let mut prob = registry::get(&self.base)?;
        if self.n.is_some_and(|n| n != prob.n()) || self.m.is_some_and(|m| m != prob.m()) {
            return Err(Error::Argument(format!(
                "problem file dimensions do not match base `{}` (n = {}, m = {})",
                self.base,
                prob.n(),
                prob.m()
            )));
        }
        let scenarios = match (&self.scenarios, &self.scenario_grid) {
            (Some(_), Some(_)) => {
                return Err(Error::Argument("give either `scenarios` or `scenario_grid`, not both".into()))
            }
            (Some(list), None) => Some(list.clone()),
            (None, Some(g)) => Some(ScenarioGrid::thinned(&g.lower, &g.upper, g.count)?),
            (None, None) => None,
        };
        if let Some(s) = scenarios {
            prob = prob.with_scenarios(s)?;
        }
        if let Some(spec) = &self.cone {
            prob = prob.with_cone(PolyhedralCone::from_spec(spec)?)?;
        }
        if let Some(b) = &self.bounds {
            prob = prob.with_bounds(Bounds::new(b.lower.clone(), b.upper.clone())?)?;
        }
        if let Some(name) = &self.name {
            prob = prob.with_name(name.clone());
        }
        Ok(prob)
    }
}
