//! Uncertain multiobjective problems `F : R^n × U -> R^m` over a finite
//! scenario set `U = {ξ_1, ..., ξ_p}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{check_dim, Error, Result};

/// Objective family evaluated at a decision vector and a scenario vector.
pub trait ScenarioObjective: Send + Sync {
    /// `F(x, ξ)`, an `m`-vector.
    fn value(&self, x: &[f64], xi: &[f64]) -> Vec<f64>;

    /// `∇_x F(x, ξ)` as an `n × m` matrix (column `l` is the gradient of `f_l`),
    /// or `None` when only values are available.
    fn jacobian(&self, _x: &[f64], _xi: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// Value-only objective backed by a closure; Jacobians come from finite differences.
pub struct FnObjective<F>(pub F);

impl<F> ScenarioObjective for FnObjective<F>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        (self.0)(x, xi)
    }
}

/// Axis-aligned box used to sample initial points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box upper bound", upper.len(), lower.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Argument("box bounds must be finite with lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; n], upper: vec![upper; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| if l < u { rng.random_range(l..=u) } else { l })
            .collect()
    }
}

/// Cartesian product of per-axis value lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub axes: Vec<Vec<f64>>,
}

impl ScenarioGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::Argument("scenario grid needs nonempty axes".into()));
        }
        Ok(Self { axes })
    }

    /// Same number of uniformly spaced values on every axis.
    pub fn uniform(lower: &[f64], upper: &[f64], per_axis: usize) -> Result<Self> {
        check_dim("scenario grid upper", upper.len(), lower.len())?;
        if per_axis == 0 {
            return Err(Error::Argument("per-axis count must be positive".into()));
        }
        Self::new(lower.iter().zip(upper).map(|(&l, &u)| linspace(l, u, per_axis)).collect())
    }

    pub fn cardinality(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    /// Point with the given index in lexicographic order (last axis fastest).
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut xi = vec![0.0; self.axes.len()];
        for (slot, axis) in xi.iter_mut().zip(&self.axes).rev() {
            *slot = axis[index % axis.len()];
            index /= axis.len();
        }
        xi
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.cardinality()).map(|i| self.point(i)).collect()
    }

    /// Exactly `count` points: the smallest uniform grid on the box with at
    /// least `count` points, thinned by an even stride through its
    /// lexicographic enumeration. One-dimensional boxes give a plain linspace.
    pub fn thinned(lower: &[f64], upper: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Argument("scenario count must be positive".into()));
        }
        let r = lower.len() as u32;
        let mut per_axis = 1usize;
        while per_axis.saturating_pow(r) < count {
            per_axis += 1;
        }
        let grid = Self::uniform(lower, upper, per_axis)?;
        let total = per_axis.pow(r) as u128;
        Ok((0..count)
            .map(|i| grid.point((i as u128 * total / count as u128) as usize))
            .collect())
    }
}

pub fn linspace(lower: f64, upper: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lower],
        _ => {
            let step = (upper - lower) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { upper } else { lower + step * i as f64 })
                .collect()
        }
    }
}

/// `{start, start + step, ..., stop}` computed as `k * step` to avoid drift.
pub fn arithmetic_range(start_tenths: i64, stop_tenths: i64) -> Vec<f64> {
    (start_tenths..=stop_tenths).map(|k| k as f64 / 10.0).collect()
}

/// One image point `(scenario index, F(x, ξ_i))`.
pub type ImagePoint = (usize, DVector<f64>);

/// An uncertain multiobjective problem with finite scenario set.
#[derive(Clone)]
pub struct UncertainProblem {
    name: String,
    source: String,
    n: usize,
    m: usize,
    scenarios: Vec<Vec<f64>>,
    objective: Arc<dyn ScenarioObjective>,
    bounds: Option<Bounds>,
    cone: PolyhedralCone,
}

impl fmt::Debug for UncertainProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UncertainProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("p", &self.scenarios.len())
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl UncertainProblem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        scenarios: Vec<Vec<f64>>,
        objective: Arc<dyn ScenarioObjective>,
        cone: PolyhedralCone,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Argument("n and m must be positive".into()));
        }
        check_dim("cone", cone.dim(), m)?;
        validate_scenarios(&scenarios)?;
        Ok(Self {
            name: name.into(),
            source: String::new(),
            n,
            m,
            scenarios,
            objective,
            bounds: None,
            cone,
        })
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        check_dim("box", bounds.dim(), self.n)?;
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_scenarios(mut self, scenarios: Vec<Vec<f64>>) -> Result<Self> {
        validate_scenarios(&scenarios)?;
        check_dim("scenario", scenarios[0].len(), self.scenario_dim())?;
        self.scenarios = scenarios;
        Ok(self)
    }

    pub fn with_cone(mut self, cone: PolyhedralCone) -> Result<Self> {
        check_dim("cone", cone.dim(), self.m)?;
        self.cone = cone;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Origin tag of the objective family (e.g. the deterministic test problem it extends).
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Scenario dimension `r`.
    pub fn scenario_dim(&self) -> usize {
        self.scenarios[0].len()
    }

    /// Number of scenarios `p = |U|`.
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn scenarios(&self) -> &[Vec<f64>] {
        &self.scenarios
    }

    pub fn cone(&self) -> &PolyhedralCone {
        &self.cone
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }

    /// `F(x, ξ_i)`.
    pub fn evaluate(&self, x: &[f64], scenario: usize) -> Result<DVector<f64>> {
        check_dim("x", x.len(), self.n)?;
        self.evaluate_unchecked(x, scenario)
    }

    fn evaluate_unchecked(&self, x: &[f64], scenario: usize) -> Result<DVector<f64>> {
        let xi = self.scenario_ref(scenario)?;
        let v = self.objective.value(x, xi);
        if v.len() != self.m {
            return Err(Error::Evaluation {
                scenario,
                message: format!("objective returned {} components, expected {}", v.len(), self.m),
            });
        }
        if let Some(l) = v.iter().position(|c| !c.is_finite()) {
            return Err(Error::Evaluation {
                scenario,
                message: format!("component {l} is {} at x = {x:?}", v[l]),
            });
        }
        Ok(DVector::from_vec(v))
    }

    /// The image `F_U(x)` as `(scenario index, value)` pairs in scenario order.
    pub fn evaluate_image(&self, x: &[f64]) -> Result<Vec<ImagePoint>> {
        check_dim("x", x.len(), self.n)?;
        (0..self.num_scenarios())
            .map(|i| self.evaluate_unchecked(x, i).map(|v| (i, v)))
            .collect()
    }

    /// `∇_x F(x, ξ_i)` as an `n × m` matrix; analytic when the objective
    /// provides it, central differences otherwise.
    pub fn jacobian(&self, x: &[f64], scenario: usize) -> Result<DMatrix<f64>> {
        check_dim("x", x.len(), self.n)?;
        let xi = self.scenario_ref(scenario)?;
        match self.objective.jacobian(x, xi) {
            Some(jac) => {
                if jac.shape() != (self.n, self.m) {
                    return Err(Error::Evaluation {
                        scenario,
                        message: format!("jacobian has shape {:?}, expected ({}, {})", jac.shape(), self.n, self.m),
                    });
                }
                if jac.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Evaluation {
                        scenario,
                        message: format!("non-finite jacobian at x = {x:?}"),
                    });
                }
                Ok(jac)
            }
            None => self.finite_difference_jacobian(x, scenario),
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        let x = vec![0.0; self.n];
        self.objective.jacobian(&x, &self.scenarios[0]).is_some()
    }

    /// Central differences with step `1e-6 * max(1, |x_k|)`.
    pub fn finite_difference_jacobian(&self, x: &[f64], scenario: usize) -> Result<DMatrix<f64>> {
        check_dim("x", x.len(), self.n)?;
        let mut jac = DMatrix::zeros(self.n, self.m);
        let mut probe = x.to_vec();
        for k in 0..self.n {
            let h = 1e-6 * x[k].abs().max(1.0);
            probe[k] = x[k] + h;
            let fwd = self.evaluate_unchecked(&probe, scenario)?;
            probe[k] = x[k] - h;
            let bwd = self.evaluate_unchecked(&probe, scenario)?;
            probe[k] = x[k];
            let diff = (fwd - bwd) / (2.0 * h);
            jac.row_mut(k).copy_from(&diff.transpose());
        }
        Ok(jac)
    }

    /// Worst relative mismatch between the analytic Jacobian and central
    /// differences over `samples` random points of the box, measured as
    /// `‖J - J_fd‖_∞ / max(1, ‖J_fd‖_∞)` per scenario.
    pub fn jacobian_mismatch<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        let bounds = self
            .bounds
            .clone()
            .unwrap_or_else(|| Bounds::uniform(self.n, -1.0, 1.0));
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = bounds.sample(rng);
            for i in 0..self.num_scenarios() {
                let analytic = self.jacobian(&x, i)?;
                let fd = self.finite_difference_jacobian(&x, i)?;
                let scale = fd.amax().max(1.0);
                worst = worst.max((analytic - fd).amax() / scale);
            }
        }
        Ok(worst)
    }

    fn scenario_ref(&self, scenario: usize) -> Result<&[f64]> {
        self.scenarios.get(scenario).map(Vec::as_slice).ok_or_else(|| {
            Error::Argument(format!(
                "scenario index {scenario} out of range (p = {})",
                self.scenarios.len()
            ))
        })
    }
}

fn validate_scenarios(scenarios: &[Vec<f64>]) -> Result<()> {
    let first = scenarios
        .first()
        .ok_or_else(|| Error::Argument("a problem needs at least one scenario".into()))?;
    if first.is_empty() {
        return Err(Error::Argument("scenario vectors must be nonempty".into()));
    }
    for (i, s) in scenarios.iter().enumerate() {
        check_dim(&format!("scenario {i}"), s.len(), first.len())?;
    }
    Ok(())
}
