//! Brute-force certifiers for small dimensions.
//!
//! Nothing here calls into the maximal-element, partition or direction code;
//! only the cone primitives and plain loops over grids are used, so these
//! functions can serve as independent references for those modules.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::direction::SubproblemInstance;
use crate::error::{Error, Result};
use crate::problem::UncertainProblem;

pub const MAX_ORACLE_DIM: usize = 3;
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// Axis-aligned grid with `points[k]` equally spaced values on `[lower[k], upper[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    /// Grid with spacing at most `step` on every axis.
    pub fn with_step(lower: Vec<f64>, upper: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) || lower.len() != upper.len() {
            return Err(Error::Argument("grid needs matching bounds and a positive step".into()));
        }
        let points = lower
            .iter()
            .zip(&upper)
            .map(|(lo, hi)| ((hi - lo) / step - 1e-9).ceil().max(0.0) as usize + 1)
            .collect();
        Ok(Self { lower, upper, points })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn total(&self) -> u64 {
        self.points.iter().map(|&p| p as u64).product()
    }

    fn coordinate(&self, axis: usize, k: usize) -> f64 {
        let count = self.points[axis];
        if count <= 1 {
            return self.lower[axis];
        }
        let t = k as f64 / (count - 1) as f64;
        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || n > MAX_ORACLE_DIM {
            return Err(Error::Capacity(format!(
                "grid oracle supports 1 to {MAX_ORACLE_DIM} dimensions, got {n}"
            )));
        }
        if self.upper.len() != n || self.points.len() != n || self.points.contains(&0) {
            return Err(Error::Argument("malformed grid specification".into()));
        }
        let total = self.total();
        if total > MAX_GRID_POINTS {
            return Err(Error::Capacity(format!(
                "grid has {total} points, limit is {MAX_GRID_POINTS}"
            )));
        }
        Ok(())
    }

    /// Calls `visit` on every grid point in odometer order (last axis fastest).
    fn for_each(&self, mut visit: impl FnMut(&[f64]) -> Result<bool>) -> Result<()> {
        let n = self.dim();
        let mut idx = vec![0usize; n];
        let mut x: Vec<f64> = (0..n).map(|a| self.coordinate(a, 0)).collect();
        loop {
            if !visit(&x)? {
                return Ok(());
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.points[axis] {
                    x[axis] = self.coordinate(axis, idx[axis]);
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.coordinate(axis, 0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Certification {
    /// No grid point dominates `x̄` strictly; a statement about this grid only.
    CertifiedOnGrid { points_checked: u64 },
    /// `F_U(x) ⊆ F_U(x̄) - int K` at this grid point.
    Counterexample { x: Vec<f64>, points_checked: u64 },
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Self::CertifiedOnGrid { .. })
    }
}

fn image(prob: &UncertainProblem, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    (0..prob.num_scenarios())
        .map(|i| prob.evaluate(x, i).map(|v| v.iter().copied().collect()))
        .collect()
}

/// Every `w` in `candidate` satisfies `z - w ∈ int K` for some `z` in `reference`.
fn strictly_below(cone: &PolyhedralCone, candidate: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<bool> {
    let mut diff = vec![0.0; cone.dim()];
    for w in candidate {
        let mut covered = false;
        for z in reference {
            for (d, (a, b)) in diff.iter_mut().zip(z.iter().zip(w)) {
                *d = a - b;
            }
            if cone.contains_interior(&diff)? {
                covered = true;
                break;
            }
        }
        if !covered {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches the grid for an `x` with `F_U(x) ⊆ F_U(x̄) - int K`.
///
/// Grid points where some scenario cannot be evaluated are skipped.
pub fn certify_robust_weak_efficiency(
    prob: &UncertainProblem,
    xbar: &[f64],
    grid: &GridSpec,
) -> Result<Certification> {
    grid.check()?;
    if grid.dim() != prob.n() || xbar.len() != prob.n() {
        return Err(Error::Argument("grid and point must match the problem dimension".into()));
    }
    let reference = image(prob, xbar)?;
    let cone = prob.cone();
    let mut checked = 0u64;
    let mut found: Option<Vec<f64>> = None;
    grid.for_each(|x| {
        checked += 1;
        let Ok(candidate) = image(prob, x) else { return Ok(true) };
        if strictly_below(cone, &candidate, &reference)? {
            found = Some(x.to_vec());
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(match found {
        Some(x) => Certification::Counterexample { x, points_checked: checked },
        None => Certification::CertifiedOnGrid { points_checked: checked },
    })
}

fn minmax_value(inst: &SubproblemInstance, p: &[f64]) -> Result<f64> {
    let p = DVector::from_column_slice(p);
    let mut best = f64::NEG_INFINITY;
    for (jac, blocks) in inst.jacobians.iter().zip(&inst.blocks) {
        let mut z: Vec<f64> = jac.tr_mul(&p).iter().copied().collect();
        for (zl, b) in z.iter_mut().zip(blocks) {
            *zl += 0.5 * p.dot(&(b * &p));
        }
        best = best.max(inst.cone.gerstewitz(&z)?);
    }
    Ok(best)
}

/// Smallest `max_j Θ_e(∇F_j^T p + ½ (p^T B_j p)_l)` over a cubic grid of
/// `resolution` points per axis restricted to the ball of radius `radius`.
/// Returns the value and the minimizing grid point.
pub fn minmax_grid_point(
    inst: &SubproblemInstance,
    center: &[f64],
    radius: f64,
    resolution: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = inst.n();
    let grid = GridSpec {
        lower: center.iter().map(|c| c - radius).collect(),
        upper: center.iter().map(|c| c + radius).collect(),
        points: vec![resolution.max(1); n],
    };
    grid.check()?;
    let mut best = (f64::INFINITY, center.to_vec());
    grid.for_each(|p| {
        let r2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        if r2 <= radius * radius * (1.0 + 1e-12) {
            let v = minmax_value(inst, p)?;
            if v < best.0 {
                best = (v, p.to_vec());
            }
        }
        Ok(true)
    })?;
    Ok(best)
}

/// Dense-grid minimum of the direction objective over the ball of `radius` about 0.
pub fn minmax_grid_value(inst: &SubproblemInstance, radius: f64, resolution: usize) -> Result<f64> {
    minmax_grid_point(inst, &vec![0.0; inst.n()], radius, resolution).map(|(v, _)| v)
}

/// Grid search followed by `levels` zoomed grids centered on the incumbent,
/// each spanning four cells of the previous one in every direction. The
/// result is always an upper bound on the minimum over the ball.
pub fn minmax_grid_value_refined(
    inst: &SubproblemInstance,
    radius: f64,
    resolution: usize,
    levels: usize,
) -> Result<f64> {
    let n = inst.n();
    let (mut value, mut point) = minmax_grid_point(inst, &vec![0.0; n], radius, resolution)?;
    let mut half = radius;
    for _ in 0..levels {
        half = 8.0 * half / (resolution.max(2) - 1) as f64 * (n as f64).sqrt();
        let (v, p) = minmax_grid_point(inst, &point, half, resolution)?;
        if v < value {
            value = v;
            point = p;
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    use crate::problem::FnObjective;

    #[test]
    fn zero_jacobian_gives_zero() {
        let inst = SubproblemInstance::new(
            vec![DMatrix::zeros(2, 1)],
            vec![vec![DMatrix::identity(2, 2)]],
            PolyhedralCone::nonnegative_orthant(1),
        )
        .unwrap();
        assert_eq!(minmax_grid_value(&inst, 1.0, 11).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_example() {
        let inst = SubproblemInstance::new(
            vec![DMatrix::from_element(1, 1, 2.0)],
            vec![vec![DMatrix::from_element(1, 1, 1.0)]],
            PolyhedralCone::nonnegative_orthant(1),
        )
        .unwrap();
        let v = minmax_grid_value(&inst, 4.0, 401).unwrap();
        assert!((v + 2.0).abs() < 1e-3);
        let r = minmax_grid_value_refined(&inst, 3.0, 41, 4).unwrap();
        assert!((r + 2.0).abs() < 1e-8);
    }

    fn quadratic() -> UncertainProblem {
        let obj = FnObjective(|x: &[f64], _xi: &[f64]| vec![(x[0] - 0.3).powi(2)]);
        UncertainProblem::new("q", 1, 1, vec![vec![0.0]], Arc::new(obj), PolyhedralCone::nonnegative_orthant(1))
            .unwrap()
    }

    #[test]
    fn minimizer_is_certified_and_shifted_point_is_not() {
        let prob = quadratic();
        let grid = GridSpec::with_step(vec![-1.0], vec![1.0], 1e-3).unwrap();
        assert_eq!(grid.total(), 2001);
        assert!(certify_robust_weak_efficiency(&prob, &[0.3], &grid).unwrap().is_certified());
        match certify_robust_weak_efficiency(&prob, &[0.8], &grid).unwrap() {
            Certification::Counterexample { x, .. } => assert!((x[0] - 0.3).abs() < 0.5),
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn oversized_grids_are_rejected() {
        let grid = GridSpec { lower: vec![0.0; 4], upper: vec![1.0; 4], points: vec![2; 4] };
        assert!(matches!(grid.check(), Err(Error::Capacity(_))));
        let grid = GridSpec { lower: vec![0.0; 3], upper: vec![1.0; 3], points: vec![1000; 3] };
        assert!(matches!(grid.check(), Err(Error::Capacity(_))));
    }
}
