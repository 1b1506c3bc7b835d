//! Polyhedral ordering cones and the Gerstewitz scalarizing function.
//!
//! A cone is stored as `K = { z : A z >= 0 }` together with an interior
//! point `e` (`A e > 0`). The rows of `A` are elements of the dual cone, so
//! membership, strict membership and the scalarization all reduce to a
//! handful of dot products.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default tolerance shared by the strict and non-strict membership tests.
pub const DEFAULT_CONE_TOL: f64 = 1e-10;

/// Serializable description of a cone, as found in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub rows: Vec<Vec<f64>>,
    pub interior_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Closed, convex, pointed and solid cone `{ z : A z >= 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    rows: DMatrix<f64>,
    interior: DVector<f64>,
    /// Row `i` divided by `a_i^T e`; the Gerstewitz value is the max of `scaled * z`.
    scaled: DMatrix<f64>,
    row_dot_e: Vec<f64>,
    tol: f64,
}

impl PolyhedralCone {
    /// Builds a cone from its inequality rows and an interior point.
    ///
    /// Fails when `A e > 0` does not hold row-wise or when `A` does not have
    /// full column rank (the cone would contain a line).
    pub fn new(rows: &[Vec<f64>], interior_point: &[f64]) -> Result<Self> {
        let m = interior_point.len();
        if m == 0 {
            return Err(Error::Argument("cone dimension must be positive".into()));
        }
        if rows.len() < m {
            return Err(Error::Argument(format!(
                "cone in R^{m} needs at least {m} rows to be pointed, got {}",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            check_dim(&format!("cone row {i}"), row.len(), m)?;
        }
        if rows.iter().flatten().chain(interior_point).any(|v| !v.is_finite()) {
            return Err(Error::Argument("cone data must be finite".into()));
        }

        let q = rows.len();
        let a = DMatrix::from_fn(q, m, |i, j| rows[i][j]);
        let e = DVector::from_column_slice(interior_point);
        let ae = &a * &e;
        if let Some(i) = ae.iter().position(|&v| v <= 0.0) {
            return Err(Error::Argument(format!(
                "interior point is not interior: row {i} gives a^T e = {}",
                ae[i]
            )));
        }

        // Az >= 0 and -Az >= 0 force Az = 0, so pointedness is exactly full column rank.
        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > smax * 1e-12 * (q.max(m) as f64))
            .count();
        if rank < m {
            return Err(Error::Argument(format!(
                "cone is not pointed: row matrix has rank {rank} < {m}"
            )));
        }

        let row_dot_e: Vec<f64> = ae.iter().copied().collect();
        let scaled = DMatrix::from_fn(q, m, |i, j| a[(i, j)] / row_dot_e[i]);
        Ok(Self {
            rows: a,
            interior: e,
            scaled,
            row_dot_e,
            tol: DEFAULT_CONE_TOL,
        })
    }

    /// `R^m_+` with `e = (1, ..., 1)`.
    pub fn nonnegative_orthant(m: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(&rows, &vec![1.0; m]).expect("orthant is a valid cone")
    }

    pub fn from_spec(spec: &ConeSpec) -> Result<Self> {
        let cone = Self::new(&spec.rows, &spec.interior_point)?;
        match spec.tolerance {
            Some(t) => cone.with_tolerance(t),
            None => Ok(cone),
        }
    }

    pub fn to_spec(&self) -> ConeSpec {
        ConeSpec {
            rows: (0..self.num_rows())
                .map(|i| self.rows.row(i).iter().copied().collect())
                .collect(),
            interior_point: self.interior.iter().copied().collect(),
            tolerance: Some(self.tol),
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::Argument(format!("cone tolerance must be >= 0, got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    /// Dimension `m` of the ambient space.
    pub fn dim(&self) -> usize {
        self.interior.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Rows normalized so that `a_i^T e = 1`.
    pub fn scaled_rows(&self) -> &DMatrix<f64> {
        &self.scaled
    }

    /// `a_i^T e` for each row.
    pub fn row_dot_e(&self) -> &[f64] {
        &self.row_dot_e
    }

    pub fn interior_point(&self) -> &DVector<f64> {
        &self.interior
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `z ∈ K`, i.e. `a_i^T z >= -tol` for every row.
    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        check_dim("cone membership", z.len(), self.dim())?;
        Ok(self.contains_unchecked(z))
    }

    /// `z ∈ int K`, i.e. `a_i^T z > tol` for every row.
    pub fn contains_interior(&self, z: &[f64]) -> Result<bool> {
        check_dim("cone interior membership", z.len(), self.dim())?;
        Ok(self.contains_interior_unchecked(z))
    }

    /// Gerstewitz function `min { t : t e ∈ z + K }`.
    ///
    /// For a polyhedral cone this is `max_i a_i^T z / a_i^T e`.
    pub fn gerstewitz(&self, z: &[f64]) -> Result<f64> {
        check_dim("gerstewitz", z.len(), self.dim())?;
        Ok(self.gerstewitz_unchecked(z))
    }

    /// Lipschitz constant of the Gerstewitz function w.r.t. the Euclidean norm.
    pub fn lipschitz_constant(&self) -> f64 {
        (0..self.num_rows())
            .map(|i| self.rows.row(i).norm() / self.row_dot_e[i])
            .fold(0.0, f64::max)
    }

    fn row_dot(&self, i: usize, z: &[f64]) -> f64 {
        self.rows.row(i).iter().zip(z).map(|(a, v)| a * v).sum()
    }

    pub(crate) fn contains_unchecked(&self, z: &[f64]) -> bool {
        (0..self.num_rows()).all(|i| self.row_dot(i, z) >= -self.tol)
    }

    pub(crate) fn contains_interior_unchecked(&self, z: &[f64]) -> bool {
        (0..self.num_rows()).all(|i| self.row_dot(i, z) > self.tol)
    }

    pub(crate) fn gerstewitz_unchecked(&self, z: &[f64]) -> f64 {
        (0..self.num_rows())
            .map(|i| self.scaled.row(i).iter().zip(z).map(|(a, v)| a * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
