//! Per-scenario, per-component BFGS approximations `B^{(i,l)}`.
//!
//! Each scenario `ξ_i` owns `m` symmetric positive definite `n × n` blocks,
//! one per objective component, so the quadratic term of the model
//! `∇F(x, ξ_i)^T p + ½ (p^T B^{(i,1)} p, ..., p^T B^{(i,m)} p)` is an
//! `m`-vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::UncertainProblem;

pub const DEFAULT_CURVATURE_TOL: f64 = 1e-8;

/// Eigenvalue floor applied to finite-difference Hessians.
pub const EIGEN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianInit {
    /// Every block starts as the identity.
    #[default]
    Identity,
    /// Each block starts as a finite-difference Hessian with eigenvalues floored at [`EIGEN_FLOOR`].
    #[serde(alias = "fd")]
    ExactFd,
}

impl std::str::FromStr for HessianInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "fd" | "exact_fd" | "exact_hessian_fd" => Ok(Self::ExactFd),
            other => Err(Error::Argument(format!(
                "unknown hessian init `{other}` (expected identity or fd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStatus {
    Applied,
    /// `s^T y` failed the curvature safeguard; the block was left unchanged.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianStore {
    n: usize,
    m: usize,
    p: usize,
    /// Block `(i, l)` lives at `i * m + l`.
    blocks: Vec<DMatrix<f64>>,
    curvature_tol: f64,
}

impl HessianStore {
    /// `p * m` identity blocks of size `n`.
    pub fn identity(n: usize, m: usize, p: usize) -> Self {
        Self {
            n,
            m,
            p,
            blocks: vec![DMatrix::identity(n, n); p * m],
            curvature_tol: DEFAULT_CURVATURE_TOL,
        }
    }

    pub fn init(prob: &UncertainProblem, x0: &[f64], mode: HessianInit) -> Result<Self> {
        let (n, m, p) = (prob.n(), prob.m(), prob.num_scenarios());
        if x0.len() != n {
            return Err(Error::Argument(format!("x0 has dimension {}, expected {n}", x0.len())));
        }
        let mut store = Self::identity(n, m, p);
        if mode == HessianInit::ExactFd {
            for i in 0..p {
                let hessians = fd_hessians(prob, x0, i)?;
                for (l, h) in hessians.into_iter().enumerate() {
                    store.blocks[i * m + l] = floor_eigenvalues(&h, EIGEN_FLOOR);
                }
            }
        }
        Ok(store)
    }

    pub fn with_curvature_tol(mut self, tol: f64) -> Self {
        self.curvature_tol = tol;
        self
    }

    pub fn curvature_tol(&self) -> f64 {
        self.curvature_tol
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.p)
    }

    pub fn block(&self, scenario: usize, component: usize) -> &DMatrix<f64> {
        &self.blocks[scenario * self.m + component]
    }

    pub fn set_block(&mut self, scenario: usize, component: usize, b: DMatrix<f64>) -> Result<()> {
        if b.shape() != (self.n, self.n) {
            return Err(Error::Argument(format!("block must be {0}x{0}", self.n)));
        }
        self.blocks[scenario * self.m + component] = b;
        Ok(())
    }

    /// The BFGS update applied to every component block of scenario `i`,
    /// with `y_per_component[l] = ∇f_l(x_{k+1}, ξ_i) - ∇f_l(x_k, ξ_i)`.
    ///
    /// Blocks whose curvature `s^T y <= c_tol ‖s‖ ‖y‖` are left unchanged.
    pub fn bfgs_update(
        &mut self,
        scenario: usize,
        s: &DVector<f64>,
        y_per_component: &[DVector<f64>],
    ) -> Result<Vec<UpdateStatus>> {
        if scenario >= self.p {
            return Err(Error::Argument(format!("scenario {scenario} out of range")));
        }
        if s.len() != self.n || y_per_component.len() != self.m {
            return Err(Error::Argument("bfgs update dimension mismatch".into()));
        }
        if y_per_component.iter().any(|y| y.len() != self.n) {
            return Err(Error::Argument("bfgs update: y has wrong length".into()));
        }
        let s_norm = s.norm();
        if !(s_norm > 0.0) {
            return Err(Error::Argument("bfgs update needs a nonzero step".into()));
        }
        let tol = self.curvature_tol;
        let mut status = Vec::with_capacity(self.m);
        for (l, y) in y_per_component.iter().enumerate() {
            let b = &mut self.blocks[scenario * self.m + l];
            let sy = s.dot(y);
            if !(sy > tol * s_norm * y.norm()) {
                status.push(UpdateStatus::Skipped);
                continue;
            }
            let bs = &*b * s;
            let sbs = s.dot(&bs);
            if !(sbs > 0.0) {
                return Err(Error::Numerical(format!(
                    "block ({scenario}, {l}) lost positive definiteness: s^T B s = {sbs}"
                )));
            }
            b.ger(-1.0 / sbs, &bs, &bs, 1.0);
            b.ger(1.0 / sy, y, y, 1.0);
            let sym = (&*b + b.transpose()) * 0.5;
            *b = sym;
            status.push(UpdateStatus::Applied);
        }
        Ok(status)
    }

    /// Every block admits a Cholesky factorization.
    pub fn all_positive_definite(&self) -> bool {
        self.blocks.iter().all(|b| b.clone().cholesky().is_some())
    }

    /// Largest `‖B - B^T‖_∞` over all blocks.
    pub fn max_asymmetry(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.transpose()).amax())
            .fold(0.0, f64::max)
    }
}

/// Central-difference Hessians of each component of `F(·, ξ_i)` at `x`,
/// built from the Jacobian and symmetrized.
pub fn fd_hessians(prob: &UncertainProblem, x: &[f64], scenario: usize) -> Result<Vec<DMatrix<f64>>> {
    let (n, m) = (prob.n(), prob.m());
    let mut hess = vec![DMatrix::zeros(n, n); m];
    let mut probe = x.to_vec();
    for k in 0..n {
        let h = 1e-5 * x[k].abs().max(1.0);
        probe[k] = x[k] + h;
        let fwd = prob.jacobian(&probe, scenario)?;
        probe[k] = x[k] - h;
        let bwd = prob.jacobian(&probe, scenario)?;
        probe[k] = x[k];
        for (l, hl) in hess.iter_mut().enumerate() {
            for r in 0..n {
                hl[(r, k)] = (fwd[(r, l)] - bwd[(r, l)]) / (2.0 * h);
            }
        }
    }
    Ok(hess.into_iter().map(|h| (&h + h.transpose()) * 0.5).collect())
}

/// Symmetric matrix with every eigenvalue below `floor` raised to `floor`.
pub fn floor_eigenvalues(b: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((b + b.transpose()) * 0.5);
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&vals) * q.transpose();
    (&out + out.transpose()) * 0.5
}
