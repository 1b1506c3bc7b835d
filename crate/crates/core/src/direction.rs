//! Direction finding: for each partition tuple `β`, minimize
//!
//! ```text
//! φ_x(β, p) = max_j Θ_e( ∇F(x, ξ_{β_j})^T p + ½ (p^T B_j^{(l)} p)_l )
//! ```
//!
//! over `p ∈ R^n`, then take the best tuple. Expanding `Θ_e` over the cone
//! rows turns each inner problem into a finite max of convex quadratics
//! `f_k(p) = c_k^T p + ½ p^T Q_k p`, one per `(j, row)` pair. The min–max is
//! solved through its concave dual on the simplex,
//! `g(λ) = min_p Σ λ_k f_k(p)`, whose minimizer `p(λ) = -Q(λ)^{-1} c(λ)` is
//! available in closed form and whose gradient is `(f_k(p(λ)))_k`. The gap
//! `max_k f_k(p(λ)) - g(λ)` certifies optimality.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::hessian::HessianStore;
use crate::problem::UncertainProblem;
use crate::set_ops::{max_elements, partition_set, PartitionSet, ScenarioImage};

pub const DEFAULT_SUBPROBLEM_TOL: f64 = 1e-8;
pub const MAX_DUAL_ITERS: usize = 10_000;

/// Stationarity threshold on `|φ(x)|` used by diagnostics.
pub const STAT_TOL: f64 = 1e-3;

/// Relative eigenvalue floor below which an aggregated piece is shifted.
const PD_FLOOR: f64 = 1e-8;

/// Data of `φ_x(β, ·)` for one fixed tuple `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemInstance {
    /// `∇F(x, ξ_{β_j})`, each `n × m`.
    pub jacobians: Vec<DMatrix<f64>>,
    /// `blocks[j][l] = B^{(β_j, l)}`, each `n × n`.
    pub blocks: Vec<Vec<DMatrix<f64>>>,
    pub cone: PolyhedralCone,
}

/// One smooth piece `c^T p + ½ p^T Q p` of the expanded min–max.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub c: DVector<f64>,
    pub q: DMatrix<f64>,
    /// `μ` added to the diagonal of `Q` when the aggregated matrix was not PD.
    pub shift: f64,
}

impl Piece {
    pub fn eval(&self, p: &DVector<f64>) -> f64 {
        self.c.dot(p) + 0.5 * p.dot(&(&self.q * p))
    }
}

impl SubproblemInstance {
    pub fn new(
        jacobians: Vec<DMatrix<f64>>,
        blocks: Vec<Vec<DMatrix<f64>>>,
        cone: PolyhedralCone,
    ) -> Result<Self> {
        let omega = jacobians.len();
        if omega == 0 || blocks.len() != omega {
            return Err(Error::Argument("subproblem needs one block set per Jacobian".into()));
        }
        let (n, m) = jacobians[0].shape();
        if m != cone.dim() {
            return Err(Error::Argument(format!("jacobian has {m} columns, cone dimension {}", cone.dim())));
        }
        for (j, (jac, bj)) in jacobians.iter().zip(&blocks).enumerate() {
            if jac.shape() != (n, m) || bj.len() != m || bj.iter().any(|b| b.shape() != (n, n)) {
                return Err(Error::Argument(format!("subproblem data for j = {j} has wrong shape")));
            }
        }
        Ok(Self { jacobians, blocks, cone })
    }

    /// Instance for tuple `beta`, with Jacobians indexed by scenario.
    pub fn for_tuple(
        beta: &[usize],
        jacobians: &[DMatrix<f64>],
        store: &HessianStore,
        cone: &PolyhedralCone,
    ) -> Result<Self> {
        let m = cone.dim();
        Self::new(
            beta.iter().map(|&i| jacobians[i].clone()).collect(),
            beta.iter()
                .map(|&i| (0..m).map(|l| store.block(i, l).clone()).collect())
                .collect(),
            cone.clone(),
        )
    }

    pub fn n(&self) -> usize {
        self.jacobians[0].nrows()
    }

    pub fn omega(&self) -> usize {
        self.jacobians.len()
    }

    /// `∇F_j^T p + ½ (p^T B_j^{(l)} p)_l`.
    pub fn model_vector(&self, j: usize, p: &DVector<f64>) -> DVector<f64> {
        let mut v = self.jacobians[j].tr_mul(p);
        for (l, b) in self.blocks[j].iter().enumerate() {
            v[l] += 0.5 * p.dot(&(b * p));
        }
        v
    }

    /// `φ_x(β, p)` evaluated straight from its definition.
    pub fn objective(&self, p: &DVector<f64>) -> f64 {
        (0..self.omega())
            .map(|j| self.cone.gerstewitz_unchecked(self.model_vector(j, p).as_slice()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Expanded pieces, ordered by `j` then cone row; pieces whose matrix is
    /// not safely positive definite are shifted by `μ I`.
    pub fn pieces(&self) -> Vec<Piece> {
        let scaled = self.cone.scaled_rows();
        let n = self.n();
        let mut out = Vec::with_capacity(self.omega() * scaled.nrows());
        for (jac, blocks) in self.jacobians.iter().zip(&self.blocks) {
            for r in 0..scaled.nrows() {
                let row = scaled.row(r).transpose();
                let c = jac * &row;
                let mut q = DMatrix::zeros(n, n);
                for (l, b) in blocks.iter().enumerate() {
                    if row[l] != 0.0 {
                        q += b * row[l];
                    }
                }
                let q = (&q + q.transpose()) * 0.5;
                let shift = pd_shift(&q);
                let q = if shift > 0.0 { q + DMatrix::identity(n, n) * shift } else { q };
                out.push(Piece { c, q, shift });
            }
        }
        out
    }
}

/// Diagonal shift that lifts the smallest eigenvalue of `q` to `PD_FLOOR * max(1, ‖q‖_F)`.
fn pd_shift(q: &DMatrix<f64>) -> f64 {
    let floor = PD_FLOOR * q.norm().max(1.0);
    if let Some(chol) = q.clone().cholesky() {
        // cheap acceptance: a factorization whose pivots are all above the floor
        if chol.l_dirty().diagonal().iter().all(|d| d * d > floor) {
            return 0.0;
        }
    }
    let min_eig = SymmetricEigen::new(q.clone()).eigenvalues.min();
    if min_eig >= floor {
        0.0
    } else {
        floor - min_eig
    }
}

/// Dual multipliers on the simplex, one per piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights(pub Vec<f64>);

impl SimplexWeights {
    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn is_on_simplex(&self, tol: f64) -> bool {
        self.0.iter().all(|&v| v >= -tol) && (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Result of minimizing `φ_x(β, ·)` for one tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBetaSolution {
    pub p: DVector<f64>,
    /// `max_k f_k(p)`, the primal value at `p`.
    pub value: f64,
    pub weights: SimplexWeights,
    /// `g(λ)`, a lower bound on the true minimum.
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Regularization shift per piece (zero when unshifted).
    pub shifts: Vec<f64>,
}

impl FixedBetaSolution {
    pub fn regularized(&self) -> bool {
        self.shifts.iter().any(|&s| s > 0.0)
    }
}

struct DualPoint {
    lambda: Vec<f64>,
    p: DVector<f64>,
    f: Vec<f64>,
    g: f64,
}

fn dual_eval(pieces: &[Piece], lambda: Vec<f64>) -> Result<DualPoint> {
    let n = pieces[0].c.len();
    let mut q = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    for (piece, &w) in pieces.iter().zip(&lambda) {
        if w != 0.0 {
            q += &piece.q * w;
            c += &piece.c * w;
        }
    }
    let chol = q
        .cholesky()
        .ok_or_else(|| Error::Numerical("aggregated subproblem matrix is singular".into()))?;
    let p = -chol.solve(&c);
    let f: Vec<f64> = pieces.iter().map(|pc| pc.eval(&p)).collect();
    let g = f.iter().zip(&lambda).map(|(fk, w)| fk * w).sum();
    Ok(DualPoint { lambda, p, f, g })
}

/// Best primal point and best dual multipliers seen so far.
struct Incumbent {
    p: DVector<f64>,
    value: f64,
    lambda: Vec<f64>,
    g: f64,
}

impl Incumbent {
    fn from_point(pt: &DualPoint) -> Self {
        Self {
            p: pt.p.clone(),
            value: pt.f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            lambda: pt.lambda.clone(),
            g: pt.g,
        }
    }

    fn absorb(&mut self, pt: &DualPoint) {
        let value = pt.f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.absorb_primal(&pt.p, value);
        if pt.g > self.g {
            self.g = pt.g;
            self.lambda.clone_from(&pt.lambda);
        }
    }

    fn absorb_primal(&mut self, p: &DVector<f64>, value: f64) {
        if value < self.value {
            self.value = value;
            self.p.clone_from(p);
        }
    }

    fn gap(&self) -> f64 {
        (self.value - self.g).max(0.0)
    }

    fn converged(&self, tol: f64) -> bool {
        self.gap() <= tol * self.g.abs().max(1.0)
    }
}

/// Projected-gradient iterations before switching to the barrier method.
const GRADIENT_BUDGET: usize = 500;

/// Minimizes `φ_x(β, ·)` to a certified dual gap of `tol * max(1, |g|)`.
///
/// Runs projected gradient ascent on the dual over the simplex
/// (Barzilai–Borwein steps, Armijo backtracking on `g`). If that has not
/// closed the gap after a fixed budget, a log-barrier Newton method on the
/// epigraph form takes over; its central-path multipliers feed the same
/// dual certificate.
pub fn solve_fixed_beta(inst: &SubproblemInstance, tol: f64) -> Result<FixedBetaSolution> {
    let pieces = inst.pieces();
    solve_pieces(&pieces, tol)
}

pub fn solve_pieces(pieces: &[Piece], tol: f64) -> Result<FixedBetaSolution> {
    if pieces.is_empty() {
        return Err(Error::Argument("min-max needs at least one piece".into()));
    }
    let shifts: Vec<f64> = pieces.iter().map(|p| p.shift).collect();
    // identical pieces (e.g. scenarios sharing gradients) only add degeneracy
    let mut unique: Vec<Piece> = Vec::new();
    let mut slot = Vec::with_capacity(pieces.len());
    for pc in pieces {
        match unique.iter().position(|u| u.c == pc.c && u.q == pc.q) {
            Some(u) => slot.push(u),
            None => {
                slot.push(unique.len());
                unique.push(pc.clone());
            }
        }
    }
    let (mut inc, mut iterations) = dual_search(&unique, tol)?;
    if !inc.converged(tol) {
        // Badly scaled Hessians: retry in u with p = D u, D = diag(1 / sqrt(max_k Q_k,ii)).
        // Piece values are invariant under the substitution.
        let (retry, more) = dual_search_scaled(&unique, tol)?;
        iterations += more;
        if retry.gap() < inc.gap() {
            inc = retry;
        }
    }
    if !inc.converged(tol) {
        iterations += refine_supports(&unique, tol, &mut inc)?;
    }
    // p = 0 has value max_k f_k(0) = 0 and may beat an approximate minimizer
    inc.absorb_primal(&DVector::zeros(inc.p.len()), 0.0);
    let gap = inc.gap();
    if inc.converged(tol) {
        let mut weights = vec![0.0; pieces.len()];
        let mut seen = vec![false; unique.len()];
        for (k, &u) in slot.iter().enumerate() {
            if !seen[u] {
                seen[u] = true;
                weights[k] = inc.lambda[u];
            }
        }
        Ok(FixedBetaSolution {
            p: inc.p,
            value: inc.value,
            weights: SimplexWeights(weights),
            dual_value: inc.g,
            gap,
            iterations,
            shifts,
        })
    } else {
        Err(Error::SubproblemNonconvergence {
            gap,
            value: inc.value,
            p: inc.p.iter().copied().collect(),
        })
    }
}

/// Last resort: Newton polish on a range of candidate supports, taken both
/// from the dual weights and from the pieces that are nearly active at the
/// primal incumbent.
fn refine_supports(pieces: &[Piece], tol: f64, inc: &mut Incumbent) -> Result<usize> {
    let mut steps = 0;
    for level in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        if inc.converged(tol) {
            break;
        }
        let lambda = inc.lambda.clone();
        let top = lambda.iter().copied().fold(0.0, f64::max);
        steps += active_set_polish(pieces, inc, &lambda, level * top)?;
        if inc.converged(tol) {
            break;
        }
        // pieces within a relative band of the primal maximum join the support
        let values: Vec<f64> = pieces.iter().map(|pc| pc.eval(&inc.p)).collect();
        let band = level.sqrt() * inc.value.abs().max(1.0);
        let near: Vec<f64> = values
            .iter()
            .zip(&lambda)
            .map(|(&v, &l)| if v >= inc.value - band { l.max(top * 1e-3) } else { 0.0 })
            .collect();
        steps += active_set_polish(pieces, inc, &near, 0.0)?;
    }
    Ok(steps)
}

fn dual_search_scaled(pieces: &[Piece], tol: f64) -> Result<(Incumbent, usize)> {
    let n = pieces[0].c.len();
    let scale = DVector::from_fn(n, |i, _| {
        let d = pieces.iter().map(|u| u.q[(i, i)]).fold(0.0, f64::max);
        if d.is_finite() && d > 0.0 { d.sqrt().recip() } else { 1.0 }
    });
    let scaled: Vec<Piece> = pieces
        .iter()
        .map(|u| Piece {
            c: u.c.component_mul(&scale),
            q: DMatrix::from_fn(n, n, |i, j| u.q[(i, j)] * scale[i] * scale[j]),
            shift: u.shift,
        })
        .collect();
    let (mut inc, iterations) = dual_search(&scaled, tol)?;
    inc.p.component_mul_assign(&scale);
    Ok((inc, iterations))
}

fn dual_search(pieces: &[Piece], tol: f64) -> Result<(Incumbent, usize)> {
    let k = pieces.len();
    // Start from the best vertex: each single piece is an unconstrained quadratic.
    let mut cur: Option<DualPoint> = None;
    for v in 0..k {
        let mut lambda = vec![0.0; k];
        lambda[v] = 1.0;
        let pt = dual_eval(pieces, lambda)?;
        if cur.as_ref().is_none_or(|b| pt.g > b.g) {
            cur = Some(pt);
        }
    }
    let mut cur = cur.expect("k >= 1");
    let mut inc = Incumbent::from_point(&cur);
    if inc.converged(tol) {
        return Ok((inc, 0));
    }
    let start = dual_eval(pieces, SimplexWeights::uniform(k).0)?;
    inc.absorb(&start);
    if start.g > cur.g {
        cur = start;
    }

    let mut step = 1.0 / cur.f.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    while iterations < GRADIENT_BUDGET.min(MAX_DUAL_ITERS) {
        if inc.converged(tol) {
            return Ok((inc, iterations));
        }
        iterations += 1;
        if let Some((lam_prev, grad_prev)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..k {
                let s = cur.lambda[i] - lam_prev[i];
                let y = cur.f[i] - grad_prev[i];
                ss += s * s;
                sy += s * y;
            }
            // g is concave, so s^T y <= 0 along ascent steps
            if sy < 0.0 && ss > 0.0 {
                step = (ss / -sy).clamp(1e-12, 1e12);
            }
        }
        let trial: Vec<f64> = cur.lambda.iter().zip(&cur.f).map(|(l, g)| l + step * g).collect();
        let target = project_simplex(&trial);
        let dir: Vec<f64> = target.iter().zip(&cur.lambda).map(|(t, l)| t - l).collect();
        let slope: f64 = dir.iter().zip(&cur.f).map(|(d, g)| d * g).sum();
        if !(slope > 0.0) {
            break;
        }
        let mut t = 1.0;
        let next = loop {
            let lambda: Vec<f64> = cur
                .lambda
                .iter()
                .zip(&dir)
                .map(|(l, d)| (l + t * d).max(0.0))
                .collect();
            let sum: f64 = lambda.iter().sum();
            let lambda: Vec<f64> = lambda.iter().map(|l| l / sum).collect();
            let pt = dual_eval(pieces, lambda)?;
            if pt.g >= cur.g + 1e-4 * t * slope {
                break Some(pt);
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some(next) = next else { break };
        inc.absorb(&next);
        prev = Some((cur.lambda.clone(), cur.f.clone()));
        cur = next;
    }
    if !inc.converged(tol) {
        let lambda = inc.lambda.clone();
        let top = lambda.iter().copied().fold(0.0, f64::max);
        iterations += active_set_polish(pieces, &mut inc, &lambda, 1e-6 * top)?;
    }
    if !inc.converged(tol) {
        iterations += barrier_search(pieces, tol, &mut inc, MAX_DUAL_ITERS - iterations)?;
    }
    Ok((inc, iterations))
}

fn max_piece(pieces: &[Piece], p: &DVector<f64>) -> f64 {
    pieces.iter().map(|pc| pc.eval(p)).fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `(n+1)`-dimensional Newton systems, adding a tiny ridge if the
/// matrix is numerically indefinite.
fn newton_solve(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let ridge = 1e-14 * h.diagonal().amax().max(1e-300);
    let dim = h.nrows();
    (h + DMatrix::identity(dim, dim) * ridge).cholesky().map(|ch| ch.solve(rhs))
}

const CENTERING_STEPS: usize = 200;
const POLISH_STEPS: usize = 30;

/// Newton's method on the KKT system of the pieces carrying weight in
/// `lambda`: `Σ λ_k ∇f_k(p) = 0`, `f_k(p) = t`, `Σ λ_k = 1`. Degenerate
/// supports are handled by least-squares steps. Every iterate is offered
/// to the incumbent, so a wrong guess of the support costs time but never
/// accuracy. Returns the number of Newton steps.
fn active_set_polish(pieces: &[Piece], inc: &mut Incumbent, lambda: &[f64], threshold: f64) -> Result<usize> {
    let n = pieces[0].c.len();
    let support: Vec<usize> = (0..pieces.len()).filter(|&k| lambda[k] > threshold).collect();
    if support.is_empty() {
        return Ok(0);
    }
    let a = support.len();
    let dim = n + 1 + a;
    let mut p = inc.p.clone();
    let mut t = support.iter().map(|&k| pieces[k].eval(&p)).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = support.iter().map(|&k| lambda[k]).sum();
    let mut lam: Vec<f64> = support.iter().map(|&k| lambda[k] / total).collect();
    let mut steps = 0;
    for _ in 0..POLISH_STEPS {
        steps += 1;
        let mut jac = DMatrix::zeros(dim, dim);
        let mut res = DVector::zeros(dim);
        for (idx, &k) in support.iter().enumerate() {
            let pc = &pieces[k];
            let gk = &pc.c + &pc.q * &p;
            for r in 0..n {
                res[r] += lam[idx] * gk[r];
                jac[(r, n + 1 + idx)] = gk[r];
                jac[(n + 1 + idx, r)] = gk[r];
            }
            jac.view_mut((0, 0), (n, n)).zip_apply(&pc.q, |x, q| *x += lam[idx] * q);
            res[n + 1 + idx] = pc.eval(&p) - t;
            jac[(n + 1 + idx, n)] = -1.0;
            jac[(n, n + 1 + idx)] = 1.0;
        }
        res[n] = lam.iter().sum::<f64>() - 1.0;
        let scale = res.amax();
        if !(scale > 0.0) {
            break;
        }
        let svd = jac.svd(true, true);
        let Ok(delta) = svd.solve(&(-&res), 1e-13 * svd.singular_values.max()) else { break };
        p += delta.rows(0, n);
        t += delta[n];
        for (idx, l) in lam.iter_mut().enumerate() {
            *l += delta[n + 1 + idx];
        }
        if !p.iter().all(|v| v.is_finite()) {
            break;
        }
        inc.absorb_primal(&p, max_piece(pieces, &p));
        if lam.iter().all(|&l| l >= 0.0) {
            let mut full = vec![0.0; pieces.len()];
            let sum: f64 = lam.iter().sum();
            if sum > 0.0 {
                for (idx, &k) in support.iter().enumerate() {
                    full[k] = lam[idx] / sum;
                }
                if let Ok(pt) = dual_eval(pieces, full) {
                    inc.absorb(&pt);
                }
            }
        }
        if delta.amax() <= 1e-15 * (1.0 + p.amax()) {
            break;
        }
    }
    // Degenerate supports leave the Newton multipliers undetermined and
    // possibly negative; recover nonnegative ones at the polished point.
    if lam.iter().any(|&l| l < 0.0) && p.iter().all(|v| v.is_finite()) {
        let weight = support
            .iter()
            .map(|&k| (&pieces[k].c + &pieces[k].q * &p).amax())
            .fold(1.0, f64::max);
        let mut m = DMatrix::zeros(n + 1, a);
        for (idx, &k) in support.iter().enumerate() {
            let gk = &pieces[k].c + &pieces[k].q * &p;
            m.view_mut((0, idx), (n, 1)).copy_from(&gk);
            m[(n, idx)] = weight;
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = weight;
        let w = nnls(&m, &rhs);
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            let mut full = vec![0.0; pieces.len()];
            for (idx, &k) in support.iter().enumerate() {
                full[k] = w[idx] / sum;
            }
            if let Ok(pt) = dual_eval(pieces, full) {
                inc.absorb(&pt);
            }
        }
    }
    Ok(steps)
}

/// Nonnegative least squares `min ‖A w - b‖, w >= 0` (Lawson–Hanson).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let cols = a.ncols();
    let mut w = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0);
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&idx);
        let svd = sub.svd(true, true);
        let z = svd
            .solve(b, 1e-14 * svd.singular_values.max())
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut full = DVector::zeros(cols);
        for (pos, &j) in idx.iter().enumerate() {
            full[j] = z[pos];
        }
        full
    };
    for _ in 0..3 * cols + 10 {
        let grad = a.tr_mul(&(b - a * &w));
        let pick = (0..cols)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..cols).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                w = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for j in (0..cols).filter(|&j| passive[j] && z[j] <= 0.0) {
                alpha = alpha.min(w[j] / (w[j] - z[j]));
            }
            w += (z - &w) * alpha;
            for j in 0..cols {
                if passive[j] && w[j] <= 1e-15 {
                    passive[j] = false;
                    w[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    w
}

/// Barrier method for `min t s.t. f_k(p) <= t`, warm-started at the
/// incumbent primal point. Returns the number of Newton steps taken.
fn barrier_search(pieces: &[Piece], tol: f64, inc: &mut Incumbent, budget: usize) -> Result<usize> {
    let k = pieces.len();
    let n = pieces[0].c.len();
    let mut p = inc.p.clone();
    let fmax = max_piece(pieces, &p);
    let scale = fmax.abs().max(inc.gap()).max(1e-8);
    let mut t = fmax + scale;
    let mut s = k as f64 / scale;
    let mut steps = 0;

    let barrier = |p: &DVector<f64>, t: f64, s: f64| -> f64 {
        let mut acc = s * t;
        for pc in pieces {
            let r = t - pc.eval(p);
            if !(r > 0.0) {
                return f64::INFINITY;
            }
            acc -= r.ln();
        }
        acc
    };

    while steps < budget {
        // centering
        let mut centered = false;
        let stage_end = (steps + CENTERING_STEPS).min(budget);
        while steps < stage_end {
            steps += 1;
            let mut grad = DVector::zeros(n + 1);
            let mut h = DMatrix::zeros(n + 1, n + 1);
            grad[n] = s;
            for pc in pieces {
                let r = t - pc.eval(&p);
                let gk = &pc.c + &pc.q * &p;
                let inv = 1.0 / r;
                let inv2 = inv * inv;
                grad.rows_mut(0, n).axpy(inv, &gk, 1.0);
                grad[n] -= inv;
                h.view_mut((0, 0), (n, n)).zip_apply(&pc.q, |a, b| *a += inv * b);
                h.view_mut((0, 0), (n, n)).ger(inv2, &gk, &gk, 1.0);
                for i in 0..n {
                    h[(i, n)] -= inv2 * gk[i];
                }
                h[(n, n)] += inv2;
            }
            for i in 0..n {
                h[(n, i)] = h[(i, n)];
            }
            let Some(delta) = newton_solve(h, &(-&grad)) else { break };
            let decrement = -grad.dot(&delta);
            if !(decrement > 1e-14) {
                centered = true;
                break;
            }
            let dp = delta.rows(0, n).into_owned();
            let dt = delta[n];
            let phi0 = barrier(&p, t, s);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-16 {
                let pn = &p + &dp * alpha;
                let tn = t + dt * alpha;
                if barrier(&pn, tn, s) <= phi0 - 0.25 * alpha * decrement {
                    p = pn;
                    t = tn;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                centered = true;
                break;
            }
            if decrement < 1e-10 {
                centered = true;
                break;
            }
        }
        // central-path multipliers lie on the simplex up to centering error
        let mut lambda: Vec<f64> = pieces.iter().map(|pc| 1.0 / (s * (t - pc.eval(&p)))).collect();
        let sum: f64 = lambda.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            lambda.iter_mut().for_each(|l| *l /= sum);
            let pt = dual_eval(pieces, lambda.clone())?;
            inc.absorb(&pt);
            inc.absorb_primal(&p, max_piece(pieces, &p));
            if !inc.converged(tol) {
                // complementarity: active pieces keep λ_k bounded while r_k -> 0
                let threshold = 1.0 / (s * t.abs().max(1.0)).sqrt();
                steps += active_set_polish(pieces, inc, &lambda, threshold)?;
            }
        } else {
            inc.absorb_primal(&p, max_piece(pieces, &p));
        }
        if inc.converged(tol) || !centered {
            break;
        }
        if (k as f64) / s < 1e-3 * tol * inc.g.abs().max(1.0) {
            break;
        }
        s *= 20.0;
    }
    Ok(steps)
}

/// Outcome of the direction search over the whole partition set.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult {
    pub beta: Vec<usize>,
    pub p: DVector<f64>,
    /// `φ(x) = min_β min_p φ_x(β, p)`.
    pub phi: f64,
    pub solution: FixedBetaSolution,
    /// Model vectors `∇F_j^T p + ½ (p^T B_j p)_l` of the chosen tuple.
    pub models: Vec<DVector<f64>>,
    /// Minimum value reached for every tuple, in partition order.
    pub tuple_values: Vec<f64>,
}

impl DirectionResult {
    /// Shift applied to piece `(j, row)` of the chosen tuple.
    pub fn shift(&self, j: usize, row: usize, rows: usize) -> f64 {
        self.solution.shifts[j * rows + row]
    }
}

/// Minimizes over every tuple of the partition set; ties go to the
/// lexicographically smallest tuple.
pub fn solve_direction(
    partition: &PartitionSet,
    jacobians: &[DMatrix<f64>],
    store: &HessianStore,
    cone: &PolyhedralCone,
    tol: f64,
) -> Result<DirectionResult> {
    if partition.is_empty() {
        return Err(Error::Argument("empty partition set".into()));
    }
    let mut best: Option<(usize, SubproblemInstance, FixedBetaSolution)> = None;
    let mut tuple_values = Vec::with_capacity(partition.len());
    for (t, beta) in partition.tuples.iter().enumerate() {
        let inst = SubproblemInstance::for_tuple(beta, jacobians, store, cone)?;
        let sol = solve_fixed_beta(&inst, tol)?;
        tuple_values.push(sol.value);
        if best.as_ref().is_none_or(|(_, _, b)| sol.value < b.value) {
            best = Some((t, inst, sol));
        }
    }
    let (t, inst, solution) = best.expect("nonempty partition");
    let models = (0..inst.omega()).map(|j| inst.model_vector(j, &solution.p)).collect();
    Ok(DirectionResult {
        beta: partition.tuples[t].clone(),
        p: solution.p.clone(),
        phi: solution.value,
        solution,
        models,
        tuple_values,
    })
}

/// Scenario Jacobians at `x`, indexed by scenario.
pub fn all_jacobians(prob: &UncertainProblem, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    (0..prob.num_scenarios()).map(|i| prob.jacobian(x, i)).collect()
}

/// Full direction step at `x`: image, maximal elements, partition set and
/// the minimizing `(β, p)`.
pub fn solve_step2(
    prob: &UncertainProblem,
    x: &[f64],
    store: &HessianStore,
    tol: f64,
) -> Result<(ScenarioImage, DirectionResult)> {
    let image = max_elements(prob.evaluate_image(x)?, prob.cone())?;
    let partition = partition_set(&image)?;
    let jacobians = all_jacobians(prob, x)?;
    let dir = solve_direction(&partition, &jacobians, store, prob.cone(), tol)?;
    Ok((image, dir))
}

/// `φ(x)`; values at or above `-STAT_TOL` indicate a stationary point.
pub fn stationarity_value(prob: &UncertainProblem, x: &[f64], store: &HessianStore) -> Result<f64> {
    solve_step2(prob, x, store, DEFAULT_SUBPROBLEM_TOL).map(|(_, d)| d.phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_instance(g: f64, b: f64) -> SubproblemInstance {
        SubproblemInstance::new(
            vec![DMatrix::from_element(1, 1, g)],
            vec![vec![DMatrix::from_element(1, 1, b)]],
            PolyhedralCone::nonnegative_orthant(1),
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_quadratic() {
        // min 2p + p^2/2 -> p = -2, value -2
        let sol = solve_fixed_beta(&scalar_instance(2.0, 1.0), 1e-10).unwrap();
        assert!((sol.p[0] + 2.0).abs() < 1e-12);
        assert!((sol.value + 2.0).abs() < 1e-12);
        assert!(sol.gap <= 1e-10);
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let sol = solve_fixed_beta(&scalar_instance(0.0, 3.0), 1e-10).unwrap();
        assert_eq!(sol.p[0], 0.0);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn symmetric_pieces_cross_at_zero() {
        // f1 = p + p^2/2, f2 = -p + p^2/2
        let inst = SubproblemInstance::new(
            vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, -1.0)],
            vec![
                vec![DMatrix::from_element(1, 1, 1.0)],
                vec![DMatrix::from_element(1, 1, 1.0)],
            ],
            PolyhedralCone::nonnegative_orthant(1),
        )
        .unwrap();
        let sol = solve_fixed_beta(&inst, 1e-10).unwrap();
        assert!(sol.p[0].abs() < 1e-8);
        assert!(sol.value.abs() < 1e-8);
        assert!(sol.weights.is_on_simplex(1e-12));
        assert!((sol.weights.0[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.2, 0.2, 0.2]);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(project_simplex(&[5.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.6, 0.6]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn objective_matches_pieces_for_orthant() {
        let jac = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let b = vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2) * 2.0];
        let inst =
            SubproblemInstance::new(vec![jac], vec![b], PolyhedralCone::nonnegative_orthant(2)).unwrap();
        let p = DVector::from_column_slice(&[0.3, -0.7]);
        let by_pieces = inst.pieces().iter().map(|pc| pc.eval(&p)).fold(f64::NEG_INFINITY, f64::max);
        assert!((inst.objective(&p) - by_pieces).abs() < 1e-14);
    }

    #[test]
    fn indefinite_aggregate_is_shifted() {
        // rows (3,-1)/2 and (-1,3)/2 with b1 = 1, b2 = 10: first aggregate is 1.5 - 5 < 0
        let cone = PolyhedralCone::new(&[vec![3.0, -1.0], vec![-1.0, 3.0]], &[1.0, 1.0]).unwrap();
        let inst = SubproblemInstance::new(
            vec![DMatrix::from_row_slice(1, 2, &[1.0, 1.0])],
            vec![vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 10.0)]],
            cone,
        )
        .unwrap();
        let pieces = inst.pieces();
        assert!(pieces[0].shift > 0.0);
        assert!(pieces[0].q[(0, 0)] > 0.0);
        assert_eq!(pieces[1].shift, 0.0);
        let sol = solve_fixed_beta(&inst, 1e-10).unwrap();
        assert!(sol.regularized());
        assert!(sol.value < 0.0);
    }
}
