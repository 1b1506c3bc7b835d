//! Quasi-Newton outer loop for the robust counterpart.
//!
//! Each iteration computes the image `F_U(x_k)`, its maximal elements and
//! partition set, finds `(β_k, p_k)`, backtracks along `p_k` until the
//! cone-valued Armijo condition holds for every selected scenario, and
//! refreshes the BFGS blocks of all scenarios.

use web_time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::direction::{all_jacobians, solve_direction, DirectionResult, DEFAULT_SUBPROBLEM_TOL};
use crate::error::{Error, Result};
use crate::hessian::{HessianInit, HessianStore};
use crate::problem::UncertainProblem;
use crate::set_ops::{max_elements, partition_product, partition_set, ScenarioImage};

/// Which conditions a trial step must meet in the backtracking search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Cone-valued Armijo test on the selected scenarios only.
    Selected,
    /// The selected-scenario test plus `Υ(F_U(x + τp)) <= Υ(F_U(x)) + γ τ φ(x)`.
    #[default]
    MeritGuarded,
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selected" => Ok(Self::Selected),
            "merit" | "merit_guarded" => Ok(Self::MeritGuarded),
            other => Err(Error::Argument(format!(
                "unknown step rule `{other}` (expected selected or merit)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub gamma: f64,
    /// Stop once `‖p_k‖` drops to this value.
    pub p_norm_tol: f64,
    pub max_iters: usize,
    /// Smallest step tried is `2^-min_step_exponent`.
    pub min_step_exponent: u32,
    pub subproblem_tol: f64,
    pub hessian_init: HessianInit,
    pub step_rule: StepRule,
    /// Seed recorded with the trace; the loop itself draws no randomness.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            p_norm_tol: 1e-4,
            max_iters: 1000,
            min_step_exponent: 30,
            subproblem_tol: DEFAULT_SUBPROBLEM_TOL,
            hessian_init: HessianInit::Identity,
            step_rule: StepRule::MeritGuarded,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Argument(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.p_norm_tol > 0.0) || !(self.subproblem_tol > 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn min_step(&self) -> f64 {
        0.5f64.powi(self.min_step_exponent as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    StationaryPoint,
    MaxIters,
    StepFloor,
    Error,
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::StationaryPoint => "StationaryPoint",
            Self::MaxIters => "MaxIters",
            Self::StepFloor => "StepFloor",
            Self::Error => "Error",
        };
        f.write_str(s)
    }
}

/// State at iterate `x_k` together with the step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    /// `F(x_k, ξ_i)` for every scenario, in scenario order.
    pub image: Vec<Vec<f64>>,
    pub maximal_ids: Vec<usize>,
    pub omega: usize,
    pub partition_size: usize,
    pub beta: Vec<usize>,
    pub p: Vec<f64>,
    pub p_norm: f64,
    pub phi: f64,
    pub dual_gap: f64,
    /// Model vectors `∇F_j^T p + ½ (p^T B_j p)_l` for the chosen tuple.
    pub models: Vec<Vec<f64>>,
    /// Whether any piece of the chosen subproblem needed a diagonal shift.
    pub regularized: bool,
    /// Non-maximal scenarios added to the direction problem by a recovery
    /// step (empty on ordinary iterations).
    #[serde(default)]
    pub near_active: Vec<usize>,
    /// Accepted step, absent on the final record.
    pub tau: Option<f64>,
    /// `max_i Θ_e(F(x_k, ξ_i))`.
    pub merit: f64,
    /// Seconds since the solve started, measured when the record was completed.
    /// Not serialized, so traces of identical runs compare equal byte for byte.
    #[serde(skip)]
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub problem: String,
    pub x0: Vec<f64>,
    pub config: SolveConfig,
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    /// Set when `status == Error`.
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed: f64,
}

impl SolveTrace {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.tau.is_some()).count()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_x(&self) -> &[f64] {
        self.records.last().map_or(&self.x0, |r| &r.x)
    }
}

/// `Υ(A) = max_{z ∈ A} Θ_e(z)`.
pub fn merit(image: &[Vec<f64>], cone: &PolyhedralCone) -> f64 {
    image
        .iter()
        .map(|z| cone.gerstewitz_unchecked(z))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `F(x, ξ_i) + γ τ m_i - F(x + τ p, ξ_i) ∈ K`.
pub fn armijo_holds(
    cone: &PolyhedralCone,
    before: &[f64],
    after: &[f64],
    model: &[f64],
    gamma: f64,
    tau: f64,
) -> bool {
    let rhs: Vec<f64> = before
        .iter()
        .zip(model)
        .zip(after)
        .map(|((b, m), a)| b + gamma * tau * m - a)
        .collect();
    rhs.iter().all(|v| v.is_finite()) && cone.contains_unchecked(&rhs)
}

/// Largest `τ ∈ {1, ½, ¼, …, 2^-min_step_exponent}` passing the Armijo test
/// for every scenario of `beta`. `None` when the floor is reached.
///
/// A trial point where some objective evaluation fails counts as a failed test.
pub fn armijo_step(
    prob: &UncertainProblem,
    x: &[f64],
    beta: &[usize],
    p: &DVector<f64>,
    models: &[DVector<f64>],
    gamma: f64,
    min_step_exponent: u32,
) -> Result<Option<f64>> {
    backtrack(prob, x, beta, p, models, gamma, min_step_exponent, None)
}

/// Merit bound used by [`StepRule::MeritGuarded`]: current merit and `φ(x)`.
#[derive(Debug, Clone, Copy)]
pub struct MeritGuard {
    pub merit: f64,
    pub phi: f64,
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    prob: &UncertainProblem,
    x: &[f64],
    beta: &[usize],
    p: &DVector<f64>,
    models: &[DVector<f64>],
    gamma: f64,
    min_step_exponent: u32,
    guard: Option<MeritGuard>,
) -> Result<Option<f64>> {
    let before: Vec<DVector<f64>> = beta.iter().map(|&i| prob.evaluate(x, i)).collect::<Result<_>>()?;
    let mut tau = 1.0;
    for _ in 0..=min_step_exponent {
        let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(xi, pi)| xi + tau * pi).collect();
        let guarded = |tau: f64| match guard {
            None => true,
            Some(g) => {
                let bound = g.merit + gamma * tau * g.phi;
                (0..prob.num_scenarios()).all(|i| match prob.evaluate(&trial, i) {
                    Ok(v) => prob.cone().gerstewitz_unchecked(v.as_slice()) <= bound,
                    Err(_) => false,
                })
            }
        };
        let ok = beta.iter().enumerate().all(|(j, &i)| match prob.evaluate(&trial, i) {
            Ok(after) => armijo_holds(
                prob.cone(),
                before[j].as_slice(),
                after.as_slice(),
                models[j].as_slice(),
                gamma,
                tau,
            ),
            Err(_) => false,
        }) && guarded(tau);
        if ok {
            return Ok(Some(tau));
        }
        tau *= 0.5;
    }
    Ok(None)
}

struct Iterate {
    image: Vec<Vec<f64>>,
    jacobians: Vec<DMatrix<f64>>,
}

fn evaluate_iterate(prob: &UncertainProblem, x: &[f64]) -> Result<Iterate> {
    let image = (0..prob.num_scenarios())
        .map(|i| prob.evaluate(x, i).map(|v| v.iter().copied().collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let jacobians = all_jacobians(prob, x)?;
    Ok(Iterate { image, jacobians })
}

fn step_direction(
    prob: &UncertainProblem,
    it: &Iterate,
    store: &HessianStore,
    tol: f64,
) -> Result<(ScenarioImage, usize, DirectionResult)> {
    let points = it
        .image
        .iter()
        .enumerate()
        .map(|(i, v)| (i, DVector::from_column_slice(v)))
        .collect();
    let image = max_elements(points, prob.cone())?;
    let partition = partition_set(&image)?;
    let dir = solve_direction(&partition, &it.jacobians, store, prob.cone(), tol)?;
    Ok((image, partition.len(), dir))
}

/// Relative margin below which a dominated scenario counts as nearly maximal.
pub const NEAR_ACTIVE_REL: f64 = 1e-6;

/// Non-maximal scenarios that no image point dominates by more than `eps`
/// in the direction of `e`, i.e. `min_w Θ_e(F_i - w) >= -eps`.
pub fn near_maximal_ids(image: &[Vec<f64>], maximal_ids: &[usize], cone: &PolyhedralCone, eps: f64) -> Vec<usize> {
    (0..image.len())
        .filter(|i| maximal_ids.binary_search(i).is_err())
        .filter(|&i| {
            image.iter().enumerate().filter(|&(w, _)| w != i).all(|(_, w)| {
                let d: Vec<f64> = image[i].iter().zip(w).map(|(a, b)| a - b).collect();
                cone.gerstewitz_unchecked(&d) >= -eps
            })
        })
        .collect()
}

/// Runs the method from `x0` and returns the full trace.
///
/// Evaluation and numerical failures end the run with `status == Error`
/// and the records gathered so far; only invalid arguments are returned as `Err`.
pub fn solve(prob: &UncertainProblem, x0: &[f64], config: &SolveConfig) -> Result<SolveTrace> {
    config.validate()?;
    if x0.len() != prob.n() {
        return Err(Error::Argument(format!(
            "x0 has dimension {}, problem `{}` has n = {}",
            x0.len(),
            prob.name(),
            prob.n()
        )));
    }
    let start = Instant::now();
    let mut trace = SolveTrace {
        problem: prob.name().to_string(),
        x0: x0.to_vec(),
        config: config.clone(),
        records: Vec::new(),
        status: TerminalStatus::Error,
        error: None,
        elapsed: 0.0,
    };
    match run(prob, x0, config, &start, &mut trace.records) {
        Ok(status) => trace.status = status,
        Err(e) => {
            trace.status = TerminalStatus::Error;
            trace.error = Some(e.to_string());
        }
    }
    trace.elapsed = start.elapsed().as_secs_f64();
    Ok(trace)
}

fn run(
    prob: &UncertainProblem,
    x0: &[f64],
    config: &SolveConfig,
    start: &Instant,
    records: &mut Vec<IterationRecord>,
) -> Result<TerminalStatus> {
    let mut store = HessianStore::init(prob, x0, config.hessian_init)?;
    let mut x = x0.to_vec();
    let mut it = evaluate_iterate(prob, &x)?;
    for k in 0.. {
        let (image, partition_size, dir) = step_direction(prob, &it, &store, config.subproblem_tol)?;
        let p_norm = dir.p.norm();
        let mut rec = IterationRecord {
            k,
            x: x.clone(),
            image: it.image.clone(),
            maximal_ids: image.maximal_ids.clone(),
            omega: dir.beta.len(),
            partition_size,
            beta: dir.beta.clone(),
            p: dir.p.iter().copied().collect(),
            p_norm,
            phi: dir.phi,
            dual_gap: dir.solution.gap,
            models: dir.models.iter().map(|m| m.iter().copied().collect()).collect(),
            regularized: dir.solution.regularized(),
            near_active: Vec::new(),
            tau: None,
            merit: merit(&it.image, prob.cone()),
            elapsed: 0.0,
        };
        if p_norm <= config.p_norm_tol {
            rec.elapsed = start.elapsed().as_secs_f64();
            records.push(rec);
            return Ok(TerminalStatus::StationaryPoint);
        }
        if k >= config.max_iters {
            rec.elapsed = start.elapsed().as_secs_f64();
            records.push(rec);
            return Ok(TerminalStatus::MaxIters);
        }
        let guarded = config.step_rule == StepRule::MeritGuarded;
        let guard = guarded.then_some(MeritGuard { merit: rec.merit, phi: rec.phi });
        let mut tau = backtrack(
            prob,
            &x,
            &dir.beta,
            &dir.p,
            &dir.models,
            config.gamma,
            config.min_step_exponent,
            guard,
        )?;
        let mut dir = dir;
        if tau.is_none() && guarded {
            // Recovery near a non-regular point: require joint descent of every
            // scenario that is maximal up to a small margin, including members
            // of a value group whose gradients differ.
            let eps = NEAR_ACTIVE_REL * rec.merit.abs().max(1.0);
            let near = near_maximal_ids(&it.image, &image.maximal_ids, prob.cone(), eps);
            let clustered = image.value_groups.iter().any(|g| g.len() > 1);
            if !near.is_empty() || clustered {
                let mut groups: Vec<Vec<usize>> = image.maximal_ids.iter().map(|&i| vec![i]).collect();
                groups.extend(near.iter().map(|&i| vec![i]));
                let partition = partition_product(&groups)?;
                let wide = solve_direction(&partition, &it.jacobians, &store, prob.cone(), config.subproblem_tol)?;
                rec.near_active = near;
                rec.omega = wide.beta.len();
                rec.partition_size = partition.len();
                rec.beta = wide.beta.clone();
                rec.p = wide.p.iter().copied().collect();
                rec.p_norm = wide.p.norm();
                rec.phi = wide.phi;
                rec.dual_gap = wide.solution.gap;
                rec.models = wide.models.iter().map(|m| m.iter().copied().collect()).collect();
                rec.regularized = wide.solution.regularized();
                if rec.p_norm <= config.p_norm_tol {
                    rec.elapsed = start.elapsed().as_secs_f64();
                    records.push(rec);
                    return Ok(TerminalStatus::StationaryPoint);
                }
                let guard = MeritGuard { merit: rec.merit, phi: rec.phi };
                tau = backtrack(
                    prob,
                    &x,
                    &wide.beta,
                    &wide.p,
                    &wide.models,
                    config.gamma,
                    config.min_step_exponent,
                    Some(guard),
                )?;
                dir = wide;
            }
        }
        let Some(tau) = tau else {
            rec.elapsed = start.elapsed().as_secs_f64();
            records.push(rec);
            return Ok(TerminalStatus::StepFloor);
        };
        rec.tau = Some(tau);
        let s = &dir.p * tau;
        let x_next: Vec<f64> = x.iter().zip(s.iter()).map(|(a, b)| a + b).collect();
        let next = match evaluate_iterate(prob, &x_next) {
            Ok(next) => next,
            Err(e) => {
                rec.elapsed = start.elapsed().as_secs_f64();
                records.push(rec);
                return Err(e);
            }
        };
        if s.norm() > 0.0 {
            for i in 0..prob.num_scenarios() {
                let y: Vec<DVector<f64>> = (0..prob.m())
                    .map(|l| next.jacobians[i].column(l) - it.jacobians[i].column(l))
                    .collect();
                store.bfgs_update(i, &s, &y)?;
            }
        }
        rec.elapsed = start.elapsed().as_secs_f64();
        records.push(rec);
        x = x_next;
        it = next;
    }
    unreachable!("loop exits through a terminal status")
}

/// One violated property found while replaying a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceViolation {
    pub k: usize,
    pub kind: String,
    pub detail: String,
}

/// Replays a trace against the problem. Images are re-evaluated from the
/// recorded iterates (`image` flags a mismatch, `step` a broken
/// `x_{k+1} = x_k + τ_k p_k`), then every accepted iteration is checked for
/// merit descent (`merit`) and the cone Armijo inequality (`armijo`). With `check_set_descent`, also requires every image point at `x_{k+1}`
/// to lie in `F_U(x_k) - int K`.
pub fn verify_trace(
    prob: &UncertainProblem,
    trace: &SolveTrace,
    check_set_descent: bool,
) -> Vec<TraceViolation> {
    let cone = prob.cone();
    let gamma = trace.config.gamma;
    let mut out = Vec::new();
    let mut flag = |k: usize, kind: &str, detail: String| {
        out.push(TraceViolation { k, kind: kind.into(), detail });
    };
    // images are recomputed from the iterates; recorded ones must agree
    let images: Vec<Option<Vec<Vec<f64>>>> = trace
        .records
        .iter()
        .map(|r| {
            let image: Option<Vec<Vec<f64>>> = (0..prob.num_scenarios())
                .map(|i| prob.evaluate(&r.x, i).ok().map(|v| v.iter().copied().collect()))
                .collect();
            match &image {
                None => flag(r.k, "image", "iterate cannot be evaluated".into()),
                Some(img) => {
                    let drift = img
                        .iter()
                        .zip(&r.image)
                        .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs() / u.abs().max(1.0)))
                        .fold(0.0, f64::max);
                    if img.len() != r.image.len() || drift > 1e-12 {
                        flag(r.k, "image", format!("recorded image differs by {drift:.3e}"));
                    }
                }
            }
            image
        })
        .collect();
    for (pos, pair) in trace.records.windows(2).enumerate() {
        let (cur, next) = (&pair[0], &pair[1]);
        let Some(tau) = cur.tau else {
            flag(cur.k, "step", "record without a step is followed by another record".into());
            continue;
        };
        let expected: Vec<f64> = cur.x.iter().zip(&cur.p).map(|(x, p)| x + tau * p).collect();
        if expected != next.x {
            flag(cur.k, "step", "x_{k+1} differs from x_k + tau p_k".into());
        }
        let (Some(before), Some(after)) = (&images[pos], &images[pos + 1]) else { continue };
        let merit_before = merit(before, cone);
        let merit_after = merit(after, cone);
        let bound = merit_before + gamma * tau * cur.phi + 1e-10;
        if !(merit_after <= bound) {
            flag(cur.k, "merit", format!("merit {merit_after} > bound {bound}"));
        }
        for (j, &i) in cur.beta.iter().enumerate() {
            if !armijo_holds(cone, &before[i], &after[i], &cur.models[j], gamma, tau) {
                flag(cur.k, "armijo", format!("scenario {i}"));
            }
        }
        if check_set_descent {
            for (i, z) in after.iter().enumerate() {
                let dominated = before.iter().any(|w| {
                    let d: Vec<f64> = w.iter().zip(z).map(|(a, b)| a - b).collect();
                    cone.contains_interior_unchecked(&d)
                });
                if !dominated {
                    flag(cur.k, "set_descent", format!("scenario {i}"));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::problem::FnObjective;

    fn bowl() -> UncertainProblem {
        let obj = FnObjective(|x: &[f64], _xi: &[f64]| vec![(x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2)]);
        UncertainProblem::new("bowl", 2, 1, vec![vec![0.0]], Arc::new(obj), PolyhedralCone::nonnegative_orthant(1))
            .unwrap()
    }

    #[test]
    fn armijo_hand_example() {
        // F = x^2 at x = 1, B = 2, p = -1: model -1, tau = 1 passes
        let obj = FnObjective(|x: &[f64], _xi: &[f64]| vec![x[0] * x[0]]);
        let prob =
            UncertainProblem::new("sq", 1, 1, vec![vec![0.0]], Arc::new(obj), PolyhedralCone::nonnegative_orthant(1))
                .unwrap();
        let p = DVector::from_element(1, -1.0);
        let tau = armijo_step(&prob, &[1.0], &[0], &p, &[DVector::from_element(1, -1.0)], 0.1, 30).unwrap();
        assert_eq!(tau, Some(1.0));
    }

    #[test]
    fn steep_quartic_halves_twice() {
        // F = x^4 at x = 1 with p = -4 and a linear model: tau = 1, 1/2 fail, 1/4 passes
        let obj = FnObjective(|x: &[f64], _xi: &[f64]| vec![x[0].powi(4)]);
        let prob =
            UncertainProblem::new("q4", 1, 1, vec![vec![0.0]], Arc::new(obj), PolyhedralCone::nonnegative_orthant(1))
                .unwrap();
        let p = DVector::from_element(1, -4.0);
        let model = DVector::from_element(1, -16.0);
        let tau = armijo_step(&prob, &[1.0], &[0], &p, &[model], 0.1, 30).unwrap();
        assert_eq!(tau, Some(0.25));
    }

    #[test]
    fn bowl_converges_to_minimizer() {
        let trace = solve(&bowl(), &[3.0, 2.0], &SolveConfig::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::StationaryPoint);
        let x = trace.final_x();
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] + 0.5).abs() < 1e-4);
        assert!(verify_trace(&bowl(), &trace, true).is_empty());
    }

    #[test]
    fn fd_init_takes_one_newton_step() {
        let cfg = SolveConfig { hessian_init: HessianInit::ExactFd, ..SolveConfig::default() };
        let trace = solve(&bowl(), &[3.0, 2.0], &cfg).unwrap();
        assert_eq!(trace.status, TerminalStatus::StationaryPoint);
        assert_eq!(trace.iterations(), 1);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let trace = solve(&bowl(), &[1.0, -0.5], &SolveConfig::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::StationaryPoint);
        assert_eq!(trace.iterations(), 0);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn invalid_gamma_rejected() {
        let cfg = SolveConfig { gamma: 1.0, ..SolveConfig::default() };
        assert!(solve(&bowl(), &[0.0, 0.0], &cfg).is_err());
    }
}
