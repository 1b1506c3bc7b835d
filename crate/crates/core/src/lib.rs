//! Quasi-Newton method for multiobjective problems whose objective depends on
//! a scenario drawn from a finite uncertainty set, ordered by a polyhedral cone.
//!
//! The robust counterpart is solved as a set-valued problem: at each iterate
//! the image `F_U(x) = {F(x, ξ) : ξ ∈ U}` is reduced to its maximal elements,
//! a direction is found from per-scenario quadratic models, and a cone-valued
//! Armijo search picks the step.

pub mod cone;
pub mod direction;
pub mod error;
pub mod hessian;
pub mod oracle;
pub mod problem;
pub mod problem_file;
pub mod registry;
pub mod set_ops;
pub mod solver;

pub use cone::{ConeSpec, PolyhedralCone};
pub use direction::{solve_fixed_beta, solve_step2, stationarity_value, SubproblemInstance};
pub use error::{Error, Result};
pub use hessian::{HessianInit, HessianStore};
pub use problem::{Bounds, ScenarioObjective, UncertainProblem};
pub use set_ops::{max_elements, partition_set, PartitionSet, ScenarioImage};
pub use solver::{solve, SolveConfig, SolveTrace, TerminalStatus};
