//! Browser bindings. Every export takes and returns plain values or JSON
//! strings; the `*_json` functions hold the logic so they can be tested
//! natively.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustmo_core::{registry, solve, Bounds, PolyhedralCone, SolveConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct ProblemInfo {
    name: &'static str,
    m: usize,
    n: usize,
    scenarios: usize,
    source: &'static str,
    bounds: Option<Bounds>,
}

/// Catalog with sampling boxes, as a JSON array.
pub fn problems_json() -> String {
    let list: Vec<ProblemInfo> = registry::catalog()
        .into_iter()
        .map(|e| ProblemInfo {
            name: e.name,
            m: e.m,
            n: e.n,
            scenarios: e.scenarios,
            source: e.source,
            bounds: registry::get(e.name).ok().and_then(|p| p.bounds().cloned()),
        })
        .collect();
    serde_json::to_string(&list).expect("catalog serializes")
}

/// Solves `name` from `x0`, or from a start drawn from the problem's box with
/// `seed` when `x0` is empty. Returns the trace as JSON.
pub fn solve_json(name: &str, x0: &[f64], seed: u64, max_iters: usize) -> Result<String, String> {
    let prob = registry::get(name).map_err(|e| e.to_string())?;
    let start = if x0.is_empty() {
        let bounds = prob.bounds().ok_or_else(|| format!("{name} has no sampling box"))?;
        bounds.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    } else {
        x0.to_vec()
    };
    let config = SolveConfig { max_iters, seed, ..SolveConfig::default() };
    let trace = solve(&prob, &start, &config).map_err(|e| e.to_string())?;
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ConeReport {
    gerstewitz: f64,
    in_cone: bool,
    in_interior: bool,
    in_negative_interior: bool,
}

/// Evaluates the cone scalarization of `z` for the cone `{z : rows z >= 0}`
/// with interior point `e`; `rows` is a JSON array of arrays.
pub fn cone_json(rows: &str, e: &[f64], z: &[f64]) -> Result<String, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(rows).map_err(|err| format!("rows: {err}"))?;
    let cone = PolyhedralCone::new(&rows, e).map_err(|err| err.to_string())?;
    let neg: Vec<f64> = z.iter().map(|v| -v).collect();
    let report = ConeReport {
        gerstewitz: cone.gerstewitz(z).map_err(|err| err.to_string())?,
        in_cone: cone.contains(z).map_err(|err| err.to_string())?,
        in_interior: cone.contains_interior(z).map_err(|err| err.to_string())?,
        in_negative_interior: cone.contains_interior(&neg).map_err(|err| err.to_string())?,
    };
    serde_json::to_string(&report).map_err(|err| err.to_string())
}

#[wasm_bindgen]
pub fn problems() -> String {
    problems_json()
}

#[wasm_bindgen]
pub fn solve_problem(name: &str, x0: Vec<f64>, seed: u64, max_iters: usize) -> Result<String, JsError> {
    solve_json(name, &x0, seed, max_iters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evaluate_cone(rows: &str, e: Vec<f64>, z: Vec<f64>) -> Result<String, JsError> {
    cone_json(rows, &e, &z).map_err(|err| JsError::new(&err))
}
