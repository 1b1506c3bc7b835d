//! Built-in problem catalog: four worked examples (`EX1`–`EX4`) and the
//! eighteen uncertain test problems `P1`–`P18`, each with hand-derived
//! gradients.
//!
//! Scenario sets: the examples use their explicit lists. For `P1`–`P18` the
//! scenario box is discretized to the listed count with
//! [`ScenarioGrid::thinned`]; those counts are the benchmark's scenario
//! column, not something the formulas dictate.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::problem::{arithmetic_range, linspace, Bounds, ScenarioGrid, ScenarioObjective, UncertainProblem};

type ValueFn = fn(&[f64], &[f64]) -> Vec<f64>;
/// Returns one gradient (length `n`) per objective component.
type GradFn = fn(&[f64], &[f64]) -> Vec<Vec<f64>>;

struct Analytic {
    value: ValueFn,
    grads: GradFn,
}

impl ScenarioObjective for Analytic {
    fn value(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        (self.value)(x, xi)
    }

    fn jacobian(&self, x: &[f64], xi: &[f64]) -> Option<DMatrix<f64>> {
        let grads = (self.grads)(x, xi);
        let n = x.len();
        Some(DMatrix::from_fn(n, grads.len(), |k, l| grads[l][k]))
    }
}

/// One row of the problem catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub scenarios: usize,
    pub source: &'static str,
}

struct Spec {
    name: &'static str,
    source: &'static str,
    n: usize,
    m: usize,
    value: ValueFn,
    grads: GradFn,
    x_lower: Vec<f64>,
    x_upper: Vec<f64>,
    scenarios: Vec<Vec<f64>>,
    cone: PolyhedralCone,
}

pub const NAMES: [&str; 22] = [
    "EX1", "EX2", "EX3", "EX4", "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10", "P11",
    "P12", "P13", "P14", "P15", "P16", "P17", "P18",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a built-in problem by (case-insensitive) name.
pub fn get(name: &str) -> Result<UncertainProblem> {
    let key = name.to_ascii_uppercase();
    let spec = spec(&key).ok_or_else(|| Error::UnknownProblem {
        name: name.to_string(),
        available: NAMES.join(", "),
    })?;
    let bounds = Bounds::new(spec.x_lower, spec.x_upper)?;
    let objective = Arc::new(Analytic { value: spec.value, grads: spec.grads });
    Ok(UncertainProblem::new(spec.name, spec.n, spec.m, spec.scenarios, objective, spec.cone)?
        .with_bounds(bounds)?
        .with_source(spec.source))
}

pub fn catalog() -> Vec<CatalogEntry> {
    NAMES
        .iter()
        .map(|&name| {
            let s = spec(name).expect("every listed name is registered");
            CatalogEntry {
                name: s.name,
                m: s.m,
                n: s.n,
                r: s.scenarios[0].len(),
                scenarios: s.scenarios.len(),
                source: s.source,
            }
        })
        .collect()
}

fn orthant(m: usize) -> PolyhedralCone {
    PolyhedralCone::nonnegative_orthant(m)
}

fn scalars(values: Vec<f64>) -> Vec<Vec<f64>> {
    values.into_iter().map(|v| vec![v]).collect()
}

fn thinned(lower: &[f64], upper: &[f64], count: usize) -> Vec<Vec<f64>> {
    ScenarioGrid::thinned(lower, upper, count).expect("static scenario boxes are valid")
}

fn spec(name: &str) -> Option<Spec> {
    let s = match name {
        "EX1" => Spec {
            name: "EX1",
            source: "example",
            n: 1,
            m: 2,
            value: ex1_value,
            grads: ex1_grads,
            x_lower: vec![-4.7],
            x_upper: vec![4.7],
            scenarios: scalars(arithmetic_range(1, 4)),
            cone: PolyhedralCone::new(&[vec![3.0, -1.0], vec![-1.0, 3.0]], &[1.0, 1.0])
                .expect("static cone"),
        },
        "EX2" => Spec {
            name: "EX2",
            source: "example",
            n: 2,
            m: 2,
            value: ex2_value,
            grads: ex2_grads,
            x_lower: vec![-1.5, -1.0],
            x_upper: vec![1.5, 0.5],
            scenarios: scalars(arithmetic_range(1, 45)),
            cone: orthant(2),
        },
        "EX3" => Spec {
            name: "EX3",
            source: "example",
            n: 2,
            m: 3,
            value: ex3_value,
            grads: ex3_grads,
            x_lower: vec![-2.0, -2.0],
            x_upper: vec![2.0, 2.0],
            scenarios: scalars(arithmetic_range(1, 50)),
            cone: orthant(3),
        },
        "EX4" => {
            let v = linspace(-1.0, 1.0, 10);
            Spec {
                name: "EX4",
                source: "location",
                n: 2,
                m: 3,
                value: ex4_value,
                grads: ex4_grads,
                x_lower: vec![-50.0, -50.0],
                x_upper: vec![50.0, 50.0],
                scenarios: ScenarioGrid::new(vec![v.clone(), v]).expect("static grid").points(),
                cone: orthant(3),
            }
        }
        "P1" => Spec {
            name: "P1",
            source: "MOP1",
            n: 1,
            m: 2,
            value: p1_value,
            grads: p1_grads,
            x_lower: vec![-1.0],
            x_upper: vec![0.5],
            scenarios: thinned(&[-2.0], &[2.0], 40),
            cone: orthant(2),
        },
        "P2" => Spec {
            name: "P2",
            source: "New1",
            n: 1,
            m: 2,
            value: p2_value,
            grads: p2_grads,
            x_lower: vec![-1.0],
            x_upper: vec![-0.7],
            scenarios: thinned(&[1.0], &[9.0], 35),
            cone: orthant(2),
        },
        "P3" => Spec {
            name: "P3",
            source: "BK1",
            n: 2,
            m: 2,
            value: p3_value,
            grads: p3_grads,
            x_lower: vec![-3.0, -3.0],
            x_upper: vec![5.0, 5.0],
            scenarios: thinned(&[-2.0, -2.0], &[2.0, 2.0], 40),
            cone: orthant(2),
        },
        "P4" => Spec {
            name: "P4",
            source: "LRS1",
            n: 2,
            m: 2,
            value: p4_value,
            grads: p4_grads,
            x_lower: vec![-5.0, -5.0],
            x_upper: vec![50.0, 50.0],
            scenarios: thinned(&[0.8, 1.0], &[1.0, 1.2], 40),
            cone: orthant(2),
        },
        "P5" => Spec {
            name: "P5",
            source: "SP1",
            n: 2,
            m: 2,
            value: p5_value,
            grads: p5_grads,
            x_lower: vec![-1.0, -1.0],
            x_upper: vec![5.0, 5.0],
            scenarios: thinned(&[1.0, 1.0], &[2.0, 2.0], 25),
            cone: orthant(2),
        },
        "P6" => Spec {
            name: "P6",
            source: "VU1",
            n: 2,
            m: 2,
            value: p6_value,
            grads: p6_grads,
            x_lower: vec![-3.0, -3.0],
            x_upper: vec![3.0, 3.0],
            scenarios: thinned(&[1.0, 0.5], &[1.5, 1.0], 30),
            cone: orthant(2),
        },
        "P7" => Spec {
            name: "P7",
            source: "New2",
            n: 2,
            m: 2,
            value: p7_value,
            grads: p7_grads,
            x_lower: vec![-1.0, -1.0],
            x_upper: vec![0.0, 0.0],
            scenarios: thinned(&[1.2, 0.6], &[1.5, 1.0], 20),
            cone: orthant(2),
        },
        "P8" => Spec {
            name: "P8",
            source: "Lovison1",
            n: 2,
            m: 2,
            value: p8_value,
            grads: p8_grads,
            x_lower: vec![-3.0, -3.0],
            x_upper: vec![5.0, 5.0],
            scenarios: thinned(&[-1.5, -1.5], &[0.0, 0.0], 40),
            cone: orthant(2),
        },
        "P9" => Spec {
            name: "P9",
            source: "GKZ9",
            n: 3,
            m: 2,
            value: p9_value,
            grads: p9_grads,
            x_lower: vec![-100000.0; 3],
            x_upper: vec![100000.0; 3],
            scenarios: thinned(&[-2.0; 3], &[2.0; 3], 40),
            cone: orthant(2),
        },
        "P10" => Spec {
            name: "P10",
            source: "DD1",
            n: 5,
            m: 2,
            value: p10_value,
            grads: p10_grads,
            x_lower: vec![-20.0; 5],
            x_upper: vec![20.0; 5],
            scenarios: thinned(&[0.008], &[0.012], 25),
            cone: orthant(2),
        },
        "P11" => Spec {
            name: "P11",
            source: "Jin1",
            n: 20,
            m: 2,
            value: p11_value,
            grads: p11_grads,
            x_lower: vec![-9.0; 20],
            x_upper: vec![-7.0; 20],
            scenarios: thinned(&[-2.0; 20], &[1.0; 20], 20),
            cone: orthant(2),
        },
        "P12" => Spec {
            name: "P12",
            source: "MOP7",
            n: 2,
            m: 3,
            value: p12_value,
            grads: p12_grads,
            x_lower: vec![-400.0, -400.0],
            x_upper: vec![400.0, 400.0],
            scenarios: thinned(&[-2.0, -2.0], &[1.0, 1.0], 30),
            cone: orthant(3),
        },
        "P13" => Spec {
            name: "P13",
            source: "GKZ6",
            n: 2,
            m: 3,
            value: p13_value,
            grads: p13_grads,
            x_lower: vec![1.0, 1.0],
            x_upper: vec![1.5, 1.5],
            scenarios: thinned(&[1.0, 1.0], &[1.5, 2.0], 30),
            cone: orthant(3),
        },
        "P14" => Spec {
            name: "P14",
            source: "VFM1",
            n: 2,
            m: 3,
            value: p14_value,
            grads: p14_grads,
            x_lower: vec![-2.0, -2.0],
            x_upper: vec![2.0, 2.0],
            scenarios: thinned(&[1.0, 0.5, -0.5], &[1.5, 1.0, 2.5], 20),
            cone: orthant(3),
        },
        "P15" => Spec {
            name: "P15",
            source: "MHHM2",
            n: 2,
            m: 3,
            value: p15_value,
            grads: p15_grads,
            x_lower: vec![-4.0, -4.0],
            x_upper: vec![4.0, 4.0],
            scenarios: thinned(&[-2.5, -2.5, -0.5], &[2.5, 2.5, 2.5], 40),
            cone: orthant(3),
        },
        "P16" => Spec {
            name: "P16",
            source: "ZDT1",
            n: 10,
            m: 3,
            value: p16_value,
            grads: p16_grads,
            x_lower: vec![0.2; 10],
            x_upper: vec![0.8; 10],
            scenarios: thinned(&[-1.0; 10], &[1.0; 10], 10),
            cone: orthant(3),
        },
        "P17" => Spec {
            name: "P17",
            source: "ZDT2",
            n: 10,
            m: 3,
            value: p17_value,
            grads: p17_grads,
            x_lower: vec![0.2; 10],
            x_upper: vec![0.6; 10],
            scenarios: thinned(&[-0.8; 10], &[0.7; 10], 10),
            cone: orthant(3),
        },
        "P18" => Spec {
            name: "P18",
            source: "FDS",
            n: 10,
            m: 3,
            value: p18_value,
            grads: p18_grads,
            x_lower: vec![-2.0; 10],
            x_upper: vec![2.0; 10],
            scenarios: thinned(&[-1.0; 10], &[2.0; 10], 10),
            cone: orthant(3),
        },
        _ => return None,
    };
    Some(s)
}

// EX1: bi-objective, one variable, non-orthant cone.

fn ex1_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (x, c) = (x[0], (10.0 * xi[0] - 3.0) / 2.0);
    vec![
        2.0 * x * x + (x / 10.0).exp() + c,
        5.0 * x * x.cos() - c * x.sin().powi(2),
    ]
}

fn ex1_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (x, c) = (x[0], (10.0 * xi[0] - 3.0) / 2.0);
    vec![
        vec![4.0 * x + (x / 10.0).exp() / 10.0],
        vec![5.0 * x.cos() - 5.0 * x * x.sin() - c * (2.0 * x).sin()],
    ]
}

// EX2

fn ex2_angle(xi: f64) -> f64 {
    2.0 * PI * (10.0 * xi - 1.0) / 60.0
}

fn ex2_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let t = ex2_angle(xi[0]);
    let sq = x[0] * x[0] + x[1] * x[1];
    vec![
        sq + 0.5 * t.sin() * t.cos().powi(2) + 2.0 * (x[0] + x[1]).exp(),
        2.0 * sq + 0.5 * t.cos().powi(2),
    ]
}

fn ex2_grads(x: &[f64], _xi: &[f64]) -> Vec<Vec<f64>> {
    let e = 2.0 * (x[0] + x[1]).exp();
    vec![vec![2.0 * x[0] + e, 2.0 * x[1] + e], vec![4.0 * x[0], 4.0 * x[1]]]
}

// EX3: the first two components ignore x2 curvature, so their Hessians are singular.

fn ex3_angle(xi: f64) -> f64 {
    2.0 * PI * (10.0 * xi - 1.0) / 50.0
}

fn ex3_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (t, s) = (ex3_angle(xi[0]), xi[0]);
    vec![
        x[0] * x[0] + 0.5 * t.sin() - 0.1 * s * x[0],
        2.0 * x[0] * x[0] + 0.5 * t.cos() + 0.2 * s * x[1],
        x[0] * x[0] + x[1] * x[1] + 10.0 * s,
    ]
}

fn ex3_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let s = xi[0];
    vec![
        vec![2.0 * x[0] - 0.1 * s, 0.0],
        vec![4.0 * x[0], 0.2 * s],
        vec![2.0 * x[0], 2.0 * x[1]],
    ]
}

// EX4: tri-objective location problem with shifted facilities.

const EX4_SITES: [[f64; 2]; 3] = [[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]];

fn ex4_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    EX4_SITES
        .iter()
        .map(|l| {
            let d0 = x[0] - l[0] - xi[0];
            let d1 = x[1] - l[1] - xi[1];
            0.5 * (d0 * d0 + d1 * d1)
        })
        .collect()
}

fn ex4_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    EX4_SITES
        .iter()
        .map(|l| vec![x[0] - l[0] - xi[0], x[1] - l[1] - xi[1]])
        .collect()
}

fn p1_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (x, s) = (x[0], xi[0]);
    vec![
        x * x + 2.0 * (s * x + 1.0).powi(2) + 2.0 * (s * x - 1.0).powi(2) + x.powi(3),
        (x - 2.0 * s).powi(2) + s.powi(3) * x + s * x.powi(3),
    ]
}

fn p1_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (x, s) = (x[0], xi[0]);
    vec![
        vec![2.0 * x + 8.0 * s * s * x + 3.0 * x * x],
        vec![2.0 * (x - 2.0 * s) + s.powi(3) + 3.0 * s * x * x],
    ]
}

fn p2_shift(s: f64) -> f64 {
    (10.0 + (2.0 * PI * s / 50.0).sin().exp() - (4.0 * PI * s / 50.0).sin()) / 140.0
}

fn p2_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (x, s) = (x[0], xi[0]);
    let c = p2_shift(s);
    vec![
        x + c + s * x,
        (3.0 * x).cos() + 1.0 / (1.0 + (2.0 * x).exp()) + c,
    ]
}

fn p2_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (x, s) = (x[0], xi[0]);
    let e = (2.0 * x).exp();
    vec![
        vec![1.0 + s],
        vec![-3.0 * (3.0 * x).sin() - 2.0 * e / (1.0 + e).powi(2)],
    ]
}

fn p3_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        a * x[0] * x[0]
            + b * x[1] * x[1]
            + b * (x[1] - 5.0).powi(2)
            + (a * x[0] - 2.0).powi(2)
            + (b * x[1] - 2.0).powi(2),
        a * x[0] * x[0] + b * x[1] * x[1] + (a * x[0] - 5.0).powi(2),
    ]
}

fn p3_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![
            2.0 * a * x[0] + 2.0 * a * (a * x[0] - 2.0),
            2.0 * b * x[1] + 2.0 * b * (x[1] - 5.0) + 2.0 * b * (b * x[1] - 2.0),
        ],
        vec![2.0 * a * x[0] + 2.0 * a * (a * x[0] - 5.0), 2.0 * b * x[1]],
    ]
}

fn p4_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        x[0] * x[0] + b * x[1] * x[1] + a * x[0] * x[0] + 8.0 * b * x[1],
        a * (x[0] + 1.0).powi(2) + x[1] * x[1] + a * x[0] * x[0] + b * x[1] * x[1],
    ]
}

fn p4_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![2.0 * x[0] + 2.0 * a * x[0], 2.0 * b * x[1] + 8.0 * b],
        vec![2.0 * a * (x[0] + 1.0) + 2.0 * a * x[0], 2.0 * x[1] + 2.0 * b * x[1]],
    ]
}

fn p5_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    let d = x[0] - x[1];
    vec![
        (a * x[0] * x[0] - 1.0).powi(2) + b * d * d,
        (b * x[1] - 3.0).powi(2) + a * d * d,
    ]
}

fn p5_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    let d = x[0] - x[1];
    vec![
        vec![4.0 * a * x[0] * (a * x[0] * x[0] - 1.0) + 2.0 * b * d, -2.0 * b * d],
        vec![2.0 * a * d, 2.0 * b * (b * x[1] - 3.0) - 2.0 * a * d],
    ]
}

fn p6_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    let den = x[0] * x[0] + b * x[1] * x[1] + 1.0;
    vec![
        a / den + a * a * x[0] * x[0] + (b * x[1] - 1.0).powi(2),
        (a * x[0] * x[0] + 3.0 * x[1] * x[1] + 1.0) / b + 2.0 * a * x[0] + 2.0 * b * x[1],
    ]
}

fn p6_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    let den = x[0] * x[0] + b * x[1] * x[1] + 1.0;
    let den2 = den * den;
    vec![
        vec![
            -2.0 * a * x[0] / den2 + 2.0 * a * a * x[0],
            -2.0 * a * b * x[1] / den2 + 2.0 * b * (b * x[1] - 1.0),
        ],
        vec![2.0 * a * x[0] / b + 2.0 * a, 6.0 * x[1] / b + 2.0 * b],
    ]
}

fn p7_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        b + x[0] * x[0] + (a * x[0] - 2.0).powi(2) + (b * x[1] - 2.0).powi(2),
        b + a * a + a * x[0] * x[0] + b * x[1] * x[1] + (a * x[0] - 2.0).powi(3),
    ]
}

fn p7_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![2.0 * x[0] + 2.0 * a * (a * x[0] - 2.0), 2.0 * b * (b * x[1] - 2.0)],
        vec![2.0 * a * x[0] + 3.0 * a * (a * x[0] - 2.0).powi(2), 2.0 * b * x[1]],
    ]
}

fn p8_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        -1.05 * a * x[0] * x[0] - 0.98 * b * x[1] * x[1]
            + (a * x[0] - 2.0).powi(2)
            + (b * x[1] + 2.0).powi(2),
        -0.99 * a * (x[0] - 3.0).powi(2) - 1.03 * b * (x[1] - 2.5).powi(2)
            + 5.0 * a * x[0] * x[0]
            + b * x[1] * x[1],
    ]
}

fn p8_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![
            -2.1 * a * x[0] + 2.0 * a * (a * x[0] - 2.0),
            -1.96 * b * x[1] + 2.0 * b * (b * x[1] + 2.0),
        ],
        vec![
            -1.98 * a * (x[0] - 3.0) + 10.0 * a * x[0],
            -2.06 * b * (x[1] - 2.5) + 2.0 * b * x[1],
        ],
    ]
}

fn p9_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b, c) = ((xi[0] - 3.0) / 2.0, (xi[1] - 3.0) / 2.0, xi[2]);
    vec![
        2.0 * x[0] * x[0] + a + 4.0 * x[1] * b,
        x[0] * x[0] / 4.0 * x[1].cos() - x[2].cos().powi(3) * a + c,
    ]
}

fn p9_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = ((xi[0] - 3.0) / 2.0, (xi[1] - 3.0) / 2.0);
    vec![
        vec![4.0 * x[0], 4.0 * b, 0.0],
        vec![
            x[0] / 2.0 * x[1].cos(),
            -x[0] * x[0] / 4.0 * x[1].sin(),
            3.0 * x[2].cos().powi(2) * x[2].sin() * a,
        ],
    ]
}

fn p10_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let s = xi[0];
    vec![
        x.iter().map(|v| v * v).sum::<f64>() + s * s,
        (3.0 + s) * x[0] + 2.0 * x[1] - x[2] / 3.0 + (x[3] - x[4]).powi(3) + s * x[0] * x[0],
    ]
}

fn p10_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let s = xi[0];
    let c = 3.0 * (x[3] - x[4]).powi(2);
    vec![
        x.iter().map(|v| 2.0 * v).collect(),
        vec![3.0 + s + 2.0 * s * x[0], 2.0, -1.0 / 3.0, c, -c],
    ]
}

fn p11_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    vec![
        x.iter().zip(xi).map(|(x, s)| s * s * x * x).sum::<f64>() / n,
        x.iter().zip(xi).map(|(x, s)| (x - 2.0 * s).powi(2) + s * s).sum::<f64>() / n,
    ]
}

fn p11_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    vec![
        x.iter().zip(xi).map(|(x, s)| 2.0 * s * s * x / n).collect(),
        x.iter().zip(xi).map(|(x, s)| 2.0 * (x - 2.0 * s) / n).collect(),
    ]
}

fn p12_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    let (u, v) = (a * x[0], b * x[1]);
    vec![
        (u - 2.0).powi(2) / 2.0 + (v + 1.0).powi(2) / 13.0 + 3.0 * a + x[0] * x[0] + x[1] * x[1] + a * b,
        (u + v - 3.0).powi(2) / 36.0 + (-u + v + 2.0).powi(2) / 8.0 - 17.0 * b + x[0] + x[1] + b,
        (u + 2.0 * v - 1.0).powi(2) / 175.0 + (-u + 2.0 * v).powi(2) / 17.0 - 13.0 * a * b
            + b * x[0] * x[0]
            - 9.0 * x[1],
    ]
}

fn p12_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    let (u, v) = (a * x[0], b * x[1]);
    let (g, h) = (u + v - 3.0, -u + v + 2.0);
    let (c, d) = (u + 2.0 * v - 1.0, -u + 2.0 * v);
    vec![
        vec![a * (u - 2.0) + 2.0 * x[0], 2.0 * b * (v + 1.0) / 13.0 + 2.0 * x[1]],
        vec![a * g / 18.0 - a * h / 4.0 + 1.0, b * g / 18.0 + b * h / 4.0 + 1.0],
        vec![
            2.0 * a * c / 175.0 - 2.0 * a * d / 17.0 + 2.0 * b * x[0],
            4.0 * b * c / 175.0 + 4.0 * b * d / 17.0 - 9.0,
        ],
    ]
}

fn p13_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        x[0] + (x[1] - 1.5) + 0.25 * (4.0 * PI * (a - 1.0) / 7.0).sin() + b / 100.0 + x[0] * x[0],
        2.0 * (x[0] - 1.0).powi(2) + 2.0 * x[1] * x[1] + 0.25 * (4.0 * PI * (b - 1.0) / 7.0).cos()
            + 2.0 * a / 100.0
            + x[1] * x[1],
        a * x[0] * x[0] + x[1] * x[1] + a * b,
    ]
}

fn p13_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let a = xi[0];
    vec![
        vec![1.0 + 2.0 * x[0], 1.0],
        vec![4.0 * (x[0] - 1.0), 6.0 * x[1]],
        vec![2.0 * a * x[0], 2.0 * x[1]],
    ]
}

// P14: the listed `x_3` term in f1 cannot be a decision variable (n = 2); it is read as ξ_3.

fn p14_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b, c) = (xi[0], xi[1], xi[2]);
    vec![
        a * a * x[0] * x[0] + b * (x[1] - 1.0).powi(2) + c + a * x[0] * x[0] + x[1] * x[1],
        x[0] * x[0] + (a * x[1] - 1.0).powi(2) + x[0].powi(4) + b * x[1] * x[1] + 1.0,
        a * (x[0] - 1.0).powi(2) + b * x[1] * x[1] + c + 5.0 * a * x[0] + x[1] + 3.0,
    ]
}

fn p14_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![2.0 * a * a * x[0] + 2.0 * a * x[0], 2.0 * b * (x[1] - 1.0) + 2.0 * x[1]],
        vec![2.0 * x[0] + 4.0 * x[0].powi(3), 2.0 * a * (a * x[1] - 1.0) + 2.0 * b * x[1]],
        vec![2.0 * a * (x[0] - 1.0) + 5.0 * a, 2.0 * b * x[1] + 1.0],
    ]
}

fn p15_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (a, b, c) = (xi[0], xi[1], xi[2]);
    vec![
        (a * x[0] - 1.0).powi(2) + (b * x[1] - 1.0).powi(2) + a * x[0] * x[0] + x[1] * x[1],
        (b * x[0] - 1.5).powi(2) + (a * x[1] - 1.0).powi(2) + x[0].powi(4) + b * x[1] * x[1],
        b * (x[0] - 1.0).powi(2) + a * (b * x[1] - 1.0).powi(2) + c + 5.0 * a * x[0] + x[1],
    ]
}

fn p15_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (xi[0], xi[1]);
    vec![
        vec![2.0 * a * (a * x[0] - 1.0) + 2.0 * a * x[0], 2.0 * b * (b * x[1] - 1.0) + 2.0 * x[1]],
        vec![2.0 * b * (b * x[0] - 1.5) + 4.0 * x[0].powi(3), 2.0 * a * (a * x[1] - 1.0) + 2.0 * b * x[1]],
        vec![2.0 * b * (x[0] - 1.0) + 5.0 * a, 2.0 * a * b * (b * x[1] - 1.0) + 1.0],
    ]
}

fn p16_parts(x: &[f64], xi: &[f64]) -> (f64, f64) {
    let f1 = x.iter().zip(xi).map(|(x, s)| s * x + s * s).sum::<f64>();
    let f2 = 1.0 + 9.0 * x.iter().zip(xi).map(|(x, s)| s * s * x).sum::<f64>();
    (f1, f2)
}

fn p16_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (f1, f2) = p16_parts(x, xi);
    vec![f1, f2, 1.0 - (f1 / f2).sqrt()]
}

fn p16_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (f1, f2) = p16_parts(x, xi);
    let g1: Vec<f64> = xi.to_vec();
    let g2: Vec<f64> = xi.iter().map(|s| 9.0 * s * s).collect();
    let root = (f1 / f2).sqrt();
    let g3 = g1
        .iter()
        .zip(&g2)
        .map(|(a, b)| -(a * f2 - f1 * b) / (f2 * f2) / (2.0 * root))
        .collect();
    vec![g1, g2, g3]
}

fn p17_parts(x: &[f64], xi: &[f64]) -> (f64, f64) {
    let f1 = x.iter().zip(xi).map(|(x, s)| s * x).sum::<f64>();
    let f2 = 5.0 + 10.0 * x.iter().zip(xi).map(|(x, s)| s * x * x).sum::<f64>();
    (f1, f2)
}

fn p17_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let (f1, f2) = p17_parts(x, xi);
    vec![f1, f2, 2.0 - (f1 / f2).powi(2)]
}

fn p17_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (f1, f2) = p17_parts(x, xi);
    let g1: Vec<f64> = xi.to_vec();
    let g2: Vec<f64> = x.iter().zip(xi).map(|(x, s)| 20.0 * s * x).collect();
    let ratio = f1 / f2;
    let g3 = g1
        .iter()
        .zip(&g2)
        .map(|(a, b)| -2.0 * ratio * (a * f2 - f1 * b) / (f2 * f2))
        .collect();
    vec![g1, g2, g3]
}

fn p18_value(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mut f1 = 0.0;
    let mut f3 = 0.0;
    for (k, (x, s)) in x.iter().zip(xi).enumerate() {
        let i = (k + 1) as f64;
        f1 += i * (s * x - i).powi(4);
        f3 += i * (n - i + 1.0) * (-s * x).exp();
    }
    vec![f1 / n, (x.iter().sum::<f64>() / n).exp(), f3 / (n * (n + 1.0))]
}

fn p18_grads(x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let f2 = (x.iter().sum::<f64>() / n).exp();
    let mut g1 = Vec::with_capacity(x.len());
    let mut g3 = Vec::with_capacity(x.len());
    for (k, (x, s)) in x.iter().zip(xi).enumerate() {
        let i = (k + 1) as f64;
        g1.push(4.0 * i * s * (s * x - i).powi(3) / n);
        g3.push(-i * (n - i + 1.0) * s * (-s * x).exp() / (n * (n + 1.0)));
    }
    vec![g1, vec![f2 / n; x.len()], g3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ex1_shape_and_scenarios() {
        let p = get("EX1").unwrap();
        assert_eq!((p.n(), p.m(), p.num_scenarios()), (1, 2, 4));
        let xs: Vec<f64> = p.scenarios().iter().map(|s| s[0]).collect();
        assert_eq!(xs, vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(p.cone().num_rows(), 2);
        assert_eq!(p.cone().rows()[(0, 1)], -1.0);
    }

    #[test]
    fn ex1_image_at_origin() {
        // F(0, ξ) = (1 + (10ξ - 3)/2, 0)
        let p = get("EX1").unwrap();
        let img = p.evaluate_image(&[0.0]).unwrap();
        for ((_, v), xi) in img.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((v[0] - (1.0 + (10.0 * xi - 3.0) / 2.0)).abs() < 1e-14);
            assert_eq!(v[1], 0.0);
        }
    }

    #[test]
    fn p11_dimensions() {
        let p = get("P11").unwrap();
        assert_eq!((p.m(), p.n(), p.scenario_dim()), (2, 20, 20));
        assert_eq!(p.num_scenarios(), 20);
    }

    #[test]
    fn p11_first_component_small_case() {
        // mean(ξ_i^2 x_i^2) with n = 1, x = 1 gives ξ^2
        let f = p11_value(&[1.0], &[1.0]);
        assert_eq!(f[0], 1.0);
        let f = p11_value(&[1.0], &[2.0]);
        assert_eq!(f[0], 4.0);
    }

    #[test]
    fn p1_second_gradient_by_hand() {
        // f2' = 2(x - 2ξ) + ξ^3 + 3ξx^2 at x = 0, ξ = 1 -> -3
        let g = p1_grads(&[0.0], &[1.0]);
        assert_eq!(g[1][0], -3.0);
    }

    #[test]
    fn unknown_name_lists_available() {
        match get("nope") {
            Err(Error::UnknownProblem { available, .. }) => assert!(available.contains("P18")),
            other => panic!("expected lookup error, got {other:?}"),
        }
    }

    #[test]
    fn catalog_tags() {
        let cat = catalog();
        assert_eq!(cat.len(), 22);
        let find = |n: &str| cat.iter().find(|e| e.name == n).unwrap().clone();
        assert_eq!(find("P3").source, "BK1");
        assert_eq!(find("P18").source, "FDS");
        let ex4 = find("EX4");
        assert_eq!((ex4.m, ex4.n, ex4.scenarios), (3, 2, 100));
    }

    #[test]
    fn lookup_is_case_insensitive() {
        assert_eq!(get("ex2").unwrap().name(), "EX2");
    }
}
