#![allow(dead_code)]

use robustmo_core::PolyhedralCone;

pub fn orthant() -> PolyhedralCone {
    PolyhedralCone::nonnegative_orthant(2)
}

/// `{3 z1 - z2 >= 0, -z1 + 3 z2 >= 0}` with `e = (1, 1)`.
pub fn narrow() -> PolyhedralCone {
    PolyhedralCone::new(&[vec![3.0, -1.0], vec![-1.0, 3.0]], &[1.0, 1.0]).unwrap()
}

/// Extreme rays of each test cone, in the same order as [`cones`].
pub fn generators() -> Vec<Vec<[f64; 2]>> {
    vec![vec![[1.0, 0.0], [0.0, 1.0]], vec![[1.0, 3.0], [3.0, 1.0]]]
}

pub fn cones() -> Vec<PolyhedralCone> {
    vec![orthant(), narrow()]
}

/// `A z >= -slack` evaluated straight from the stored rows.
pub fn raw_contains(cone: &PolyhedralCone, z: &[f64], slack: f64) -> bool {
    let a = cone.rows();
    (0..a.nrows()).all(|i| (0..a.ncols()).map(|j| a[(i, j)] * z[j]).sum::<f64>() >= -slack)
}

/// `min { t : t e - z ∈ K }` by bisection on a bracket grown from zero.
pub fn bisection_gerstewitz(cone: &PolyhedralCone, z: &[f64]) -> f64 {
    let e = cone.interior_point();
    let feasible = |t: f64| {
        let w: Vec<f64> = z.iter().enumerate().map(|(i, zi)| t * e[i] - zi).collect();
        raw_contains(cone, &w, 0.0)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while feasible(lo) {
        lo *= 2.0;
    }
    while !feasible(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    hi
}
