mod common;

use common::{bisection_gerstewitz, cones, generators, narrow, orthant};
use proptest::prelude::*;
use robustmo_core::{ConeSpec, Error, PolyhedralCone};

const EPS: f64 = 1e-9;

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-50.0..50.0f64, -50.0..50.0f64]
}

fn add(a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

#[test]
fn documented_membership_values() {
    assert!(orthant().contains(&[1.0, 2.0]).unwrap());
    assert!(!orthant().contains(&[1.0, -0.1]).unwrap());
    assert!(narrow().contains(&[1.0, 2.0]).unwrap());
    assert!(orthant().contains_interior(&[1.0, 1.0]).unwrap());
    assert!(!orthant().contains_interior(&[1.0, 0.0]).unwrap());
    assert!(narrow().contains_interior(&[1.0, 1.0]).unwrap());
}

#[test]
fn documented_gerstewitz_values() {
    for cone in cones() {
        assert_eq!(cone.gerstewitz(&[0.0, 0.0]).unwrap(), 0.0);
    }
    assert_eq!(orthant().gerstewitz(&[3.0, -1.0]).unwrap(), 3.0);
    assert!((narrow().gerstewitz(&[1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
}

#[test]
fn mismatched_dimensions_are_rejected() {
    assert!(matches!(narrow().gerstewitz(&[1.0]), Err(Error::Argument(_))));
    assert!(matches!(orthant().contains(&[1.0, 2.0, 3.0]), Err(Error::Argument(_))));
}

#[test]
fn construction_checks() {
    // e on the boundary
    assert!(PolyhedralCone::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]).is_err());
    // a half-plane contains a line
    assert!(PolyhedralCone::new(&[vec![1.0, 0.0]], &[1.0, 0.0]).is_err());
    let spec = ConeSpec { rows: vec![vec![3.0, -1.0], vec![-1.0, 3.0]], interior_point: vec![1.0, 1.0], tolerance: None };
    assert_eq!(PolyhedralCone::from_spec(&spec).unwrap(), narrow());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sublinear(y in vec2(), z in vec2()) {
        for cone in cones() {
            let lhs = cone.gerstewitz(&add(&y, &z)).unwrap();
            let rhs = cone.gerstewitz(&y).unwrap() + cone.gerstewitz(&z).unwrap();
            prop_assert!(lhs <= rhs + EPS);
        }
    }

    #[test]
    fn positively_homogeneous(z in vec2(), tau in 0.0..100.0f64) {
        for cone in cones() {
            let scaled = cone.gerstewitz(&[tau * z[0], tau * z[1]]).unwrap();
            let expected = tau * cone.gerstewitz(&z).unwrap();
            prop_assert!((scaled - expected).abs() <= EPS * expected.abs().max(1.0));
        }
    }

    #[test]
    fn monotone(z in vec2(), c in [0.0..10.0f64, 0.0..10.0f64]) {
        for (cone, gens) in cones().iter().zip(generators()) {
            let k = [c[0] * gens[0][0] + c[1] * gens[1][0], c[0] * gens[0][1] + c[1] * gens[1][1]];
            prop_assert!(cone.gerstewitz(&z).unwrap() <= cone.gerstewitz(&add(&z, &k)).unwrap() + EPS);
        }
    }

    #[test]
    fn strictly_monotone(z in vec2(), c in [0.01..10.0f64, 0.01..10.0f64]) {
        for (cone, gens) in cones().iter().zip(generators()) {
            let k = [c[0] * gens[0][0] + c[1] * gens[1][0], c[0] * gens[0][1] + c[1] * gens[1][1]];
            prop_assert!(cone.contains_interior(&k).unwrap());
            prop_assert!(cone.gerstewitz(&z).unwrap() < cone.gerstewitz(&add(&z, &k)).unwrap());
        }
    }

    #[test]
    fn represents_the_negative_cone(z in vec2()) {
        for cone in cones() {
            let t = cone.gerstewitz(&z).unwrap();
            let neg = [-z[0], -z[1]];
            // away from the tolerance band both predicates agree exactly
            if t.abs() > 1e-9 {
                prop_assert_eq!(t <= 0.0, cone.contains(&neg).unwrap());
                prop_assert_eq!(t < 0.0, cone.contains_interior(&neg).unwrap());
            }
        }
    }

    #[test]
    fn representation_on_the_boundary(s in 0.0..10.0f64) {
        // rays of -K: t = 0 exactly, non-strict membership only
        for (cone, gens) in cones().iter().zip(generators()) {
            let z = [-s * gens[0][0], -s * gens[0][1]];
            prop_assert!(cone.gerstewitz(&z).unwrap().abs() <= EPS);
            prop_assert!(cone.contains(&[-z[0], -z[1]]).unwrap());
            if s > 0.0 {
                prop_assert!(!cone.contains_interior(&[-z[0], -z[1]]).unwrap());
            }
        }
    }

    #[test]
    fn lipschitz(y in vec2(), z in vec2()) {
        for cone in cones() {
            let diff = ((y[0] - z[0]).powi(2) + (y[1] - z[1]).powi(2)).sqrt();
            let gap = (cone.gerstewitz(&y).unwrap() - cone.gerstewitz(&z).unwrap()).abs();
            prop_assert!(gap <= cone.lipschitz_constant() * diff + EPS);
        }
    }

    #[test]
    fn closed_form_matches_bisection(z in vec2()) {
        for cone in cones() {
            let exact = cone.gerstewitz(&z).unwrap();
            prop_assert!((exact - bisection_gerstewitz(&cone, &z)).abs() <= 1e-8);
        }
    }
}
