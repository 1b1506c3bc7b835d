use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use robustmo_core::hessian::{UpdateStatus, DEFAULT_CURVATURE_TOL};
use robustmo_core::HessianStore;

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

/// A random SPD matrix `L L^T + 0.1 I`.
fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let l = DMatrix::from_vec(n, n, v);
        &l * l.transpose() + DMatrix::identity(n, n) * 0.1
    })
}

fn relative_secant_residual(b: &DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (b * s - y).norm() / y.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn update_satisfies_secant_and_keeps_pd(b0 in spd(3), s in vector(3), y in vector(3)) {
        let s = DVector::from_vec(s);
        let y = DVector::from_vec(y);
        prop_assume!(s.norm() > 1e-3 && y.norm() > 1e-3);
        let mut store = HessianStore::identity(3, 1, 1);
        store.set_block(0, 0, b0.clone()).unwrap();
        let status = store.bfgs_update(0, &s, std::slice::from_ref(&y)).unwrap();
        let curvature_ok = s.dot(&y) > DEFAULT_CURVATURE_TOL * s.norm() * y.norm();
        // skip happens exactly when the safeguard fails
        prop_assert_eq!(status[0] == UpdateStatus::Skipped, !curvature_ok);
        let b1 = store.block(0, 0);
        if curvature_ok {
            prop_assert!(relative_secant_residual(b1, &s, &y) <= 1e-8);
        } else {
            prop_assert_eq!(b1, &b0);
        }
        prop_assert!(store.all_positive_definite());
        prop_assert!(store.max_asymmetry() == 0.0);
    }

    #[test]
    fn components_update_independently(s in vector(2), y0 in vector(2), y1 in vector(2)) {
        let s = DVector::from_vec(s);
        prop_assume!(s.norm() > 1e-3);
        let ys = [DVector::from_vec(y0), DVector::from_vec(y1)];
        prop_assume!(ys.iter().all(|y| y.norm() > 1e-3));
        let mut store = HessianStore::identity(2, 2, 2);
        let status = store.bfgs_update(1, &s, &ys).unwrap();
        for (l, y) in ys.iter().enumerate() {
            let applied = s.dot(y) > DEFAULT_CURVATURE_TOL * s.norm() * y.norm();
            prop_assert_eq!(status[l] == UpdateStatus::Applied, applied);
            if applied {
                prop_assert!(relative_secant_residual(store.block(1, l), &s, y) <= 1e-8);
            }
            // other scenario untouched
            prop_assert_eq!(store.block(0, l), &DMatrix::<f64>::identity(2, 2));
        }
    }
}

#[test]
fn one_dimensional_update_is_the_secant_slope() {
    let mut store = HessianStore::identity(1, 1, 1);
    let s = DVector::from_element(1, 0.5);
    let y = DVector::from_element(1, 3.0);
    store.bfgs_update(0, &s, &[y]).unwrap();
    assert!((store.block(0, 0)[(0, 0)] - 6.0).abs() < 1e-12);
}

#[test]
fn zero_step_is_rejected() {
    let mut store = HessianStore::identity(2, 1, 1);
    assert!(store.bfgs_update(0, &DVector::zeros(2), &[DVector::from_element(2, 1.0)]).is_err());
    assert!(store.bfgs_update(3, &DVector::from_element(2, 1.0), &[DVector::from_element(2, 1.0)]).is_err());
}
