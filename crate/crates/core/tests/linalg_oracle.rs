mod common;

use brownring::linalg::{determinant, general_eigenvalues, herm_eigenvalues, singular_values, CMatrix, HermMatrix};
use common::{c, charpoly, gaussian_matrix, hermitian_matrix, leibniz_det, poly_roots, rng, set_distance};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

#[test]
fn charpoly_oracle_matches_leibniz() {
    let mut r = rng(1);
    for n in 1..=5 {
        let a = gaussian_matrix(n, &mut r);
        let z = c(0.3, -0.7);
        let direct = leibniz_det(&CMatrix::identity(n).scale(z).add(&a.scale(c(-1.0, 0.0))).unwrap());
        let coeffs = charpoly(&a);
        let horner = coeffs.iter().rev().fold(c(0.0, 0.0), |p, &k| p * z + k);
        assert!((direct - horner).norm() < 1e-10 * (1.0 + direct.norm()));
    }
}

#[test]
fn general_eigenvalues_match_charpoly_roots() {
    let mut r = rng(2);
    for i in 0..60 {
        let n = 1 + i % 6;
        let a = gaussian_matrix(n, &mut r);
        let got = general_eigenvalues(&a).unwrap().into_points();
        assert!(set_distance(&got, &poly_roots(&charpoly(&a))) < 1e-8);
    }
}

#[test]
fn hermitian_eigenvalues_match_charpoly_roots() {
    let mut r = rng(3);
    for i in 0..60 {
        let n = 1 + i % 6;
        let a = hermitian_matrix(n, &mut r);
        let got: Vec<C64> = herm_eigenvalues(&HermMatrix::new(a.clone()).unwrap())
            .unwrap()
            .into_iter()
            .map(|x| c(x, 0.0))
            .collect();
        assert!(set_distance(&got, &poly_roots(&charpoly(&a))) < 1e-8);
    }
}

#[test]
fn determinant_matches_leibniz() {
    let mut r = rng(4);
    for n in 1..=6 {
        let a = gaussian_matrix(n, &mut r);
        let lu = determinant(&a).unwrap();
        let lz = leibniz_det(&a);
        assert!((lu - lz).norm() < 1e-10 * (1.0 + lz.norm()));
    }
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut r = rng(5);
    let a = gaussian_matrix(7, &mut r);
    let gram = HermMatrix::new(a.adjoint().matmul(&a).unwrap()).unwrap();
    let mut ev: Vec<f64> = herm_eigenvalues(&gram)
        .unwrap()
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    let sv = singular_values(&a).unwrap();
    for (s, e) in sv.iter().zip(&ev) {
        assert!((s - e).abs() < 1e-10);
    }
}

#[test]
fn rectangular_singular_values() {
    let mut r = rng(6);
    let a = gaussian_matrix(6, &mut r);
    let wide = CMatrix::from_fn(3, 6, |i, j| a[(i, j)]);
    let sv = singular_values(&wide).unwrap();
    assert_eq!(sv.len(), 3);
    let sv_t = singular_values(&wide.adjoint()).unwrap();
    for (x, y) in sv.iter().zip(&sv_t) {
        assert!((x - y).abs() < 1e-12);
    }
}

fn entry() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| c(re, im))
}

fn square() -> impl Strategy<Value = CMatrix> {
    (1usize..9).prop_flat_map(|n| {
        proptest::collection::vec(entry(), n * n).prop_map(move |d| CMatrix::from_row_major(n, n, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalue_sum_is_trace(a in square()) {
        let eig = general_eigenvalues(&a).unwrap();
        prop_assert!((eig.sum() - a.trace()).norm() <= 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn eigenvalue_product_is_determinant(a in square()) {
        let eig = general_eigenvalues(&a).unwrap();
        let det = determinant(&a).unwrap();
        prop_assert!((eig.product() - det).norm() <= 1e-8 * (1.0 + det.norm()) * (1.0 + a.frobenius_norm()).powi(a.n_rows() as i32));
    }

    #[test]
    fn hermitian_frobenius_identity(a in square()) {
        let h = a.add(&a.adjoint()).unwrap();
        let ev = herm_eigenvalues(&HermMatrix::new(h.clone()).unwrap()).unwrap();
        let f2 = h.frobenius_norm().powi(2);
        prop_assert!((ev.iter().map(|x| x * x).sum::<f64>() - f2).abs() <= 1e-10 * (1.0 + f2));
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]) || ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singular_values_are_sorted_and_norm_preserving(a in square()) {
        let sv = singular_values(&a).unwrap();
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sv.iter().all(|&s| s >= 0.0));
        let f2 = a.frobenius_norm().powi(2);
        prop_assert!((sv.iter().map(|s| s * s).sum::<f64>() - f2).abs() <= 1e-10 * (1.0 + f2));
    }

    #[test]
    fn singular_values_invariant_under_adjoint(a in square()) {
        let x = singular_values(&a).unwrap();
        let y = singular_values(&a.adjoint()).unwrap();
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + x[0]));
        }
    }
}
