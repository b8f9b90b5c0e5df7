use collisional::dynamics::full_dephasing;
use collisional::linalg::{
    apply_superop, choi_matrix, compose, eig_hermitian, unitary_superop, ComplexMatrix, DensityMatrix,
    HermitianOperator, Superoperator,
};
use collisional::Complex64;
use proptest::prelude::*;

fn hermitian(d: usize, data: &[(f64, f64)]) -> HermitianOperator<f64> {
    let m = ComplexMatrix::from_fn(d, |r, c| {
        let (re, im) = data[r * d + c];
        Complex64::new(re, im)
    });
    HermitianOperator::hermitian_part_of(&m)
}

fn arb_hermitian(max_d: usize) -> impl Strategy<Value = HermitianOperator<f64>> {
    (1..=max_d).prop_flat_map(|d| {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), d * d).prop_map(move |v| hermitian(d, &v))
    })
}

fn arb_superop(d: usize) -> impl Strategy<Value = Superoperator<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d * d * d).prop_map(move |v| {
        let m = ComplexMatrix::from_fn(d * d, |r, c| Complex64::new(v[r * d * d + c].0, v[r * d * d + c].1));
        Superoperator::from_matrix(d, m).unwrap()
    })
}

fn arb_matrix(d: usize) -> impl Strategy<Value = ComplexMatrix<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
        .prop_map(move |v| ComplexMatrix::from_fn(d, |r, c| Complex64::new(v[r * d + c].0, v[r * d + c].1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(h in arb_hermitian(8)) {
        let eig = eig_hermitian(&h);
        let scale = h.matrix().max_abs().max(1.0);
        let err = eig.reconstruct().max_abs_diff(h.matrix()).unwrap();
        prop_assert!(err <= 1e-12 * scale, "reconstruction error {err}");
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let u = &eig.vectors;
        let gram = u.adjoint().matmul(u).unwrap();
        prop_assert!(gram.max_abs_diff(&ComplexMatrix::identity(h.dim())).unwrap() < 1e-12);
    }

    #[test]
    fn matrix_function_is_multiplicative(h in arb_hermitian(6), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let fa = h.matrix_function(|x| Complex64::new(0.0, a * x).exp()).unwrap();
        let fb = h.matrix_function(|x| Complex64::new(0.0, b * x).exp()).unwrap();
        let fab = h.matrix_function(|x| Complex64::new(0.0, (a + b) * x).exp()).unwrap();
        prop_assert!(fab.max_abs_diff(&fa.matmul(&fb).unwrap()).unwrap() < 1e-11);
    }

    #[test]
    fn superop_application_is_linear(
        s in arb_superop(3),
        r1 in arb_matrix(3),
        r2 in arb_matrix(3),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let combo = &r1.scale_real(alpha) + &r2.scale_real(beta);
        let lhs = s.apply(&combo).unwrap();
        let rhs = &s.apply(&r1).unwrap().scale_real(alpha) + &s.apply(&r2).unwrap().scale_real(beta);
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
    }

    #[test]
    fn tensor_and_vectorized_views_agree(s in arb_superop(3), rho in arb_matrix(3)) {
        let a = s.apply(&rho).unwrap();
        let b = s.apply_vectorized(&rho).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-14);
    }

    #[test]
    fn unitary_and_dephasing_are_completely_positive(
        energies in prop::collection::vec(-3.0..3.0f64, 2..5),
        tau in 0.0..20.0f64,
    ) {
        let d = energies.len();
        let u = unitary_superop(&energies, tau, 1.0).unwrap();
        let cu = eig_hermitian(&choi_matrix(&u));
        prop_assert!(cu.min() >= -1e-12);
        prop_assert!((cu.max() - d as f64).abs() < 1e-12);
        let cd = eig_hermitian(&choi_matrix(&full_dephasing::<f64>(d)));
        prop_assert!(cd.min() >= -1e-12);
        let both = compose(&full_dephasing(d), &u).unwrap();
        prop_assert!(eig_hermitian(&choi_matrix(&both)).min() >= -1e-12);
    }

    #[test]
    fn unitary_evolution_keeps_populations(tau in 0.0..50.0f64, p in 0.0..1.0f64, c in 0.0..0.5f64) {
        let coh = c * (p * (1.0 - p)).sqrt();
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(p, 0.0), Complex64::new(coh, 0.0)],
            vec![Complex64::new(coh, 0.0), Complex64::new(1.0 - p, 0.0)],
        ]).unwrap();
        let rho = DensityMatrix::from_matrix(m).unwrap();
        let out = apply_superop(&unitary_superop(&[-0.3, 0.3], tau, 1.0).unwrap(), &rho).unwrap();
        prop_assert_eq!(out[(0, 0)], rho.entry(0, 0));
        prop_assert_eq!(out[(1, 1)], rho.entry(1, 1));
        prop_assert!((out[(0, 1)].norm() - coh).abs() < 1e-15);
    }
}

#[test]
fn spec_eigen_examples() {
    let id = eig_hermitian(&HermitianOperator::<f64>::from_real_diagonal(&[1.0, 1.0]));
    assert_eq!(id.values, vec![1.0, 1.0]);
    let z = eig_hermitian(&HermitianOperator::new(collisional::linalg::pauli_z::<f64>()).unwrap());
    assert_eq!(z.values, vec![-1.0, 1.0]);
}

#[test]
fn compose_with_identity_and_zero_time() {
    let u = unitary_superop(&[-0.3, 0.3], 1.7, 1.0).unwrap();
    assert_eq!(compose(&u, &Superoperator::identity(2)).unwrap(), u);
    let u0 = unitary_superop(&[-0.3, 0.3], 0.0, 1.0).unwrap();
    assert_eq!(u0, Superoperator::identity(2));
}
