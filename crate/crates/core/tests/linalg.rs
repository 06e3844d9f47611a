use amfshrink_core::linalg::{
    eig_hermitian, inv_quad_form, orthonormality_error, quad_form, relative_frobenius_error, sqrt_psd,
};
use amfshrink_core::{CMatrix, CVector, Complex64, Field, HermitianMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(dim: usize, field: Field, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(dim, dim, |_, _| {
        let re = rng.random_range(-1.0..1.0);
        let im = match field {
            Field::Real => 0.0,
            Field::Complex => rng.random_range(-1.0..1.0),
        };
        Complex64::new(re, im)
    })
}

fn random_hermitian(dim: usize, field: Field, seed: u64) -> HermitianMatrix {
    let g = random_matrix(dim, field, seed);
    HermitianMatrix::new(field, &g + g.adjoint()).unwrap()
}

fn random_psd(dim: usize, field: Field, seed: u64) -> HermitianMatrix {
    let g = random_matrix(dim, field, seed);
    HermitianMatrix::new(field, &g * g.adjoint()).unwrap()
}

fn random_vector(dim: usize, field: Field, seed: u64) -> CVector {
    random_matrix(dim, field, seed).column(0).into_owned()
}

fn field_strategy() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Real), Just(Field::Complex)]
}

fn check_eigensystem(m: &HermitianMatrix) {
    let e = eig_hermitian(m).unwrap();
    assert!(orthonormality_error(e.vectors()) <= 1e-10);
    assert!(e.values().windows(2).all(|w| w[0] <= w[1]));
    assert!(relative_frobenius_error(e.reconstruct().as_matrix(), m.as_matrix()) <= 1e-9);
    let sum: f64 = e.values().iter().sum();
    let scale = e.values().iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    assert!((sum - m.trace()).abs() <= 1e-9 * scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigensystem_invariants(dim in 1usize..40, field in field_strategy(), seed in any::<u64>()) {
        check_eigensystem(&random_hermitian(dim, field, seed));
    }

    #[test]
    fn eigen_output_is_deterministic(dim in 1usize..20, field in field_strategy(), seed in any::<u64>()) {
        let m = random_hermitian(dim, field, seed);
        let a = eig_hermitian(&m).unwrap();
        let b = eig_hermitian(&m).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn square_root_squares_back(dim in 1usize..30, field in field_strategy(), seed in any::<u64>()) {
        let m = random_psd(dim, field, seed);
        let s = sqrt_psd(&m).unwrap();
        let sq = s.as_matrix() * s.as_matrix();
        prop_assert!(relative_frobenius_error(&sq, m.as_matrix()) <= 1e-9);
        prop_assert!(eig_hermitian(&s).unwrap().values()[0] >= -1e-12);
    }

    #[test]
    fn inverse_quadratic_form_matches_dense_inverse(dim in 1usize..=50, field in field_strategy(), seed in any::<u64>()) {
        let e = eig_hermitian(&random_hermitian(dim, field, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let d: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..10.0)).collect();
        let v = random_vector(dim, field, seed.wrapping_add(1));
        let dense = e.compose(&d).unwrap().into_matrix().try_inverse().unwrap();
        let expected = (v.adjoint() * &dense * &v)[(0, 0)].re;
        let got = inv_quad_form(&v, &e, &d).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.abs(), "{} vs {}", got, expected);
    }

    #[test]
    fn quadratic_form_is_real_and_matches_product(dim in 1usize..30, field in field_strategy(), seed in any::<u64>()) {
        let m = random_hermitian(dim, field, seed);
        let v = random_vector(dim, field, seed.wrapping_mul(3));
        let full = (v.adjoint() * m.as_matrix() * &v)[(0, 0)];
        let scale = v.norm_squared() * m.as_matrix().norm();
        prop_assert!(full.im.abs() <= 1e-12 * scale.max(1.0));
        prop_assert!((quad_form(&v, &m).unwrap() - full.re).abs() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn large_random_matrices_keep_invariants() {
    check_eigensystem(&random_hermitian(500, Field::Complex, 11));
    check_eigensystem(&random_hermitian(500, Field::Real, 12));
}

#[test]
fn repeated_eigenvalues_reconstruct() {
    // a rank-one update of the identity: eigenvalue 1 with multiplicity dim-1
    let v = random_vector(12, Field::Complex, 3);
    let m = CMatrix::identity(12, 12) + &v * v.adjoint();
    let m = HermitianMatrix::new(Field::Complex, m).unwrap();
    check_eigensystem(&m);
    let e = eig_hermitian(&m).unwrap();
    assert!(e.values()[..11].iter().all(|&l| (l - 1.0).abs() < 1e-12));
    assert!((e.values()[11] - (1.0 + v.norm_squared())).abs() < 1e-12);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let mut m = random_matrix(4, Field::Complex, 1);
    m = &m + m.adjoint();
    m[(0, 1)] += Complex64::new(1e-3, 0.0);
    assert!(HermitianMatrix::new(Field::Complex, m).is_err());
}
