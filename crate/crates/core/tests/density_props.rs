use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spintomo::density::{
    couple_product_coeffs, decompose, decompose_system, kron_density, product_coeffs, random_density,
    random_matrix, random_pure_density, reconstruct, rotate_coeffs, rotate_density, uncouple_coeffs,
    validate_density, VALIDITY_TOL,
};
use spintomo::{BasisKind, CMatrix, CoeffKey, Complex64, DensityMatrix, EulerAngles, SpinValue, StateVector, TensorIndex};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn round_trip_any_square_matrix(dim in 1usize..=6, seed in any::<u64>()) {
        let spin = SpinValue::from_dim(dim).unwrap();
        let a = random_matrix(dim, &mut rng(seed));
        let back = reconstruct(&decompose(&a, spin).unwrap()).unwrap();
        prop_assert!((&back - &a).frobenius_norm() < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn hermitian_coefficients_pair_up(dim in 2usize..=5, seed in any::<u64>()) {
        let spin = SpinValue::from_dim(dim).unwrap();
        let rho = random_density(&[spin], &mut rng(seed));
        let table = decompose(rho.matrix(), spin).unwrap();
        for idx in TensorIndex::all(spin) {
            let a = table.get(&CoeffKey::single(idx.rank, -idx.m));
            let b = table.get(&CoeffKey::single(idx.rank, idx.m)).conj();
            let sign = if idx.m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            prop_assert!((a - b * sign).norm() < 1e-12);
        }
        prop_assert!((rho.purity() - table.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn rotation_covariance(twice in 1u32..=2, seed in any::<u64>(), a in 0.0..6.3f64, b in 0.0..3.15f64, g in 0.0..6.3f64) {
        let spin = SpinValue::from_twice(twice);
        let rho = random_density(&[spin], &mut rng(seed));
        let angles = EulerAngles::new(a, b, g);
        let via_coeffs = rotate_coeffs(&decompose(rho.matrix(), spin).unwrap(), angles).unwrap();
        let via_matrix = decompose(rotate_density(&rho, angles).matrix(), spin).unwrap();
        prop_assert!(via_coeffs.distance(&via_matrix).unwrap() < 1e-10);
    }
}

#[test]
fn round_trip_hundred_per_dimension() {
    let mut r = rng(2024);
    for dim in 2..=5 {
        let spin = SpinValue::from_dim(dim).unwrap();
        for _ in 0..100 {
            let a = random_matrix(dim, &mut r);
            let back = reconstruct(&decompose(&a, spin).unwrap()).unwrap();
            assert!((&back - &a).frobenius_norm() < 1e-12 * a.frobenius_norm());
        }
    }
}

#[test]
fn kron_commutes_with_decomposition() {
    let mut r = rng(11);
    for n in [2usize, 3] {
        for _ in 0..10 {
            let sites: Vec<DensityMatrix> = (0..n).map(|_| random_density(&[SpinValue::HALF], &mut r)).collect();
            let joint = kron_density(&sites).unwrap();
            let direct = decompose_system(joint.matrix(), joint.system(), BasisKind::Product).unwrap();
            let tables: Vec<_> = sites.iter().map(|s| decompose(s.matrix(), SpinValue::HALF).unwrap()).collect();
            let factored = product_coeffs(&tables).unwrap();
            assert!(direct.distance(&factored).unwrap() < 1e-12);
            assert!((&reconstruct(&factored).unwrap() - joint.matrix()).frobenius_norm() < 1e-12);
        }
    }
}

#[test]
fn coupling_round_trips_in_mixed_systems() {
    let mut r = rng(5);
    let systems = [
        vec![SpinValue::HALF, SpinValue::HALF],
        vec![SpinValue::HALF, SpinValue::ONE],
        vec![SpinValue::HALF, SpinValue::HALF, SpinValue::HALF],
        vec![SpinValue::ONE, SpinValue::HALF, SpinValue::from_twice(3)],
    ];
    for system in systems {
        let rho = random_density(&system, &mut r);
        let product = decompose_system(rho.matrix(), &system, BasisKind::Product).unwrap();
        let coupled = couple_product_coeffs(&product).unwrap();
        let direct = decompose_system(rho.matrix(), &system, BasisKind::Coupled).unwrap();
        assert!(coupled.distance(&direct).unwrap() < 1e-12);
        assert!((&reconstruct(&coupled).unwrap() - rho.matrix()).frobenius_norm() < 1e-12);
        assert!(uncouple_coeffs(&coupled).unwrap().distance(&product).unwrap() < 1e-12);
    }
}

#[test]
fn singlet_is_scalar_plus_rank_two_free() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let psi = StateVector::new(vec![z, Complex64::new(r, 0.0), Complex64::new(-r, 0.0), z]).unwrap();
    let rho = DensityMatrix::qubits_pure(&psi).unwrap();
    let coupled = decompose_system(rho.matrix(), rho.system(), BasisKind::Coupled).unwrap();
    // The singlet is rotation invariant: only total rank 0 survives.
    for (k, v) in coupled.iter() {
        if k.rank() > 0 {
            assert!(v.norm() < 1e-15, "{k:?} = {v}");
        }
    }
    assert!((&reconstruct(&coupled).unwrap() - rho.matrix()).frobenius_norm() < 1e-12);
}

#[test]
fn random_states_are_valid() {
    let mut r = rng(9);
    let system = [SpinValue::HALF, SpinValue::ONE];
    for _ in 0..20 {
        for rho in [random_density(&system, &mut r), random_pure_density(&system, &mut r)] {
            assert!(validate_density(rho.matrix(), &system, VALIDITY_TOL).passed);
        }
    }
}

#[test]
fn validation_rejects_bad_states() {
    let h = [SpinValue::HALF];
    assert!(DensityMatrix::new(CMatrix::from_real_diag(&[1.5, -0.5]), h.to_vec()).is_err());
    assert!(DensityMatrix::new(CMatrix::from_real_diag(&[0.5, 0.4]), h.to_vec()).is_err());
    let skew = CMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
    assert!(DensityMatrix::new(skew, h.to_vec()).is_err());
    assert!(DensityMatrix::new(CMatrix::identity(3).scale_real(1.0 / 3.0), h.to_vec()).is_err());
}
