//! Acceptance checks. Prints one line per criterion and exits non-zero if
//! any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spintomo::density::{
    couple_product_coeffs, decompose, decompose_system, kron_density, product_coeffs, random_density,
    random_matrix, random_pure_density, reconstruct, rotate_coeffs, rotate_density,
};
use spintomo::hamiltonian::{
    build_h2, build_hn, commutator, total_spin_component, total_spin_squared, Axis, CouplingModel, SpinSystemSpec,
};
use spintomo::multipole::{potential_series, ObservationPoint, PointSource, SourceKind};
use spintomo::tensor::tensor_basis;
use spintomo::tomography::{
    apply_pauli_density, build_signatures, correct_error, detect_error, fidelity, single_error_candidates,
    tomographic_coeffs, truncated_reconstruct, AccessibilityPolicy, ErrorCandidate, TomographySettings,
};
use spintomo::{BasisKind, CMatrix, Complex64, DensityMatrix, EulerAngles, Exec, SpinValue, TensorIndex};

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lift<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_angles(r: &mut ChaCha8Rng) -> EulerAngles {
    EulerAngles::new(r.random_range(0.0..2.0 * PI), r.random_range(0.0..PI), r.random_range(0.0..2.0 * PI))
}

fn tensor_identities() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for twice in 1..=4 {
        let basis = tensor_basis(SpinValue::from_twice(twice));
        for (a, ta) in basis.elements() {
            for (b, tb) in basis.elements() {
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ta.inner(tb) - Complex64::new(expect, 0.0)).norm());
            }
            let partner = lift(basis.get(TensorIndex::new(a.rank, -a.m)))?;
            let sign = if a.m % 2 == 0 { 1.0 } else { -1.0 };
            worst = worst.max((&ta.adjoint() - &partner.scale_real(sign)).max_abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-12 && secs < 1.0, format!("max deviation {worst:.1e}, {secs:.3} s"))
}

fn round_trip() -> Check {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for dim in 2..=5 {
        let spin = lift(SpinValue::from_dim(dim))?;
        for _ in 0..100 {
            let a = random_matrix(dim, &mut r);
            let back = lift(reconstruct(&lift(decompose(&a, spin))?))?;
            worst = worst.max((&back - &a).frobenius_norm() / a.frobenius_norm());
        }
    }
    ensure(worst < 1e-12, format!("max relative error {worst:.1e} over 400 matrices"))
}

fn rotation_covariance() -> Check {
    let mut r = rng(102);
    let mut worst: f64 = 0.0;
    for spin in [SpinValue::HALF, SpinValue::ONE] {
        for _ in 0..50 {
            let rho = random_density(&[spin], &mut r);
            let angles = random_angles(&mut r);
            let via_coeffs = lift(rotate_coeffs(&lift(decompose(rho.matrix(), spin))?, angles))?;
            let via_matrix = lift(decompose(rotate_density(&rho, angles).matrix(), spin))?;
            worst = worst.max(lift(via_coeffs.distance(&via_matrix))?);
        }
    }
    ensure(worst < 1e-10, format!("max coefficient distance {worst:.1e}"))
}

fn kron_coupling() -> Check {
    let mut r = rng(103);
    let (mut product_err, mut coupled_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let a = random_density(&[SpinValue::HALF], &mut r);
        let b = random_density(&[SpinValue::HALF], &mut r);
        let joint = lift(kron_density(&[a.clone(), b.clone()]))?;
        let tables = [lift(decompose(a.matrix(), SpinValue::HALF))?, lift(decompose(b.matrix(), SpinValue::HALF))?];
        let product = lift(product_coeffs(&tables))?;
        product_err = product_err.max((&lift(reconstruct(&product))? - joint.matrix()).frobenius_norm());
        let coupled = lift(couple_product_coeffs(&product))?;
        coupled_err = coupled_err.max((&lift(reconstruct(&coupled))? - joint.matrix()).frobenius_norm());
    }
    ensure(
        product_err < 1e-12 && coupled_err < 1e-12,
        format!("product {product_err:.1e}, coupled {coupled_err:.1e}"),
    )
}

fn tomographic_inversion() -> Check {
    let start = Instant::now();
    let mut r = rng(104);
    let mut worst: f64 = 0.0;
    for spin in [SpinValue::HALF, SpinValue::ONE] {
        for _ in 0..20 {
            let rho = random_density(&[spin], &mut r);
            let settings = TomographySettings::exact_for(rho.system());
            let table = lift(tomographic_coeffs(&rho, &settings, Exec::Parallel))?;
            let direct = lift(decompose_system(rho.matrix(), rho.system(), BasisKind::Single))?;
            worst = worst.max(lift(table.distance(&direct))?);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-8 && secs < 5.0, format!("max distance {worst:.1e}, {secs:.2} s"))
}

fn detection() -> Check {
    let policy = AccessibilityPolicy::default();
    let mut r = rng(105);
    let (mut correct, mut flagged, mut silent) = (0usize, 0usize, 0usize);
    let mut worst_fid: f64 = 1.0;
    for n in 1..=3 {
        let system = vec![SpinValue::HALF; n];
        let settings = TomographySettings::exact_for(&system).with_policy(policy);
        for _ in 0..50 {
            let rho = random_pure_density(&system, &mut r);
            let set = lift(build_signatures(&rho, &single_error_candidates(&system), policy))?;
            for site in 0..n {
                for axis in Axis::ALL {
                    let injected = ErrorCandidate::single(site, axis);
                    let observed = lift(apply_pauli_density(&rho, &injected))?;
                    let table = lift(tomographic_coeffs(&observed, &settings, Exec::Parallel))?;
                    let det = lift(detect_error(&table, &set))?;
                    if det.detected == injected {
                        correct += 1;
                    } else if det.ambiguous && det.tied.contains(&injected) {
                        flagged += 1;
                    } else {
                        silent += 1;
                    }
                    let fixed = lift(correct_error(&observed, &det.detected))?;
                    worst_fid = worst_fid.min(lift(fidelity(&fixed, &rho))?);
                }
            }
        }
    }
    ensure(
        silent == 0 && worst_fid > 1.0 - 1e-10,
        format!("{correct} correct, {flagged} flagged, {silent} silent, min fidelity 1 - {:.1e}", 1.0 - worst_fid),
    )
}

/// Eigenvalues via the real symmetric embedding of a Hermitian matrix.
fn dense_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.dim();
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut vals: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals.into_iter().step_by(2).collect()
}

fn conserved_quantities() -> Check {
    let mut r = rng(106);
    let (mut sz_s2, mut h_sz): (f64, f64) = (0.0, 0.0);
    for n in 1..=4 {
        let sz = lift(total_spin_component(Axis::Z, n))?;
        sz_s2 = sz_s2.max(lift(commutator(&sz, &lift(total_spin_squared(n))?))?.frobenius_norm());
        for _ in 0..10 {
            let mut spec = lift(SpinSystemSpec::new(n, r.random_range(-2.0..2.0)))?;
            for i in 0..n {
                for j in i + 1..n {
                    lift(spec.set_coupling(i, j, r.random_range(-1.0..1.0)))?;
                }
            }
            for model in [CouplingModel::XyPlane, CouplingModel::Heisenberg] {
                let h = lift(build_hn(&spec, model))?;
                h_sz = h_sz.max(lift(commutator(&h, &sz))?.frobenius_norm());
            }
        }
    }
    let spec = lift(lift(SpinSystemSpec::new(2, 1.0))?.with_coupling(0, 1, 0.5))?;
    let vals = dense_eigenvalues(&lift(build_h2(&spec))?);
    let spectrum_err = vals.iter().zip([-2.0, -1.0, 1.0, 2.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(
        sz_s2 < 1e-12 && h_sz < 1e-12 && spectrum_err < 1e-10,
        format!("[Sz,S2] {sz_s2:.1e}, [H,Sz] {h_sz:.1e}, H2 spectrum {spectrum_err:.1e}"),
    )
}

fn truncation() -> Check {
    let policy = AccessibilityPolicy::default();
    let system = vec![SpinValue::HALF; 3];
    let mut r = rng(107);
    let mut min_deficit = f64::INFINITY;
    for _ in 0..20 {
        let rho = random_pure_density(&system, &mut r);
        let table = lift(decompose_system(rho.matrix(), &system, BasisKind::Coupled))?;
        min_deficit = min_deficit.min(lift(truncated_reconstruct(&table, policy))?.1.frobenius_deficit);
    }
    // Tables without rank-3 content lose nothing.
    let rho = random_pure_density(&system, &mut r);
    let full = lift(decompose_system(rho.matrix(), &system, BasisKind::Coupled))?;
    let low = full.restrict_to_rank(2);
    let zero_rank3 = low.iter().all(|(k, _)| k.rank() <= 2);
    let low_deficit = lift(truncated_reconstruct(&low, policy))?.1.frobenius_deficit;
    let mixed = DensityMatrix::maximally_mixed(system.clone());
    let mixed_table = lift(decompose_system(mixed.matrix(), &system, BasisKind::Coupled))?;
    let mixed_deficit = lift(truncated_reconstruct(&mixed_table, policy))?.1.frobenius_deficit;
    ensure(
        min_deficit > 0.0 && zero_rank3 && low_deficit < 1e-15 && mixed_deficit < 1e-15,
        format!("min deficit {min_deficit:.2e}, rank-3-free deficits {low_deficit:.1e} and {mixed_deficit:.1e}"),
    )
}

fn multipole() -> Check {
    let mut r = rng(108);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let sources = (0..5)
            .map(|_| {
                PointSource::new(
                    r.random_range(-2.0..2.0),
                    r.random_range(0.1..1.0),
                    r.random_range(0.0..PI),
                    r.random_range(0.0..2.0 * PI),
                )
            })
            .collect::<Result<Vec<_>, _>>();
        let sources = lift(sources)?;
        let max_r = sources.iter().map(|s| s.r).fold(0.0, f64::max);
        let point = lift(ObservationPoint::new(10.0 * max_r, r.random_range(0.0..PI), r.random_range(0.0..2.0 * PI)))?;
        worst = worst.max(lift(potential_series(&sources, 8, point, SourceKind::Electric))?.rel_error);
    }
    let mono = [lift(PointSource::new(1.7, 0.0, 0.0, 0.0))?];
    let point = lift(ObservationPoint::new(3.0, 0.8, 2.1))?;
    let rep = lift(potential_series(&mono, 8, point, SourceKind::Electric))?;
    let mono_err = (rep.total - 1.7 / 3.0).abs();
    ensure(worst < 1e-6 && mono_err < 1e-14, format!("max relative error {worst:.1e}, monopole {mono_err:.1e}"))
}

fn cli_determinism() -> Check {
    let dir = lift(tempfile::tempdir())?;
    let outputs = common::run_pipeline(dir.path(), &[])?;
    common::check_golden(&outputs)?;
    let again = lift(tempfile::tempdir())?;
    let rerun = common::run_pipeline(again.path(), &["--sequential"])?;
    ensure(rerun == outputs, format!("{} stage outputs match the golden bytes, parallel and sequential", outputs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("tensor basis orthonormality and adjoint", tensor_identities),
        ("decompose/reconstruct round trip", round_trip),
        ("rotation covariance", rotation_covariance),
        ("Kronecker and coupling consistency", kron_coupling),
        ("tomographic inversion", tomographic_inversion),
        ("error detection and correction", detection),
        ("conserved quantities and H2 spectrum", conserved_quantities),
        ("moment truncation", truncation),
        ("multipole series", multipole),
        ("CLI end-to-end determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
