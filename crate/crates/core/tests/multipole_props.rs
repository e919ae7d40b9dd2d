use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spintomo::multipole::{potential_series, potential_term, ObservationPoint, PointSource, SourceKind};

fn random_sources(rng: &mut ChaCha8Rng, count: usize, max_r: f64) -> Vec<PointSource> {
    (0..count)
        .map(|_| {
            PointSource::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(0.1..max_r),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..2.0 * PI),
            )
            .unwrap()
        })
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng, r0: f64) -> ObservationPoint {
    ObservationPoint::new(r0, rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)).unwrap()
}

#[test]
fn five_sources_match_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let sources = random_sources(&mut rng, 5, 1.0);
        let max_r = sources.iter().map(|s| s.r).fold(0.0, f64::max);
        let point = random_point(&mut rng, 10.0 * max_r);
        let rep = potential_series(&sources, 8, point, SourceKind::Electric).unwrap();
        assert!(rep.rel_error < 1e-6, "{}", rep.rel_error);
        assert!(rep.warning.is_none());
    }
}

#[test]
fn monopole_is_exact_at_every_order() {
    let src = [PointSource::new(-3.2, 0.0, 0.0, 0.0).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for lmax in 0..6 {
        let point = random_point(&mut rng, 2.5);
        let rep = potential_series(&src, lmax, point, SourceKind::Electric).unwrap();
        assert!((rep.total - (-3.2 / 2.5)).abs() < 1e-14);
        assert!(rep.rel_error < 1e-14);
    }
}

/// Partial sums may overshoot, so the error itself is not monotone in the
/// order; it is bounded by the geometric tail `Σ_a |e_a| q_a^(L+1) / (R₀ (1 - q_a))`
/// with `q_a = r_a / R₀`, which is.
#[test]
fn error_stays_under_the_tail_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let sources = random_sources(&mut rng, 5, 1.0);
        let max_r = sources.iter().map(|s| s.r).fold(0.0, f64::max);
        let point = random_point(&mut rng, 5.0 * max_r);
        let mut previous_bound = f64::INFINITY;
        for lmax in 0..10 {
            let rep = potential_series(&sources, lmax, point, SourceKind::Electric).unwrap();
            let bound: f64 = sources
                .iter()
                .map(|s| {
                    let q = s.r / point.r0;
                    s.e.abs() * q.powi(lmax as i32 + 1) / (point.r0 * (1.0 - q))
                })
                .sum();
            assert!((rep.total - rep.direct_sum).abs() <= bound + 1e-14, "lmax {lmax}");
            assert!(bound < previous_bound);
            previous_bound = bound;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn term_scaling_and_realness(seed in any::<u64>(), l in 0u32..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources = random_sources(&mut rng, 4, 1.0);
        let p = random_point(&mut rng, 3.0);
        let far = ObservationPoint::new(6.0, p.theta, p.phi).unwrap();
        let near_t = potential_term(&sources, l, p).unwrap();
        let far_t = potential_term(&sources, l, far).unwrap();
        prop_assert!(near_t.im.abs() < 1e-12);
        prop_assert!((far_t.re * 2f64.powi(l as i32 + 1) - near_t.re).abs() < 1e-12 * near_t.re.abs().max(1.0));
    }
}

#[test]
fn magnetic_sources_share_the_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sources = random_sources(&mut rng, 3, 1.0);
    let point = random_point(&mut rng, 4.0);
    let e = potential_series(&sources, 6, point, SourceKind::Electric).unwrap();
    let m = potential_series(&sources, 6, point, SourceKind::Magnetic).unwrap();
    assert_eq!(e.total, m.total);
    assert_eq!(m.kind, SourceKind::Magnetic);
}
