use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spintomo::density::random_density;
use spintomo::tomography::{simulate_tomogram_with, TomographySettings};
use spintomo::{Exec, SpinValue};

fn simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_tomogram");
    group.sample_size(20);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=3usize {
        let system = vec![SpinValue::HALF; n];
        let rho = random_density(&system, &mut rng);
        let settings = TomographySettings::exact_for(&system);
        for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, format!("{n}q")), &rho, |b, rho| {
                b.iter(|| simulate_tomogram_with(rho, &settings, exec).unwrap())
            });
        }
    }
    let spin = vec![SpinValue::from_twice(5)];
    let rho = random_density(&spin, &mut rng);
    let settings = TomographySettings::exact_for(&spin);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, "spin5/2"), &rho, |b, rho| {
            b.iter(|| simulate_tomogram_with(rho, &settings, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);
