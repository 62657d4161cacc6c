use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use thermkin_core::liouvillian::{evolve, spectral_decompose, to_superoperator, uniform_grid, EvolveOptions, Method};
use thermkin_core::metrics::{fidelity, qfi};
use thermkin_core::protocols::ModelFamily;
use thermkin_core::quantum::temperature_from_occupation;

fn oscillator(dim: usize) -> ModelFamily {
    ModelFamily::oscillator(dim, 1.0, 0.1)
}

fn temp(n: f64) -> f64 {
    temperature_from_occupation(1.0, n).unwrap()
}

fn generator(c: &mut Criterion) {
    let fam = oscillator(150);
    let model = fam.model(temp(10.0)).unwrap();
    let rho = fam.thermal(temp(1.0)).unwrap();
    c.bench_function("generator ho d150", |b| {
        b.iter(|| black_box(model.generator(&rho.entries().view())))
    });
}

fn metrics(c: &mut Criterion) {
    let fam = oscillator(150);
    let model = fam.model(temp(10.0)).unwrap();
    let times = uniform_grid(1.0, 2).unwrap();
    let traj = evolve(&model, &fam.thermal(temp(1.0)).unwrap(), &times, &EvolveOptions::default()).unwrap();
    let rho = &traj.states[1];
    let target = fam.thermal(temp(10.0)).unwrap();
    let drho = model.generator(&rho.entries().view());
    c.bench_function("fidelity ho d150", |b| b.iter(|| black_box(fidelity(rho, &target).unwrap())));
    c.bench_function("qfi ho d150", |b| b.iter(|| black_box(qfi(rho, &drho.view(), 1e-12).unwrap())));
}

fn spectrum(c: &mut Criterion) {
    let fam = oscillator(40).with_tail_tol(1e-2);
    let model = fam.model(temp(3.0)).unwrap();
    let sup = to_superoperator(&model);
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    g.bench_function("decompose ho d40", |b| {
        b.iter(|| black_box(spectral_decompose(model.space(), &sup).unwrap()))
    });
    g.finish();
}

fn exponential(c: &mut Criterion) {
    let fam = oscillator(150);
    let model = fam.model(temp(10.0)).unwrap();
    let rho0 = fam.thermal(temp(1.0)).unwrap();
    let times = uniform_grid(5.0, 11).unwrap();
    let opts = EvolveOptions::default().with_method(Method::Exponential);
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    g.bench_function("exponential ho d150 t5", |b| {
        b.iter(|| black_box(evolve(&model, &rho0, &times, &opts).unwrap()))
    });
    g.finish();
}

criterion_group!(kernels, generator, metrics, spectrum, exponential);
criterion_main!(kernels);
