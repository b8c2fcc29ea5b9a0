use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use tdfs::algebra::{matrix_exponential, ComplexMatrix};
use tdfs::dfs::{frame_propagate, synthesize_control};
use tdfs::lindblad::{integrate, lindblad_rhs, DensityMatrix, IntegratorConfig};
use tdfs::models::{dark_states, five_level_model, xi_model, ControlMode, FiveLevelParams};

fn bench_rhs(c: &mut Criterion) {
    let (model, sub) = xi_model(1.0, 1.0, 1.0, ControlMode::Synthesized);
    let dark = sub.basis(0.0).unwrap().remove(0);
    let rho = DensityMatrix::pure(&dark);
    c.bench_function("lindblad_rhs_xi_synthesized", |b| {
        b.iter(|| lindblad_rhs(&model, black_box(0.37), rho.matrix()).unwrap())
    });
}

fn bench_integrate(c: &mut Criterion) {
    let (model, sub) = xi_model(1.0, 1.0, 1.0, ControlMode::Synthesized);
    let dark = sub.basis(0.0).unwrap().remove(0);
    let rho = DensityMatrix::pure(&dark);
    let cfg = IntegratorConfig::with_dt(1e-3).record_stride(usize::MAX / 2);
    c.bench_function("integrate_xi_quarter_turn", |b| {
        b.iter(|| integrate(&model, &rho, 0.0, black_box(0.5), &cfg).unwrap())
    });
}

fn bench_dark_states(c: &mut Criterion) {
    let (model, _) = five_level_model(&FiveLevelParams::default());
    let channels = model.channels().to_vec();
    c.bench_function("dark_states_five_level", |b| {
        b.iter(|| dark_states(&channels, black_box(0.83)).unwrap())
    });
}

fn bench_synthesize(c: &mut Criterion) {
    let (model, sub) = five_level_model(&FiveLevelParams::default());
    let channels = model.channels().to_vec();
    c.bench_function("synthesize_control_five_level", |b| {
        b.iter(|| synthesize_control(&channels, &sub, black_box(4.0), None, 1e-8).unwrap())
    });
}

fn bench_matrix_exponential(c: &mut Criterion) {
    let mut h = ComplexMatrix::zeros(5, 5);
    for i in 0..5 {
        for j in 0..5 {
            h[(i, j)] = Complex64::new(0.2 * (i as f64 - j as f64), 0.1 * (i + j) as f64);
        }
    }
    let a = h.hermitian_part().scale(Complex64::new(0.0, -1.0));
    c.bench_function("matrix_exponential_5x5", |b| {
        b.iter(|| matrix_exponential(black_box(&a)).unwrap())
    });
}

fn bench_frame_propagate(c: &mut Criterion) {
    let (model, sub) = xi_model(1.0, 1.0, 1.0, ControlMode::Synthesized);
    let dark = sub.basis(0.0).unwrap().remove(0);
    let rho = DensityMatrix::pure(&dark);
    let cfg = IntegratorConfig::with_dt(1e-3).record_stride(usize::MAX / 2);
    c.bench_function("frame_propagate_xi_quarter_turn", |b| {
        b.iter(|| frame_propagate(&model, &sub, &rho, 0.0, black_box(0.5), &cfg, 1e-9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_rhs,
    bench_integrate,
    bench_dark_states,
    bench_synthesize,
    bench_matrix_exponential,
    bench_frame_propagate
);
criterion_main!(benches);
