use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use w4_core::bilinear::{energy_difference, gram_matrix};
use w4_core::geometry::fixtures::{quadratic_germ, sphere_chart};
use w4_core::geometry::{energy_density, integrate_energy};
use w4_core::inversion::residue_integral;
use w4_core::rotation::{random_tuple, search_s};
use w4_core::triharmonic::solve_interpolant;
use w4_core::{Domain, Family, FormCoefficients, QuadSpec};

fn geometry(c: &mut Criterion) {
    let chart = sphere_chart(1.0, true);
    c.bench_function("energy_density/sphere_chart", |b| {
        b.iter(|| energy_density(&chart, black_box([0.3, 0.1, -0.2, 0.4])))
    });
    c.bench_function("integrate_energy/sphere_chart_order12", |b| {
        b.iter(|| {
            integrate_energy(
                &chart,
                &Domain::Ball { radius: 1.0 },
                0.0,
                0.0,
                &QuadSpec::order(12),
            )
        })
    });
    let mut p = [[0.0; 4]; 4];
    p[0][0] = 1.0;
    p[1][1] = -1.0;
    let germ = quadratic_germ(vec![p], None, Domain::Ball { radius: 0.5 });
    c.bench_function("residue_integral/r=1e-2", |b| {
        b.iter(|| residue_integral(&germ, black_box(1e-2)))
    });
}

fn interpolation(c: &mut Criterion) {
    c.bench_function("gram_matrix/H", |b| {
        b.iter(|| gram_matrix(Family::H, black_box(1.0), black_box(0.1)))
    });
    let mut coeffs = FormCoefficients::zeros(2);
    coeffs.p[0][0] = 1.0;
    coeffs.r[0][0] = 0.8;
    coeffs.q3[3][1] = 0.4;
    coeffs.s1[2][1] = -0.3;
    let g: f64 = 0.1;
    c.bench_function("solve_interpolant/m=2", |b| {
        b.iter(|| solve_interpolant(&coeffs, black_box(g), g.powi(8), 3.0 * g.powi(8)))
    });
    c.bench_function("energy_difference/m=2", |b| {
        b.iter(|| energy_difference(&coeffs, black_box(g), 3.0))
    });
}

fn rotation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (p, r) = (random_tuple(3, &mut rng), random_tuple(3, &mut rng));
    c.bench_function("search_s/k=3", |b| {
        b.iter(|| search_s(&p, &r, 2, black_box(9)))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = geometry, interpolation, rotation
}
criterion_main!(benches);
