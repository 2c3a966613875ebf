use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fracgp::constrained::{solve_local_min, SolveOptions};
use fracgp::functionals::ProblemParams;
use fracgp::groundstate::{solve_ground_state, GroundStateOptions};
use fracgp::{frac_laplacian, FractionalSymbol, Grid2D, ScalarField};

fn laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("frac_laplacian");
    for n in [256, 1024] {
        let g = Grid2D::new(32.0, n).unwrap();
        let sym = FractionalSymbol::new(g, 0.9).unwrap();
        let u = ScalarField::from_radial(g, |r| (-r * r).exp()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| frac_laplacian(black_box(u), &sym).unwrap()));
    }
    group.finish();
}

fn ground_state(c: &mut Criterion) {
    let g = Grid2D::new(40.0, 256).unwrap();
    let opts = GroundStateOptions::default();
    c.bench_function("ground_state s=0.95 n=256", |b| b.iter(|| solve_ground_state(black_box(0.95), g, &opts).unwrap()));
}

fn local_min(c: &mut Criterion) {
    let opts = GroundStateOptions::default();
    let ns = solve_ground_state(0.95, Grid2D::new(40.0, 256).unwrap(), &opts).unwrap().ns_star;
    let p = ProblemParams::harmonic(0.95, 0.5 * ns).unwrap();
    let g = Grid2D::new(32.0, 256).unwrap();
    c.bench_function("local_min s=0.95 n=256", |b| {
        b.iter(|| solve_local_min(&p, ns, g, None, &SolveOptions::default()).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = laplacian, ground_state, local_min
}
criterion_main!(benches);
