use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pdereduce::expr::Expr;
use pdereduce::interval::Interval;
use pdereduce::reduce1d::{integrate, quadrature_eikonal, SignBranch};
use pdereduce::reduce2d::solve_cauchy;
use pdereduce::transnormal::ProfileFunction;
use pdereduce_bench::{de_sitter_problem, sphere_l2_problem};

fn bench_expr_partials(c: &mut Criterion) {
    let expr = Expr::parse(
        "-p^2 + 4*q^2/cosh(t)^2 - (4/cosh(t)^2 + s*r)",
        &["t", "s", "r", "p", "q"],
    )
    .unwrap();
    let at = [0.3, 1.2, 0.7, 0.9, -1.1];
    c.bench_function("expr_eval_with_partials", |b| {
        b.iter(|| expr.eval_with_partials(black_box(&at)).unwrap())
    });
}

fn bench_integrate_1d(c: &mut Criterion) {
    let problem = sphere_l2_problem();
    c.bench_function("integrate_sphere_l2", |b| {
        b.iter(|| integrate(black_box(&problem), 1e-10, Interval::new(-0.9, 0.9)).unwrap())
    });
}

fn bench_quadrature_1d(c: &mut Criterion) {
    let uhat = Expr::parse("4", &["t"]).unwrap();
    let profile = ProfileFunction::new(
        "4*(1-t^2)",
        Interval::new(-1.0, 1.0),
        |t| 4.0 * (1.0 - t * t),
        |t| -8.0 * t,
    );
    c.bench_function("quadrature_sphere_l2", |b| {
        b.iter(|| {
            quadrature_eikonal(
                black_box(&uhat),
                &profile,
                0.0,
                0.0,
                SignBranch::Plus,
                Interval::new(-0.9, 0.9),
                1e-10,
            )
            .unwrap()
        })
    });
}

fn bench_solve_cauchy(c: &mut Criterion) {
    let (problem, data) = de_sitter_problem();
    c.bench_function("solve_cauchy_de_sitter_21", |b| {
        b.iter(|| {
            solve_cauchy(
                black_box(&problem),
                &data,
                21,
                Interval::new(-0.15, 0.15),
                1e-10,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_expr_partials,
    bench_integrate_1d,
    bench_quadrature_1d,
    bench_solve_cauchy
);
criterion_main!(benches);
