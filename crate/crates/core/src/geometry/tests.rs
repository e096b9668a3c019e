use super::*;
use crate::transnormal::{
    cartan_munzner, desitter_arccos, distance_profile, hahn_quadratic, ProfileFunction,
};
use nalgebra::DVector;

fn cosh_profile() -> ProfileFunction {
    ProfileFunction::new(
        "cosh(t)",
        crate::interval::Interval::all(),
        |t: f64| t.cosh(),
        |t: f64| t.sinh(),
    )
}

fn de_sitter(n: usize) -> ManifoldModel {
    ManifoldModel::warped_line(ManifoldModel::sphere(n), cosh_profile())
}

fn point(model: &ManifoldModel, coords: &[f64]) -> ChartPoint {
    ChartPoint::new(model, coords.to_vec()).unwrap()
}

#[test]
fn flat_metric_of_minkowski_3_space() {
    let model = ManifoldModel::semi_euclidean(1, 3);
    let p = point(&model, &[0.3, -1.0, 2.0]);
    let g = metric_at(&model, &p).unwrap();
    let expected = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, 1.0, 1.0]));
    assert_eq!(g, expected);
    let ginv = inverse_metric_at(&model, &p).unwrap();
    assert_eq!(ginv, expected); // self-inverse
}

#[test]
fn warped_metric_blocks() {
    let model = de_sitter(2);
    // At t = 0 the warp is cosh(0) = 1, so the sphere block is the identity
    // in its orthonormal frame.
    let p = point(&model, &[0.0, 0.0, 0.0, 1.0]);
    let g = metric_at(&model, &p).unwrap();
    assert_eq!(g.nrows(), 3);
    assert!((g[(0, 0)] + 1.0).abs() < 1e-14);
    for i in 1..3 {
        assert!((g[(i, i)] - 1.0).abs() < 1e-14);
        assert!(g[(0, i)].abs() < 1e-14);
    }
    // At t = 1 the sphere block is scaled by cosh(1)^2.
    let p = point(&model, &[1.0, 0.0, 0.0, 1.0]);
    let g = metric_at(&model, &p).unwrap();
    let scale = 1.0f64.cosh().powi(2);
    assert!((scale - 2.381097845541817).abs() < 1e-12);
    for i in 1..3 {
        assert!((g[(i, i)] - scale).abs() < 1e-12);
    }
    // Inverse blocks are -g_L^{-1} and alpha^{-2} g_N^{-1}.
    let ginv = inverse_metric_at(&model, &p).unwrap();
    assert!((ginv[(0, 0)] + 1.0).abs() < 1e-12);
    for i in 1..3 {
        assert!((ginv[(i, i)] - 1.0 / scale).abs() < 1e-12);
    }
}

#[test]
fn random_spd_matrix_inversion_oracle() {
    let mut rng = sample_rng(11);
    for _ in 0..20 {
        let n = 4;
        let raw = DMatrix::from_fn(n, n, |_, _| sample::gauss(&mut rng));
        let spd = &raw * raw.transpose() + DMatrix::identity(n, n);
        let inv = invert_symmetric(&spd).unwrap();
        let residual = (&spd * &inv - DMatrix::identity(n, n)).amax();
        assert!(residual < 1e-10, "inversion residual {residual}");
    }
}

#[test]
fn euclidean_gradient_of_norm_squared() {
    let model = ManifoldModel::semi_euclidean(0, 3);
    let field = FnField::with_partials(
        |p: &ChartPoint| Ok(p.coords().iter().map(|x| x * x).sum()),
        |p: &ChartPoint| Ok(p.coords().iter().map(|x| 2.0 * x).collect()),
    );
    let p = point(&model, &[1.0, 0.0, 0.0]);
    let grad = gradient(&model, &field, &p, GradientMode::Analytic).unwrap();
    assert_eq!(grad.as_slice(), &[2.0, 0.0, 0.0]);
    let grad_fd = gradient(&model, &field, &p, GradientMode::FiniteDifference(None)).unwrap();
    for i in 0..3 {
        assert!((grad_fd[i] - grad[i]).abs() < 1e-9);
    }
}

#[test]
fn timelike_direction_flips_gradient_sign() {
    let model = ManifoldModel::semi_euclidean(1, 3);
    let field = FnField::with_partials(
        |p: &ChartPoint| Ok(p.coords()[0]),
        |_p: &ChartPoint| Ok(vec![1.0, 0.0, 0.0]),
    );
    let p = point(&model, &[0.5, 0.2, -0.7]);
    let grad = gradient(&model, &field, &p, GradientMode::Analytic).unwrap();
    assert_eq!(grad.as_slice(), &[-1.0, 0.0, 0.0]);
    // <grad u, grad u> = g^{11} = -1.
    let norm = gradient_norm_sq(&model, &field, &p, GradientMode::Analytic).unwrap();
    assert!((norm + 1.0).abs() < 1e-14);
}

#[test]
fn warped_gradient_splits_per_factor() {
    // u(t, z) = t * h(z) with h(z) = z_1 on R x_cosh S^2 must split as
    // -h(z) d_t + alpha^{-2} t grad_N h.
    let model = de_sitter(2);
    let field = FnField::with_partials(
        |p: &ChartPoint| Ok(p.coords()[0] * p.coords()[1]),
        |p: &ChartPoint| Ok(vec![p.coords()[1], p.coords()[0], 0.0, 0.0]),
    );
    let sphere = ManifoldModel::sphere(2);
    let h_field = FnField::with_partials(
        |p: &ChartPoint| Ok(p.coords()[0]),
        |_p: &ChartPoint| Ok(vec![1.0, 0.0, 0.0]),
    );
    let mut rng = sample_rng(3);
    for _ in 0..20 {
        let z = random_point(&sphere, &mut rng);
        let t = 0.7;
        let mut coords = vec![t];
        coords.extend_from_slice(z.coords());
        let p = point(&model, &coords);
        let grad = gradient(&model, &field, &p, GradientMode::Analytic).unwrap();
        // Left coefficient: -h(z).
        assert!((grad[0] + z.coords()[0]).abs() < 1e-12);
        // Right block: alpha^{-2} t times the sphere gradient of h at z.
        let grad_h = gradient(&sphere, &h_field, &z, GradientMode::Analytic).unwrap();
        let alpha_sq = t.cosh().powi(2);
        for i in 0..2 {
            assert!(
                (grad[i + 1] - t / alpha_sq * grad_h[i]).abs() < 1e-12,
                "right block coefficient {i}"
            );
        }
        // FD mode agrees with the analytic split.
        let grad_fd = gradient(&model, &field, &p, GradientMode::FiniteDifference(None)).unwrap();
        for i in 0..3 {
            assert!((grad_fd[i] - grad[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn inner_product_examples() {
    let model = ManifoldModel::semi_euclidean(1, 3);
    let p = point(&model, &[0.0, 0.0, 0.0]);
    let v = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    assert_eq!(inner_g(&model, &p, &v, &v).unwrap(), -1.0);

    let bad = DVector::from_column_slice(&[1.0, 0.0]);
    assert!(matches!(
        inner_g(&model, &p, &bad, &v),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn inner_matches_brute_force_double_sum() {
    let model = de_sitter(3);
    let mut rng = sample_rng(17);
    for _ in 0..20 {
        let p = random_point(&model, &mut rng);
        let g = metric_at(&model, &p).unwrap();
        let n = g.nrows();
        let v = DVector::from_fn(n, |_, _| sample::gauss(&mut rng));
        let w = DVector::from_fn(n, |_, _| sample::gauss(&mut rng));
        let fast = inner_g(&model, &p, &v, &w).unwrap();
        let mut slow = 0.0;
        for i in 0..n {
            for j in 0..n {
                slow += g[(i, j)] * v[i] * w[j];
            }
        }
        assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()));
    }
}

#[test]
fn fn_only_field_inner_product_uses_warp() {
    // A function of the sphere factor only: <grad u, grad u> =
    // alpha^{-2} |grad_N u|^2.
    let model = de_sitter(2);
    let field = FnField::with_partials(
        |p: &ChartPoint| Ok(p.coords()[1]),
        |_p: &ChartPoint| Ok(vec![0.0, 1.0, 0.0, 0.0]),
    );
    let mut rng = sample_rng(23);
    for _ in 0..20 {
        let p = random_point(&model, &mut rng);
        let t = p.coords()[0];
        let z1 = p.coords()[1];
        let norm = gradient_norm_sq(&model, &field, &p, GradientMode::Analytic).unwrap();
        let expected = (1.0 - z1 * z1) / t.cosh().powi(2);
        assert!(
            (norm - expected).abs() < 1e-10,
            "norm {norm} vs expected {expected}"
        );
    }
}

#[test]
fn metric_times_inverse_is_identity_at_random_points() {
    let models = vec![
        ManifoldModel::semi_euclidean(0, 3),
        ManifoldModel::semi_euclidean(1, 4),
        ManifoldModel::sphere(2),
        ManifoldModel::pseudo_sphere(1, 3),
        ManifoldModel::hyperbolic(2),
        de_sitter(2),
    ];
    for model in models {
        let mut rng = sample_rng(5);
        for _ in 0..100 {
            let p = random_point(&model, &mut rng);
            let g = metric_at(&model, &p).unwrap();
            let ginv = inverse_metric_at(&model, &p).unwrap();
            let residual = (&g * &ginv - DMatrix::identity(g.nrows(), g.nrows())).amax();
            assert!(
                residual < 1e-10,
                "{}: metric inverse residual {residual}",
                model.describe()
            );
        }
    }
}

#[test]
fn fd_gradient_matches_analytic_on_polynomials() {
    let model = ManifoldModel::semi_euclidean(0, 3);
    let field = FnField::with_partials(
        |p: &ChartPoint| {
            let x = p.coords();
            Ok(x[0] * x[0] * x[1] + 3.0 * x[2] - x[1] * x[2])
        },
        |p: &ChartPoint| {
            let x = p.coords();
            Ok(vec![2.0 * x[0] * x[1], x[0] * x[0] - x[2], 3.0 - x[1]])
        },
    );
    let mut rng = sample_rng(29);
    for _ in 0..50 {
        let p = random_point(&model, &mut rng);
        let exact = gradient(&model, &field, &p, GradientMode::Analytic).unwrap();
        let fd = gradient(&model, &field, &p, GradientMode::FiniteDifference(None)).unwrap();
        for i in 0..3 {
            let scale = exact[i].abs().max(1.0);
            assert!((fd[i] - exact[i]).abs() <= 1e-6 * scale);
        }
    }
}

#[test]
fn equator_sampling() {
    let f = cartan_munzner(1, None, &ManifoldModel::sphere(2)).unwrap();
    let points = sample_level_set(&f, 0.0, 30, 42).unwrap();
    assert_eq!(points.len(), 30);
    for p in &points {
        assert!(p.coords()[2].abs() <= 1e-9);
        let norm: f64 = p.coords().iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn product_of_spheres_level_sampling() {
    let f = desitter_arccos(2, 2).unwrap();
    let s0 = 1.0;
    let points = sample_level_set(&f, s0, 25, 7).unwrap();
    for p in &points {
        let x = p.coords();
        let phi = x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3];
        assert!((phi - s0.cos()).abs() <= 1e-9);
    }
}

#[test]
fn newton_projection_onto_quadric_level() {
    let f = hahn_quadratic(
        &DMatrix::identity(3, 3),
        &DVector::zeros(3),
        1.0,
        Signature::riemannian(3),
    )
    .unwrap();
    let points = sample_level_set(&f, 4.0, 20, 13).unwrap();
    for p in &points {
        let norm: f64 = p.coords().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 2.0).abs() <= 1e-9);
    }
}

#[test]
fn singular_level_rejected() {
    let f = cartan_munzner(1, None, &ManifoldModel::sphere(2)).unwrap();
    assert!(matches!(
        sample_level_set(&f, 1.0, 5, 1),
        Err(Error::SingularLevel { .. })
    ));
}

#[test]
fn level_sampling_is_seed_deterministic() {
    let f = desitter_arccos(2, 2).unwrap();
    let a = sample_level_set(&f, 0.8, 10, 99).unwrap();
    let b = sample_level_set(&f, 0.8, 10, 99).unwrap();
    for (pa, pb) in a.iter().zip(&b) {
        assert_eq!(pa.coords(), pb.coords());
    }
    let c = sample_level_set(&f, 0.8, 10, 100).unwrap();
    assert!(a[0].coords() != c[0].coords());
}

#[test]
fn off_manifold_points_are_rejected() {
    let model = ManifoldModel::sphere(2);
    let p = ChartPoint::new(&model, vec![1.0, 1.0, 1.0]).unwrap();
    assert!(matches!(
        metric_at(&model, &p),
        Err(Error::PointOffManifold { .. })
    ));
}

#[test]
fn hyperbolic_model_constraints() {
    let model = ManifoldModel::hyperbolic(2);
    let mut rng = sample_rng(31);
    for _ in 0..20 {
        let p = random_point(&model, &mut rng);
        let x = p.coords();
        let q = x[0] * x[0] + x[1] * x[1] - x[2] * x[2];
        assert!((q + 1.0).abs() < 1e-12);
        assert!(x[2] > 0.0);
    }
}

#[test]
fn distance_profile_shape() {
    let prof = distance_profile(std::f64::consts::PI);
    assert_eq!(prof.eval(0.3), 1.0);
    assert_eq!(prof.deriv(0.5), 0.0);
    assert_eq!(prof.domain().lo, 0.0);
    assert_eq!(prof.domain().hi, std::f64::consts::PI);
}
