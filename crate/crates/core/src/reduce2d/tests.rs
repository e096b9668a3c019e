use super::*;
use crate::error::Error;
use crate::expr::Expr;
use crate::interval::Interval;
use crate::transnormal::ProfileFunction;
use std::f64::consts::PI;

fn fhat(text: &str) -> Expr {
    Expr::parse(text, &["t", "s", "r", "tau"]).unwrap()
}

fn zexpr(text: &str) -> Expr {
    Expr::parse(text, &["zeta"]).unwrap()
}

/// De Sitter reduction: a_L = 1 on R, a_N = 4 on [0, pi], warp cosh(t).
fn de_sitter_problem(uhat: &str) -> ReducedProblem2D {
    ReducedProblem2D::new(
        fhat(&format!("tau - ({uhat})")),
        ProfileFunction::constant(1.0, Interval::all()),
        ProfileFunction::constant(4.0, Interval::new(0.0, PI)),
        Expr::parse("cosh(t)", &["t"]).unwrap(),
        Some(Rect {
            t: Interval::new(-2.0, 2.0),
            s: Interval::new(0.0, PI),
        }),
    )
    .unwrap()
}

/// Constant-coefficient problem: H = -p^2 + q^2 - 3.
fn constant_problem() -> ReducedProblem2D {
    ReducedProblem2D::new(
        fhat("tau - 3"),
        ProfileFunction::constant(1.0, Interval::all()),
        ProfileFunction::constant(1.0, Interval::all()),
        Expr::parse("1", &["t"]).unwrap(),
        Some(Rect {
            t: Interval::new(-10.0, 10.0),
            s: Interval::new(-10.0, 10.0),
        }),
    )
    .unwrap()
}

#[test]
fn nonpositive_warp_rejected() {
    let err = ReducedProblem2D::new(
        fhat("tau - 1"),
        ProfileFunction::constant(1.0, Interval::new(-1.0, 1.0)),
        ProfileFunction::constant(1.0, Interval::new(-1.0, 1.0)),
        Expr::parse("t", &["t"]).unwrap(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NonpositiveWarping { .. }));
}

#[test]
fn reduced_residual_exact_solutions() {
    // w(t, s) = s solves tau = 4 / cosh(t)^2 (w_s = 1, w_t = 0).
    let problem = de_sitter_problem("4/cosh(t)^2");
    let r = reduced_residual_2d(&problem, &|_t, s| s, Some((0.0, 1.0)), 0.4, 1.3).unwrap();
    assert!(r.abs() < 1e-14);
    // Central-difference partials agree to FD accuracy.
    let r = reduced_residual_2d(&problem, &|_t, s| s, None, 0.4, 1.3).unwrap();
    assert!(r.abs() < 1e-9);

    // w(t, s) = t solves tau = -1.
    let problem = de_sitter_problem("-1");
    let r = reduced_residual_2d(&problem, &|t, _s| t, Some((1.0, 0.0)), -0.3, 2.0).unwrap();
    assert!(r.abs() < 1e-14);

    // Constant w against tau - 1 leaves residual -1.
    let problem = de_sitter_problem("1");
    let r = reduced_residual_2d(&problem, &|_t, _s| 5.0, Some((0.0, 0.0)), 0.0, 1.0).unwrap();
    assert!((r + 1.0).abs() < 1e-14);
}

#[test]
fn hamiltonian_partials_de_sitter() {
    let problem = de_sitter_problem("4/cosh(t)^2");
    let h = hamiltonian(&problem);
    let e = h.eval(&[0.0, 1.0, 0.5, 1.0, 1.0]).unwrap();
    assert!((e.h_p + 2.0).abs() < 1e-14);
    assert!((e.h_q - 8.0).abs() < 1e-14);
    assert_eq!(e.h_r, 0.0);
    // At p = q = 0 the characteristic directions degenerate.
    let e = h.eval(&[0.0, 1.0, 0.5, 0.0, 0.0]).unwrap();
    assert_eq!(e.h_p, 0.0);
    assert_eq!(e.h_q, 0.0);
}

#[test]
fn hamiltonian_partials_match_finite_differences() {
    let problem = de_sitter_problem("4/cosh(t)^2 + s*r");
    let h = hamiltonian(&problem);
    let y = [0.3, 1.2, 0.7, 0.9, -1.1];
    let e = h.eval(&y).unwrap();
    let fd = |i: usize| -> f64 {
        let mut hi = y;
        let mut lo = y;
        let step = 1e-6;
        hi[i] += step;
        lo[i] -= step;
        (h.eval(&hi).unwrap().h - h.eval(&lo).unwrap().h) / (2.0 * step)
    };
    for (i, exact) in [e.h_t, e.h_s, e.h_r, e.h_p, e.h_q].into_iter().enumerate() {
        let approx = fd(i);
        let scale = exact.abs().max(1.0);
        assert!(
            (exact - approx).abs() <= 1e-6 * scale,
            "partial {i}: AD {exact} vs FD {approx}"
        );
    }
}

#[test]
fn initial_strip_on_the_seed_hyperbola() {
    // -p0^2 + 4 cosh^-2(0) q0^2 - 3 = 0 holds at (1, 1).
    let problem = de_sitter_problem("3");
    let h = hamiltonian(&problem);
    // R'(0) = p0 T'(0) + q0 S'(0) = 1 + 2 = 3.
    let data = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 + 2*zeta"),
        zexpr("3*zeta"),
        0.25,
        (1.0, 1.0),
    )
    .unwrap();
    let (p, q) = solve_initial_strip(&h, &data, 0.0, None).unwrap();
    assert!((p - 1.0).abs() < 1e-10);
    assert!((q - 1.0).abs() < 1e-10);
    // Residuals of both equations vanish at the solution.
    let c = data.at(0.0).unwrap();
    let he = h.eval(&[c.t, c.s, c.r, p, q]).unwrap();
    assert!(he.h.abs() <= 1e-12);
    assert!((p * c.dt + q * c.ds - c.dr).abs() <= 1e-12);
}

#[test]
fn initial_strip_identity_second_equation() {
    // T' = 1, S' = 0, R' = p0: the compatibility equation pins p = p0, and
    // the hyperbola -p^2 + 4 cosh^-2(t) q^2 = 3 then pins q near 1.
    let problem = de_sitter_problem("3");
    let h = hamiltonian(&problem);
    let data = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 + 0*zeta"),
        zexpr("zeta"),
        0.25,
        (1.0, 1.0),
    )
    .unwrap();
    let (p, q) = solve_initial_strip(&h, &data, 0.1, None).unwrap();
    assert!((p - 1.0).abs() < 1e-12);
    let alpha_sq = 0.1f64.cosh().powi(2);
    let q_expected = ((1.0 + 3.0) * alpha_sq / 4.0).sqrt();
    assert!((q - q_expected).abs() < 1e-10);
}

#[test]
fn transversality_loss_detected() {
    // q0 T'(0) = p0 S'(0) with (p0, q0) = (1, 1), T' = S' = 1.
    let problem = de_sitter_problem("3");
    let h = hamiltonian(&problem);
    let data = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 + zeta"),
        zexpr("2*zeta"),
        0.25,
        (1.0, 1.0),
    )
    .unwrap();
    assert!(matches!(
        solve_initial_strip(&h, &data, 0.0, None),
        Err(Error::TransversalityLoss { .. })
    ));
    // The hypothesis record flags Sigma.2 as the violated condition.
    let report = check_cauchy_hypotheses(&problem, &data, None).unwrap();
    assert!(!report.pass);
    assert!(report
        .violated()
        .iter()
        .any(|name| name.contains("Sigma.2")));
}

#[test]
fn straight_line_characteristics() {
    // H = -p^2 + q^2 - 3, start (0, 0, 0, 1, 2):
    // t = -2 sigma, s = 4 sigma, r = 6 sigma, p and q constant.
    let problem = constant_problem();
    let h = hamiltonian(&problem);
    let strip = integrate_strip(&h, 0.0, [0.0, 0.0, 0.0, 1.0, 2.0], Interval::new(-0.5, 0.5), 1e-12)
        .unwrap();
    assert!(strip.hamiltonian_drift <= 1e-12);
    for sample in &strip.samples {
        let sigma = sample.sigma;
        assert!((sample.state[0] + 2.0 * sigma).abs() < 1e-12);
        assert!((sample.state[1] - 4.0 * sigma).abs() < 1e-12);
        assert!((sample.state[2] - 6.0 * sigma).abs() < 1e-12);
        assert!((sample.state[3] - 1.0).abs() < 1e-12);
        assert!((sample.state[4] - 2.0).abs() < 1e-12);
    }
    let state = strip.state_at(0.33).unwrap();
    assert!((state[2] - 1.98).abs() < 1e-12);
}

#[test]
fn strip_requires_null_start() {
    let problem = constant_problem();
    let h = hamiltonian(&problem);
    let err = integrate_strip(&h, 0.0, [0.0, 0.0, 0.0, 1.0, 1.0], Interval::new(-0.1, 0.1), 1e-10)
        .unwrap_err();
    assert!(matches!(err, Error::HypothesisRejected(_)));
}

#[test]
fn strip_halts_at_domain_boundary() {
    let problem = ReducedProblem2D::new(
        fhat("tau - 3"),
        ProfileFunction::constant(1.0, Interval::all()),
        ProfileFunction::constant(1.0, Interval::all()),
        Expr::parse("1", &["t"]).unwrap(),
        Some(Rect {
            t: Interval::new(-0.5, 0.5),
            s: Interval::new(-10.0, 10.0),
        }),
    )
    .unwrap();
    let h = hamiltonian(&problem);
    // t = -2 sigma exits t > -0.5 at sigma = 0.25 < 0.5.
    let strip = integrate_strip(&h, 0.0, [0.0, 0.0, 0.0, 1.0, 2.0], Interval::new(-0.5, 0.5), 1e-10)
        .unwrap();
    assert_eq!(strip.upper_end, StripEnd::DomainBoundary);
    let last = strip.samples.last().unwrap();
    assert!(last.state[0] >= -0.5 - 1e-12);
    assert!((last.sigma - 0.25).abs() < 1e-3);
}

#[test]
fn de_sitter_strip_conserves_h() {
    let problem = de_sitter_problem("3");
    let h = hamiltonian(&problem);
    let strip = integrate_strip(
        &h,
        0.0,
        [0.0, PI / 2.0, 0.0, 1.0, 1.0],
        Interval::new(-0.3, 0.3),
        1e-10,
    )
    .unwrap();
    assert!(strip.hamiltonian_drift <= 1e-8, "drift {}", strip.hamiltonian_drift);
}

fn exact_patch_case_1() -> (ReducedProblem2D, CauchyData) {
    // U = 4 / cosh(t)^2 with seed (p0, q0) = (0, 1): exact solution
    // w(t, s) = s - pi/2.
    let problem = de_sitter_problem("4/cosh(t)^2");
    let data = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 + zeta"),
        zexpr("zeta"),
        0.25,
        (0.0, 1.0),
    )
    .unwrap();
    (problem, data)
}

fn exact_patch_case_2() -> (ReducedProblem2D, CauchyData) {
    // U = -1 with seed (p0, q0) = (1, 0): exact solution w(t, s) = t.
    let problem = de_sitter_problem("-1");
    let data = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 + zeta"),
        zexpr("zeta"),
        0.25,
        (1.0, 0.0),
    )
    .unwrap();
    (problem, data)
}

#[test]
fn cauchy_fan_reproduces_s_shift() {
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 41, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    assert!(sol.jacobian_at_base > 0.0);
    assert!(sol.max_drift() <= 1e-8);
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let t = -0.2 + 0.4 * i as f64 / 20.0;
            let s = PI / 2.0 - 0.7 + 1.4 * j as f64 / 20.0;
            let (r, p, q) = sol.evaluate(t, s).unwrap();
            worst = worst.max((r - (s - PI / 2.0)).abs());
            assert!(p.abs() < 1e-6, "p = {p} at ({t}, {s})");
            assert!((q - 1.0).abs() < 1e-6, "q = {q} at ({t}, {s})");
        }
    }
    assert!(worst <= 1e-6, "worst patch error {worst}");
}

#[test]
fn cauchy_fan_reproduces_t_shift() {
    let (problem, data) = exact_patch_case_2();
    let sol = solve_cauchy(&problem, &data, 41, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let t = -0.08 + 0.16 * i as f64 / 20.0;
            let s = PI / 2.0 - 0.2 + 0.4 * j as f64 / 20.0;
            let (r, p, q) = sol.evaluate(t, s).unwrap();
            worst = worst.max((r - t).abs());
            assert!((p - 1.0).abs() < 1e-6);
            assert!(q.abs() < 1e-6);
        }
    }
    assert!(worst <= 1e-6, "worst patch error {worst}");
}

#[test]
fn single_strip_fan() {
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 1, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    assert_eq!(sol.strips().len(), 1);
    // Stored samples evaluate exactly.
    let sample = sol.strips()[0].samples.last().unwrap();
    let (r, p, q) = sol
        .evaluate(sample.state[0], sample.state[1])
        .unwrap();
    assert_eq!(r, sample.state[2]);
    assert_eq!(p, sample.state[3]);
    assert_eq!(q, sample.state[4]);
}

#[test]
fn cauchy_data_reproduction() {
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 21, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    // At sigma = 0 the strips carry the curve data exactly.
    for (strip, &zeta) in sol.strips().iter().zip(sol.zetas()) {
        let c = data.at(zeta).unwrap();
        let at0 = strip.state_at(0.0).unwrap();
        assert_eq!(at0[2], c.r);
        // Round-trip through the evaluator at tolerance 1e-6.
        let (r, _, _) = sol.evaluate(c.t, c.s).unwrap();
        assert!((r - c.r).abs() <= 1e-10, "round trip at zeta = {zeta}");
    }
}

#[test]
fn queries_outside_fan_are_rejected() {
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 21, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    assert!(matches!(
        sol.evaluate(1.5, PI / 2.0),
        Err(Error::OutsideCoverage { .. } | Error::InversionFailure { .. })
    ));
}

#[test]
fn symmetric_data_gives_mirrored_solution() {
    // Mirror s -> pi - s: solving with R and seed flipped reproduces the
    // mirrored surface.
    let (problem, data) = exact_patch_case_1();
    let mirrored = CauchyData::new(
        zexpr("zeta"),
        zexpr("pi/2 - zeta"),
        zexpr("zeta"),
        0.25,
        (0.0, -1.0),
    )
    .unwrap();
    let sol = solve_cauchy(&problem, &data, 31, Interval::new(-0.12, 0.12), 1e-10).unwrap();
    let mir = solve_cauchy(&problem, &mirrored, 31, Interval::new(-0.12, 0.12), 1e-10).unwrap();
    for i in 0..=10 {
        for j in 0..=10 {
            let t = -0.15 + 0.3 * i as f64 / 10.0;
            let s = PI / 2.0 - 0.5 + 1.0 * j as f64 / 10.0;
            let (r1, _, _) = sol.evaluate(t, s).unwrap();
            let (r2, _, _) = mir.evaluate(t, PI - s).unwrap();
            assert!(
                (r1 - r2).abs() <= 1e-6,
                "symmetry violated at ({t}, {s}): {r1} vs {r2}"
            );
        }
    }
}

#[test]
fn reparametrized_data_gives_same_surface() {
    // zeta -> 2 zeta with halved range: the strip fan changes, the surface
    // does not.
    let (problem, data) = exact_patch_case_2();
    let scaled = CauchyData::new(
        zexpr("2*zeta"),
        zexpr("pi/2 + 2*zeta"),
        zexpr("2*zeta"),
        0.125,
        (1.0, 0.0),
    )
    .unwrap();
    let a = solve_cauchy(&problem, &data, 41, Interval::new(-0.12, 0.12), 1e-10).unwrap();
    let b = solve_cauchy(&problem, &scaled, 41, Interval::new(-0.12, 0.12), 1e-10).unwrap();
    for i in 0..=10 {
        for j in 0..=10 {
            let t = -0.05 + 0.1 * i as f64 / 10.0;
            let s = PI / 2.0 - 0.09 + 0.18 * j as f64 / 10.0;
            let (r1, _, _) = a.evaluate(t, s).unwrap();
            let (r2, _, _) = b.evaluate(t, s).unwrap();
            assert!((r1 - r2).abs() <= 1e-8, "({t}, {s}): {r1} vs {r2}");
        }
    }
}

#[test]
fn coverage_polygon_is_closed_loop() {
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 11, Interval::new(-0.1, 0.1), 1e-10).unwrap();
    let polygon = sol.coverage_polygon();
    assert!(polygon.len() > 20);
    for (t, s) in polygon {
        assert!(t.is_finite() && s.is_finite());
    }
}

#[test]
fn constant_solution_lifts_to_constant_field() {
    use crate::geometry::{ManifoldModel, ScalarField};
    // Synthetic two-strip surface with r = 2.5 and p = q = 0 everywhere.
    let strip = |zeta: f64| CharacteristicStrip {
        zeta,
        samples: (0..=10)
            .map(|i| {
                let sigma = -0.2 + 0.4 * i as f64 / 10.0;
                StripSample {
                    sigma,
                    state: [zeta, PI / 2.0 + sigma, 2.5, 0.0, 0.0],
                    deriv: [0.0, 1.0, 0.0, 0.0, 0.0],
                }
            })
            .collect(),
        hamiltonian_drift: 0.0,
        lower_end: StripEnd::SpanEnd,
        upper_end: StripEnd::SpanEnd,
    };
    let sol = Solution2D {
        strips: vec![strip(-0.1), strip(0.0), strip(0.1)],
        zetas: vec![-0.1, 0.0, 0.1],
        base: (0.0, PI / 2.0),
        jacobian_at_base: 1.0,
    };
    let f_left = crate::transnormal::real_line_identity();
    let f_right = crate::transnormal::desitter_arccos(2, 2).unwrap();
    let model = std::sync::Arc::new(ManifoldModel::warped_line(
        ManifoldModel::sphere(3),
        crate::transnormal::ProfileFunction::new(
            "cosh(t)",
            Interval::all(),
            |t: f64| t.cosh(),
            |t: f64| t.sinh(),
        ),
    ));
    let lifted = lift_2d(sol, f_left, f_right.clone(), model.clone()).unwrap();
    // Two sphere points on the same level set give the same value, and the
    // value is the constant.
    let s = PI / 2.0 + 0.1;
    let z1 = ChartPoint::new(
        &ManifoldModel::sphere(3),
        vec![(s / 2.0).cos(), 0.0, (s / 2.0).sin(), 0.0],
    )
    .unwrap();
    let z2 = ChartPoint::new(
        &ManifoldModel::sphere(3),
        vec![0.0, (s / 2.0).cos(), 0.0, (s / 2.0).sin()],
    )
    .unwrap();
    use crate::geometry::ChartPoint;
    let mut c1 = vec![0.05];
    c1.extend_from_slice(z1.coords());
    let mut c2 = vec![0.05];
    c2.extend_from_slice(z2.coords());
    let u1 = lifted
        .value(&ChartPoint::new(&model, c1).unwrap())
        .unwrap();
    let u2 = lifted
        .value(&ChartPoint::new(&model, c2).unwrap())
        .unwrap();
    assert!((u1 - 2.5).abs() < 1e-12);
    assert_eq!(u1, u2);
}

#[test]
fn lifted_field_on_de_sitter_model() {
    use crate::geometry::{ManifoldModel, ScalarField};
    let (problem, data) = exact_patch_case_1();
    let sol = solve_cauchy(&problem, &data, 31, Interval::new(-0.15, 0.15), 1e-10).unwrap();
    let f_left = crate::transnormal::real_line_identity();
    let f_right = crate::transnormal::desitter_arccos(2, 2).unwrap();
    let warp = crate::transnormal::ProfileFunction::new(
        "cosh(t)",
        Interval::all(),
        |t: f64| t.cosh(),
        |t: f64| t.sinh(),
    );
    let model = std::sync::Arc::new(ManifoldModel::warped_line(
        ManifoldModel::sphere(3),
        warp,
    ));
    let lifted = lift_2d(sol, f_left, f_right.clone(), model.clone()).unwrap();
    // u(t, z) = f(z) - pi/2 on the covered patch; invariance along the
    // product levels is structural.
    let mut rng = crate::geometry::sample_rng(33);
    let mut checked = 0;
    while checked < 25 {
        let z = crate::geometry::random_point(&ManifoldModel::sphere(3), &mut rng);
        let s = f_right.value(&z).unwrap();
        if (s - PI / 2.0).abs() > 0.6 {
            continue;
        }
        let mut coords = vec![0.05];
        coords.extend_from_slice(z.coords());
        let point = crate::geometry::ChartPoint::new(&model, coords).unwrap();
        let u = lifted.value(&point).unwrap();
        assert!((u - (s - PI / 2.0)).abs() <= 1e-6);
        checked += 1;
    }
}
