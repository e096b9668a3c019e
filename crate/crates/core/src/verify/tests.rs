use super::*;
use crate::expr::Expr;
use crate::geometry::FnField;
use crate::interval::Interval;
use crate::reduce1d::{integrate, lift_1d, ReducedProblem1D, Seed1D, SignBranch};
use crate::transnormal::lookup;
use std::f64::consts::PI;

/// Latitude field on the round 2-sphere: u = w(f) with f the height
/// function and w(t) = arcsin(t).
fn latitude_field() -> (crate::reduce1d::LiftedField1D, crate::transnormal::TransnormalFunction) {
    let f = lookup("cartan_munzner_l1").unwrap();
    let problem = ReducedProblem1D::new(
        Expr::parse("p - 1", &["t", "r", "p"]).unwrap(),
        f.profile().clone(),
        Seed1D {
            t0: 0.0,
            r0: 0.0,
            p0: 1.0,
        },
        SignBranch::Plus,
    )
    .unwrap();
    let sol = integrate(&problem, 1e-11, Interval::new(-0.97, 0.97)).unwrap();
    (lift_1d(sol, f.clone()).unwrap(), f)
}

#[test]
fn latitude_residual_fd_and_analytic() {
    let (u, f) = latitude_field();
    let fhat = Expr::parse("p - 1", &["t", "r", "p"]).unwrap();
    let form = PdeForm::OneDim { fhat: &fhat, f: &f };
    let fd = manifold_residual(
        f.model(),
        &form,
        &u,
        500,
        7,
        1e-4,
        GradientMode::FiniteDifference(Some(1e-5)),
    )
    .unwrap();
    assert!(fd.pass, "FD max residual {}", fd.max_abs);
    let analytic = manifold_residual(
        f.model(),
        &form,
        &u,
        500,
        7,
        1e-9,
        GradientMode::Analytic,
    )
    .unwrap();
    assert!(analytic.pass, "analytic max residual {}", analytic.max_abs);
    assert!(analytic.max_abs < fd.max_abs);
}

#[test]
fn constant_field_has_zero_gradient_residual() {
    let f = lookup("cartan_munzner_l1").unwrap();
    let u = FnField::with_partials(
        |_p: &crate::geometry::ChartPoint| Ok(2.0),
        |p: &crate::geometry::ChartPoint| Ok(vec![0.0; p.coords().len()]),
    );
    let fhat = Expr::parse("p", &["t", "r", "p"]).unwrap();
    let form = PdeForm::OneDim { fhat: &fhat, f: &f };
    let report =
        manifold_residual(f.model(), &form, &u, 100, 1, 1e-12, GradientMode::Analytic).unwrap();
    assert!(report.pass);
    assert_eq!(report.max_abs, 0.0);
}

#[test]
fn lifted_fields_are_level_invariant() {
    let (u, f) = latitude_field();
    let report = invariance_check(&u, &f, &[0.0, 0.3, -0.5], 40, 11, 1e-12).unwrap();
    assert!(report.pass, "max spread {}", report.max_spread);
}

#[test]
fn non_invariant_field_is_flagged() {
    let f = lookup("cartan_munzner_l1").unwrap();
    // u = x_1 varies along the equator with spread ~ 2.
    let u = FnField::new(|p: &crate::geometry::ChartPoint| Ok(p.coords()[0]));
    let report = invariance_check(&u, &f, &[0.0], 100, 3, 1e-6).unwrap();
    assert!(!report.pass);
    assert!(report.max_spread > 1.5 && report.max_spread <= 2.0 + 1e-12);
}

#[test]
fn reports_are_bit_reproducible() {
    let (u, f) = latitude_field();
    let fhat = Expr::parse("p - 1", &["t", "r", "p"]).unwrap();
    let form = PdeForm::OneDim { fhat: &fhat, f: &f };
    let a = manifold_residual(f.model(), &form, &u, 200, 42, 1e-4, GradientMode::Analytic).unwrap();
    let b = manifold_residual(f.model(), &form, &u, 200, 42, 1e-4, GradientMode::Analytic).unwrap();
    assert_eq!(a.max_abs.to_bits(), b.max_abs.to_bits());
    assert_eq!(a.mean_abs.to_bits(), b.mean_abs.to_bits());
    assert_eq!(a.worst_point.coords(), b.worst_point.coords());
    let c = manifold_residual(f.model(), &form, &u, 200, 43, 1e-4, GradientMode::Analytic).unwrap();
    assert!(a.max_abs != c.max_abs);
}

#[test]
fn fd_residual_converges_quadratically() {
    // Closed-form latitude field, so the FD mode and the analytic mode see
    // the same function: residual error must drop ~4x per step halving.
    let f = lookup("cartan_munzner_l1").unwrap();
    let u = FnField::with_partials(
        |p: &crate::geometry::ChartPoint| Ok(p.coords()[2].clamp(-1.0, 1.0).asin()),
        |p: &crate::geometry::ChartPoint| {
            let z = p.coords()[2];
            let d = 1.0 - z * z;
            if d <= 0.0 {
                return Err(crate::error::Error::FieldEvaluationFailure(
                    "pole".into(),
                ));
            }
            Ok(vec![0.0, 0.0, 1.0 / d.sqrt()])
        },
    );
    let fhat = Expr::parse("p - 1", &["t", "r", "p"]).unwrap();
    let form = PdeForm::OneDim { fhat: &fhat, f: &f };
    let analytic =
        manifold_residual(f.model(), &form, &u, 200, 5, 1e-9, GradientMode::Analytic).unwrap();
    assert!(analytic.pass, "analytic max {}", analytic.max_abs);
    let errs: Vec<f64> = [4e-4, 2e-4, 1e-4]
        .iter()
        .map(|&h| {
            let r = manifold_residual(
                f.model(),
                &form,
                &u,
                200,
                5,
                1.0,
                GradientMode::FiniteDifference(Some(h)),
            )
            .unwrap();
            r.max_abs
        })
        .collect();
    assert!(
        errs[0] / errs[1] > 2.5 && errs[1] / errs[2] > 2.5,
        "convergence ratios {errs:?}"
    );
}

#[test]
fn two_dim_form_residual() {
    use crate::geometry::ManifoldModel;
    use crate::reduce2d::{lift_2d, solve_cauchy, CauchyData, Rect, ReducedProblem2D};
    let problem = ReducedProblem2D::new(
        Expr::parse("tau - 4/cosh(t)^2", &["t", "s", "r", "tau"]).unwrap(),
        crate::transnormal::ProfileFunction::constant(1.0, Interval::all()),
        crate::transnormal::ProfileFunction::constant(4.0, Interval::new(0.0, PI)),
        Expr::parse("cosh(t)", &["t"]).unwrap(),
        Some(Rect {
            t: Interval::new(-2.0, 2.0),
            s: Interval::new(0.0, PI),
        }),
    )
    .unwrap();
    let data = CauchyData::new(
        Expr::parse("zeta", &["zeta"]).unwrap(),
        Expr::parse("pi/2 + zeta", &["zeta"]).unwrap(),
        Expr::parse("zeta", &["zeta"]).unwrap(),
        0.25,
        (0.0, 1.0),
    )
    .unwrap();
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
    let u = lift_2d(sol, f_left.clone(), f_right.clone(), model.clone()).unwrap();
    let fhat = Expr::parse("tau - 4/cosh(t)^2", &["t", "s", "r", "tau"]).unwrap();
    let form = PdeForm::TwoDim {
        fhat: &fhat,
        f_left: &f_left,
        f_right: &f_right,
    };
    let report = manifold_residual(
        &model,
        &form,
        &u,
        100,
        9,
        1e-4,
        GradientMode::FiniteDifference(Some(1e-5)),
    )
    .unwrap();
    assert!(report.pass, "max residual {}", report.max_abs);

    // Invariance along the product levels: freeze the line coordinate and
    // check constancy on level sets of the sphere foliation.
    let u = std::sync::Arc::new(u);
    let u_slice = {
        let u = u.clone();
        let model = model.clone();
        FnField::new(move |z: &crate::geometry::ChartPoint| {
            let mut coords = vec![0.05];
            coords.extend_from_slice(z.coords());
            u.value(&crate::geometry::ChartPoint::new(&model, coords)?)
        })
    };
    let report = invariance_check(
        &u_slice,
        &f_right,
        &[PI / 2.0, PI / 2.0 + 0.3],
        30,
        13,
        1e-9,
    )
    .unwrap();
    assert!(report.pass, "max spread {}", report.max_spread);
}
