//! Shared builders for the pipeline benchmarks.

use pdereduce::expr::Expr;
use pdereduce::interval::Interval;
use pdereduce::reduce1d::{ReducedProblem1D, Seed1D, SignBranch};
use pdereduce::reduce2d::{CauchyData, Rect, ReducedProblem2D};
use pdereduce::transnormal::ProfileFunction;
use std::f64::consts::PI;

pub fn sphere_l2_problem() -> ReducedProblem1D {
    ReducedProblem1D::new(
        Expr::parse("p - 4", &["t", "r", "p"]).unwrap(),
        ProfileFunction::new(
            "4*(1-t^2)",
            Interval::new(-1.0, 1.0),
            |t| 4.0 * (1.0 - t * t),
            |t| -8.0 * t,
        ),
        Seed1D {
            t0: 0.0,
            r0: 0.0,
            p0: 4.0,
        },
        SignBranch::Plus,
    )
    .unwrap()
}

pub fn de_sitter_problem() -> (ReducedProblem2D, CauchyData) {
    let problem = ReducedProblem2D::new(
        Expr::parse("tau - 4/cosh(t)^2", &["t", "s", "r", "tau"]).unwrap(),
        ProfileFunction::constant(1.0, Interval::all()),
        ProfileFunction::constant(4.0, Interval::new(0.0, PI)),
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
    (problem, data)
}
