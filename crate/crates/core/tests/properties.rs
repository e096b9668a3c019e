//! Property-based checks: parser round-trips, determinism of samplers, and
//! the sign gate of the one-dimensional hypotheses.

use pdereduce::expr::Expr;
use pdereduce::interval::Interval;
use pdereduce::reduce1d::{check_hypotheses, ReducedProblem1D, Seed1D, SignBranch};
use pdereduce::transnormal::ProfileFunction;
use proptest::prelude::*;

const VARS: [&str; 5] = ["t", "s", "r", "p", "q"];

/// Expression text generator: explicit parentheses everywhere, so the text
/// itself is unambiguous and the round trip exercises the printer's
/// precedence logic.
fn arb_expr_text(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        (0..VARS.len()).prop_map(|i| VARS[i].to_string()),
        (0u32..1000).prop_map(|n| format!("{}", n as f64 / 8.0)),
        Just("pi".to_string()),
        Just("e".to_string()),
    ];
    leaf.prop_recursive(depth, 64, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0..5usize).prop_map(|(a, b, op)| {
                let sym = ["+", "-", "*", "/", "^"][op];
                format!("({a}) {sym} ({b})")
            }),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), 0..12usize).prop_map(|(a, f)| {
                let name = [
                    "sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs",
                    "arccos", "arccosh",
                ][f];
                format!("{name}({a})")
            }),
            (inner.clone(), inner).prop_map(|(a, b)| format!("min({a}, {b})")),
        ]
    })
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Pretty-print then re-parse yields an equal tree.
    #[test]
    fn parser_round_trips(text in arb_expr_text(5)) {
        let parsed = Expr::parse(&text, &VARS).unwrap();
        let printed = parsed.to_string();
        let reparsed = Expr::parse(&printed, &VARS)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        prop_assert_eq!(parsed, reparsed);
    }

    /// Evaluation is deterministic.
    #[test]
    fn evaluation_is_pure(text in arb_expr_text(4), vals in proptest::collection::vec(-2.0..2.0f64, 5)) {
        let parsed = Expr::parse(&text, &VARS).unwrap();
        let a = parsed.eval(&vals);
        let b = parsed.eval(&vals);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "nondeterministic outcome {:?}", other),
        }
    }

    /// The Theorem-1 gate accepts a seed exactly when a(t0) p0 > 0 (the
    /// first two conditions being satisfied by construction).
    #[test]
    fn hypothesis_gate_is_the_sign_of_the_product(
        a_mag in 0.1..10.0f64,
        p_mag in 0.1..10.0f64,
        a_neg in any::<bool>(),
        p_neg in any::<bool>(),
    ) {
        let a = if a_neg { -a_mag } else { a_mag };
        let p0 = if p_neg { -p_mag } else { p_mag };
        let fhat = Expr::parse(&format!("p - ({p0})"), &["t", "r", "p"]).unwrap();
        let problem = ReducedProblem1D::new(
            fhat,
            ProfileFunction::constant(a, Interval::all()),
            Seed1D { t0: 0.0, r0: 0.0, p0 },
            SignBranch::Plus,
        )
        .unwrap();
        let report = check_hypotheses(&problem).unwrap();
        prop_assert_eq!(report.pass, a * p0 > 0.0);
        if !report.pass {
            prop_assert!(report.violated().iter().any(|c| c.contains("a(t0) * p0")));
        }
    }
}

#[test]
fn error_offsets_are_exact() {
    for (text, offset) in [
        ("1 + ", 4usize),
        ("(2 * 3", 6),
        ("sin(x) @ 2", 7),
        ("cosh(", 5),
    ] {
        match Expr::parse(text, &["x"]) {
            Err(pdereduce::Error::Syntax { offset: got, .. }) => {
                assert_eq!(got, offset, "offset for `{text}`")
            }
            other => panic!("expected syntax error for `{text}`, got {other:?}"),
        }
    }
}
