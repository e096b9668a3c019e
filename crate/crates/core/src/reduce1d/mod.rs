//! One-dimensional reduction: `Fhat(t, w(t), a(t) |w'(t)|^2) = 0`.
//!
//! The pipeline checks the local-solvability hypotheses at a seed
//! `(t0, r0, p0)`, tracks the implicit root `H(t, r)` of
//! `Fhat(t, r, H) = 0` by warm-started Newton continuation, integrates
//! `w' = sign * sqrt(H(t, w) / a(t))` bidirectionally with an adaptive
//! embedded Runge-Kutta pair, and stops cleanly at profile singularities
//! with the singular point bracketed. Eikonal-form problems
//! (`Fhat = p - U(t)`) can instead be accumulated by adaptive quadrature.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartPoint, ScalarField};
use crate::interval::Interval;
use crate::numerics::hermite::{hermite_deriv, hermite_value, locate};
use crate::numerics::rk::{dopri5_step, next_step_size};
use crate::numerics::simpson::adaptive_simpson;
use crate::numerics::{bisect_predicate};
use crate::transnormal::{ProfileFunction, TransnormalFunction};
use serde::Serialize;
use std::sync::Arc;

/// Sign of `w'` in `w' = sign * sqrt(H / a)`; both choices solve the
/// reduced equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignBranch {
    Plus,
    Minus,
}

impl SignBranch {
    pub fn factor(self) -> f64 {
        match self {
            SignBranch::Plus => 1.0,
            SignBranch::Minus => -1.0,
        }
    }
}

/// Seed data `(t0, r0, p0)` with `p0` standing for `a(t0) |w'(t0)|^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Seed1D {
    pub t0: f64,
    pub r0: f64,
    pub p0: f64,
}

/// A reduced one-dimensional problem.
#[derive(Clone)]
pub struct ReducedProblem1D {
    fhat: Expr,
    profile: ProfileFunction,
    seed: Seed1D,
    sign_branch: SignBranch,
    var_t: usize,
    var_r: usize,
    var_p: usize,
}

impl ReducedProblem1D {
    /// `fhat` must declare the variables `t`, `r` and `p`.
    pub fn new(
        fhat: Expr,
        profile: ProfileFunction,
        seed: Seed1D,
        sign_branch: SignBranch,
    ) -> Result<Self> {
        let var_t = fhat
            .var_index("t")
            .ok_or_else(|| Error::UnboundVariable { name: "t".into() })?;
        let var_r = fhat
            .var_index("r")
            .ok_or_else(|| Error::UnboundVariable { name: "r".into() })?;
        let var_p = fhat
            .var_index("p")
            .ok_or_else(|| Error::UnboundVariable { name: "p".into() })?;
        if !profile.domain().contains_interior(seed.t0) {
            return Err(Error::DomainMismatch(format!(
                "t0 = {} is not interior to the image interval {}",
                seed.t0,
                profile.domain()
            )));
        }
        Ok(ReducedProblem1D {
            fhat,
            profile,
            seed,
            sign_branch,
            var_t,
            var_r,
            var_p,
        })
    }

    pub fn fhat(&self) -> &Expr {
        &self.fhat
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn seed(&self) -> Seed1D {
        self.seed
    }

    pub fn sign_branch(&self) -> SignBranch {
        self.sign_branch
    }

    fn bindings(&self, t: f64, r: f64, p: f64) -> Vec<f64> {
        let mut b = vec![0.0; self.fhat.variables().len()];
        b[self.var_t] = t;
        b[self.var_r] = r;
        b[self.var_p] = p;
        b
    }

    /// `Fhat(t, r, p)`.
    pub fn residual(&self, t: f64, r: f64, p: f64) -> Result<f64> {
        self.fhat.eval(&self.bindings(t, r, p))
    }

    /// `(Fhat, dFhat/dp)` at `(t, r, p)`.
    fn residual_and_dp(&self, t: f64, r: f64, p: f64) -> Result<(f64, f64)> {
        let d = self.fhat.eval_with_partials(&self.bindings(t, r, p))?;
        Ok((d.value(), d.partial(self.var_p)))
    }

    /// Evaluate the reduced equation residual for an arbitrary test function
    /// `w` with derivative `dw` at `t`: `Fhat(t, w, a(t) |dw|^2)`.
    pub fn reduced_residual(&self, t: f64, w: f64, dw: f64) -> Result<f64> {
        self.residual(t, w, self.profile.eval(t) * dw * dw)
    }
}

impl std::fmt::Debug for ReducedProblem1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedProblem1D")
            .field("fhat", &self.fhat.to_string())
            .field("profile", &self.profile.formula())
            .field("seed", &self.seed)
            .field("sign_branch", &self.sign_branch)
            .finish()
    }
}

/// One checked hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

/// Diagnostic record for the three local-solvability conditions.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub conditions: Vec<ConditionReport>,
    pub pass: bool,
}

impl HypothesisReport {
    pub fn violated(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn require_pass(&self) -> Result<()> {
        if self.pass {
            Ok(())
        } else {
            Err(Error::HypothesisRejected(self.violated().join("; ")))
        }
    }
}

const RESIDUAL_TOL: f64 = 1e-10;
const DERIVATIVE_FLOOR: f64 = 1e-10;
const PRODUCT_FLOOR: f64 = 1e-14;

/// Check the three seed conditions: `Fhat(t0, r0, p0) = 0`,
/// `dFhat/dp(t0, r0, p0) != 0` and `a(t0) p0 > 0`.
pub fn check_hypotheses(problem: &ReducedProblem1D) -> Result<HypothesisReport> {
    let Seed1D { t0, r0, p0 } = problem.seed;
    let (value, dp) = problem.residual_and_dp(t0, r0, p0)?;
    let product = problem.profile.eval(t0) * p0;
    let conditions = vec![
        ConditionReport {
            name: "F(t0, r0, p0) = 0".into(),
            value,
            pass: value.abs() <= RESIDUAL_TOL,
        },
        ConditionReport {
            name: "dF/dp(t0, r0, p0) != 0".into(),
            value: dp,
            pass: dp.abs() >= DERIVATIVE_FLOOR,
        },
        ConditionReport {
            name: "a(t0) * p0 > 0".into(),
            value: product,
            pass: product >= PRODUCT_FLOOR,
        },
    ];
    let pass = conditions.iter().all(|c| c.pass);
    Ok(HypothesisReport { conditions, pass })
}

const BRANCH_TARGET: f64 = 1e-12;
const BRANCH_DERIV_FLOOR: f64 = 1e-12;
const BRANCH_MAX_ITERS: usize = 60;

/// Continuation-tracked implicit root `H(t, r)` of `Fhat(t, r, H) = 0`,
/// warm-started from the previous query.
#[derive(Clone)]
pub struct BranchTracker {
    problem: Arc<ReducedProblem1D>,
    current_p: f64,
    jump_cap: f64,
}

impl BranchTracker {
    pub fn new(problem: Arc<ReducedProblem1D>) -> Result<Self> {
        check_hypotheses(&problem)?.require_pass()?;
        let p0 = problem.seed.p0;
        Ok(BranchTracker {
            problem,
            current_p: p0,
            jump_cap: 0.5 * p0.abs() + 0.5,
        })
    }

    pub fn reset(&mut self) {
        self.current_p = self.problem.seed.p0;
    }

    /// Solve `Fhat(t, r, p) = 0` for `p` near the tracked branch.
    pub fn solve(&mut self, t: f64, r: f64) -> Result<f64> {
        let start = self.current_p;
        let mut p = start;
        for _ in 0..BRANCH_MAX_ITERS {
            let (value, dp) = self
                .problem
                .residual_and_dp(t, r, p)
                .map_err(|e| Error::BranchLoss {
                    t,
                    message: e.to_string(),
                })?;
            if value.abs() <= BRANCH_TARGET {
                self.current_p = p;
                return Ok(p);
            }
            if dp.abs() < BRANCH_DERIV_FLOOR {
                return Err(Error::BranchLoss {
                    t,
                    message: format!("dF/dp = {dp:.3e} below floor during Newton"),
                });
            }
            p -= value / dp;
            if (p - start).abs() > self.jump_cap {
                return Err(Error::BranchLoss {
                    t,
                    message: format!(
                        "Newton jump |{p} - {start}| exceeds the branch continuity cap {}",
                        self.jump_cap
                    ),
                });
            }
        }
        Err(Error::BranchLoss {
            t,
            message: "Newton did not converge".into(),
        })
    }
}

/// Build the implicit-branch tracker for a problem whose hypotheses pass.
pub fn implicit_branch(problem: &ReducedProblem1D) -> Result<BranchTracker> {
    BranchTracker::new(Arc::new(problem.clone()))
}

/// Why integration stopped on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    /// Reached the requested span end.
    DomainEdge,
    /// Stopped short of a profile singularity or a sign change of `H a`;
    /// carries the bracketed boundary point.
    SingularProfile(f64),
    /// The tracked implicit branch was lost.
    ImplicitBranchLoss,
    /// Step size underflow without an identifiable singular point.
    StepFailure,
}

#[derive(Clone)]
enum RefineKind {
    /// General problem: re-solve `Fhat(t, w, p) = 0` near the interpolant.
    General { problem: Arc<ReducedProblem1D> },
    /// Eikonal form: `p = U(t)` directly.
    Eikonal { uhat: Expr },
}

#[derive(Clone)]
struct RefineCtx {
    kind: RefineKind,
    profile: ProfileFunction,
    sign: SignBranch,
}

/// A reduced solution `w` on a strictly monotone grid with Hermite data.
#[derive(Clone)]
pub struct Solution1D {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    domain: Interval,
    pub left_termination: Termination,
    pub right_termination: Termination,
    refine: Option<RefineCtx>,
}

impl std::fmt::Debug for Solution1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solution1D")
            .field("points", &self.grid.len())
            .field("domain", &self.domain)
            .field("left_termination", &self.left_termination)
            .field("right_termination", &self.right_termination)
            .finish()
    }
}

impl Solution1D {
    /// Assemble a solution from explicit Hermite data (used by tests and by
    /// the trig substitution); the grid must be strictly increasing.
    pub fn from_data(grid: Vec<f64>, values: Vec<f64>, derivatives: Vec<f64>) -> Self {
        assert!(grid.len() == values.len() && grid.len() == derivatives.len());
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        let domain = Interval::new(grid[0], *grid.last().unwrap());
        Solution1D {
            grid,
            values,
            derivatives,
            domain,
            left_termination: Termination::DomainEdge,
            right_termination: Termination::DomainEdge,
            refine: None,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + t.abs());
        if t < self.domain.lo - slack || t > self.domain.hi + slack {
            return Err(Error::OutsideDomain { t });
        }
        Ok(())
    }

    /// Evaluate `w(t)`: cubic Hermite interpolation, except that solutions
    /// produced by the quadrature path re-integrate the known integrand
    /// from the nearest node (the fixed grid cannot otherwise track the
    /// integrand's derivative growth near focal values).
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        if self.grid.len() == 1 {
            return Ok(self.values[0]);
        }
        if let Some(ctx) = &self.refine {
            if let RefineKind::Eikonal { uhat } = &ctx.kind {
                if let Some(v) = self.reintegrate_eikonal(uhat, &ctx.profile, ctx.sign, t) {
                    return Ok(v);
                }
            }
        }
        let i = locate(&self.grid, t);
        Ok(hermite_value(
            self.grid[i],
            self.values[i],
            self.derivatives[i],
            self.grid[i + 1],
            self.values[i + 1],
            self.derivatives[i + 1],
            t,
        ))
    }

    fn reintegrate_eikonal(
        &self,
        uhat: &Expr,
        profile: &ProfileFunction,
        sign: SignBranch,
        t: f64,
    ) -> Option<f64> {
        let i = locate(&self.grid, t);
        let from = if (t - self.grid[i]).abs() <= (self.grid[i + 1] - t).abs() {
            i
        } else {
            i + 1
        };
        let t0 = self.grid[from];
        let mut integrand = |x: f64| -> Result<f64> {
            let u = uhat.eval(&[x])?;
            let a = profile.eval(x);
            if a == 0.0 {
                return Err(Error::SignViolation { t: x });
            }
            let ratio = u / a;
            if ratio < 0.0 {
                return Err(Error::SignViolation { t: x });
            }
            Ok(ratio.sqrt())
        };
        let piece = adaptive_simpson(&mut integrand, t0, t, 1e-13).ok()?;
        Some(self.values[from] + sign.factor() * piece)
    }

    /// Derivative of the Hermite interpolant.
    pub fn eval_deriv(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        if self.grid.len() == 1 {
            return Ok(self.derivatives[0]);
        }
        let i = locate(&self.grid, t);
        Ok(hermite_deriv(
            self.grid[i],
            self.values[i],
            self.derivatives[i],
            self.grid[i + 1],
            self.values[i + 1],
            self.derivatives[i + 1],
            t,
        ))
    }

    /// ODE-consistent derivative: re-solves the implicit branch at the
    /// interpolated `w(t)` so that `a(t) w'(t)^2` satisfies the reduced
    /// equation to solver precision. Falls back to the Hermite derivative
    /// when no problem context is attached.
    pub fn eval_deriv_refined(&self, t: f64) -> Result<f64> {
        let hermite = self.eval_deriv(t)?;
        let Some(ctx) = &self.refine else {
            return Ok(hermite);
        };
        let a = ctx.profile.eval(t);
        if a.abs() < 1e-12 {
            return Ok(hermite);
        }
        let p = match &ctx.kind {
            RefineKind::Eikonal { uhat } => match uhat.eval(&[t]) {
                Ok(u) => u,
                Err(_) => return Ok(hermite),
            },
            RefineKind::General { problem } => {
                let w = self.eval(t)?;
                let guess = a * hermite * hermite;
                match newton_refine_p(problem, t, w, guess) {
                    Some(p) => p,
                    None => return Ok(hermite),
                }
            }
        };
        let ratio = p / a;
        if ratio < 0.0 {
            return Ok(hermite);
        }
        // The interpolated derivative fixes the local sign; w' cannot cross
        // zero inside a side, so this only matters at an exact zero.
        let sign = if hermite != 0.0 {
            hermite.signum()
        } else {
            ctx.sign.factor()
        };
        Ok(sign * ratio.sqrt())
    }
}

fn newton_refine_p(problem: &ReducedProblem1D, t: f64, w: f64, guess: f64) -> Option<f64> {
    let mut p = guess;
    for _ in 0..30 {
        let (value, dp) = problem.residual_and_dp(t, w, p).ok()?;
        if value.abs() <= 1e-13 {
            return Some(p);
        }
        if dp.abs() < BRANCH_DERIV_FLOOR {
            return None;
        }
        p -= value / dp;
        if (p - guess).abs() > 0.5 * guess.abs() + 0.5 {
            return None;
        }
    }
    None
}

const MIN_STEP_SCALE: f64 = 1e-13;
const BRACKET_WIDTH: f64 = 1e-10;
const MAX_STEPS: usize = 2_000_000;

struct SideResult {
    /// Points excluding the seed, ordered outward from it.
    points: Vec<(f64, f64, f64)>,
    termination: Termination,
}

/// Integrate `w' = sign * sqrt(H(t, w)/a(t))` from the seed across `t_span`
/// (bidirectionally) with local error tolerance `tol`.
///
/// Integration halts before any `t` with `|a(t)| <= 1e-10` or
/// `H(t, w) a(t) <= 0`, recording `SingularProfile(t*)` with the boundary
/// bracketed to `1e-10`.
pub fn integrate(problem: &ReducedProblem1D, tol: f64, t_span: Interval) -> Result<Solution1D> {
    check_hypotheses(problem)?.require_pass()?;
    if !problem.profile.domain().contains_interval(&t_span) {
        return Err(Error::DomainMismatch(format!(
            "span {t_span} is not contained in the image interval {}",
            problem.profile.domain()
        )));
    }
    let Seed1D { t0, r0, .. } = problem.seed;
    if !t_span.contains(t0) {
        return Err(Error::DomainMismatch(format!(
            "span {t_span} does not contain t0 = {t0}"
        )));
    }
    let problem = Arc::new(problem.clone());
    let right = integrate_side(&problem, tol, t_span.hi)?;
    let left = integrate_side(&problem, tol, t_span.lo)?;

    let mut grid = Vec::with_capacity(left.points.len() + right.points.len() + 1);
    let mut values = Vec::with_capacity(grid.capacity());
    let mut derivatives = Vec::with_capacity(grid.capacity());
    for &(t, w, dw) in left.points.iter().rev() {
        grid.push(t);
        values.push(w);
        derivatives.push(dw);
    }
    let mut tracker = BranchTracker::new(problem.clone())?;
    let seed_dw = side_rhs(&problem, &mut tracker, t0, r0)?;
    grid.push(t0);
    values.push(r0);
    derivatives.push(seed_dw);
    for &(t, w, dw) in &right.points {
        grid.push(t);
        values.push(w);
        derivatives.push(dw);
    }
    let domain = Interval::new(grid[0], *grid.last().unwrap());
    Ok(Solution1D {
        grid,
        values,
        derivatives,
        domain,
        left_termination: left.termination,
        right_termination: right.termination,
        refine: Some(RefineCtx {
            kind: RefineKind::General {
                problem: problem.clone(),
            },
            profile: problem.profile.clone(),
            sign: problem.sign_branch,
        }),
    })
}

fn side_rhs(
    problem: &ReducedProblem1D,
    tracker: &mut BranchTracker,
    t: f64,
    w: f64,
) -> Result<f64> {
    let a = problem.profile.eval(t);
    if a.abs() <= 1e-10 {
        return Err(Error::SignViolation { t });
    }
    let h = tracker.solve(t, w)?;
    let ratio = h / a;
    if ratio <= 0.0 {
        return Err(Error::SignViolation { t });
    }
    Ok(problem.sign_branch.factor() * ratio.sqrt())
}

fn integrate_side(problem: &Arc<ReducedProblem1D>, tol: f64, t_end: f64) -> Result<SideResult> {
    let Seed1D { t0, r0, .. } = problem.seed;
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(SideResult {
            points: Vec::new(),
            termination: Termination::DomainEdge,
        });
    }
    let dir = span.signum();
    let a0 = problem.profile.eval(t0).abs();
    let singular_trigger = (a0 / 4.0).min(1e-6 * a0.max(1.0));

    struct Rhs1D {
        problem: Arc<ReducedProblem1D>,
        tracker: BranchTracker,
    }
    impl crate::numerics::rk::OdeRhs<1> for Rhs1D {
        fn eval(&mut self, t: f64, y: &[f64; 1]) -> Result<[f64; 1]> {
            Ok([side_rhs(&self.problem, &mut self.tracker, t, y[0])?])
        }
    }
    let mut rhs = Rhs1D {
        problem: problem.clone(),
        tracker: BranchTracker::new(problem.clone())?,
    };

    let mut t = t0;
    let mut w = r0;
    let mut dw = side_rhs(problem, &mut rhs.tracker, t, w)?;
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    // Cap the step so that the stored cubic Hermite data interpolates to
    // roughly the integration tolerance (error ~ h^4 |w''''| / 384).
    let interp_cap = (3840.0 * tol).powf(0.25);
    let max_step = interp_cap
        .clamp(span.abs() * 2e-4, span.abs() / 8.0)
        .max(1e-12);
    let mut h = dir * (span.abs() * 1e-3).min(max_step);

    for _ in 0..MAX_STEPS {
        let remaining = t_end - t;
        if remaining.abs() <= 1e-14 * (1.0 + t.abs()) {
            return Ok(SideResult {
                points,
                termination: Termination::DomainEdge,
            });
        }
        if problem.profile.eval(t).abs() <= singular_trigger {
            let termination = classify_boundary(problem, t, w, dw, t_end);
            return Ok(SideResult {
                points,
                termination,
            });
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        // Grade the interpolation cap by the distance to the nearest zero
        // of the profile (Newton estimate |a / a'|): w'''' grows like
        // d^{-7/2} there, so h^4 w'''' stays bounded for h ~ d^{7/8}.
        let a_here = problem.profile.eval(t);
        let d_est = (a_here.abs() / problem.profile.deriv(t).abs().max(1e-9)).min(1.0);
        let local_cap = (max_step * d_est.powf(0.875)).max(span.abs() * 1e-6);
        if h.abs() > local_cap {
            h = dir * local_cap;
        }
        let min_step = MIN_STEP_SCALE * (1.0 + t.abs());
        match dopri5_step(&mut rhs, t, &[w], &[dw], h, tol, tol) {
            Ok(step) => {
                if step.error <= 1.0 {
                    t += h;
                    w = step.y[0];
                    dw = step.dy_end[0];
                    points.push((t, w, dw));
                    h = next_step_size(h, step.error);
                } else {
                    h = next_step_size(h, step.error);
                    if h.abs() < min_step {
                        let termination = classify_boundary(problem, t, w, dw, t_end);
                        return Ok(SideResult {
                            points,
                            termination,
                        });
                    }
                }
            }
            Err(Error::BranchLoss { .. }) if h.abs() < min_step * 4.0 => {
                return Ok(SideResult {
                    points,
                    termination: Termination::ImplicitBranchLoss,
                });
            }
            Err(_) => {
                // A stage left the admissible region; shrink toward it.
                rhs.tracker.reset_to_last_accepted(&points, problem.seed.p0);
                h /= 3.0;
                if h.abs() < min_step {
                    let termination = classify_boundary(problem, t, w, dw, t_end);
                    return Ok(SideResult {
                        points,
                        termination,
                    });
                }
            }
        }
    }
    Ok(SideResult {
        points,
        termination: Termination::StepFailure,
    })
}

impl BranchTracker {
    /// Rewind the warm start after a failed trial step polluted it:
    /// `p = a w'^2` at the last accepted point.
    fn reset_to_last_accepted(&mut self, points: &[(f64, f64, f64)], p0: f64) {
        self.current_p = match points.last() {
            Some(&(t, _, dw)) => self.problem.profile.eval(t) * dw * dw,
            None => p0,
        };
    }
}

/// Classify why stepping stalled: bracket the halt predicate
/// `|a| <= 1e-10 or H a <= 0` between the last good point and the span end;
/// if the predicate never fires the stall is a plain step failure.
fn classify_boundary(
    problem: &Arc<ReducedProblem1D>,
    t: f64,
    w: f64,
    dw: f64,
    t_end: f64,
) -> Termination {
    let extrapolate = |tt: f64| -> f64 { w + dw * (tt - t) };
    let mut probe_tracker = match BranchTracker::new(problem.clone()) {
        Ok(tr) => tr,
        Err(_) => return Termination::StepFailure,
    };
    let mut bad = |tt: f64| -> bool {
        let a = problem.profile.eval(tt);
        if a.abs() <= 1e-10 {
            return true;
        }
        probe_tracker.reset();
        match probe_tracker.solve(tt, extrapolate(tt)) {
            Ok(hval) => hval / a <= 0.0,
            Err(_) => true,
        }
    };
    if bad(t) {
        // Already past the boundary; bracket backwards toward the seed side.
        let dir = (t_end - t).signum();
        let mut good = t - dir * BRACKET_WIDTH;
        let mut tries = 0;
        while bad(good) && tries < 60 {
            good -= dir * BRACKET_WIDTH * 2.0_f64.powi(tries);
            tries += 1;
        }
        if tries >= 60 {
            return Termination::StepFailure;
        }
        let b = bisect_predicate(&mut bad, good, t, BRACKET_WIDTH);
        return Termination::SingularProfile(b);
    }
    // Probe geometrically toward the span end for the first bad point.
    let dir = (t_end - t).signum();
    let mut delta = (t_end - t).abs().clamp(1e-12, 1e-9);
    let mut found: Option<f64> = None;
    while delta <= (t_end - t).abs() {
        let probe = t + dir * delta;
        if bad(probe) {
            found = Some(probe);
            break;
        }
        delta *= 4.0;
    }
    let bad_t = match found {
        Some(b) => b,
        None => {
            if bad(t_end) {
                t_end
            } else {
                return Termination::StepFailure;
            }
        }
    };
    let b = bisect_predicate(&mut bad, t, bad_t, BRACKET_WIDTH);
    Termination::SingularProfile(b)
}

/// Accumulate the eikonal-form solution `w(t) = r0 + sign * int sqrt(U/a)`
/// by adaptive Simpson quadrature onto a grid.
///
/// `uhat` is an expression in `t` alone. Endpoint singularities where the
/// profile vanishes are approached geometrically and recorded as
/// `SingularProfile`.
pub fn quadrature_eikonal(
    uhat: &Expr,
    profile: &ProfileFunction,
    t0: f64,
    r0: f64,
    sign: SignBranch,
    t_span: Interval,
    tol: f64,
) -> Result<Solution1D> {
    if uhat.var_index("t").is_none() || uhat.variables().len() != 1 {
        return Err(Error::UnboundVariable { name: "t".into() });
    }
    if !profile.domain().contains_interval(&t_span) {
        return Err(Error::DomainMismatch(format!(
            "span {t_span} is not contained in the image interval {}",
            profile.domain()
        )));
    }
    if !t_span.contains(t0) {
        return Err(Error::DomainMismatch(format!(
            "span {t_span} does not contain t0 = {t0}"
        )));
    }

    let integrand = |t: f64| -> Result<f64> {
        let u = uhat.eval(&[t])?;
        let a = profile.eval(t);
        if a == 0.0 {
            return Err(Error::SignViolation { t });
        }
        let ratio = u / a;
        if ratio < 0.0 {
            return Err(Error::SignViolation { t });
        }
        Ok(ratio.sqrt())
    };

    let right = quadrature_side(&integrand, profile, t0, t_span.hi, tol)?;
    let left = quadrature_side(&integrand, profile, t0, t_span.lo, tol)?;

    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut derivatives = Vec::new();
    for &(t, acc, d) in left.nodes.iter().rev() {
        grid.push(t);
        values.push(r0 + sign.factor() * acc);
        derivatives.push(sign.factor() * d);
    }
    grid.push(t0);
    values.push(r0);
    derivatives.push(sign.factor() * integrand(t0)?);
    for &(t, acc, d) in &right.nodes {
        grid.push(t);
        values.push(r0 + sign.factor() * acc);
        derivatives.push(sign.factor() * d);
    }
    let domain = Interval::new(grid[0], *grid.last().unwrap());
    Ok(Solution1D {
        grid,
        values,
        derivatives,
        domain,
        left_termination: left.termination,
        right_termination: right.termination,
        refine: Some(RefineCtx {
            kind: RefineKind::Eikonal {
                uhat: uhat.clone(),
            },
            profile: profile.clone(),
            sign,
        }),
    })
}

struct QuadSide {
    /// `(t, accumulated signed integral from t0, integrand at t)`.
    nodes: Vec<(f64, f64, f64)>,
    termination: Termination,
}

fn quadrature_side(
    integrand: &impl Fn(f64) -> Result<f64>,
    profile: &ProfileFunction,
    t0: f64,
    t_end: f64,
    tol: f64,
) -> Result<QuadSide> {
    if t_end == t0 {
        return Ok(QuadSide {
            nodes: Vec::new(),
            termination: Termination::DomainEdge,
        });
    }
    let dir = (t_end - t0).signum();
    // Locate the nearest profile zero strictly between t0 and the end.
    let singular = find_profile_zero(profile, t0, t_end);
    let (stop, termination) = match singular {
        Some(t_star) => (t_star, Termination::SingularProfile(t_star)),
        None => (t_end, Termination::DomainEdge),
    };

    let mut cuts: Vec<f64> = Vec::new();
    // Node spacing follows the Hermite interpolation budget of the
    // Runge-Kutta path, halved because the fixed grid cannot refine where
    // the integrand's higher derivatives grow.
    let interp_cap = 0.5 * (3840.0 * tol).powf(0.25);
    let base_cells = ((t_end - t0).abs() / interp_cap).ceil().clamp(64.0, 8192.0) as usize;
    match termination {
        Termination::SingularProfile(t_star) => {
            // Uniform cells over most of the side, then geometric cells
            // shrinking toward the singular point.
            let main = t_star - dir * 0.05 * (t_star - t0).abs();
            for i in 1..=base_cells {
                cuts.push(t0 + (main - t0) * i as f64 / base_cells as f64);
            }
            let mut d = (t_star - main).abs();
            loop {
                d *= 0.5;
                let next = t_star - dir * d;
                if d < 1e-11 * (1.0 + t_star.abs()) {
                    break;
                }
                cuts.push(next);
                if cuts.len() > base_cells + 80 {
                    break;
                }
            }
        }
        _ => {
            for i in 1..=base_cells {
                cuts.push(t0 + (stop - t0) * i as f64 / base_cells as f64);
            }
        }
    }

    let total_len = (stop - t0).abs().max(1e-300);
    let mut nodes = Vec::with_capacity(cuts.len());
    let mut acc = 0.0;
    let mut prev = t0;
    for cut in cuts {
        let cell_tol = tol * ((cut - prev).abs() / total_len).max(1.0 / 256.0);
        let mut f = |x: f64| integrand(x);
        let piece = adaptive_simpson(&mut f, prev, cut, cell_tol)?;
        acc += piece;
        nodes.push((cut, acc, integrand(cut)?));
        prev = cut;
    }
    Ok(QuadSide {
        nodes,
        termination,
    })
}

/// Nearest zero of the profile strictly between `t0` and `t_end`, bracketed
/// to `1e-10`, if any.
fn find_profile_zero(profile: &ProfileFunction, t0: f64, t_end: f64) -> Option<f64> {
    const SCAN: usize = 1024;
    let a0 = profile.eval(t0);
    let mut prev_t = t0;
    let mut prev_a = a0;
    for i in 1..=SCAN {
        let t = t0 + (t_end - t0) * i as f64 / SCAN as f64;
        let a = profile.eval(t);
        if a == 0.0 || a.signum() != prev_a.signum() || a.abs() <= 1e-10 {
            // Refine by bisection on the sign of a (or on the magnitude
            // threshold when a touches zero without crossing).
            if a.signum() != prev_a.signum() {
                let root = crate::numerics::bisect(
                    |x| profile.eval(x),
                    prev_t,
                    t,
                    BRACKET_WIDTH,
                );
                return Some(root);
            }
            let root = bisect_predicate(
                |x| profile.eval(x).abs() <= 1e-10,
                prev_t,
                t,
                BRACKET_WIDTH,
            );
            return Some(root);
        }
        prev_t = t;
        prev_a = a;
    }
    None
}

/// Change of variables `t = cos s` or `t = cosh s`: returns `v(s) = w(t)` on
/// the mapped grid.
pub fn substitute_trig(solution: &Solution1D, mode: TrigMode) -> Result<Solution1D> {
    let domain = solution.domain();
    match mode {
        TrigMode::Cos => {
            if domain.lo <= -1.0 || domain.hi >= 1.0 {
                return Err(Error::DomainMismatch(format!(
                    "cos substitution needs the domain inside (-1, 1), got {domain}"
                )));
            }
            // s = arccos t reverses orientation.
            let mut grid = Vec::with_capacity(solution.grid.len());
            let mut values = Vec::with_capacity(grid.capacity());
            let mut derivatives = Vec::with_capacity(grid.capacity());
            for i in (0..solution.grid.len()).rev() {
                let t = solution.grid[i];
                let s = t.acos();
                grid.push(s);
                values.push(solution.values[i]);
                derivatives.push(-s.sin() * solution.derivatives[i]);
            }
            let mut out = Solution1D::from_data(grid, values, derivatives);
            out.left_termination = solution.right_termination;
            out.right_termination = solution.left_termination;
            Ok(out)
        }
        TrigMode::Cosh => {
            if domain.lo <= 1.0 {
                return Err(Error::DomainMismatch(format!(
                    "cosh substitution needs the domain inside (1, inf), got {domain}"
                )));
            }
            let mut grid = Vec::with_capacity(solution.grid.len());
            let mut values = Vec::with_capacity(grid.capacity());
            let mut derivatives = Vec::with_capacity(grid.capacity());
            for i in 0..solution.grid.len() {
                let t = solution.grid[i];
                let s = t.acosh();
                grid.push(s);
                values.push(solution.values[i]);
                derivatives.push(s.sinh() * solution.derivatives[i]);
            }
            let mut out = Solution1D::from_data(grid, values, derivatives);
            out.left_termination = solution.left_termination;
            out.right_termination = solution.right_termination;
            Ok(out)
        }
    }
}

/// Substitution variable for [`substitute_trig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigMode {
    Cos,
    Cosh,
}

/// The lifted field `u = w o f` on the preimage of the solution domain.
#[derive(Clone)]
pub struct LiftedField1D {
    solution: Arc<Solution1D>,
    f: TransnormalFunction,
}

impl LiftedField1D {
    pub fn solution(&self) -> &Solution1D {
        &self.solution
    }

    pub fn transnormal(&self) -> &TransnormalFunction {
        &self.f
    }
}

/// Lift a reduced solution through `f`: `u(x) = w(f(x))`.
pub fn lift_1d(solution: Solution1D, f: TransnormalFunction) -> Result<LiftedField1D> {
    if !f.profile().domain().contains_interval(&solution.domain()) {
        return Err(Error::DomainMismatch(format!(
            "solution domain {} exceeds the image interval {}",
            solution.domain(),
            f.profile().domain()
        )));
    }
    Ok(LiftedField1D {
        solution: Arc::new(solution),
        f,
    })
}

impl ScalarField for LiftedField1D {
    fn value(&self, point: &ChartPoint) -> Result<f64> {
        let t = self.f.value(point)?;
        self.solution.eval(t)
    }

    fn partials(&self, point: &ChartPoint) -> Option<Result<Vec<f64>>> {
        let fp = self.f.partials(point)?;
        Some((|| {
            let fp = fp?;
            let t = self.f.value(point)?;
            let dw = self.solution.eval_deriv_refined(t)?;
            Ok(fp.into_iter().map(|p| dw * p).collect())
        })())
    }
}
