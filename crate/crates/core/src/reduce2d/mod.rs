//! Two-dimensional reduction on warped products:
//! `Fhat(t, s, w, -a_L(t) w_t^2 + (a_N(s)/alpha^2(t)) w_s^2) = 0` on the
//! rectangle `I_L x I_N`, solved by the method of characteristics.
//!
//! The Hamiltonian `H(t, s, r, p, q) = Fhat(t, s, r, tau(t, s, p, q))` and
//! its exact partials drive a strip fan: initial strips are continued in the
//! curve parameter by warm-started Newton (keeping the seeded branch of the
//! `H = 0` level set), each strip integrates the characteristic system with
//! a conservation monitor, and the solution surface is recovered by Newton
//! inversion of the `(zeta, sigma) -> (t, s)` map.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartPoint, ManifoldModel, ScalarField};
use crate::interval::Interval;
use crate::numerics::hermite::{hermite_deriv, hermite_value, locate};
use crate::numerics::rk::{dopri5_step, next_step_size};
use crate::reduce1d::{ConditionReport, HypothesisReport};
use crate::transnormal::{ProfileFunction, TransnormalFunction};
use serde::Serialize;
use std::sync::Arc;

/// The reduced rectangle `I_L x I_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub t: Interval,
    pub s: Interval,
}

impl Rect {
    pub fn contains(&self, t: f64, s: f64) -> bool {
        self.t.contains(t) && self.s.contains(s)
    }
}

/// A reduced two-dimensional problem.
#[derive(Clone)]
pub struct ReducedProblem2D {
    fhat: Expr,
    profile_l: ProfileFunction,
    profile_n: ProfileFunction,
    warp: Expr,
    domain: Rect,
    var_t: usize,
    var_s: usize,
    var_r: usize,
    var_tau: usize,
}

const WARP_SCAN_POINTS: usize = 1000;

impl ReducedProblem2D {
    /// `fhat` must declare `t`, `s`, `r`, `tau`; `warp` is an expression in
    /// `t`, strictly positive on the domain's t-interval (checked on a
    /// 1000-point scan). `domain` defaults to the profile image rectangle.
    pub fn new(
        fhat: Expr,
        profile_l: ProfileFunction,
        profile_n: ProfileFunction,
        warp: Expr,
        domain: Option<Rect>,
    ) -> Result<Self> {
        let var_t = fhat
            .var_index("t")
            .ok_or_else(|| Error::UnboundVariable { name: "t".into() })?;
        let var_s = fhat
            .var_index("s")
            .ok_or_else(|| Error::UnboundVariable { name: "s".into() })?;
        let var_r = fhat
            .var_index("r")
            .ok_or_else(|| Error::UnboundVariable { name: "r".into() })?;
        let var_tau = fhat
            .var_index("tau")
            .ok_or_else(|| Error::UnboundVariable { name: "tau".into() })?;
        if warp.var_index("t").is_none() || warp.variables().len() != 1 {
            return Err(Error::UnboundVariable { name: "t".into() });
        }
        let domain = domain.unwrap_or(Rect {
            t: profile_l.domain(),
            s: profile_n.domain(),
        });
        let scan_lo = domain.t.lo.max(-1e3);
        let scan_hi = domain.t.hi.min(1e3);
        for i in 0..WARP_SCAN_POINTS {
            let t = scan_lo + (scan_hi - scan_lo) * i as f64 / (WARP_SCAN_POINTS - 1) as f64;
            let value = warp.eval(&[t])?;
            if value <= 0.0 {
                return Err(Error::NonpositiveWarping { value, t });
            }
        }
        Ok(ReducedProblem2D {
            fhat,
            profile_l,
            profile_n,
            warp,
            domain,
            var_t,
            var_s,
            var_r,
            var_tau,
        })
    }

    pub fn fhat(&self) -> &Expr {
        &self.fhat
    }

    pub fn profile_l(&self) -> &ProfileFunction {
        &self.profile_l
    }

    pub fn profile_n(&self) -> &ProfileFunction {
        &self.profile_n
    }

    pub fn warp(&self) -> &Expr {
        &self.warp
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    fn bindings(&self, t: f64, s: f64, r: f64, tau: f64) -> Vec<f64> {
        let mut b = vec![0.0; self.fhat.variables().len()];
        b[self.var_t] = t;
        b[self.var_s] = s;
        b[self.var_r] = r;
        b[self.var_tau] = tau;
        b
    }

    /// `tau = -a_L(t) p^2 + (a_N(s) / alpha^2(t)) q^2`.
    pub fn tau(&self, t: f64, s: f64, p: f64, q: f64) -> Result<f64> {
        let alpha = self.warp.eval(&[t])?;
        if alpha <= 0.0 {
            return Err(Error::NonpositiveWarping { value: alpha, t });
        }
        Ok(-self.profile_l.eval(t) * p * p
            + self.profile_n.eval(s) / (alpha * alpha) * q * q)
    }
}

impl std::fmt::Debug for ReducedProblem2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedProblem2D")
            .field("fhat", &self.fhat.to_string())
            .field("profile_l", &self.profile_l.formula())
            .field("profile_n", &self.profile_n.formula())
            .field("warp", &self.warp.to_string())
            .field("domain", &self.domain)
            .finish()
    }
}

/// Residual of the reduced equation for a test surface `w` at `(t, s)`,
/// with partials supplied by the caller or taken by central differences
/// (`h = 1e-6`).
pub fn reduced_residual_2d(
    problem: &ReducedProblem2D,
    w: &dyn Fn(f64, f64) -> f64,
    partials: Option<(f64, f64)>,
    t: f64,
    s: f64,
) -> Result<f64> {
    let (wt, ws) = partials.unwrap_or_else(|| {
        const H: f64 = 1e-6;
        (
            (w(t + H, s) - w(t - H, s)) / (2.0 * H),
            (w(t, s + H) - w(t, s - H)) / (2.0 * H),
        )
    });
    let tau = problem.tau(t, s, wt, ws)?;
    problem.fhat.eval(&problem.bindings(t, s, w(t, s), tau))
}

/// Hamiltonian value and exact partials at one phase point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HamiltonianEval {
    pub h: f64,
    pub h_t: f64,
    pub h_s: f64,
    pub h_r: f64,
    pub h_p: f64,
    pub h_q: f64,
}

/// `H(t, s, r, p, q) = Fhat(t, s, r, tau)` with dual-number partials
/// composed with the chain rule through `tau`.
#[derive(Clone)]
pub struct Hamiltonian {
    problem: Arc<ReducedProblem2D>,
}

impl Hamiltonian {
    pub fn eval(&self, y: &[f64; 5]) -> Result<HamiltonianEval> {
        let [t, s, r, p, q] = *y;
        let pr = &self.problem;
        let a_l = pr.profile_l.eval(t);
        let a_l_d = pr.profile_l.deriv(t);
        let a_n = pr.profile_n.eval(s);
        let a_n_d = pr.profile_n.deriv(s);
        let alpha_dual = pr.warp.eval_with_partials(&[t])?;
        let alpha = alpha_dual.value();
        if alpha <= 0.0 {
            return Err(Error::NonpositiveWarping { value: alpha, t });
        }
        let alpha_d = alpha_dual.partial(0);
        let inv_a2 = 1.0 / (alpha * alpha);
        // d/dt [alpha^-2] = -2 alpha' / alpha^3
        let inv_a2_d = -2.0 * alpha_d / (alpha * alpha * alpha);

        let tau = -a_l * p * p + a_n * inv_a2 * q * q;
        let fd = pr.fhat.eval_with_partials(&pr.bindings(t, s, r, tau))?;
        let f_t = fd.partial(pr.var_t);
        let f_s = fd.partial(pr.var_s);
        let f_r = fd.partial(pr.var_r);
        let f_tau = fd.partial(pr.var_tau);

        let tau_t = -a_l_d * p * p + a_n * inv_a2_d * q * q;
        let tau_s = a_n_d * inv_a2 * q * q;
        Ok(HamiltonianEval {
            h: fd.value(),
            h_t: f_t + f_tau * tau_t,
            h_s: f_s + f_tau * tau_s,
            h_r: f_r,
            h_p: f_tau * (-2.0 * a_l * p),
            h_q: f_tau * (2.0 * a_n * inv_a2 * q),
        })
    }

    pub fn problem(&self) -> &ReducedProblem2D {
        &self.problem
    }
}

/// Build the Hamiltonian for a reduced problem.
pub fn hamiltonian(problem: &ReducedProblem2D) -> Hamiltonian {
    Hamiltonian {
        problem: Arc::new(problem.clone()),
    }
}

/// Cauchy data: value curves `T, S, R` in the parameter `zeta` plus the
/// strip seed `(p0, q0)`.
#[derive(Clone)]
pub struct CauchyData {
    curve_t: Expr,
    curve_s: Expr,
    curve_r: Expr,
    pub zeta_range: f64,
    pub strip_seed: (f64, f64),
}

impl CauchyData {
    pub fn new(
        curve_t: Expr,
        curve_s: Expr,
        curve_r: Expr,
        zeta_range: f64,
        strip_seed: (f64, f64),
    ) -> Result<Self> {
        for c in [&curve_t, &curve_s, &curve_r] {
            if c.var_index("zeta").is_none() || c.variables().len() != 1 {
                return Err(Error::UnboundVariable {
                    name: "zeta".into(),
                });
            }
        }
        if !zeta_range.is_finite() || zeta_range <= 0.0 {
            return Err(Error::DomainMismatch(
                "zeta_range must be positive".into(),
            ));
        }
        Ok(CauchyData {
            curve_t,
            curve_s,
            curve_r,
            zeta_range,
            strip_seed,
        })
    }

    /// `(T, S, R, T', S', R')` at `zeta`.
    pub fn at(&self, zeta: f64) -> Result<CurvePoint> {
        let t = self.curve_t.eval_with_partials(&[zeta])?;
        let s = self.curve_s.eval_with_partials(&[zeta])?;
        let r = self.curve_r.eval_with_partials(&[zeta])?;
        Ok(CurvePoint {
            t: t.value(),
            s: s.value(),
            r: r.value(),
            dt: t.partial(0),
            ds: s.partial(0),
            dr: r.partial(0),
        })
    }
}

impl std::fmt::Debug for CauchyData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyData")
            .field("T", &self.curve_t.to_string())
            .field("S", &self.curve_s.to_string())
            .field("R", &self.curve_r.to_string())
            .field("zeta_range", &self.zeta_range)
            .field("strip_seed", &self.strip_seed)
            .finish()
    }
}

/// Evaluated initial curve data at one `zeta`.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub t: f64,
    pub s: f64,
    pub r: f64,
    pub dt: f64,
    pub ds: f64,
    pub dr: f64,
}

const EQ_TOL: f64 = 1e-10;
const NEQ_FLOOR: f64 = 1e-10;
const CURVE_TOL: f64 = 1e-9;

/// Check the Cauchy-problem hypotheses at the base point.
///
/// `declared_base`, when given, is the `(t0, s0, r0)` the caller believes
/// the curves pass through; the first condition compares against it.
pub fn check_cauchy_hypotheses(
    problem: &ReducedProblem2D,
    data: &CauchyData,
    declared_base: Option<(f64, f64, f64)>,
) -> Result<HypothesisReport> {
    let c0 = data.at(0.0)?;
    let (p0, q0) = data.strip_seed;
    let base_dev = declared_base.map_or(0.0, |(t0, s0, r0)| {
        (c0.t - t0).abs().max((c0.s - s0).abs()).max((c0.r - r0).abs())
    });
    let tau0 = problem.tau(c0.t, c0.s, p0, q0)?;
    let fd = problem
        .fhat
        .eval_with_partials(&problem.bindings(c0.t, c0.s, c0.r, tau0))?;
    let h = hamiltonian(problem);
    let he = h.eval(&[c0.t, c0.s, c0.r, p0, q0])?;
    let sigma2 = q0 * c0.dt - p0 * c0.ds;
    let sigma3 = c0.dr - (p0 * c0.dt + q0 * c0.ds);
    let transversality = c0.dt * he.h_p - c0.ds * he.h_q;
    let jacobian = c0.dt * he.h_q - c0.ds * he.h_p;

    let conditions = vec![
        ConditionReport {
            name: "Sigma.1: curves pass through (t0, s0, r0)".into(),
            value: base_dev,
            pass: base_dev <= CURVE_TOL,
        },
        ConditionReport {
            name: "F(t0, s0, r0, tau0) = 0".into(),
            value: fd.value(),
            pass: fd.value().abs() <= EQ_TOL,
        },
        ConditionReport {
            name: "dF/dtau(t0, s0, r0, tau0) != 0".into(),
            value: fd.partial(problem.var_tau),
            pass: fd.partial(problem.var_tau).abs() >= NEQ_FLOOR,
        },
        ConditionReport {
            name: "(p0, q0) != (0, 0)".into(),
            value: p0 * p0 + q0 * q0,
            pass: p0 * p0 + q0 * q0 >= 1e-14,
        },
        ConditionReport {
            name: "Sigma.2: q0 T'(0) != p0 S'(0)".into(),
            value: sigma2,
            pass: sigma2.abs() >= NEQ_FLOOR,
        },
        ConditionReport {
            name: "Sigma.3: R'(0) = p0 T'(0) + q0 S'(0)".into(),
            value: sigma3,
            pass: sigma3.abs() <= CURVE_TOL,
        },
        ConditionReport {
            name: "transversality: T'(0) H_p - S'(0) H_q != 0".into(),
            value: transversality,
            pass: transversality.abs() >= NEQ_FLOOR,
        },
        ConditionReport {
            name: "jacobian: T'(0) H_q - S'(0) H_p != 0".into(),
            value: jacobian,
            pass: jacobian.abs() >= NEQ_FLOOR,
        },
    ];
    let pass = conditions.iter().all(|c| c.pass);
    Ok(HypothesisReport { conditions, pass })
}

const STRIP_NEWTON_TARGET: f64 = 1e-12;
const STRIP_NEWTON_ITERS: usize = 60;

/// Solve the initial-strip system `{H(T, S, R, p, q) = 0,
/// p T' + q S' = R'}` at `zeta`, warm-started from a neighboring solution
/// (or the strip seed at the base).
pub fn solve_initial_strip(
    h: &Hamiltonian,
    data: &CauchyData,
    zeta: f64,
    warm: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    let c = data.at(zeta)?;
    let (seed_p, seed_q) = warm.unwrap_or(data.strip_seed);
    let cap = {
        let (p0, q0) = data.strip_seed;
        0.5 * (p0 * p0 + q0 * q0).sqrt() + 0.5
    };
    let mut p = seed_p;
    let mut q = seed_q;
    for _ in 0..STRIP_NEWTON_ITERS {
        let he = h.eval(&[c.t, c.s, c.r, p, q])?;
        let g1 = he.h;
        let g2 = p * c.dt + q * c.ds - c.dr;
        if g1.abs() <= STRIP_NEWTON_TARGET && g2.abs() <= STRIP_NEWTON_TARGET {
            // Three flavours of the noncharacteristic condition: the stated
            // form q T' != p S', the proof-level form T' H_p - S' H_q != 0,
            // and the fan Jacobian T' H_q - S' H_p != 0. All must hold for
            // the strip to contribute to a covering fan.
            let stated = q * c.dt - p * c.ds;
            let proof_form = c.dt * he.h_p - c.ds * he.h_q;
            let jacobian = c.dt * he.h_q - c.ds * he.h_p;
            let weakest = stated.abs().min(proof_form.abs()).min(jacobian.abs());
            if weakest <= NEQ_FLOOR {
                return Err(Error::TransversalityLoss {
                    zeta,
                    value: weakest,
                });
            }
            return Ok((p, q));
        }
        // Jacobian of the 2x2 system.
        let det = he.h_p * c.ds - he.h_q * c.dt;
        if det.abs() < 1e-14 {
            return Err(Error::StripRootFailure {
                zeta,
                message: format!("singular strip Jacobian {det:.3e}"),
            });
        }
        let dp = (g1 * c.ds - he.h_q * g2) / det;
        let dq = (he.h_p * g2 - g1 * c.dt) / det;
        p -= dp;
        q -= dq;
        let drift = ((p - seed_p).powi(2) + (q - seed_q).powi(2)).sqrt();
        if drift > cap {
            return Err(Error::StripRootFailure {
                zeta,
                message: format!("Newton jump {drift:.3e} exceeds the continuity cap {cap:.3e}"),
            });
        }
    }
    Err(Error::StripRootFailure {
        zeta,
        message: "Newton did not converge".into(),
    })
}

/// One sample along a characteristic strip.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StripSample {
    pub sigma: f64,
    /// `(t, s, r, p, q)`.
    pub state: [f64; 5],
    /// Derivative of the state with respect to `sigma`.
    pub deriv: [f64; 5],
}

/// Why a strip end stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StripEnd {
    SpanEnd,
    DomainBoundary,
}

/// A characteristic strip: samples over the strip parameter with the
/// conservation drift of `H`.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicStrip {
    pub zeta: f64,
    pub samples: Vec<StripSample>,
    pub hamiltonian_drift: f64,
    pub lower_end: StripEnd,
    pub upper_end: StripEnd,
}

impl CharacteristicStrip {
    pub fn sigma_range(&self) -> Interval {
        Interval::new(
            self.samples.first().unwrap().sigma,
            self.samples.last().unwrap().sigma,
        )
    }

    /// Hermite-interpolated state at `sigma`.
    pub fn state_at(&self, sigma: f64) -> Result<[f64; 5]> {
        self.interp(sigma, false)
    }

    /// Hermite-interpolated sigma-derivative of the state.
    pub fn deriv_at(&self, sigma: f64) -> Result<[f64; 5]> {
        self.interp(sigma, true)
    }

    fn interp(&self, sigma: f64, want_deriv: bool) -> Result<[f64; 5]> {
        let range = self.sigma_range();
        let slack = 1e-12 * (1.0 + sigma.abs());
        if sigma < range.lo - slack || sigma > range.hi + slack {
            return Err(Error::OutsideDomain { t: sigma });
        }
        if self.samples.len() == 1 {
            let s = &self.samples[0];
            return Ok(if want_deriv { s.deriv } else { s.state });
        }
        let sigmas: Vec<f64> = self.samples.iter().map(|s| s.sigma).collect();
        let i = locate(&sigmas, sigma);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let mut out = [0.0; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = if want_deriv {
                hermite_deriv(
                    a.sigma, a.state[k], a.deriv[k], b.sigma, b.state[k], b.deriv[k], sigma,
                )
            } else {
                hermite_value(
                    a.sigma, a.state[k], a.deriv[k], b.sigma, b.state[k], b.deriv[k], sigma,
                )
            };
        }
        Ok(out)
    }
}

const DRIFT_TOL: f64 = 1e-8;
const STRIP_MIN_STEP: f64 = 1e-13;
const STRIP_MAX_STEPS: usize = 1_000_000;

fn characteristic_rhs(h: &Hamiltonian, _sigma: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
    let e = h.eval(y)?;
    Ok([
        e.h_p,
        e.h_q,
        y[3] * e.h_p + y[4] * e.h_q,
        -(e.h_t + y[3] * e.h_r),
        -(e.h_s + y[4] * e.h_r),
    ])
}

/// Integrate one characteristic strip from `start = (t, s, r, p, q)` over
/// `sigma_span` (which must contain 0), monitoring `|H|` drift and halting
/// at the domain boundary of the reduced rectangle.
pub fn integrate_strip(
    h: &Hamiltonian,
    zeta: f64,
    start: [f64; 5],
    sigma_span: Interval,
    tol: f64,
) -> Result<CharacteristicStrip> {
    if !sigma_span.contains(0.0) {
        return Err(Error::DomainMismatch(
            "sigma span must contain 0".into(),
        ));
    }
    let h0 = h.eval(&start)?.h;
    if h0.abs() > 1e-10 {
        return Err(Error::HypothesisRejected(format!(
            "strip start violates H = 0 (H = {h0:.3e})"
        )));
    }
    let start_deriv = characteristic_rhs(h, 0.0, &start)?;
    let mut drift = h0.abs();
    let upper = strip_side(h, &start, &start_deriv, sigma_span.hi, tol, &mut drift)?;
    let lower = strip_side(h, &start, &start_deriv, sigma_span.lo, tol, &mut drift)?;

    let mut samples = Vec::with_capacity(lower.samples.len() + upper.samples.len() + 1);
    samples.extend(lower.samples.into_iter().rev());
    samples.push(StripSample {
        sigma: 0.0,
        state: start,
        deriv: start_deriv,
    });
    samples.extend(upper.samples);
    Ok(CharacteristicStrip {
        zeta,
        samples,
        hamiltonian_drift: drift,
        lower_end: lower.end,
        upper_end: upper.end,
    })
}

struct StripSide {
    /// Samples excluding sigma = 0, ordered outward.
    samples: Vec<StripSample>,
    end: StripEnd,
}

fn strip_side(
    h: &Hamiltonian,
    start: &[f64; 5],
    start_deriv: &[f64; 5],
    sigma_end: f64,
    tol: f64,
    drift: &mut f64,
) -> Result<StripSide> {
    let domain = h.problem.domain;
    if sigma_end == 0.0 {
        return Ok(StripSide {
            samples: Vec::new(),
            end: StripEnd::SpanEnd,
        });
    }
    let dir = sigma_end.signum();
    let mut sigma = 0.0f64;
    let mut y = *start;
    let mut dy = *start_deriv;
    let mut samples = Vec::new();
    let max_step = sigma_end.abs() / 16.0;
    let mut hstep = dir * (sigma_end.abs() * 1e-2).min(max_step);
    let mut rhs = |ss: f64, yy: &[f64; 5]| characteristic_rhs(h, ss, yy);

    for _ in 0..STRIP_MAX_STEPS {
        let remaining = sigma_end - sigma;
        if remaining.abs() <= 1e-14 * (1.0 + sigma.abs()) {
            return Ok(StripSide {
                samples,
                end: StripEnd::SpanEnd,
            });
        }
        if hstep.abs() > remaining.abs() {
            hstep = remaining;
        }
        if hstep.abs() > max_step {
            hstep = dir * max_step;
        }
        match dopri5_step(&mut rhs, sigma, &y, &dy, hstep, tol, tol) {
            Ok(step) if step.error <= 1.0 => {
                let h_end = h.eval(&step.y)?.h;
                if h_end.abs() > DRIFT_TOL {
                    hstep *= 0.5;
                    if hstep.abs() < STRIP_MIN_STEP {
                        return Err(Error::DriftViolation {
                            drift: h_end.abs(),
                            sigma,
                        });
                    }
                    continue;
                }
                if !domain.contains(step.y[0], step.y[1]) {
                    // Shrink the step onto the rectangle boundary.
                    if hstep.abs() < 1e-11 {
                        return Ok(StripSide {
                            samples,
                            end: StripEnd::DomainBoundary,
                        });
                    }
                    hstep *= 0.5;
                    continue;
                }
                sigma += hstep;
                y = step.y;
                dy = step.dy_end;
                *drift = drift.max(h_end.abs());
                samples.push(StripSample {
                    sigma,
                    state: y,
                    deriv: dy,
                });
                hstep = next_step_size(hstep, step.error);
            }
            Ok(step) => {
                hstep = next_step_size(hstep, step.error);
                if hstep.abs() < STRIP_MIN_STEP {
                    return Err(Error::StepFailure { t: sigma });
                }
            }
            Err(e) => {
                hstep *= 0.5;
                if hstep.abs() < STRIP_MIN_STEP {
                    return Err(e);
                }
            }
        }
    }
    Err(Error::StepFailure { t: sigma })
}

/// A fan of characteristic strips forming a local solution surface.
#[derive(Debug, Clone)]
pub struct Solution2D {
    strips: Vec<CharacteristicStrip>,
    zetas: Vec<f64>,
    base: (f64, f64),
    pub jacobian_at_base: f64,
}

/// Solve the Cauchy problem: fan `zeta_grid` strips over the zeta range and
/// assemble the surface.
pub fn solve_cauchy(
    problem: &ReducedProblem2D,
    data: &CauchyData,
    zeta_grid: usize,
    sigma_span: Interval,
    tol: f64,
) -> Result<Solution2D> {
    assert!(zeta_grid >= 1);
    let report = check_cauchy_hypotheses(problem, data, None)?;
    report.require_pass()?;
    let h = hamiltonian(problem);
    let c0 = data.at(0.0)?;
    let he0 = h.eval(&[c0.t, c0.s, c0.r, data.strip_seed.0, data.strip_seed.1])?;
    let jacobian = c0.dt * he0.h_q - c0.ds * he0.h_p;
    if jacobian.abs() < NEQ_FLOOR {
        return Err(Error::CoverageFailure { jacobian });
    }

    let zetas: Vec<f64> = if zeta_grid == 1 {
        vec![0.0]
    } else {
        (0..zeta_grid)
            .map(|i| {
                -data.zeta_range
                    + 2.0 * data.zeta_range * i as f64 / (zeta_grid - 1) as f64
            })
            .collect()
    };
    // Continuation outward from the zeta nearest 0, keeping the seeded
    // branch of the (p, q) level set.
    let center = zetas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut roots: Vec<Option<(f64, f64)>> = vec![None; zetas.len()];
    let mut warm = None;
    for i in center..zetas.len() {
        let pq = solve_initial_strip(&h, data, zetas[i], warm)?;
        roots[i] = Some(pq);
        warm = Some(pq);
    }
    warm = roots[center];
    for i in (0..center).rev() {
        let pq = solve_initial_strip(&h, data, zetas[i], warm)?;
        roots[i] = Some(pq);
        warm = Some(pq);
    }

    let mut strips = Vec::with_capacity(zetas.len());
    for (i, &zeta) in zetas.iter().enumerate() {
        let (p, q) = roots[i].unwrap();
        let c = data.at(zeta)?;
        let strip = integrate_strip(&h, zeta, [c.t, c.s, c.r, p, q], sigma_span, tol)?;
        strips.push(strip);
    }
    Ok(Solution2D {
        strips,
        zetas,
        base: (c0.t, c0.s),
        jacobian_at_base: jacobian,
    })
}

impl Solution2D {
    pub fn strips(&self) -> &[CharacteristicStrip] {
        &self.strips
    }

    pub fn zetas(&self) -> &[f64] {
        &self.zetas
    }

    pub fn base(&self) -> (f64, f64) {
        self.base
    }

    pub fn max_drift(&self) -> f64 {
        self.strips
            .iter()
            .map(|s| s.hamiltonian_drift)
            .fold(0.0, f64::max)
    }

    /// The sigma interval on which every strip is defined.
    fn common_sigma_range(&self) -> Interval {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for s in &self.strips {
            let r = s.sigma_range();
            lo = lo.max(r.lo);
            hi = hi.min(r.hi);
        }
        Interval::new(lo, hi)
    }

    /// Interpolated phase state at fan parameters `(zeta, sigma)`:
    /// Hermite along strips, cubic Lagrange across them.
    fn fan_state(&self, zeta: f64, sigma: f64, sigma_range: Interval) -> Result<FanState> {
        let sigma = sigma_range.clamp(sigma);
        if self.strips.len() == 1 {
            let state = self.strips[0].state_at(sigma)?;
            let deriv = self.strips[0].deriv_at(sigma)?;
            return Ok(FanState {
                state,
                d_sigma: deriv,
                d_zeta: [0.0; 5],
            });
        }
        let j = locate(&self.zetas, zeta);
        let lo = j.saturating_sub(1);
        let hi = (j + 2).min(self.strips.len() - 1);
        let window: Vec<usize> = (lo..=hi).collect();
        let mut xs = Vec::with_capacity(window.len());
        let mut states = Vec::with_capacity(window.len());
        let mut derivs = Vec::with_capacity(window.len());
        for &idx in &window {
            xs.push(self.zetas[idx]);
            states.push(self.strips[idx].state_at(sigma)?);
            derivs.push(self.strips[idx].deriv_at(sigma)?);
        }
        let mut state = [0.0; 5];
        let mut d_sigma = [0.0; 5];
        let mut d_zeta = [0.0; 5];
        for k in 0..5 {
            let vals: Vec<f64> = states.iter().map(|s| s[k]).collect();
            let dvals: Vec<f64> = derivs.iter().map(|s| s[k]).collect();
            state[k] = lagrange_value(&xs, &vals, zeta);
            d_sigma[k] = lagrange_value(&xs, &dvals, zeta);
            d_zeta[k] = lagrange_deriv(&xs, &vals, zeta);
        }
        Ok(FanState {
            state,
            d_sigma,
            d_zeta,
        })
    }

    /// Evaluate `(r, p, q)` at a point `(t, s)` of the covered region by
    /// Newton inversion of the characteristic map.
    pub fn evaluate(&self, t: f64, s: f64) -> Result<(f64, f64, f64)> {
        // Exact hit on a stored sample returns the stored values.
        for strip in &self.strips {
            for sample in &strip.samples {
                if (sample.state[0] - t).abs() <= 1e-13 * (1.0 + t.abs())
                    && (sample.state[1] - s).abs() <= 1e-13 * (1.0 + s.abs())
                {
                    return Ok((sample.state[2], sample.state[3], sample.state[4]));
                }
            }
        }
        let sigma_range = self.common_sigma_range();
        // Seed from the nearest stored sample.
        let mut best = (0usize, 0usize, f64::INFINITY);
        for (j, strip) in self.strips.iter().enumerate() {
            for (k, sample) in strip.samples.iter().enumerate() {
                let d = (sample.state[0] - t).powi(2) + (sample.state[1] - s).powi(2);
                if d < best.2 {
                    best = (j, k, d);
                }
            }
        }
        let mut zeta = self.zetas[best.0];
        let mut sigma = sigma_range.clamp(self.strips[best.0].samples[best.1].sigma);

        let zeta_lo = *self.zetas.first().unwrap();
        let zeta_hi = *self.zetas.last().unwrap();
        let zeta_pad = 1e-9 * (1.0 + zeta_hi.abs());
        let sigma_pad = 1e-9 * (1.0 + sigma_range.hi.abs());
        let scale = 1.0 + t.abs() + s.abs();
        let mut clamped_runs = 0usize;
        for _ in 0..60 {
            let fan = self.fan_state(zeta, sigma, sigma_range)?;
            let rt = fan.state[0] - t;
            let rs = fan.state[1] - s;
            if rt.abs().max(rs.abs()) <= 1e-12 * scale {
                let inside = zeta >= zeta_lo - zeta_pad
                    && zeta <= zeta_hi + zeta_pad
                    && sigma >= sigma_range.lo - sigma_pad
                    && sigma <= sigma_range.hi + sigma_pad;
                if !inside {
                    return Err(Error::OutsideCoverage { t, s });
                }
                return Ok((fan.state[2], fan.state[3], fan.state[4]));
            }
            let j00 = fan.d_zeta[0];
            let j01 = fan.d_sigma[0];
            let j10 = fan.d_zeta[1];
            let j11 = fan.d_sigma[1];
            let det = j00 * j11 - j01 * j10;
            if det.abs() < 1e-14 {
                return Err(Error::InversionFailure { t, s });
            }
            let dzeta = (rt * j11 - j01 * rs) / det;
            let dsigma = (j00 * rs - rt * j10) / det;
            let new_zeta = (zeta - dzeta).clamp(zeta_lo, zeta_hi);
            let new_sigma = sigma_range.clamp(sigma - dsigma);
            let clamped = (new_zeta - (zeta - dzeta)).abs() > 0.0
                || (new_sigma - (sigma - dsigma)).abs() > 0.0;
            if clamped {
                clamped_runs += 1;
                if clamped_runs >= 8 {
                    return Err(Error::OutsideCoverage { t, s });
                }
            } else {
                clamped_runs = 0;
            }
            zeta = new_zeta;
            sigma = new_sigma;
        }
        Err(Error::InversionFailure { t, s })
    }

    /// Polygon tracing the image of the fan's parameter rectangle in the
    /// `(t, s)` plane (for plotting and coverage export).
    pub fn coverage_polygon(&self) -> Vec<(f64, f64)> {
        let mut polygon = Vec::new();
        let first = self.strips.first().unwrap();
        let last = self.strips.last().unwrap();
        for sample in &first.samples {
            polygon.push((sample.state[0], sample.state[1]));
        }
        for strip in &self.strips {
            let sample = strip.samples.last().unwrap();
            polygon.push((sample.state[0], sample.state[1]));
        }
        for sample in last.samples.iter().rev() {
            polygon.push((sample.state[0], sample.state[1]));
        }
        for strip in self.strips.iter().rev() {
            let sample = strip.samples.first().unwrap();
            polygon.push((sample.state[0], sample.state[1]));
        }
        polygon
    }
}

struct FanState {
    state: [f64; 5],
    d_sigma: [f64; 5],
    d_zeta: [f64; 5],
}

fn lagrange_value(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut term = ys[i];
        for j in 0..n {
            if j != i {
                term *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += term;
    }
    acc
}

fn lagrange_deriv(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut sum = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut term = 1.0 / (xs[i] - xs[k]);
            for j in 0..n {
                if j != i && j != k {
                    term *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            sum += term;
        }
        acc += ys[i] * sum;
    }
    acc
}

/// Evaluate a solution surface at `(t, s)`; free-function form of
/// [`Solution2D::evaluate`].
pub fn evaluate_solution_2d(sol: &Solution2D, t: f64, s: f64) -> Result<(f64, f64, f64)> {
    sol.evaluate(t, s)
}

/// The lifted field `u(x, z) = w(f_L(x), f_N(z))` on a warped product.
#[derive(Clone)]
pub struct LiftedField2D {
    solution: Arc<Solution2D>,
    f_left: TransnormalFunction,
    f_right: TransnormalFunction,
    model: Arc<ManifoldModel>,
}

impl LiftedField2D {
    pub fn solution(&self) -> &Solution2D {
        &self.solution
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        &self.model
    }
}

/// Lift a 2-D solution through the pair `(f_L, f_N)` onto the warped
/// product `model`.
pub fn lift_2d(
    solution: Solution2D,
    f_left: TransnormalFunction,
    f_right: TransnormalFunction,
    model: Arc<ManifoldModel>,
) -> Result<LiftedField2D> {
    match model.as_ref() {
        ManifoldModel::WarpedProduct(w) => {
            if w.left.coord_len() != f_left.model().coord_len()
                || w.right.coord_len() != f_right.model().coord_len()
            {
                return Err(Error::DimensionMismatch {
                    expected: w.left.coord_len(),
                    got: f_left.model().coord_len(),
                });
            }
        }
        _ => {
            return Err(Error::DomainMismatch(
                "lift_2d requires a warped-product model".into(),
            ))
        }
    }
    Ok(LiftedField2D {
        solution: Arc::new(solution),
        f_left,
        f_right,
        model,
    })
}

impl ScalarField for LiftedField2D {
    fn value(&self, point: &ChartPoint) -> Result<f64> {
        let (x, z) = point.split(&self.model)?;
        let t = self.f_left.value(&x)?;
        let s = self.f_right.value(&z)?;
        let (r, _, _) = self.solution.evaluate(t, s)?;
        Ok(r)
    }

    fn partials(&self, point: &ChartPoint) -> Option<Result<Vec<f64>>> {
        Some((|| {
            let (x, z) = point.split(&self.model)?;
            let t = self.f_left.value(&x)?;
            let s = self.f_right.value(&z)?;
            let (_, p, q) = self.solution.evaluate(t, s)?;
            let fp_left = self
                .f_left
                .partials(&x)
                .ok_or_else(|| {
                    Error::FieldEvaluationFailure(
                        "left transnormal function lacks analytic partials".into(),
                    )
                })??;
            let fp_right = self
                .f_right
                .partials(&z)
                .ok_or_else(|| {
                    Error::FieldEvaluationFailure(
                        "right transnormal function lacks analytic partials".into(),
                    )
                })??;
            let mut out: Vec<f64> = fp_left.into_iter().map(|v| p * v).collect();
            out.extend(fp_right.into_iter().map(|v| q * v));
            Ok(out)
        })())
    }
}

#[cfg(test)]
mod tests;
