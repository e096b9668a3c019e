//! Independent verification: residuals of the original PDE on the manifold
//! and invariance of lifted fields along level sets.
//!
//! Nothing here reuses a solver's reduced residual; the inner product
//! `<grad u, grad u>_g` is recomputed from scratch through the geometry
//! module, so these checks catch reduction-formula bugs, not just
//! integration error.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{self, ChartPoint, GradientMode, ManifoldModel, ScalarField};
use crate::transnormal::TransnormalFunction;
use serde::Serialize;

/// Sampled residual statistics with a pass/fail verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub sample_count: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub worst_point: ChartPoint,
    pub tolerance: f64,
    pub pass: bool,
    pub gradient_mode: String,
    pub seed: u64,
}

/// The invariant structure of the PDE: how the reduced function reads the
/// sampled point.
pub enum PdeForm<'a> {
    /// `Fhat(t, r, p)` with `t = f(x)`, `r = u(x)`, `p = <grad u, grad u>`.
    OneDim {
        fhat: &'a Expr,
        f: &'a TransnormalFunction,
    },
    /// `Fhat(t, s, r, tau)` on a warped product, with `t = f_L(x)`,
    /// `s = f_N(z)`.
    TwoDim {
        fhat: &'a Expr,
        f_left: &'a TransnormalFunction,
        f_right: &'a TransnormalFunction,
    },
}

fn bindings_for(expr: &Expr, pairs: &[(&str, f64)]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; expr.variables().len()];
    let mut seen = vec![false; out.len()];
    for (name, value) in pairs {
        if let Some(i) = expr.var_index(name) {
            out[i] = *value;
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::UnboundVariable {
            name: expr.variables()[i].clone(),
        });
    }
    Ok(out)
}

const MAX_ATTEMPT_FACTOR: usize = 200;

/// Sample the residual `|F(x, u(x), <grad u, grad u>_g)|` of the original
/// equation at `count` pseudorandom regular in-domain points.
pub fn manifold_residual(
    model: &ManifoldModel,
    form: &PdeForm,
    u: &dyn ScalarField,
    count: usize,
    seed: u64,
    tol: f64,
    mode: GradientMode,
) -> Result<ResidualReport> {
    assert!(count >= 1);
    let mut rng = geometry::sample_rng(seed);
    let mut max_abs = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut worst: Option<ChartPoint> = None;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < count {
        attempts += 1;
        if attempts > MAX_ATTEMPT_FACTOR * count {
            return Err(Error::NoValidSamples);
        }
        let point = geometry::random_point(model, &mut rng);
        let residual = match residual_at(model, form, u, &point, mode) {
            Ok(r) => r,
            Err(_) => continue,
        };
        accepted += 1;
        sum += residual;
        if residual > max_abs {
            max_abs = residual;
            worst = Some(point);
        }
    }
    Ok(ResidualReport {
        sample_count: count,
        max_abs,
        mean_abs: sum / count as f64,
        worst_point: worst.expect("count >= 1"),
        tolerance: tol,
        pass: max_abs <= tol,
        gradient_mode: match mode {
            GradientMode::Analytic => "analytic".into(),
            GradientMode::FiniteDifference(_) => "finite-difference".into(),
        },
        seed,
    })
}

fn is_regular(f: &TransnormalFunction, t: f64) -> bool {
    f.profile().domain().contains(t)
        && f.profile().eval(t).abs() >= 1e-4
        && f.focal_values().iter().all(|fv| (t - fv).abs() >= 2e-3)
}

fn residual_at(
    model: &ManifoldModel,
    form: &PdeForm,
    u: &dyn ScalarField,
    point: &ChartPoint,
    mode: GradientMode,
) -> Result<f64> {
    let r = u.value(point)?;
    let tau = geometry::gradient_norm_sq(model, u, point, mode)?;
    let value = match form {
        PdeForm::OneDim { fhat, f } => {
            let t = f.value(point)?;
            if !is_regular(f, t) {
                return Err(Error::NoValidSamples);
            }
            fhat.eval(&bindings_for(fhat, &[("t", t), ("r", r), ("p", tau)])?)?
        }
        PdeForm::TwoDim {
            fhat,
            f_left,
            f_right,
        } => {
            let (left, right) = point.split(model)?;
            let t = f_left.value(&left)?;
            let s = f_right.value(&right)?;
            if !is_regular(f_left, t) || !is_regular(f_right, s) {
                return Err(Error::NoValidSamples);
            }
            fhat.eval(&bindings_for(
                fhat,
                &[("t", t), ("s", s), ("r", r), ("tau", tau)],
            )?)?
        }
    };
    Ok(value.abs())
}

/// Spread of a field along one level set.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSpread {
    pub level: f64,
    pub spread: f64,
    pub sample_count: usize,
}

/// Invariance report: per-level spreads of `u` on level sets of `f`.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub levels: Vec<LevelSpread>,
    pub max_spread: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

/// Check that `u` is constant along the given level sets of `f`:
/// per level, sample points on `f^{-1}(level)` and report
/// `max |u(x_i) - u(x_j)|`.
pub fn invariance_check(
    u: &dyn ScalarField,
    f: &TransnormalFunction,
    levels: &[f64],
    per_level_count: usize,
    seed: u64,
    tol: f64,
) -> Result<InvarianceReport> {
    let mut out = Vec::with_capacity(levels.len());
    let mut max_spread = 0.0f64;
    for (i, &level) in levels.iter().enumerate() {
        let points = geometry::sample_level_set(f, level, per_level_count, seed ^ (i as u64))?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &points {
            let v = u.value(p)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let spread = hi - lo;
        max_spread = max_spread.max(spread);
        out.push(LevelSpread {
            level,
            spread,
            sample_count: points.len(),
        });
    }
    Ok(InvarianceReport {
        levels: out,
        max_spread,
        tolerance: tol,
        pass: max_spread <= tol,
        seed,
    })
}

#[cfg(test)]
mod tests;
