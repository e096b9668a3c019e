//! Adaptive Simpson quadrature with error propagation from the integrand.

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 60;

/// Adaptive Simpson integral of `f` over `[a, b]` to absolute tolerance
/// `tol`. The integrand may fail; failures propagate.
pub fn adaptive_simpson<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = simpson_rule(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "adaptive Simpson recursion depth exhausted on [{a}, {b}]"
        )));
    }
    let half_tol = 0.5 * tol;
    Ok(recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&mut |x| Ok(x * x * x - 2.0 * x), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12); // x^4/4 - x^2 at 2 = 4 - 4
    }

    #[test]
    fn oscillatory_integral() {
        let v = adaptive_simpson(&mut |x: f64| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-12)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn inverse_sqrt_near_singularity() {
        // Integrable blow-up just outside the interval.
        let v = adaptive_simpson(&mut |x: f64| Ok(1.0 / (1.0 - x).sqrt()), 0.0, 1.0 - 1e-10, 1e-11)
            .unwrap();
        let exact = 2.0 * (1.0 - 1e-5);
        assert!((v - exact).abs() < 1e-7, "got {v}, want {exact}");
    }

    #[test]
    fn integrand_error_propagates() {
        let r = adaptive_simpson(
            &mut |x: f64| {
                if x > 0.7 {
                    Err(Error::SignViolation { t: x })
                } else {
                    Ok(1.0)
                }
            },
            0.0,
            1.0,
            1e-9,
        );
        assert!(r.is_err());
    }
}
