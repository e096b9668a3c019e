//! Shared numerical kernels: embedded Runge-Kutta stepping, adaptive Simpson
//! quadrature, cubic Hermite interpolation, and scalar root bracketing.

pub mod hermite;
pub mod rk;
pub mod simpson;

/// Bisect a sign change of `f` on `[lo, hi]` down to a bracket of width
/// `width`, returning the midpoint of the final bracket.
///
/// `f(lo)` and `f(hi)` must have opposite (nonzero) signs.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let flo = f(lo);
    debug_assert!(flo * f(hi) <= 0.0, "bisect called without a sign change");
    let sign_lo = flo.signum();
    while (hi - lo).abs() > width {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisect a predicate boundary: `pred(lo)` must be false and `pred(hi)` true.
/// Returns the midpoint of the final bracket of width at most `width`.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(
    mut pred: F,
    mut lo: f64,
    mut hi: f64,
    width: f64,
) -> f64 {
    while (hi - lo).abs() > width {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn predicate_boundary() {
        let r = bisect_predicate(|x| x > 0.75, 0.0, 1.0, 1e-12);
        assert!((r - 0.75).abs() < 1e-11);
    }
}
