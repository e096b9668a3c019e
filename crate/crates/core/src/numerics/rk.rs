//! Embedded Dormand-Prince 5(4) Runge-Kutta step, generic over the state
//! dimension.
//!
//! Only the single-step primitive lives here; the driver loops (with their
//! module-specific halting rules: profile singularities, Hamiltonian drift,
//! domain boundaries) are written where they are used.

use crate::error::Result;

/// Right-hand side of an ODE system; evaluation may fail (e.g. an implicit
/// branch is lost or an expression leaves its domain).
pub trait OdeRhs<const N: usize> {
    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<F, const N: usize> OdeRhs<N> for F
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

// Dormand-Prince coefficients (RK45, FSAL pair).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Outcome of a trial step.
pub struct StepResult<const N: usize> {
    /// Fifth-order solution at `t + h`.
    pub y: [f64; N],
    /// Derivative at `t + h` (FSAL stage), reusable as the next step's k1.
    pub dy_end: [f64; N],
    /// Scaled local error estimate; accept when `<= 1.0`.
    pub error: f64,
}

/// Take one trial Dormand-Prince step of size `h` from `(t, y)`.
///
/// `dy0` must be the derivative at `(t, y)`. The error estimate is scaled by
/// `atol + rtol * |y|` componentwise.
pub fn dopri5_step<const N: usize, R: OdeRhs<N>>(
    rhs: &mut R,
    t: f64,
    y: &[f64; N],
    dy0: &[f64; N],
    h: f64,
    atol: f64,
    rtol: f64,
) -> Result<StepResult<N>> {
    let mut k = [[0.0; N]; 7];
    k[0] = *dy0;
    for stage in 1..7 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let a = A[stage][j];
            if a != 0.0 {
                for n in 0..N {
                    yi[n] += h * a * kj[n];
                }
            }
        }
        k[stage] = rhs.eval(t + C[stage] * h, &yi)?;
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for (j, kj) in k.iter().enumerate() {
        for n in 0..N {
            y5[n] += h * B5[j] * kj[n];
            err[n] += h * (B5[j] - B4[j]) * kj[n];
        }
    }
    let mut scaled = 0.0f64;
    for n in 0..N {
        let tol = atol + rtol * y[n].abs().max(y5[n].abs());
        scaled = scaled.max((err[n] / tol).abs());
    }
    Ok(StepResult {
        y: y5,
        dy_end: k[6],
        error: scaled,
    })
}

/// Step-size update after a trial step with scaled error `err`.
pub fn next_step_size(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_fixed<const N: usize>(
        rhs: &mut impl OdeRhs<N>,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        steps: usize,
    ) -> [f64; N] {
        let h = (t1 - t0) / steps as f64;
        let mut t = t0;
        let mut y = y0;
        let mut dy = rhs.eval(t, &y).unwrap();
        for _ in 0..steps {
            let r = dopri5_step(rhs, t, &y, &dy, h, 1e30, 1e30).unwrap();
            y = r.y;
            dy = r.dy_end;
            t += h;
        }
        y
    }

    #[test]
    fn fifth_order_convergence_on_exponential() {
        // y' = y, y(0) = 1, exact e at t = 1.
        let mut rhs = |_t: f64, y: &[f64; 1]| Ok([y[0]]);
        let coarse = integrate_fixed(&mut rhs, 0.0, [1.0], 1.0, 8)[0];
        let fine = integrate_fixed(&mut rhs, 0.0, [1.0], 1.0, 16)[0];
        let e = std::f64::consts::E;
        let ratio = (coarse - e).abs() / (fine - e).abs();
        // Order 5 gives a factor of 32 per halving; allow slack.
        assert!(ratio > 16.0, "convergence ratio {ratio}");
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let mut rhs = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let y = integrate_fixed(&mut rhs, 0.0, [1.0, 0.0], std::f64::consts::PI, 200);
        assert!((y[0] + 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn rhs_errors_propagate() {
        let mut rhs = |t: f64, _y: &[f64; 1]| {
            if t > 0.5 {
                Err(crate::error::Error::SignViolation { t })
            } else {
                Ok([1.0])
            }
        };
        let dy = [1.0];
        assert!(dopri5_step(&mut rhs, 0.4, &[0.0], &dy, 0.5, 1e-9, 1e-9).is_err());
    }
}
