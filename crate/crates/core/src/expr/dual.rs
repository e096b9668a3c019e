//! Forward-mode dual numbers carrying one partial per declared variable.

use super::Func;
use crate::error::{Error, Result};

/// A value together with its vector of first partial derivatives.
///
/// Arithmetic follows dual-number algebra, so the chain rule is exact up to
/// floating-point rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScalar {
    value: f64,
    partials: Vec<f64>,
}

impl DualScalar {
    /// A constant: zero partials.
    pub fn constant(value: f64, n_vars: usize) -> Self {
        DualScalar {
            value,
            partials: vec![0.0; n_vars],
        }
    }

    /// The `index`-th independent variable: unit seed partial.
    pub fn variable(value: f64, index: usize, n_vars: usize) -> Self {
        let mut partials = vec![0.0; n_vars];
        partials[index] = 1.0;
        DualScalar { value, partials }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn partials(&self) -> &[f64] {
        &self.partials
    }

    pub fn partial(&self, index: usize) -> f64 {
        self.partials[index]
    }

    fn map(&self, value: f64, dfdx: f64) -> Self {
        DualScalar {
            value,
            partials: self.partials.iter().map(|p| p * dfdx).collect(),
        }
    }

    fn zip(&self, other: &Self, value: f64, da: f64, db: f64) -> Self {
        DualScalar {
            value,
            partials: self
                .partials
                .iter()
                .zip(&other.partials)
                .map(|(a, b)| a * da + b * db)
                .collect(),
        }
    }

    fn finite(self, func: &str) -> Result<Self> {
        if self.value.is_finite() && self.partials.iter().all(|p| p.is_finite()) {
            Ok(self)
        } else {
            Err(Error::Domain {
                func: func.to_string(),
                arg: self.value,
            })
        }
    }

    pub fn neg(&self) -> Self {
        self.map(-self.value, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, self.value + other.value, 1.0, 1.0).finite("+")
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, self.value - other.value, 1.0, -1.0).finite("-")
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, self.value * other.value, other.value, self.value)
            .finite("*")
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.value == 0.0 {
            return Err(Error::Domain {
                func: "/".into(),
                arg: 0.0,
            });
        }
        let inv = 1.0 / other.value;
        self.zip(
            other,
            self.value * inv,
            inv,
            -self.value * inv * inv,
        )
        .finite("/")
    }

    pub fn pow(&self, exp: &Self) -> Result<Self> {
        let u = self.value;
        let v = exp.value;
        let exp_is_const = exp.partials.iter().all(|p| *p == 0.0);
        if exp_is_const && v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
            // Integral power of a possibly nonpositive base.
            let n = v as i32;
            if u == 0.0 && n < 1 {
                return Err(Error::Domain {
                    func: "^".into(),
                    arg: u,
                });
            }
            let value = u.powi(n);
            let dfdu = if n == 0 { 0.0 } else { f64::from(n) * u.powi(n - 1) };
            return self.map(value, dfdu).finite("^");
        }
        if u <= 0.0 {
            return Err(Error::Domain {
                func: "^".into(),
                arg: u,
            });
        }
        let value = u.powf(v);
        // d(u^v) = u^v * (v' ln u + v u'/u)
        self.zip(exp, value, value * v / u, value * u.ln())
            .finite("^")
    }

    pub fn min_max(&self, other: &Self, take_min: bool) -> Result<Self> {
        if self.value == other.value {
            return Err(Error::NondifferentiablePoint {
                func: if take_min { "min" } else { "max" }.into(),
                arg: self.value,
            });
        }
        let pick_self = (self.value < other.value) == take_min;
        Ok(if pick_self {
            self.clone()
        } else {
            other.clone()
        })
    }

    pub fn call_unary(&self, func: Func) -> Result<Self> {
        let a = self.value;
        let out = match func {
            Func::Sin => self.map(a.sin(), a.cos()),
            Func::Cos => self.map(a.cos(), -a.sin()),
            Func::Tan => {
                let c = a.cos();
                self.map(a.tan(), 1.0 / (c * c))
            }
            Func::Sinh => self.map(a.sinh(), a.cosh()),
            Func::Cosh => self.map(a.cosh(), a.sinh()),
            Func::Tanh => {
                let c = a.cosh();
                self.map(a.tanh(), 1.0 / (c * c))
            }
            Func::Exp => {
                let v = a.exp();
                self.map(v, v)
            }
            Func::Log => {
                if a <= 0.0 {
                    return Err(Error::Domain {
                        func: "log".into(),
                        arg: a,
                    });
                }
                self.map(a.ln(), 1.0 / a)
            }
            Func::Sqrt => {
                if a < 0.0 {
                    return Err(Error::Domain {
                        func: "sqrt".into(),
                        arg: a,
                    });
                }
                if a == 0.0 {
                    return Err(Error::NondifferentiablePoint {
                        func: "sqrt".into(),
                        arg: a,
                    });
                }
                let v = a.sqrt();
                self.map(v, 0.5 / v)
            }
            Func::Abs => {
                if a == 0.0 {
                    return Err(Error::NondifferentiablePoint {
                        func: "abs".into(),
                        arg: a,
                    });
                }
                self.map(a.abs(), a.signum())
            }
            Func::Arccos => {
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::Domain {
                        func: "arccos".into(),
                        arg: a,
                    });
                }
                if a == 1.0 || a == -1.0 {
                    return Err(Error::NondifferentiablePoint {
                        func: "arccos".into(),
                        arg: a,
                    });
                }
                self.map(a.acos(), -1.0 / (1.0 - a * a).sqrt())
            }
            Func::Arccosh => {
                if a < 1.0 {
                    return Err(Error::Domain {
                        func: "arccosh".into(),
                        arg: a,
                    });
                }
                if a == 1.0 {
                    return Err(Error::NondifferentiablePoint {
                        func: "arccosh".into(),
                        arg: a,
                    });
                }
                self.map(a.acosh(), 1.0 / (a * a - 1.0).sqrt())
            }
            Func::Min | Func::Max => unreachable!("binary functions handled by min_max"),
        };
        out.finite(func.name())
    }
}

#[cfg(test)]
mod tests {
    use super::super::Expr;
    use crate::error::Error;

    #[test]
    fn eikonal_form_partial_is_one() {
        let e = Expr::parse("tau - 3.5", &["tau"]).unwrap();
        let d = e.eval_with_partials(&[9.0]).unwrap();
        assert_eq!(d.partial(0), 1.0);
    }

    #[test]
    fn de_sitter_hamiltonian_partials() {
        let e = Expr::parse("-p^2 + 4*q^2/cosh(t)^2", &["t", "p", "q"]).unwrap();
        let d = e.eval_with_partials(&[0.0, 1.0, 1.0]).unwrap();
        assert!((d.value() - 3.0).abs() < 1e-15);
        assert!((d.partial(1) + 2.0).abs() < 1e-15);
        assert!((d.partial(2) - 8.0).abs() < 1e-15);
        assert!(d.partial(0).abs() < 1e-15);
    }

    #[test]
    fn product_rule() {
        let e = Expr::parse("t*r", &["t", "r"]).unwrap();
        let d = e.eval_with_partials(&[2.0, 3.0]).unwrap();
        assert_eq!((d.partial(0), d.partial(1)), (3.0, 2.0));
    }

    #[test]
    fn abs_at_zero_flagged() {
        let e = Expr::parse("abs(x)", &["x"]).unwrap();
        assert!(matches!(
            e.eval_with_partials(&[0.0]),
            Err(Error::NondifferentiablePoint { .. })
        ));
        // Plain evaluation is fine there.
        assert_eq!(e.eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn min_tie_flagged() {
        let e = Expr::parse("min(x, 1)", &["x"]).unwrap();
        assert!(matches!(
            e.eval_with_partials(&[1.0]),
            Err(Error::NondifferentiablePoint { .. })
        ));
        let d = e.eval_with_partials(&[0.5]).unwrap();
        assert_eq!(d.partial(0), 1.0);
    }

    #[test]
    fn integer_power_of_negative_base_differentiates() {
        let e = Expr::parse("x^3", &["x"]).unwrap();
        let d = e.eval_with_partials(&[-2.0]).unwrap();
        assert_eq!(d.value(), -8.0);
        assert_eq!(d.partial(0), 12.0);
    }

    #[test]
    fn partials_match_finite_differences() {
        let cases = [
            ("sin(t)*exp(r) + t^2/cosh(r)", vec![0.7, -0.4]),
            ("sqrt(t + 2)*log(r + 3)", vec![0.3, 0.9]),
            ("arccos(t/2) + arccosh(r + 1.5)", vec![0.4, 0.8]),
            ("tanh(t*r) - tan(t/3)", vec![1.1, 0.6]),
        ];
        for (text, at) in cases {
            let e = Expr::parse(text, &["t", "r"]).unwrap();
            let d = e.eval_with_partials(&at).unwrap();
            for i in 0..2 {
                let h = 1e-6 * at[i].abs().max(1.0);
                let mut hi = at.clone();
                hi[i] += h;
                let mut lo = at.clone();
                lo[i] -= h;
                let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h);
                let scale = d.partial(i).abs().max(1.0);
                assert!(
                    (d.partial(i) - fd).abs() <= 1e-6 * scale,
                    "{text}: partial {i} AD {} vs FD {fd}",
                    d.partial(i)
                );
            }
        }
    }
}
