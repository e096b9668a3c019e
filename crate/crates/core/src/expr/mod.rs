//! Expression language for the user-supplied scalar functions.
//!
//! Expressions are parsed against a declared variable set, evaluate to IEEE
//! doubles, and differentiate exactly through forward-mode dual numbers.
//! All domain violations (square roots of negatives, `arccos` outside
//! `[-1, 1]`, logarithms of nonpositive values, division by zero) are hard
//! errors rather than silent NaNs.

mod dual;
mod parse;

pub use dual::DualScalar;

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Built-in functions of the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Arccos,
    Arccosh,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Arccos => "arccos",
            Func::Arccosh => "arccosh",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "arccos" => Func::Arccos,
            "arccosh" => Func::Arccosh,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Named constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Abstract syntax tree node. Variables are stored as indices into the
/// declared variable list of the owning [`Expr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(NamedConst),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression together with its declared variable set.
///
/// Immutable after [`Expr::parse`]; evaluation is pure and thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    vars: Arc<[String]>,
    root: Node,
}

impl Expr {
    /// Parse `text` against the declared variable names.
    pub fn parse(text: &str, variables: &[&str]) -> Result<Expr> {
        let vars: Arc<[String]> = variables.iter().map(|s| s.to_string()).collect();
        let root = parse::parse(text, &vars)?;
        Ok(Expr { vars, root })
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Evaluate with `values[i]` bound to the i-th declared variable.
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        self.check_bindings(values.len())?;
        eval_node(&self.root, values)
    }

    /// Evaluate together with exact partial derivatives with respect to
    /// every declared variable.
    pub fn eval_with_partials(&self, values: &[f64]) -> Result<DualScalar> {
        self.check_bindings(values.len())?;
        let seeds: Vec<DualScalar> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| DualScalar::variable(v, i, self.vars.len()))
            .collect();
        eval_dual_node(&self.root, &seeds)
    }

    fn check_bindings(&self, got: usize) -> Result<()> {
        if got != self.vars.len() {
            return Err(Error::UnboundVariable {
                name: self
                    .vars
                    .get(got)
                    .cloned()
                    .unwrap_or_else(|| format!("<extra binding {got}>")),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_node(&self.root, &self.vars, f, 0)
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(..) => 3,
        Node::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn print_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
    let prec = precedence(node);
    let parens = prec < parent;
    if parens {
        write!(f, "(")?;
    }
    match node {
        Node::Num(v) => write!(f, "{v}")?,
        Node::Const(c) => write!(f, "{}", c.name())?,
        Node::Var(i) => write!(f, "{}", vars[*i])?,
        Node::Neg(inner) => {
            write!(f, "-")?;
            print_node(inner, vars, f, prec)?;
        }
        Node::Bin(op, lhs, rhs) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            // Left-associative operators need a parenthesized right child at
            // equal precedence; `^` is right-associative so it is the mirror.
            let (lp, rp) = match op {
                BinOp::Pow => (prec + 1, prec),
                _ => (prec, prec + 1),
            };
            print_node(lhs, vars, f, lp)?;
            write!(f, " {sym} ")?;
            print_node(rhs, vars, f, rp)?;
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                print_node(a, vars, f, 0)?;
            }
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

fn finite(func: &str, arg: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            func: func.to_string(),
            arg,
        })
    }
}

fn eval_node(node: &Node, values: &[f64]) -> Result<f64> {
    match node {
        Node::Num(v) => Ok(*v),
        Node::Const(c) => Ok(c.value()),
        Node::Var(i) => Ok(values[*i]),
        Node::Neg(inner) => Ok(-eval_node(inner, values)?),
        Node::Bin(op, lhs, rhs) => {
            let a = eval_node(lhs, values)?;
            let b = eval_node(rhs, values)?;
            match op {
                BinOp::Add => finite("+", a, a + b),
                BinOp::Sub => finite("-", a, a - b),
                BinOp::Mul => finite("*", a, a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(Error::Domain {
                            func: "/".into(),
                            arg: b,
                        })
                    } else {
                        finite("/", a, a / b)
                    }
                }
                BinOp::Pow => pow_value(a, b),
            }
        }
        Node::Call(func, args) => {
            let a = eval_node(&args[0], values)?;
            match func {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Tan => finite("tan", a, a.tan()),
                Func::Sinh => finite("sinh", a, a.sinh()),
                Func::Cosh => finite("cosh", a, a.cosh()),
                Func::Tanh => Ok(a.tanh()),
                Func::Exp => finite("exp", a, a.exp()),
                Func::Log => {
                    if a <= 0.0 {
                        Err(Error::Domain {
                            func: "log".into(),
                            arg: a,
                        })
                    } else {
                        Ok(a.ln())
                    }
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        Err(Error::Domain {
                            func: "sqrt".into(),
                            arg: a,
                        })
                    } else {
                        Ok(a.sqrt())
                    }
                }
                Func::Abs => Ok(a.abs()),
                Func::Arccos => {
                    if !(-1.0..=1.0).contains(&a) {
                        Err(Error::Domain {
                            func: "arccos".into(),
                            arg: a,
                        })
                    } else {
                        Ok(a.acos())
                    }
                }
                Func::Arccosh => {
                    if a < 1.0 {
                        Err(Error::Domain {
                            func: "arccosh".into(),
                            arg: a,
                        })
                    } else {
                        Ok(a.acosh())
                    }
                }
                Func::Min | Func::Max => {
                    let b = eval_node(&args[1], values)?;
                    Ok(if *func == Func::Min {
                        a.min(b)
                    } else {
                        a.max(b)
                    })
                }
            }
        }
    }
}

/// IEEE power with the grammar's domain policy: integer exponents use the
/// sign-correct integral power, other exponents require a positive base.
pub(crate) fn pow_value(base: f64, exp: f64) -> Result<f64> {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        let n = exp as i32;
        if base == 0.0 && n < 0 {
            return Err(Error::Domain {
                func: "^".into(),
                arg: base,
            });
        }
        return finite("^", base, base.powi(n));
    }
    if base < 0.0 {
        return Err(Error::Domain {
            func: "^".into(),
            arg: base,
        });
    }
    if base == 0.0 {
        return if exp > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain {
                func: "^".into(),
                arg: base,
            })
        };
    }
    finite("^", base, base.powf(exp))
}

fn eval_dual_node(node: &Node, seeds: &[DualScalar]) -> Result<DualScalar> {
    let n = seeds.first().map_or(0, |d| d.partials().len());
    match node {
        Node::Num(v) => Ok(DualScalar::constant(*v, n)),
        Node::Const(c) => Ok(DualScalar::constant(c.value(), n)),
        Node::Var(i) => Ok(seeds[*i].clone()),
        Node::Neg(inner) => Ok(eval_dual_node(inner, seeds)?.neg()),
        Node::Bin(op, lhs, rhs) => {
            let a = eval_dual_node(lhs, seeds)?;
            let b = eval_dual_node(rhs, seeds)?;
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b),
                BinOp::Pow => a.pow(&b),
            }
        }
        Node::Call(func, args) => {
            let a = eval_dual_node(&args[0], seeds)?;
            match func {
                Func::Min | Func::Max => {
                    let b = eval_dual_node(&args[1], seeds)?;
                    a.min_max(&b, *func == Func::Min)
                }
                _ => a.call_unary(*func),
            }
        }
    }
}
