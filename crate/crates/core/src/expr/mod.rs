//! Scalar expressions in the two variables `a` (orbit Casimir value) and `x`
//! (the `R3` coordinate).
//!
//! Expressions are parsed once, are immutable afterwards and can be shared
//! freely between threads. Differentiation is symbolic so that second
//! derivatives are exact trees rather than nested finite differences.

mod diff;
mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::parse;

/// A variable an expression may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    A,
    X,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::A => "a",
            Var::X => "x",
        }
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {offset} (allowed: a, x, sqrt, sin, cos, exp, ln, abs)")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    /// Evaluates the tree at `(a, x)`.
    pub fn eval(&self, a: f64, x: f64) -> Result<f64, ExprError> {
        let value = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var(Var::A) => return Ok(a),
            Expr::Var(Var::X) => return Ok(x),
            Expr::Neg(e) => -e.eval(a, x)?,
            Expr::Binary(op, l, r) => {
                let lv = l.eval(a, x)?;
                let rv = r.eval(a, x)?;
                match op {
                    BinOp::Add => lv + rv,
                    BinOp::Sub => lv - rv,
                    BinOp::Mul => lv * rv,
                    BinOp::Div => {
                        if rv == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        lv / rv
                    }
                    BinOp::Pow => pow(lv, rv),
                }
            }
            Expr::Call(f, arg) => {
                let v = arg.eval(a, x)?;
                match f {
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain("square root of a negative number"));
                        }
                        v.sqrt()
                    }
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(self.domain("logarithm of a non-positive number"));
                        }
                        v.ln()
                    }
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => v.abs(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    fn domain(&self, reason: &'static str) -> ExprError {
        ExprError::Domain {
            node: self.to_string(),
            reason,
        }
    }

    /// Whether the tree mentions `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(v),
            Expr::Binary(_, l, r) => l.depends_on(v) || r.depends_on(v),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Exact partial derivative with respect to `x`.
    pub fn diff_x(&self) -> Expr {
        diff::derivative(self, Var::X)
    }

    /// Exact partial derivative with respect to `a`.
    pub fn diff_a(&self) -> Expr {
        diff::derivative(self, Var::A)
    }

    pub fn diff(&self, v: Var) -> Expr {
        diff::derivative(self, v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_bare(f)?;
            write!(f, ")")
        } else {
            self.fmt_bare(f)
        }
    }

    fn fmt_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "-{}", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_at(f, 3)
            }
            Expr::Binary(op, l, r) => {
                let (lmin, rmin) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                l.fmt_at(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_at(f, rmin)
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_bare(f)?;
                write!(f, ")")
            }
        }
    }
}

/// Renders in the parser's own grammar; `parse(e.to_string())` evaluates
/// identically to `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_bare(f)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}
