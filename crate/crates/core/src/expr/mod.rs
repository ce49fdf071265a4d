//! Symbolic expressions over the coordinate variables `x1..xn`.
//!
//! An [`Expr`] is an immutable tree. Polynomial and rational parts are
//! handled exactly through [`Poly`], the canonical form; `sin`, `cos` and
//! `exp` are kept as opaque atoms whose arguments are themselves canonical.

mod canon;
mod diff;
mod equal;
mod eval;
mod parse;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use canon::{canonicalize, Poly};
pub use diff::differentiate;
pub use equal::{expr_equal, expr_equal_on, EqualityVerdict};
pub use eval::{evaluate, evaluate_exact};
pub use parse::parse;

/// Exact rational scalar used for coefficients, box bounds and points.
pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-3/4"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Some(if negative { -r } else { r });
    }
    text.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// Renders a rational as `p` or `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Primitive {
    Sin,
    Cos,
    Exp,
}

impl Primitive {
    pub fn name(self) -> &'static str {
        match self {
            Primitive::Sin => "sin",
            Primitive::Cos => "cos",
            Primitive::Exp => "exp",
        }
    }

    pub fn apply_f64(self, v: f64) -> f64 {
        match self {
            Primitive::Sin => v.sin(),
            Primitive::Cos => v.cos(),
            Primitive::Exp => v.exp(),
        }
    }
}

/// Expression tree. Variables are 1-based (`Var(1)` is `x1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(usize),
    Const(Rational),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Neg(Box<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Apply(Primitive, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable `{name}` at position {position}")]
    UnknownVariable { name: String, position: usize },
    #[error("variable x{index} exceeds dimension {dimension}")]
    VariableOutOfRange { index: usize, dimension: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("point has {actual} coordinates, expected at least {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("expression contains transcendental primitives; no exact value")]
    NotExact,
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(index: usize) -> Expr {
        assert!(index >= 1, "variables are 1-based");
        Expr::Var(index)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(rat(n))
    }

    pub fn constant(r: Rational) -> Expr {
        Expr::Const(r)
    }

    pub fn zero() -> Expr {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::one())
    }

    pub fn add(self, other: Expr) -> Expr {
        Expr::Sum(vec![self, other])
    }

    pub fn sub(self, other: Expr) -> Expr {
        Expr::Sum(vec![self, Expr::Neg(Box::new(other))])
    }

    pub fn mul(self, other: Expr) -> Expr {
        Expr::Product(vec![self, other])
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    pub fn pow(self, exponent: i64) -> Expr {
        Expr::Pow(Box::new(self), exponent)
    }

    /// Quotient; rejects a literal zero denominator.
    pub fn div(self, denominator: Expr) -> Result<Expr, ExprError> {
        if matches!(&denominator, Expr::Const(c) if c.is_zero()) {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::Quotient(Box::new(self), Box::new(denominator)))
    }

    pub fn apply(p: Primitive, arg: Expr) -> Expr {
        Expr::Apply(p, Box::new(arg))
    }

    /// Largest variable index occurring in the expression (0 for constants).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(i) => *i,
            Expr::Const(_) => 0,
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().map(Expr::max_var).max().unwrap_or(0),
            Expr::Pow(b, _) | Expr::Neg(b) | Expr::Apply(_, b) => b.max_var(),
            Expr::Quotient(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<(), ExprError> {
        let index = self.max_var();
        if index > dimension {
            return Err(ExprError::VariableOutOfRange { index, dimension });
        }
        Ok(())
    }

    pub fn has_primitives(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => false,
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().any(Expr::has_primitives),
            Expr::Pow(b, _) | Expr::Neg(b) => b.has_primitives(),
            Expr::Quotient(a, b) => a.has_primitives() || b.has_primitives(),
            Expr::Apply(..) => true,
        }
    }

    /// Replaces `x_i` by `values[i-1]`. Variables beyond `values` are left alone.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        match self {
            Expr::Var(i) => values.get(i - 1).cloned().unwrap_or(Expr::Var(*i)),
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| x.substitute(values)).collect()),
            Expr::Product(xs) => Expr::Product(xs.iter().map(|x| x.substitute(values)).collect()),
            Expr::Pow(b, e) => Expr::Pow(Box::new(b.substitute(values)), *e),
            Expr::Neg(b) => Expr::Neg(Box::new(b.substitute(values))),
            Expr::Quotient(a, b) => Expr::Quotient(Box::new(a.substitute(values)), Box::new(b.substitute(values))),
            Expr::Apply(p, b) => Expr::Apply(*p, Box::new(b.substitute(values))),
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }
}

/// A point of a model space, with exact coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<Rational>);

impl Point {
    pub fn new(coords: Vec<Rational>) -> Self {
        Point(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point(coords.iter().map(|&c| rat(c)).collect())
    }

    pub fn origin(dimension: usize) -> Self {
        Point(vec![Rational::zero(); dimension])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational_to_f64).collect()
    }

    /// Parses a comma separated list of rationals, e.g. `"0,1/2,-3"`.
    pub fn parse(text: &str) -> Option<Self> {
        if text.trim().is_empty() {
            return Some(Point(Vec::new()));
        }
        text.split(',').map(parse_rational).collect::<Option<Vec<_>>>().map(Point)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

// Printing. Parenthesization is chosen so that `parse(print(e))`
// reproduces the tree exactly for everything `canonicalize` emits.

fn is_plain_const(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if c.is_integer() && !c.is_negative())
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Const(c) => {
                if c.is_negative() {
                    write!(f, "(-{})", format_rational(&-c))
                } else {
                    write!(f, "{}", format_rational(c))
                }
            }
            Expr::Sum(xs) => {
                if xs.is_empty() {
                    return write!(f, "0");
                }
                for (idx, x) in xs.iter().enumerate() {
                    match x {
                        Expr::Neg(inner) => {
                            if idx == 0 {
                                write!(f, "-")?;
                            } else {
                                write!(f, " - ")?;
                            }
                            write_wrapped(f, inner, matches!(**inner, Expr::Sum(_) | Expr::Neg(_)))?;
                        }
                        _ => {
                            if idx > 0 {
                                write!(f, " + ")?;
                            }
                            write_wrapped(f, x, matches!(x, Expr::Sum(_)))?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Product(xs) => {
                if xs.is_empty() {
                    return write!(f, "1");
                }
                for (idx, x) in xs.iter().enumerate() {
                    if idx > 0 {
                        write!(f, "*")?;
                    }
                    let wrap = match x {
                        Expr::Sum(_) | Expr::Neg(_) | Expr::Product(_) | Expr::Quotient(..) => true,
                        Expr::Const(c) => idx > 0 && !c.is_integer(),
                        _ => false,
                    };
                    write_wrapped(f, x, wrap)?;
                }
                Ok(())
            }
            Expr::Pow(base, e) => {
                let wrap = !(matches!(**base, Expr::Var(_) | Expr::Apply(..)) || is_plain_const(base));
                write_wrapped(f, base, wrap)?;
                write!(f, "^{e}")
            }
            Expr::Neg(inner) => {
                write!(f, "-")?;
                write_wrapped(f, inner, matches!(**inner, Expr::Sum(_) | Expr::Neg(_)))
            }
            Expr::Quotient(a, b) => {
                let wrap_a = matches!(**a, Expr::Sum(_) | Expr::Neg(_));
                let wrap_b = match &**b {
                    Expr::Sum(_) | Expr::Neg(_) | Expr::Product(_) | Expr::Quotient(..) => true,
                    Expr::Const(c) => !c.is_integer(),
                    _ => false,
                };
                write_wrapped(f, a, wrap_a)?;
                write!(f, "/")?;
                write_wrapped(f, b, wrap_b)
            }
            Expr::Apply(p, arg) => write!(f, "{}({})", p.name(), arg),
        }
    }
}
