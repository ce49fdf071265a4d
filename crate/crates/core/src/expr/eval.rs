use num_traits::Zero;

use super::{rational_to_f64, Expr, ExprError, Point, Rational};

fn check_dim(e: &Expr, p: &Point) -> Result<(), ExprError> {
    let needed = e.max_var();
    if needed > p.dim() {
        return Err(ExprError::DimensionMismatch { expected: needed, actual: p.dim() });
    }
    Ok(())
}

fn exact(e: &Expr, p: &[Rational]) -> Result<Rational, ExprError> {
    Ok(match e {
        Expr::Var(i) => p[i - 1].clone(),
        Expr::Const(c) => c.clone(),
        Expr::Sum(xs) => {
            let mut acc = Rational::zero();
            for x in xs {
                acc += exact(x, p)?;
            }
            acc
        }
        Expr::Product(xs) => {
            let mut acc = Rational::from_integer(1.into());
            for x in xs {
                acc *= exact(x, p)?;
            }
            acc
        }
        Expr::Pow(b, n) => {
            let base = exact(b, p)?;
            if base.is_zero() && *n < 0 {
                return Err(ExprError::DivisionByZero);
            }
            num_traits::pow::Pow::pow(&base, *n as i32)
        }
        Expr::Neg(b) => -exact(b, p)?,
        Expr::Quotient(a, b) => {
            let den = exact(b, p)?;
            if den.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            exact(a, p)? / den
        }
        Expr::Apply(..) => return Err(ExprError::NotExact),
    })
}

fn float(e: &Expr, p: &[f64]) -> Result<f64, ExprError> {
    Ok(match e {
        Expr::Var(i) => p[i - 1],
        Expr::Const(c) => rational_to_f64(c),
        Expr::Sum(xs) => xs.iter().map(|x| float(x, p)).sum::<Result<f64, _>>()?,
        Expr::Product(xs) => xs.iter().map(|x| float(x, p)).product::<Result<f64, _>>()?,
        Expr::Pow(b, n) => {
            let base = float(b, p)?;
            if base == 0.0 && *n < 0 {
                return Err(ExprError::DivisionByZero);
            }
            base.powi(*n as i32)
        }
        Expr::Neg(b) => -float(b, p)?,
        Expr::Quotient(a, b) => {
            let den = float(b, p)?;
            if den == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            float(a, p)? / den
        }
        Expr::Apply(prim, b) => prim.apply_f64(float(b, p)?),
    })
}

/// Exact value at a rational point; fails with `NotExact` on primitives.
pub fn evaluate_exact(e: &Expr, p: &Point) -> Result<Rational, ExprError> {
    check_dim(e, p)?;
    exact(e, p.coords())
}

/// Real value at `p`. Exact arithmetic is used whenever `e` has no
/// primitives, so polynomial values are correctly rounded.
pub fn evaluate(e: &Expr, p: &Point) -> Result<f64, ExprError> {
    check_dim(e, p)?;
    if !e.has_primitives() {
        return exact(e, p.coords()).map(|r| rational_to_f64(&r));
    }
    float(e, &p.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, rat};

    #[test]
    fn arithmetic_examples() {
        let p = Point::from_ints(&[2, 3]);
        assert_eq!(evaluate(&parse("x1*x2", 2).unwrap(), &p).unwrap(), 6.0);
        let origin = Point::from_ints(&[0, 0]);
        assert_eq!(evaluate(&parse("x1^2+1", 2).unwrap(), &origin).unwrap(), 1.0);
        assert_eq!(evaluate_exact(&parse("x1^2+1/2", 2).unwrap(), &p).unwrap(), crate::expr::ratio(9, 2));
    }

    #[test]
    fn singular_point_errors() {
        let e = parse("1/x1", 1).unwrap();
        assert_eq!(evaluate(&e, &Point::from_ints(&[0])), Err(ExprError::DivisionByZero));
        let e = parse("sin(x1)/x1", 1).unwrap();
        assert_eq!(evaluate(&e, &Point::from_ints(&[0])), Err(ExprError::DivisionByZero));
    }

    #[test]
    fn dimension_mismatch() {
        let e = parse("x1 + x3", 3).unwrap();
        assert!(matches!(evaluate(&e, &Point::from_ints(&[1, 2])), Err(ExprError::DimensionMismatch { .. })));
        assert_eq!(evaluate_exact(&parse("sin(x1)", 1).unwrap(), &Point(vec![rat(0)])), Err(ExprError::NotExact));
    }
}
