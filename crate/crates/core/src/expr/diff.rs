use super::{canonicalize, Expr, Primitive, Rational};

fn d(e: &Expr, var: usize) -> Expr {
    match e {
        Expr::Var(i) => Expr::int((*i == var) as i64),
        Expr::Const(_) => Expr::zero(),
        Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| d(x, var)).collect()),
        // product rule over n factors
        Expr::Product(xs) => Expr::Sum(
            (0..xs.len())
                .map(|k| {
                    let mut factors = xs.clone();
                    factors[k] = d(&xs[k], var);
                    Expr::Product(factors)
                })
                .collect(),
        ),
        Expr::Pow(base, n) => Expr::Product(vec![
            Expr::Const(Rational::from_integer((*n).into())),
            Expr::Pow(base.clone(), n - 1),
            d(base, var),
        ]),
        Expr::Neg(inner) => Expr::Neg(Box::new(d(inner, var))),
        // (a/b)' = a' b^-1 - a b' b^-2
        Expr::Quotient(a, b) => Expr::Sum(vec![
            Expr::Product(vec![d(a, var), Expr::Pow(b.clone(), -1)]),
            Expr::Neg(Box::new(Expr::Product(vec![(**a).clone(), d(b, var), Expr::Pow(b.clone(), -2)]))),
        ]),
        Expr::Apply(p, arg) => {
            let outer = match p {
                Primitive::Sin => Expr::Apply(Primitive::Cos, arg.clone()),
                Primitive::Cos => Expr::Neg(Box::new(Expr::Apply(Primitive::Sin, arg.clone()))),
                Primitive::Exp => Expr::Apply(Primitive::Exp, arg.clone()),
            };
            Expr::Product(vec![outer, d(arg, var)])
        }
    }
}

/// Exact partial derivative of `e` with respect to `x_var`, in canonical form.
pub fn differentiate(e: &Expr, var: usize) -> Expr {
    canonicalize(&d(e, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Poly};

    fn deriv(text: &str, dim: usize, var: usize) -> String {
        differentiate(&parse(text, dim).unwrap(), var).to_string()
    }

    #[test]
    fn elementary_rules() {
        assert_eq!(deriv("x1^2", 1, 1), "2*x1");
        assert_eq!(deriv("x1", 2, 2), "0");
        assert_eq!(deriv("x1*x2", 2, 1), "x2");
        assert_eq!(deriv("sin(x1^2)", 1, 1), "2*x1*cos(x1^2)");
        assert_eq!(deriv("1/x1", 1, 1), "-x1^-2");
        assert_eq!(deriv("exp(2*x1)", 1, 1), "2*exp(2*x1)");
    }

    #[test]
    fn structural_rules_match_canonical_derivative() {
        for text in ["(x1 + x2)^3*x3", "x1/(x2 + 1)", "cos(x1*x2) - exp(x3)", "(x1 - 2*x3)^-2"] {
            let e = parse(text, 3).unwrap();
            for var in 1..=3 {
                let structural = differentiate(&e, var);
                let via_poly = Poly::from_expr(&e).derivative(var).to_expr();
                assert_eq!(structural, via_poly, "{text} d/dx{var}");
            }
        }
    }
}
