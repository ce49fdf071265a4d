//! Canonical form: a Laurent polynomial with exact rational coefficients
//! over atoms.
//!
//! Atoms are the coordinate variables, primitive applications with a
//! canonical argument, and inverses of normalized multi-term polynomials.
//! Two expressions in the polynomial (or Laurent) fragment are equal as
//! functions iff their canonical forms coincide.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{Expr, ExprError, Primitive, Rational};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Var(usize),
    Apply(Primitive, Poly),
    /// `1 / p` for a monic multi-term `p` without monomial content.
    Inv(Poly),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Monomial(BTreeMap<Atom, i64>);

impl Monomial {
    fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    fn single(atom: Atom, exponent: i64) -> Self {
        let mut m = BTreeMap::new();
        if exponent != 0 {
            m.insert(atom, exponent);
        }
        Monomial(m)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (atom, e) in &other.0 {
            let slot = out.entry(atom.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                out.remove(atom);
            }
        }
        Monomial(out)
    }

    fn degree(&self) -> i64 {
        self.0.values().sum()
    }

    fn exponent(&self, atom: &Atom) -> i64 {
        self.0.get(atom).copied().unwrap_or(0)
    }
}

/// Graded order, higher total degree first, then lexicographic with
/// `x1` most significant. This is the order terms are printed in.
fn display_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    b.degree().cmp(&a.degree()).then_with(|| {
        let mut atoms: Vec<&Atom> = a.0.keys().chain(b.0.keys()).collect();
        atoms.sort();
        atoms.dedup();
        for atom in atoms {
            let (ea, eb) = (a.exponent(atom), b.exponent(atom));
            if ea != eb {
                return eb.cmp(&ea);
            }
        }
        Ordering::Equal
    })
}

/// Canonical polynomial over atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.push(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn var(index: usize) -> Self {
        Poly::atom(Atom::Var(index), 1)
    }

    fn atom(atom: Atom, exponent: i64) -> Self {
        let mut p = Poly::zero();
        p.push(Monomial::single(atom, exponent), Rational::one());
        p
    }

    fn push(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The constant value, when the polynomial has no non-trivial monomials.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.0.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// True when the form involves primitives or inverses of sums, i.e.
    /// when a nonzero canonical form does not by itself prove inequality.
    pub fn has_opaque_atoms(&self) -> bool {
        self.terms.keys().any(|m| m.0.keys().any(|a| !matches!(a, Atom::Var(_))))
    }

    /// Ordinary polynomial: only variables, non-negative exponents.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|(a, e)| matches!(a, Atom::Var(_)) && *e > 0))
    }

    pub fn degree(&self) -> Option<i64> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Affine decomposition `c0 + sum_i coeffs[i-1] * x_i` over `dimension`
    /// variables, or `None` when the form is not affine.
    pub fn affine_parts(&self, dimension: usize) -> Option<(Vec<Rational>, Rational)> {
        if !self.is_polynomial() || self.degree().unwrap_or(0) > 1 {
            return None;
        }
        let mut coeffs = vec![Rational::zero(); dimension];
        let mut offset = Rational::zero();
        for (m, c) in &self.terms {
            match m.0.iter().next() {
                None => offset = c.clone(),
                Some((Atom::Var(i), _)) if *i <= dimension => coeffs[i - 1] = c.clone(),
                _ => return None,
            }
        }
        Some((coeffs, offset))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.push(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.push(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, exponent: i64) -> Poly {
        if exponent < 0 {
            return self.inverse().pow(-exponent);
        }
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Leading term under the printing order.
    fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().min_by(|a, b| display_cmp(a.0, b.0))
    }

    /// Multiplicative inverse. A zero polynomial becomes the opaque atom
    /// `0^-1`, which fails at evaluation time.
    pub fn inverse(&self) -> Poly {
        if self.is_zero() {
            return Poly::atom(Atom::Inv(Poly::zero()), 1);
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            let mut out = Poly::constant(c.recip());
            for (atom, e) in &m.0 {
                let factor = match atom {
                    Atom::Inv(q) => q.pow(*e),
                    other => Poly::atom(other.clone(), -e),
                };
                out = out.mul(&factor);
            }
            return out;
        }
        // p = content * lead * q with q monic and free of common monomial factors.
        let mut content = BTreeMap::new();
        let atoms: std::collections::BTreeSet<&Atom> = self.terms.keys().flat_map(|m| m.0.keys()).collect();
        for atom in atoms {
            let min = self.terms.keys().map(|m| m.exponent(atom)).min().unwrap_or(0);
            if min != 0 {
                content.insert(atom.clone(), min);
            }
        }
        let content = Monomial(content);
        let content_inv = Poly { terms: BTreeMap::from([(content.clone(), Rational::one())]) }.inverse();
        let reduced = self.mul(&content_inv);
        let lead = reduced.leading().map(|(_, c)| c.clone()).unwrap();
        let monic = reduced.scale(&lead.recip());
        Poly::atom(Atom::Inv(monic), 1).scale(&lead.recip()).mul(&content_inv)
    }

    /// Exact quotient of two ordinary polynomials, if `divisor` divides `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() || divisor.terms.len() < 2 || !self.is_polynomial() || !divisor.is_polynomial() {
            return None;
        }
        let (lead_m, lead_c) = divisor.leading()?;
        let (lead_m, lead_c) = (lead_m.clone(), lead_c.clone());
        let mut remainder = self.clone();
        let mut quotient = Poly::zero();
        while let Some((m, c)) = remainder.leading() {
            if lead_m.0.iter().any(|(a, e)| m.exponent(a) < *e) {
                return None;
            }
            let shift = m.mul(&Monomial(lead_m.0.iter().map(|(a, e)| (a.clone(), -e)).collect()));
            let t = Poly { terms: BTreeMap::from([(shift, c / &lead_c)]) };
            remainder = remainder.sub(&t.mul(divisor));
            quotient = quotient.add(&t);
        }
        Some(quotient)
    }

    pub fn apply(p: Primitive, arg: Poly) -> Poly {
        if arg.is_zero() {
            return match p {
                Primitive::Sin => Poly::zero(),
                Primitive::Cos | Primitive::Exp => Poly::one(),
            };
        }
        let negative_lead = arg.leading().map(|(_, c)| c.is_negative()).unwrap_or(false);
        match (p, negative_lead) {
            (Primitive::Sin, true) => Poly::atom(Atom::Apply(p, arg.neg()), 1).neg(),
            (Primitive::Cos, true) => Poly::atom(Atom::Apply(p, arg.neg()), 1),
            _ => Poly::atom(Atom::Apply(p, arg), 1),
        }
    }

    pub fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Var(i) => Poly::var(*i),
            Expr::Const(c) => Poly::constant(c.clone()),
            Expr::Sum(xs) => xs.iter().fold(Poly::zero(), |acc, x| acc.add(&Poly::from_expr(x))),
            Expr::Product(xs) => xs.iter().fold(Poly::one(), |acc, x| acc.mul(&Poly::from_expr(x))),
            Expr::Pow(b, n) => Poly::from_expr(b).pow(*n),
            Expr::Neg(b) => Poly::from_expr(b).neg(),
            Expr::Quotient(a, b) => {
                let (num, den) = (Poly::from_expr(a), Poly::from_expr(b));
                num.div_exact(&den).unwrap_or_else(|| num.mul(&den.inverse()))
            }
            Expr::Apply(p, a) => Poly::apply(*p, Poly::from_expr(a)),
        }
    }

    /// Partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (atom, e) in &m.0 {
                let inner = match atom {
                    Atom::Var(i) if *i == var => Poly::one(),
                    Atom::Var(_) => continue,
                    Atom::Apply(p, arg) => {
                        let darg = arg.derivative(var);
                        if darg.is_zero() {
                            continue;
                        }
                        let outer = match p {
                            Primitive::Sin => Poly::apply(Primitive::Cos, arg.clone()),
                            Primitive::Cos => Poly::apply(Primitive::Sin, arg.clone()).neg(),
                            Primitive::Exp => Poly::apply(Primitive::Exp, arg.clone()),
                        };
                        outer.mul(&darg)
                    }
                    // d(1/q) = -(1/q)^2 dq
                    Atom::Inv(q) => {
                        let dq = q.derivative(var);
                        if dq.is_zero() {
                            continue;
                        }
                        Poly::atom(atom.clone(), 1).neg().mul(&dq).mul(&Poly::atom(atom.clone(), 1))
                    }
                };
                let rest = m.mul(&Monomial::single(atom.clone(), -1));
                let term = Poly { terms: BTreeMap::from([(rest, c * Rational::from_integer((*e).into()))]) };
                out = out.add(&term.mul(&inner));
            }
        }
        out
    }

    pub fn substitute(&self, values: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (atom, e) in &m.0 {
                let factor = match atom {
                    Atom::Var(i) => match values.get(i - 1) {
                        Some(v) => v.pow(*e),
                        None => Poly::atom(atom.clone(), *e),
                    },
                    Atom::Apply(p, arg) => Poly::apply(*p, arg.substitute(values)).pow(*e),
                    Atom::Inv(q) => q.substitute(values).inverse().pow(*e),
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, ExprError> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut value = super::rational_to_f64(c);
            for (atom, e) in &m.0 {
                let base = match atom {
                    Atom::Var(i) => {
                        *point.get(i - 1).ok_or(ExprError::DimensionMismatch { expected: *i, actual: point.len() })?
                    }
                    Atom::Apply(p, arg) => p.apply_f64(arg.eval_f64(point)?),
                    Atom::Inv(q) => {
                        let d = q.eval_f64(point)?;
                        if d == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        1.0 / d
                    }
                };
                if base == 0.0 && *e < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                value *= base.powi(*e as i32);
            }
            total += value;
        }
        Ok(total)
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, ExprError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut value = c.clone();
            for (atom, e) in &m.0 {
                let base = match atom {
                    Atom::Var(i) => point
                        .get(i - 1)
                        .cloned()
                        .ok_or(ExprError::DimensionMismatch { expected: *i, actual: point.len() })?,
                    Atom::Apply(..) => return Err(ExprError::NotExact),
                    Atom::Inv(q) => {
                        let d = q.eval_exact(point)?;
                        if d.is_zero() {
                            return Err(ExprError::DivisionByZero);
                        }
                        d.recip()
                    }
                };
                if base.is_zero() && *e < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                value *= num_traits::pow::Pow::pow(&base, *e as i32);
            }
            total += value;
        }
        Ok(total)
    }

    /// Renders the canonical expression tree.
    pub fn to_expr(&self) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        let mut terms: Vec<(&Monomial, &Rational)> = self.terms.iter().collect();
        terms.sort_by(|a, b| display_cmp(a.0, b.0));
        let mut out: Vec<Expr> = terms.into_iter().map(|(m, c)| term_expr(m, c)).collect();
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::Sum(out)
        }
    }
}

fn atom_expr(atom: &Atom, e: i64) -> Expr {
    let base = match atom {
        Atom::Var(i) => Expr::Var(*i),
        Atom::Apply(p, arg) => Expr::Apply(*p, Box::new(arg.to_expr())),
        Atom::Inv(q) => return Expr::Pow(Box::new(q.to_expr()), -e),
    };
    if e == 1 {
        base
    } else {
        Expr::Pow(Box::new(base), e)
    }
}

fn term_expr(m: &Monomial, c: &Rational) -> Expr {
    let magnitude = c.abs();
    let mut factors: Vec<Expr> = m.0.iter().map(|(a, e)| atom_expr(a, *e)).collect();
    let body = if factors.is_empty() {
        Expr::Const(magnitude)
    } else if magnitude.is_one() {
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        }
    } else {
        factors.insert(0, Expr::Const(magnitude));
        Expr::Product(factors)
    };
    if c.is_negative() {
        Expr::Neg(Box::new(body))
    } else {
        body
    }
}

/// Canonical form of `e`. Idempotent.
pub fn canonicalize(e: &Expr) -> Expr {
    Poly::from_expr(e).to_expr()
}
