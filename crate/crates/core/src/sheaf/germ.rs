use std::fmt;

use num_traits::Zero;

use super::{FunctionPresheaf, Section, SheafError};
use crate::corners::Region;
use crate::expr::{evaluate, evaluate_exact, expr_equal_on, EqualityVerdict, ExprError, Point, Rational};
use crate::sampling::SamplingConfig;

/// Values at or below this magnitude count as zero when the residue can
/// only be computed in floating point.
pub const RESIDUE_ZERO_TOLERANCE: f64 = 1e-12;

/// A germ `[(f, U)]` at `base`: the representative section together with
/// the region of its domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Germ {
    pub section: Section,
    pub region: Region,
    pub base: Point,
}

impl Germ {
    fn combine(&self, other: &Germ, expr: crate::expr::Expr) -> Result<Germ, SheafError> {
        if self.base != other.base {
            return Err(SheafError::DifferentBasePoints { a: self.base.to_string(), b: other.base.to_string() });
        }
        let domain = if self.section.domain == other.section.domain {
            self.section.domain.clone()
        } else {
            format!("{}&{}", self.section.domain, other.section.domain)
        };
        Ok(Germ {
            section: Section { expr, domain },
            region: self.region.intersect(&other.region),
            base: self.base.clone(),
        })
    }

    pub fn add(&self, other: &Germ) -> Result<Germ, SheafError> {
        self.combine(other, self.section.expr.clone().add(other.section.expr.clone()))
    }

    pub fn mul(&self, other: &Germ) -> Result<Germ, SheafError> {
        self.combine(other, self.section.expr.clone().mul(other.section.expr.clone()))
    }
}

impl fmt::Display for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[({}, {})]@{}", self.section.expr, self.section.domain, self.base)
    }
}

/// The germ of `s` at `x`.
pub fn germ_at(p: &FunctionPresheaf, s: &Section, x: &Point) -> Result<Germ, SheafError> {
    let region = p.lattice().region(&s.domain)?;
    if x.dim() != p.ambient().n || !region.contains(x) {
        return Err(SheafError::PointOutside { point: x.to_string(), domain: s.domain.clone() });
    }
    Ok(Germ { section: s.clone(), region: region.clone(), base: x.clone() })
}

/// Germs at one point are equal when their representatives agree on the
/// common part of their domains.
pub fn germ_equal(a: &Germ, b: &Germ, config: &SamplingConfig) -> Result<EqualityVerdict, SheafError> {
    if a.base != b.base {
        return Err(SheafError::DifferentBasePoints { a: a.base.to_string(), b: b.base.to_string() });
    }
    let common = a.region.intersect(&b.region);
    Ok(expr_equal_on(&a.section.expr, &b.section.expr, &common.sample_region(), config))
}

/// Image of the germ in the residue field `O_x / m_x = R`.
pub fn residue(g: &Germ) -> Result<f64, SheafError> {
    Ok(evaluate(&g.section.expr, &g.base)?)
}

/// Exact residue; fails with `NotExact` when the representative has
/// transcendental parts.
pub fn residue_exact(g: &Germ) -> Result<Rational, SheafError> {
    Ok(evaluate_exact(&g.section.expr, &g.base)?)
}

/// Membership in the maximal ideal `m_x`, i.e. vanishing at the base point.
pub fn in_maximal_ideal(g: &Germ) -> Result<bool, SheafError> {
    match residue_exact(g) {
        Ok(v) => Ok(v.is_zero()),
        Err(SheafError::Expr(ExprError::NotExact)) => Ok(residue(g)?.abs() <= RESIDUE_ZERO_TOLERANCE),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corners::{ModelSpace, OpenBox};
    use crate::expr::{parse, rat};
    use crate::sheaf::OpenLattice;

    fn plane() -> FunctionPresheaf {
        let s = ModelSpace::new(2, 1).unwrap();
        let open = |n: &str, hi| (n.to_string(), Region::single(s, OpenBox::from_ints(&[(0, hi), (-hi, hi)])).unwrap());
        FunctionPresheaf::new(OpenLattice::new(s, vec![open("U", 2), open("V", 1)]).unwrap())
    }

    fn germ(p: &FunctionPresheaf, text: &str, domain: &str, x: &[i64]) -> Germ {
        let s = p.section(parse(text, 2).unwrap(), domain).unwrap();
        germ_at(p, &s, &Point::from_ints(x)).unwrap()
    }

    #[test]
    fn residues_and_ideal() {
        let p = plane();
        let g = germ(&p, "x1^2 + 1", "U", &[0, 0]);
        assert_eq!(residue_exact(&g).unwrap(), rat(1));
        assert!(!in_maximal_ideal(&g).unwrap());
        let x = germ(&p, "x1", "U", &[0, 1]);
        assert!(in_maximal_ideal(&x).unwrap());
        let s = germ(&p, "cos(x2) + x2", "U", &[0, 1]);
        assert!(in_maximal_ideal(&x.mul(&s).unwrap()).unwrap());
        assert!(in_maximal_ideal(&germ(&p, "sin(x1)", "U", &[0, 0])).unwrap());
    }

    #[test]
    fn germ_at_rejects_outside_points() {
        let p = plane();
        let s = p.section(parse("x1", 2).unwrap(), "V").unwrap();
        assert!(matches!(germ_at(&p, &s, &Point::from_ints(&[3, 0])), Err(SheafError::PointOutside { .. })));
        assert!(germ_at(&p, &s, &Point::from_ints(&[0, 0])).is_ok());
    }

    #[test]
    fn germ_equality() {
        let p = plane();
        let c = SamplingConfig::default();
        assert!(germ_equal(&germ(&p, "x1", "U", &[0, 0]), &germ(&p, "x1", "V", &[0, 0]), &c).unwrap().is_equal());
        assert!(!germ_equal(&germ(&p, "x1", "U", &[0, 0]), &germ(&p, "x2", "U", &[0, 0]), &c).unwrap().is_equal());
        assert_eq!(
            germ_equal(&germ(&p, "(x1+1)^2 - 1", "U", &[0, 0]), &germ(&p, "x1^2 + 2*x1", "U", &[0, 0]), &c).unwrap(),
            EqualityVerdict::ProvenEqual
        );
        assert!(germ_equal(&germ(&p, "x1", "U", &[0, 0]), &germ(&p, "x1", "U", &[1, 0]), &c).is_err());
    }
}
