use std::fmt;

use super::{evaluate, Expr, Point, Poly};
use crate::sampling::{close, SampleRegion, SamplingConfig};

/// Outcome of comparing two expressions as functions.
#[derive(Clone, Debug, PartialEq)]
pub enum EqualityVerdict {
    /// The canonical form of the difference is zero.
    ProvenEqual,
    /// Canonical forms could not decide; values agreed at `points` samples.
    SampledEqual { points: usize },
    /// Distinct canonical polynomials, or a sample point where values differ.
    Unequal { witness: Option<Point> },
}

impl EqualityVerdict {
    pub fn is_equal(&self) -> bool {
        !matches!(self, EqualityVerdict::Unequal { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            EqualityVerdict::ProvenEqual => "proven-equal",
            EqualityVerdict::SampledEqual { .. } => "sampled-equal",
            EqualityVerdict::Unequal { witness: None } => "proven-unequal",
            EqualityVerdict::Unequal { witness: Some(_) } => "sampled-unequal",
        }
    }
}

impl fmt::Display for EqualityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqualityVerdict::SampledEqual { points } => write!(f, "sampled-equal ({points} points)"),
            EqualityVerdict::Unequal { witness: Some(p) } => write!(f, "sampled-unequal at {p}"),
            other => f.write_str(other.label()),
        }
    }
}

/// Compares `a` and `b` as functions on `region`.
///
/// Exact when the difference canonicalizes to a Laurent polynomial;
/// otherwise values are compared at `config.count` seeded points, skipping
/// points where either side is singular.
pub fn expr_equal_on(a: &Expr, b: &Expr, region: &SampleRegion, config: &SamplingConfig) -> EqualityVerdict {
    let diff = Poly::from_expr(a).sub(&Poly::from_expr(b));
    if diff.is_zero() {
        return EqualityVerdict::ProvenEqual;
    }
    if !diff.has_opaque_atoms() {
        return EqualityVerdict::Unequal { witness: None };
    }
    let mut agreed = 0;
    for p in region.stream(config.seed).take(config.count * 8) {
        let (Ok(va), Ok(vb)) = (evaluate(a, &p), evaluate(b, &p)) else {
            continue;
        };
        if !close(va, vb, config.tolerance) {
            return EqualityVerdict::Unequal { witness: Some(p) };
        }
        agreed += 1;
        if agreed == config.count {
            break;
        }
    }
    if agreed == 0 {
        // singular everywhere we looked
        return EqualityVerdict::Unequal { witness: None };
    }
    EqualityVerdict::SampledEqual { points: agreed }
}

/// [`expr_equal_on`] over the default sampling box with the default seed.
pub fn expr_equal(a: &Expr, b: &Expr) -> EqualityVerdict {
    let n = a.max_var().max(b.max_var()).max(1);
    expr_equal_on(a, b, &SampleRegion::default_for(n, 0), &SamplingConfig::default())
}
