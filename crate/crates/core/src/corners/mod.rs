//! Model spaces `R^n_k = [0, inf)^k x R^(n-k)`, box regions inside them,
//! smooth maps between model spaces and their tangent maps.

mod fibre;
pub mod linalg;

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{evaluate, evaluate_exact, format_rational, rat, ratio, Expr, ExprError, Point, Poly, Rational};
use crate::sampling::SampleRegion;

pub use fibre::{
    boundary_decomposition_count, fibre_product_carrier_samples, fibre_product_dim, BoundaryCounts, FaceLabel,
    FibreProductDesc, GridSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CornerError {
    #[error("corner index k={k} exceeds dimension n={n}")]
    InvalidModelSpace { n: usize, k: usize },
    #[error("point {point} is not in R^{n}_{k}")]
    PointOutside { point: String, n: usize, k: usize },
    #[error("box {index} is invalid: {reason}")]
    InvalidBox { index: usize, reason: String },
    #[error("map has {actual} components, target dimension is {expected}")]
    ComponentCount { expected: usize, actual: usize },
    #[error("map component {index}: {source}")]
    Component { index: usize, source: ExprError },
    #[error("fibre product dimension {0} is negative: empty or ill-posed fibre product")]
    NegativeDimension(i64),
    #[error("unsupported map class: {0} is not affine")]
    NonAffine(String),
    #[error("model spaces disagree: {0}")]
    Mismatch(String),
    #[error("target {0} has boundary; boundary decomposition needs a target without boundary")]
    TargetHasBoundary(ModelSpace),
    #[error("transversality fails on {stratum}: rank {rank} < {needed}")]
    NotTransverse { stratum: String, rank: usize, needed: usize },
    #[error("corner of X meets corner of Y over one fibre point at {0}; configuration rejected")]
    CornerMeetsCorner(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `R^n_k`: the first `k` coordinates are non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelSpace {
    pub n: usize,
    pub k: usize,
}

impl ModelSpace {
    pub fn new(n: usize, k: usize) -> Result<Self, CornerError> {
        if k > n {
            return Err(CornerError::InvalidModelSpace { n, k });
        }
        Ok(ModelSpace { n, k })
    }

    pub fn euclidean(n: usize) -> Self {
        ModelSpace { n, k: 0 }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.n && p.coords()[..self.k].iter().all(|x| !x.is_negative())
    }

    pub fn has_boundary(&self) -> bool {
        self.k > 0
    }

    pub fn default_sample_region(&self) -> SampleRegion {
        SampleRegion::default_for(self.n, self.k)
    }
}

impl fmt::Display for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R^{}_{}", self.n, self.k)
    }
}

/// Number of vanishing corner coordinates of `p`.
pub fn corner_depth(space: &ModelSpace, p: &Point) -> Result<usize, CornerError> {
    if !space.contains(p) {
        return Err(CornerError::PointOutside { point: p.to_string(), n: space.n, k: space.k });
    }
    Ok(p.coords()[..space.k].iter().filter(|x| x.is_zero()).count())
}

/// The `k` boundary faces `{x_i = 0}`, each modelled on `R^(n-1)_(k-1)`.
/// Face indices are 1-based.
pub fn boundary_faces(space: &ModelSpace) -> Vec<(usize, ModelSpace)> {
    (1..=space.k).map(|i| (i, ModelSpace { n: space.n - 1, k: space.k - 1 })).collect()
}

/// Inclusion `i_X` of face `face` (1-based) into `space`: inserts a zero
/// coordinate at position `face`.
pub fn face_inclusion(space: &ModelSpace, face: usize) -> SmoothMapDesc {
    assert!(face >= 1 && face <= space.k, "face index out of range");
    let source = ModelSpace { n: space.n - 1, k: space.k - 1 };
    let components = (1..=space.n)
        .map(|j| match j.cmp(&face) {
            std::cmp::Ordering::Less => Expr::Var(j),
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Greater => Expr::Var(j - 1),
        })
        .collect();
    SmoothMapDesc { source, target: *space, components }
}

/// Open box; a corner coordinate with lower bound 0 is closed at 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpenBox {
    pub intervals: Vec<(Rational, Rational)>,
}

impl OpenBox {
    pub fn new(intervals: Vec<(Rational, Rational)>) -> Self {
        OpenBox { intervals }
    }

    pub fn from_ints(bounds: &[(i64, i64)]) -> Self {
        OpenBox { intervals: bounds.iter().map(|&(a, b)| (rat(a), rat(b))).collect() }
    }

    fn contains(&self, space: &ModelSpace, p: &Point) -> bool {
        self.intervals.iter().zip(p.coords()).enumerate().all(|(i, ((lo, hi), x))| {
            let lower_ok = if i < space.k && lo.is_zero() { !x.is_negative() } else { x > lo };
            lower_ok && x < hi
        })
    }

    fn intersect(&self, other: &OpenBox) -> Option<OpenBox> {
        let intervals: Vec<_> = self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|((a0, a1), (b0, b1))| (a0.max(b0).clone(), a1.min(b1).clone()))
            .collect();
        intervals.iter().all(|(lo, hi)| lo < hi).then_some(OpenBox { intervals })
    }
}

impl fmt::Display for OpenBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(lo, hi)| format!("({},{})", format_rational(lo), format_rational(hi)))
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Finite union of open boxes inside a model space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    pub ambient: ModelSpace,
    pub boxes: Vec<OpenBox>,
}

impl Region {
    pub fn new(ambient: ModelSpace, boxes: Vec<OpenBox>) -> Result<Self, CornerError> {
        for (index, b) in boxes.iter().enumerate() {
            if b.intervals.len() != ambient.n {
                return Err(CornerError::InvalidBox {
                    index,
                    reason: format!("{} intervals for dimension {}", b.intervals.len(), ambient.n),
                });
            }
            for (i, (lo, hi)) in b.intervals.iter().enumerate() {
                if lo >= hi {
                    return Err(CornerError::InvalidBox { index, reason: format!("empty interval on x{}", i + 1) });
                }
                if i < ambient.k && lo.is_negative() {
                    return Err(CornerError::InvalidBox {
                        index,
                        reason: format!("x{} must be non-negative in {ambient}", i + 1),
                    });
                }
            }
        }
        Ok(Region { ambient, boxes })
    }

    pub fn empty(ambient: ModelSpace) -> Self {
        Region { ambient, boxes: Vec::new() }
    }

    pub fn single(ambient: ModelSpace, b: OpenBox) -> Result<Self, CornerError> {
        Region::new(ambient, vec![b])
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.ambient.n && self.boxes.iter().any(|b| b.contains(&self.ambient, p))
    }

    pub fn intersect(&self, other: &Region) -> Region {
        let boxes = self.boxes.iter().flat_map(|a| other.boxes.iter().filter_map(move |b| a.intersect(b))).collect();
        Region { ambient: self.ambient, boxes }
    }

    pub fn union(regions: &[&Region], ambient: ModelSpace) -> Region {
        Region { ambient, boxes: regions.iter().flat_map(|r| r.boxes.iter().cloned()).collect() }
    }

    /// Exact containment test. Membership is constant on the cells cut out
    /// by all box endpoints, so checking one representative per cell decides.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.point_outside(other).is_none()
    }

    /// A point of `self` not in `other`, if any.
    pub fn point_outside(&self, other: &Region) -> Option<Point> {
        cell_representatives(&[self, other], self.ambient.n)
            .into_iter()
            .find(|p| self.contains(p) && !other.contains(p))
    }

    pub fn same_set(&self, other: &Region) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }

    pub fn sample_region(&self) -> SampleRegion {
        SampleRegion::new(self.boxes.iter().map(|b| b.intervals.clone()).collect())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boxes.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.boxes.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" u "))
    }
}

fn cell_representatives(regions: &[&Region], n: usize) -> Vec<Point> {
    let mut axes: Vec<Vec<Rational>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cuts: Vec<Rational> = regions
            .iter()
            .flat_map(|r| r.boxes.iter())
            .flat_map(|b| [b.intervals[i].0.clone(), b.intervals[i].1.clone()])
            .collect();
        cuts.sort();
        cuts.dedup();
        let mut reps = Vec::with_capacity(2 * cuts.len() + 1);
        if let Some(first) = cuts.first() {
            reps.push(first - rat(1));
        }
        for (j, c) in cuts.iter().enumerate() {
            reps.push(c.clone());
            match cuts.get(j + 1) {
                Some(next) => reps.push((c + next) * ratio(1, 2)),
                None => reps.push(c + rat(1)),
            }
        }
        if reps.is_empty() {
            reps.push(rat(0));
        }
        axes.push(reps);
    }
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    points.into_iter().map(Point).collect()
}

/// A smooth map between model spaces given by component expressions in
/// the source variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothMapDesc {
    pub source: ModelSpace,
    pub target: ModelSpace,
    pub components: Vec<Expr>,
}

impl SmoothMapDesc {
    pub fn new(source: ModelSpace, target: ModelSpace, components: Vec<Expr>) -> Result<Self, CornerError> {
        if components.len() != target.n {
            return Err(CornerError::ComponentCount { expected: target.n, actual: components.len() });
        }
        for (index, c) in components.iter().enumerate() {
            c.check_dimension(source.n).map_err(|source| CornerError::Component { index: index + 1, source })?;
        }
        Ok(SmoothMapDesc { source, target, components })
    }

    pub fn identity(space: ModelSpace) -> Self {
        SmoothMapDesc { source: space, target: space, components: (1..=space.n).map(Expr::Var).collect() }
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &SmoothMapDesc) -> Result<SmoothMapDesc, CornerError> {
        if inner.target != self.source {
            return Err(CornerError::Mismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.source, self.target, inner.source, inner.target
            )));
        }
        let components =
            self.components.iter().map(|c| crate::expr::canonicalize(&c.substitute(&inner.components))).collect();
        Ok(SmoothMapDesc { source: inner.source, target: self.target, components })
    }

    pub fn apply(&self, p: &Point) -> Result<Point, CornerError> {
        let coords = self.components.iter().map(|c| evaluate_exact(c, p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Point(coords))
    }

    /// Affine decomposition `x -> A x + b`, if every component is affine.
    pub fn affine_parts(&self) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
        let mut a = Vec::with_capacity(self.components.len());
        let mut b = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let (row, offset) = Poly::from_expr(c).affine_parts(self.source.n)?;
            a.push(row);
            b.push(offset);
        }
        Some((a, b))
    }

    pub fn require_affine(&self, name: &str) -> Result<(Vec<Vec<Rational>>, Vec<Rational>), CornerError> {
        self.affine_parts().ok_or_else(|| CornerError::NonAffine(name.to_string()))
    }

    pub fn is_affine(&self) -> bool {
        self.affine_parts().is_some()
    }

    fn partials(&self) -> Vec<Vec<Expr>> {
        self.components
            .iter()
            .map(|c| (1..=self.source.n).map(|j| crate::expr::differentiate(c, j)).collect())
            .collect()
    }

    /// Exact Jacobian at a rational point (polynomial and rational maps).
    pub fn jacobian_exact(&self, u: &Point) -> Result<Vec<Vec<Rational>>, CornerError> {
        self.partials()
            .iter()
            .map(|row| row.iter().map(|d| evaluate_exact(d, u).map_err(CornerError::from)).collect())
            .collect()
    }
}

/// Jacobian of `phi` at `u`: entry `(i, j)` is `d phi_i / d x_j (u)`.
pub fn tangent_map(phi: &SmoothMapDesc, u: &Point) -> Result<Vec<Vec<f64>>, CornerError> {
    if u.dim() != phi.source.n {
        return Err(ExprError::DimensionMismatch { expected: phi.source.n, actual: u.dim() }.into());
    }
    phi.partials().iter().map(|row| row.iter().map(|d| evaluate(d, u).map_err(CornerError::from)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ms(n: usize, k: usize) -> ModelSpace {
        ModelSpace::new(n, k).unwrap()
    }

    #[test]
    fn depth_examples() {
        assert_eq!(corner_depth(&ms(2, 1), &Point::from_ints(&[0, 5])).unwrap(), 1);
        assert_eq!(corner_depth(&ms(2, 1), &Point::from_ints(&[3, 5])).unwrap(), 0);
        assert_eq!(corner_depth(&ms(2, 2), &Point::from_ints(&[0, 0])).unwrap(), 2);
        assert!(corner_depth(&ms(2, 1), &Point::from_ints(&[-1, 0])).is_err());
        assert!(corner_depth(&ms(2, 1), &Point::from_ints(&[1])).is_err());
    }

    #[test]
    fn face_examples() {
        assert_eq!(boundary_faces(&ms(1, 1)), vec![(1, ms(0, 0))]);
        assert!(boundary_faces(&ms(2, 0)).is_empty());
        assert_eq!(boundary_faces(&ms(3, 2)), vec![(1, ms(2, 1)), (2, ms(2, 1))]);
        assert!(ModelSpace::new(1, 2).is_err());
    }

    #[test]
    fn face_inclusion_lands_on_face() {
        let space = ms(3, 2);
        let inc = face_inclusion(&space, 2);
        let image = inc.apply(&Point::from_ints(&[4, 7])).unwrap();
        assert_eq!(image, Point::from_ints(&[4, 0, 7]));
        assert_eq!(corner_depth(&space, &image).unwrap(), 1);
    }

    #[test]
    fn tangent_map_examples() {
        let one = ms(1, 0);
        let phi = SmoothMapDesc::new(one, ms(2, 0), vec![parse("x1", 1).unwrap(), parse("x1^2", 1).unwrap()]).unwrap();
        assert_eq!(tangent_map(&phi, &Point::from_ints(&[2])).unwrap(), vec![vec![1.0], vec![4.0]]);
        let id = SmoothMapDesc::identity(ms(2, 0));
        assert_eq!(tangent_map(&id, &Point::from_ints(&[5, -3])).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn region_membership_respects_closed_corner() {
        let space = ms(2, 1);
        let r = Region::single(space, OpenBox::from_ints(&[(0, 2), (-1, 1)])).unwrap();
        assert!(r.contains(&Point::from_ints(&[0, 0])));
        assert!(!r.contains(&Point::from_ints(&[2, 0])));
        assert!(!r.contains(&Point::from_ints(&[1, 1])));
        assert!(Region::single(space, OpenBox::from_ints(&[(-1, 2), (-1, 1)])).is_err());
    }

    #[test]
    fn exact_set_relations() {
        let space = ms(1, 0);
        let whole = Region::single(space, OpenBox::from_ints(&[(0, 3)])).unwrap();
        let left = Region::single(space, OpenBox::from_ints(&[(0, 2)])).unwrap();
        let right = Region::single(space, OpenBox::from_ints(&[(1, 3)])).unwrap();
        let union = Region::union(&[&left, &right], space);
        assert!(union.same_set(&whole));
        assert!(left.is_subset_of(&whole));
        assert!(!whole.is_subset_of(&left));
        let gap = Region::union(&[&Region::single(space, OpenBox::from_ints(&[(0, 1)])).unwrap(), &right], space);
        // (0,1) u (1,3) misses the point 1
        assert!(!whole.is_subset_of(&gap));
        assert_eq!(left.intersect(&right).boxes, vec![OpenBox::from_ints(&[(1, 2)])]);
        assert!(Region::empty(space).is_subset_of(&left));
    }

    #[test]
    fn affine_detection() {
        let s = ms(2, 0);
        let f = SmoothMapDesc::new(s, ms(1, 0), vec![parse("x1 + x2", 2).unwrap()]).unwrap();
        assert!(f.is_affine());
        let g = SmoothMapDesc::new(s, ms(1, 0), vec![parse("x1*x2", 2).unwrap()]).unwrap();
        assert!(!g.is_affine());
        assert!(SmoothMapDesc::new(s, ms(1, 0), vec![parse("x3", 3).unwrap()]).is_err());
    }
}
