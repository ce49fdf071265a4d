//! Fibre products `W = X x_{f,Z,g} Y` for affine `f`, `g`, realized on a
//! rational grid, and the boundary decomposition
//! `dW = (dX x_Z Y) u (X x_Z dY)` counted component by component.

use std::fmt;

use num_traits::{Signed, Zero};

use super::linalg::{rank, rref};
use super::{corner_depth, face_inclusion, CornerError, ModelSpace, SmoothMapDesc};
use crate::expr::{format_rational, Point, Rational};

/// Data of a fibre product.
#[derive(Clone, Debug, PartialEq)]
pub struct FibreProductDesc {
    pub x: ModelSpace,
    pub y: ModelSpace,
    pub z: ModelSpace,
    pub f: SmoothMapDesc,
    pub g: SmoothMapDesc,
}

impl FibreProductDesc {
    pub fn new(f: SmoothMapDesc, g: SmoothMapDesc) -> Result<Self, CornerError> {
        if f.target != g.target {
            return Err(CornerError::Mismatch(format!("f lands in {} but g lands in {}", f.target, g.target)));
        }
        Ok(FibreProductDesc { x: f.source, y: g.source, z: f.target, f, g })
    }
}

/// Closed windows of `X` and `Y` and the grid step used to realize `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub x_box: Vec<(Rational, Rational)>,
    pub y_box: Vec<(Rational, Rational)>,
    pub step: Rational,
}

impl GridSpec {
    fn validate(&self, d: &FibreProductDesc) -> Result<(), CornerError> {
        if !self.step.is_positive() {
            return Err(CornerError::Mismatch("grid step must be positive".into()));
        }
        for (label, window, space) in [("x", &self.x_box, &d.x), ("y", &self.y_box, &d.y)] {
            if window.len() != space.n {
                return Err(CornerError::Mismatch(format!(
                    "{label} window has {} intervals, {space} needs {}",
                    window.len(),
                    space.n
                )));
            }
            for (i, (lo, hi)) in window.iter().enumerate() {
                if lo > hi || (i < space.k && lo.is_negative()) {
                    return Err(CornerError::Mismatch(format!("{label} window interval {} is outside {space}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// `dim X + dim Y - dim Z`.
pub fn fibre_product_dim(d: &FibreProductDesc) -> Result<usize, CornerError> {
    let dim = d.x.n as i64 + d.y.n as i64 - d.z.n as i64;
    if dim < 0 {
        return Err(CornerError::NegativeDimension(dim));
    }
    Ok(dim as usize)
}

/// A grid point of `W`: grid indices over all `X` then `Y` coordinates.
#[derive(Clone, Debug)]
struct Sample {
    index: Vec<i64>,
    coords: Vec<Rational>,
}

struct AffineSystem {
    /// rows: `[A_f | -A_g]`
    matrix: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
}

fn affine_system(f: &SmoothMapDesc, g: &SmoothMapDesc) -> Result<AffineSystem, CornerError> {
    let (af, bf) = f.require_affine("f")?;
    let (ag, bg) = g.require_affine("g")?;
    let matrix = af.iter().zip(&ag).map(|(rf, rg)| rf.iter().cloned().chain(rg.iter().map(|v| -v)).collect()).collect();
    let rhs = bg.iter().zip(&bf).map(|(a, b)| a - b).collect();
    Ok(AffineSystem { matrix, rhs })
}

fn grid_count(lo: &Rational, hi: &Rational, step: &Rational) -> i64 {
    use num_traits::ToPrimitive;
    ((hi - lo) / step).floor().to_integer().to_i64().unwrap_or(0)
}

/// Solves the affine system: grid values are enumerated for the free
/// columns of the echelon form and the pivot columns are solved for.
fn solve_on_grid(system: &AffineSystem, window: &[(Rational, Rational)], step: &Rational) -> Vec<Sample> {
    let cols = window.len();
    let ech = rref(&system.matrix, &system.rhs, cols);
    if !ech.consistent {
        return Vec::new();
    }
    let free: Vec<usize> = (0..cols).filter(|c| !ech.pivots.contains(c)).collect();
    let counts: Vec<i64> = free.iter().map(|&c| grid_count(&window[c].0, &window[c].1, step)).collect();
    if counts.iter().any(|&n| n < 0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut ticks = vec![0i64; free.len()];
    'outer: loop {
        let mut coords = vec![Rational::zero(); cols];
        for (slot, &c) in free.iter().enumerate() {
            coords[c] = &window[c].0 + step * Rational::from_integer(ticks[slot].into());
        }
        let mut index = vec![0i64; cols];
        let mut on_grid = true;
        for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
            let mut v = row[cols].clone();
            for &c in &free {
                v -= &row[c] * &coords[c];
            }
            let t = (&v - &window[p].0) / step;
            if v < window[p].0 || v > window[p].1 || !t.is_integer() {
                on_grid = false;
                break;
            }
            coords[p] = v;
        }
        if on_grid {
            for (c, slot) in index.iter_mut().enumerate() {
                use num_traits::ToPrimitive;
                *slot = ((&coords[c] - &window[c].0) / step).to_integer().to_i64().unwrap_or(i64::MAX);
            }
            out.push(Sample { index, coords });
        }
        // odometer over free columns
        for slot in 0..free.len() {
            if ticks[slot] < counts[slot] {
                ticks[slot] += 1;
                continue 'outer;
            }
            ticks[slot] = 0;
        }
        break;
    }
    out.sort_by(|a, b| a.index.cmp(&b.index));
    out
}

/// Connected components under king-move adjacency of grid indices.
fn count_components(samples: &[&Sample]) -> usize {
    let mut parent: Vec<usize> = (0..samples.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let adjacent = samples[i].index.iter().zip(&samples[j].index).all(|(a, b)| (a - b).abs() <= 1);
            if adjacent {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    (0..samples.len()).filter(|&i| find(&mut parent, i) == i).count()
}

fn window_of(grid: &GridSpec) -> Vec<(Rational, Rational)> {
    grid.x_box.iter().chain(&grid.y_box).cloned().collect()
}

fn split(d: &FibreProductDesc, s: &Sample) -> (Point, Point) {
    (Point(s.coords[..d.x.n].to_vec()), Point(s.coords[d.x.n..].to_vec()))
}

/// Grid realization of `{(x, y) : f(x) = g(y)}` inside the windows.
pub fn fibre_product_carrier_samples(
    d: &FibreProductDesc,
    grid: &GridSpec,
) -> Result<Vec<(Point, Point)>, CornerError> {
    grid.validate(d)?;
    let system = affine_system(&d.f, &d.g)?;
    Ok(solve_on_grid(&system, &window_of(grid), &grid.step).iter().map(|s| split(d, s)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaceLabel {
    X(usize),
    Y(usize),
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceLabel::X(i) => write!(f, "dX[x{i}=0]"),
            FaceLabel::Y(i) => write!(f, "dY[y{i}=0]"),
        }
    }
}

/// Component counts on both sides of the boundary decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCounts {
    pub dimension: usize,
    /// Components of `dW`, computed from the facets of `W` itself.
    pub lhs: usize,
    /// Components of `dX x_{f∘i_X, Z, g} Y`.
    pub rhs_x: usize,
    /// Components of `X x_{f, Z, g∘i_Y} dY`.
    pub rhs_y: usize,
    /// `(face, lhs count, rhs count)` per boundary face of `X` and `Y`.
    pub faces: Vec<(FaceLabel, usize, usize)>,
    /// Solution points at which the rank condition was verified.
    pub transversality_points: usize,
}

impl BoundaryCounts {
    pub fn matches(&self) -> bool {
        self.lhs == self.rhs_x + self.rhs_y
    }
}

fn check_rank(
    f: &SmoothMapDesc,
    g: &SmoothMapDesc,
    points: &[(Point, Point)],
    stratum: &str,
) -> Result<usize, CornerError> {
    let needed = f.target.n;
    let mut checked = 0;
    for (x, y) in pick_evenly(points, 8) {
        let jf = f.jacobian_exact(x)?;
        let jg = g.jacobian_exact(y)?;
        let stacked: Vec<Vec<Rational>> =
            jf.iter().zip(&jg).map(|(a, b)| a.iter().cloned().chain(b.iter().map(|v| -v)).collect()).collect();
        let r = if needed == 0 { 0 } else { rank(&stacked) };
        if r < needed {
            return Err(CornerError::NotTransverse { stratum: format!("{stratum} at {x} x {y}"), rank: r, needed });
        }
        checked += 1;
    }
    Ok(checked)
}

fn pick_evenly<T>(items: &[T], max: usize) -> Vec<&T> {
    if items.len() <= max {
        return items.iter().collect();
    }
    (0..max).map(|i| &items[i * (items.len() - 1) / (max - 1)]).collect()
}

fn drop_coord(window: &[(Rational, Rational)], i: usize) -> Vec<(Rational, Rational)> {
    window.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, b)| b.clone()).collect()
}

/// Counts boundary components of `W` and of the two fibre products on the
/// right-hand side of the decomposition.
///
/// The left side uses only `W`: a corner coordinate `c` of `X x Y` cuts a
/// boundary face of `W` when `W ∩ {c = 0}` has dimension `dim W - 1`. The
/// right side composes `f` (resp. `g`) with the face inclusion and solves
/// the smaller fibre product from scratch.
pub fn boundary_decomposition_count(d: &FibreProductDesc, grid: &GridSpec) -> Result<BoundaryCounts, CornerError> {
    let dimension = fibre_product_dim(d)?;
    if d.z.has_boundary() {
        return Err(CornerError::TargetHasBoundary(d.z));
    }
    grid.validate(d)?;
    let system = affine_system(&d.f, &d.g)?;
    let window = window_of(grid);
    let w = solve_on_grid(&system, &window, &grid.step);

    for s in &w {
        let (x, y) = split(d, s);
        if corner_depth(&d.x, &x)? > 0 && corner_depth(&d.y, &y)? > 0 {
            return Err(CornerError::CornerMeetsCorner(format!("{x} x {y}")));
        }
    }

    let pairs: Vec<(Point, Point)> = w.iter().map(|s| split(d, s)).collect();
    let mut transversality_points = check_rank(&d.f, &d.g, &pairs, "interior")?;

    let cols = window.len();
    let base_rank = rref(&system.matrix, &system.rhs, cols).pivots.len();
    let corner_columns: Vec<(FaceLabel, usize)> = (0..d.x.k)
        .map(|i| (FaceLabel::X(i + 1), i))
        .chain((0..d.y.k).map(|j| (FaceLabel::Y(j + 1), d.x.n + j)))
        .collect();

    let mut faces = Vec::new();
    let (mut lhs, mut rhs_x, mut rhs_y) = (0, 0, 0);
    for (label, col) in corner_columns {
        // left side: facet of W cut by {w_col = 0}
        let mut matrix = system.matrix.clone();
        let mut rhs = system.rhs.clone();
        matrix.push((0..cols).map(|c| Rational::from_integer(((c == col) as i64).into())).collect());
        rhs.push(Rational::zero());
        let cut = rref(&matrix, &rhs, cols);
        let is_facet = cut.consistent && cut.pivots.len() == base_rank + 1;
        let lhs_count = if is_facet {
            let on_face: Vec<&Sample> = w.iter().filter(|s| s.coords[col].is_zero()).collect();
            count_components(&on_face)
        } else {
            0
        };

        // right side: fibre product of the face with the other factor
        let (f_face, g_face, face_window, face_index) = match label {
            FaceLabel::X(i) => {
                let inc = face_inclusion(&d.x, i);
                let fx = d.f.after(&inc)?;
                let mut win = drop_coord(&grid.x_box, i - 1);
                win.extend(grid.y_box.iter().cloned());
                (fx, d.g.clone(), win, grid.x_box[i - 1].0.is_zero())
            }
            FaceLabel::Y(j) => {
                let inc = face_inclusion(&d.y, j);
                let gy = d.g.after(&inc)?;
                let mut win = grid.x_box.clone();
                win.extend(drop_coord(&grid.y_box, j - 1));
                (d.f.clone(), gy, win, grid.y_box[j - 1].0.is_zero())
            }
        };
        let rhs_count = if face_index {
            let face_system = affine_system(&f_face, &g_face)?;
            let face_samples = solve_on_grid(&face_system, &face_window, &grid.step);
            let nx = f_face.source.n;
            let face_pairs: Vec<(Point, Point)> =
                face_samples.iter().map(|s| (Point(s.coords[..nx].to_vec()), Point(s.coords[nx..].to_vec()))).collect();
            transversality_points += check_rank(&f_face, &g_face, &face_pairs, &label.to_string())?;
            count_components(&face_samples.iter().collect::<Vec<_>>())
        } else {
            0
        };
        match label {
            FaceLabel::X(_) => rhs_x += rhs_count,
            FaceLabel::Y(_) => rhs_y += rhs_count,
        }
        lhs += lhs_count;
        faces.push((label, lhs_count, rhs_count));
    }

    Ok(BoundaryCounts { dimension, lhs, rhs_x, rhs_y, faces, transversality_points })
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}", format_rational(&self.step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, rat, ratio};

    fn map(source: ModelSpace, target: ModelSpace, comps: &[&str]) -> SmoothMapDesc {
        let components = comps.iter().map(|c| parse(c, source.n).unwrap()).collect();
        SmoothMapDesc::new(source, target, components).unwrap()
    }

    fn window(bounds: &[(i64, i64)]) -> Vec<(Rational, Rational)> {
        bounds.iter().map(|&(a, b)| (rat(a), rat(b))).collect()
    }

    const R: ModelSpace = ModelSpace { n: 1, k: 0 };
    const HALF: ModelSpace = ModelSpace { n: 1, k: 1 };

    #[test]
    fn dimension_formula() {
        let d = FibreProductDesc::new(map(HALF, R, &["x1"]), map(R, R, &["x1"])).unwrap();
        assert_eq!(fibre_product_dim(&d).unwrap(), 1);
        let plane = ModelSpace { n: 2, k: 1 };
        let d = FibreProductDesc::new(map(plane, R, &["x1"]), map(plane, R, &["x2"])).unwrap();
        assert_eq!(fibre_product_dim(&d).unwrap(), 3);
        let point = ModelSpace { n: 0, k: 0 };
        let d = FibreProductDesc::new(map(point, R, &["0"]), map(point, R, &["1"])).unwrap();
        assert_eq!(fibre_product_dim(&d), Err(CornerError::NegativeDimension(-1)));
    }

    #[test]
    fn diagonal_carrier() {
        let d = FibreProductDesc::new(map(HALF, R, &["x1"]), map(R, R, &["x1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 2)]), y_box: window(&[(-2, 2)]), step: ratio(1, 2) };
        let pts = fibre_product_carrier_samples(&d, &grid).unwrap();
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|(x, y)| x == y && x.coords()[0] >= rat(0)));
    }

    #[test]
    fn shifted_diagonal() {
        let d = FibreProductDesc::new(map(R, R, &["x1"]), map(R, R, &["x1 + 1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(-3, 3)]), y_box: window(&[(-3, 3)]), step: rat(1) };
        let pts = fibre_product_carrier_samples(&d, &grid).unwrap();
        assert!(pts.iter().all(|(x, y)| x.coords()[0] == &y.coords()[0] + rat(1)));
        assert_eq!(pts.len(), 6);
    }

    #[test]
    fn non_affine_rejected() {
        let d = FibreProductDesc::new(map(R, R, &["x1^2"]), map(R, R, &["x1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 1)]), y_box: window(&[(0, 1)]), step: rat(1) };
        assert!(matches!(fibre_product_carrier_samples(&d, &grid), Err(CornerError::NonAffine(_))));
    }

    #[test]
    fn halfline_diagonal_boundary() {
        let d = FibreProductDesc::new(map(HALF, R, &["x1"]), map(R, R, &["x1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 4)]), y_box: window(&[(-2, 2)]), step: ratio(1, 2) };
        let c = boundary_decomposition_count(&d, &grid).unwrap();
        assert_eq!((c.lhs, c.rhs_x, c.rhs_y), (1, 1, 0));
        assert!(c.matches());
    }

    #[test]
    fn corner_meets_corner_rejected() {
        let d = FibreProductDesc::new(map(HALF, R, &["x1"]), map(HALF, R, &["x1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 2)]), y_box: window(&[(0, 2)]), step: rat(1) };
        assert!(matches!(boundary_decomposition_count(&d, &grid), Err(CornerError::CornerMeetsCorner(_))));
    }

    #[test]
    fn degenerate_face_map_is_not_transverse() {
        // f = x on [0, inf), g = 0: W = {0} x R lies inside dX x Y
        let d = FibreProductDesc::new(map(HALF, R, &["x1"]), map(R, R, &["0"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 2)]), y_box: window(&[(-1, 1)]), step: rat(1) };
        assert!(matches!(boundary_decomposition_count(&d, &grid), Err(CornerError::NotTransverse { .. })));
    }

    #[test]
    fn target_with_boundary_rejected() {
        let d = FibreProductDesc::new(map(HALF, HALF, &["x1"]), map(HALF, HALF, &["x1"])).unwrap();
        let grid = GridSpec { x_box: window(&[(0, 2)]), y_box: window(&[(0, 2)]), step: rat(1) };
        assert!(matches!(boundary_decomposition_count(&d, &grid), Err(CornerError::TargetHasBoundary(_))));
    }
}
