//! Bivector fields, the bracket `{F, G} = sum_ij pi^ij dF/dx_i dG/dx_j`,
//! the Jacobi identity and the Schouten self-bracket `[pi, pi]`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::corners::ModelSpace;
use crate::expr::{expr_equal_on, EqualityVerdict, Expr, ExprError, Point, Poly};
use crate::sampling::SamplingConfig;
use crate::sheaf::{FunctionPresheaf, Section, SheafError};

/// `T^{ijk} = SCHOUTEN_JACOBI_SIGN * jacobi_defect(x_i, x_j, x_k)`.
pub const SCHOUTEN_JACOBI_SIGN: i64 = -1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("pi^{{{i},{j}}} and pi^{{{j},{i}}} are not opposite")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("diagonal component pi^{{{0},{0}}} is not zero")]
    NonzeroDiagonal(usize),
    #[error("component index ({i},{j}) outside dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("matrix has {actual} rows/columns, expected {expected}")]
    Shape { expected: usize, actual: usize },
    #[error("component pi^{{{i},{j}}}: {source}")]
    Component { i: usize, j: usize, source: ExprError },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
}

/// An antisymmetric `n x n` matrix of expressions `pi^{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivectorField {
    ambient: ModelSpace,
    components: Vec<Vec<Poly>>,
}

impl BivectorField {
    /// From a full matrix (row `i`, column `j` is `pi^{i+1, j+1}`).
    pub fn new(ambient: ModelSpace, matrix: Vec<Vec<Expr>>) -> Result<Self, PoissonError> {
        let n = ambient.n;
        if matrix.len() != n {
            return Err(PoissonError::Shape { expected: n, actual: matrix.len() });
        }
        let mut components = Vec::with_capacity(n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(PoissonError::Shape { expected: n, actual: row.len() });
            }
            let mut out = Vec::with_capacity(n);
            for (j, e) in row.iter().enumerate() {
                e.check_dimension(n).map_err(|source| PoissonError::Component { i: i + 1, j: j + 1, source })?;
                out.push(Poly::from_expr(e));
            }
            components.push(out);
        }
        for i in 0..n {
            if !components[i][i].is_zero() {
                return Err(PoissonError::NonzeroDiagonal(i + 1));
            }
            for j in i + 1..n {
                if !components[i][j].add(&components[j][i]).is_zero() {
                    return Err(PoissonError::NotAntisymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
        Ok(BivectorField { ambient, components })
    }

    /// From listed entries `((i, j), pi^{ij})`, 1-based; the opposite entry
    /// is filled in by antisymmetry and missing entries are zero. Listing
    /// both `(i, j)` and `(j, i)` is allowed when they are opposite.
    pub fn from_entries(ambient: ModelSpace, entries: &[((usize, usize), Expr)]) -> Result<Self, PoissonError> {
        let n = ambient.n;
        let mut set: BTreeMap<(usize, usize), Poly> = BTreeMap::new();
        for ((i, j), e) in entries {
            let (i, j) = (*i, *j);
            if i == 0 || j == 0 || i > n || j > n {
                return Err(PoissonError::IndexOutOfRange { i, j, n });
            }
            e.check_dimension(n).map_err(|source| PoissonError::Component { i, j, source })?;
            let p = Poly::from_expr(e);
            if i == j {
                if !p.is_zero() {
                    return Err(PoissonError::NonzeroDiagonal(i));
                }
                continue;
            }
            let (key, value) = if i < j { ((i, j), p) } else { ((j, i), p.neg()) };
            if let Some(prev) = set.get(&key) {
                if !prev.sub(&value).is_zero() {
                    return Err(PoissonError::NotAntisymmetric { i: key.0, j: key.1 });
                }
            }
            set.insert(key, value);
        }
        let mut components = vec![vec![Poly::zero(); n]; n];
        for ((i, j), p) in set {
            components[j - 1][i - 1] = p.neg();
            components[i - 1][j - 1] = p;
        }
        Ok(BivectorField { ambient, components })
    }

    pub fn ambient(&self) -> ModelSpace {
        self.ambient
    }

    pub fn dimension(&self) -> usize {
        self.ambient.n
    }

    /// `pi^{ij}`, 1-based.
    pub fn component(&self, i: usize, j: usize) -> Expr {
        self.components[i - 1][j - 1].to_expr()
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().flatten().all(|p| p.as_constant().is_some())
    }

    fn check(&self, e: &Expr) -> Result<(), PoissonError> {
        Ok(e.check_dimension(self.ambient.n)?)
    }

    fn bracket_poly(&self, f: &Poly, g: &Poly) -> Poly {
        let n = self.ambient.n;
        let df: Vec<Poly> = (1..=n).map(|i| f.derivative(i)).collect();
        let dg: Vec<Poly> = (1..=n).map(|j| g.derivative(j)).collect();
        let mut out = Poly::zero();
        for i in 0..n {
            if df[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if self.components[i][j].is_zero() || dg[j].is_zero() {
                    continue;
                }
                out = out.add(&self.components[i][j].mul(&df[i]).mul(&dg[j]));
            }
        }
        out
    }
}

impl fmt::Display for BivectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..self.ambient.n {
            for j in i + 1..self.ambient.n {
                if self.components[i][j].is_zero() {
                    continue;
                }
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "pi^{},{} = {}", i + 1, j + 1, self.components[i][j].to_expr())?;
            }
        }
        if first {
            f.write_str("pi = 0")?;
        }
        Ok(())
    }
}

/// `{F, G}` in canonical form.
pub fn bracket(f: &Expr, g: &Expr, pi: &BivectorField) -> Result<Expr, PoissonError> {
    pi.check(f)?;
    pi.check(g)?;
    Ok(pi.bracket_poly(&Poly::from_expr(f), &Poly::from_expr(g)).to_expr())
}

/// `{F,{G,H}} + {G,{H,F}} + {H,{F,G}}` in canonical form.
pub fn jacobi_defect(f: &Expr, g: &Expr, h: &Expr, pi: &BivectorField) -> Result<Expr, PoissonError> {
    for e in [f, g, h] {
        pi.check(e)?;
    }
    Ok(jacobi_poly(&Poly::from_expr(f), &Poly::from_expr(g), &Poly::from_expr(h), pi).to_expr())
}

fn jacobi_poly(f: &Poly, g: &Poly, h: &Poly, pi: &BivectorField) -> Poly {
    let b = |a: &Poly, c: &Poly| pi.bracket_poly(a, c);
    b(f, &b(g, h)).add(&b(g, &b(h, f))).add(&b(h, &b(f, g)))
}

/// Components `T^{ijk}`, `i < j < k`, of `[pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchoutenTensor {
    pub components: BTreeMap<(usize, usize, usize), Expr>,
}

impl SchoutenTensor {
    pub fn is_zero(&self) -> bool {
        self.components.values().all(|e| Poly::from_expr(e).is_zero())
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<&Expr> {
        self.components.get(&(i, j, k))
    }
}

/// `T^{ijk} = sum_l (pi^{li} d_l pi^{jk} + pi^{lj} d_l pi^{ki} + pi^{lk} d_l pi^{ij})`.
pub fn schouten_self(pi: &BivectorField) -> SchoutenTensor {
    let n = pi.ambient.n;
    let c = &pi.components;
    let term = |a: usize, b: usize, d: usize| {
        (0..n).fold(Poly::zero(), |acc, l| acc.add(&c[l][a].mul(&c[b][d].derivative(l + 1))))
    };
    let mut components = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = term(i, j, k).add(&term(j, k, i)).add(&term(k, i, j));
                components.insert((i + 1, j + 1, k + 1), t.to_expr());
            }
        }
    }
    SchoutenTensor { components }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JacobiVerdict {
    ProvenZero,
    SampledZero { points: usize },
    Failed,
}

impl fmt::Display for JacobiVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JacobiVerdict::ProvenZero => f.write_str("proven-zero"),
            JacobiVerdict::SampledZero { points } => write!(f, "sampled-zero ({points} points)"),
            JacobiVerdict::Failed => f.write_str("failed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiReport {
    /// `jacobi_defect(x_i, x_j, x_k)` for `i < j < k`.
    pub defects: Vec<((usize, usize, usize), Expr)>,
    pub schouten: SchoutenTensor,
    pub points: usize,
    pub worst_defect: f64,
    pub worst_at: Option<Point>,
    pub verdict: JacobiVerdict,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.verdict != JacobiVerdict::Failed
    }
}

/// Proven zero when `[pi, pi]` vanishes canonically; otherwise the
/// coordinate-triple defects are evaluated at seeded interior points.
pub fn check_poisson(pi: &BivectorField, config: &SamplingConfig) -> JacobiReport {
    let n = pi.ambient.n;
    let mut defects = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                let d = jacobi_poly(&Poly::var(i), &Poly::var(j), &Poly::var(k), pi);
                defects.push(((i, j, k), d));
            }
        }
    }
    let schouten = schouten_self(pi);
    let exprs = defects.iter().map(|(t, d)| (*t, d.to_expr())).collect();
    if schouten.is_zero() {
        return JacobiReport {
            defects: exprs,
            schouten,
            points: 0,
            worst_defect: 0.0,
            worst_at: None,
            verdict: JacobiVerdict::ProvenZero,
        };
    }
    let mut worst = 0.0_f64;
    let mut worst_at = None;
    let mut points = 0;
    let mut singular = false;
    for p in pi.ambient.default_sample_region().points(config.count, config.seed) {
        points += 1;
        let coords = p.to_f64();
        for (_, d) in &defects {
            match d.eval_f64(&coords) {
                Ok(v) if v.abs() > worst || !v.is_finite() => {
                    worst = if v.is_finite() { v.abs() } else { f64::INFINITY };
                    worst_at = Some(p.clone());
                }
                Ok(_) => {}
                Err(_) => singular = true,
            }
        }
    }
    let verdict = if worst <= config.tolerance && !singular {
        JacobiVerdict::SampledZero { points }
    } else {
        JacobiVerdict::Failed
    };
    JacobiReport { defects: exprs, schouten, points, worst_defect: worst, worst_at, verdict }
}

/// `{f, g s} = {f, g} s + g {f, s}` as functions on the default region.
pub fn check_leibniz(
    pi: &BivectorField,
    f: &Expr,
    g: &Expr,
    s: &Expr,
    config: &SamplingConfig,
) -> Result<EqualityVerdict, PoissonError> {
    let lhs = bracket(f, &g.clone().mul(s.clone()), pi)?;
    let rhs = bracket(f, g, pi)?.mul(s.clone()).add(g.clone().mul(bracket(f, s, pi)?));
    Ok(expr_equal_on(&lhs, &rhs, &pi.ambient.default_sample_region(), config))
}

/// The bracket as a family of operations `O(U) x O(U) -> O(U)`; opens in
/// `overrides` use their own bivector.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketSheaf {
    pub pi: BivectorField,
    pub overrides: BTreeMap<String, BivectorField>,
}

impl BracketSheaf {
    pub fn new(pi: BivectorField) -> Self {
        BracketSheaf { pi, overrides: BTreeMap::new() }
    }

    pub fn on(&self, open: &str) -> &BivectorField {
        self.overrides.get(open).unwrap_or(&self.pi)
    }

    pub fn bracket(&self, f: &Section, g: &Section) -> Result<Section, PoissonError> {
        if f.domain != g.domain {
            return Err(
                SheafError::Mismatch(format!("bracket of sections over `{}` and `{}`", f.domain, g.domain)).into()
            );
        }
        Ok(Section { expr: bracket(&f.expr, &g.expr, self.on(&f.domain))?, domain: f.domain.clone() })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BracketSheafReport {
    pub restrictions_checked: usize,
    pub restriction_failures: Vec<String>,
    pub bilinearity_checked: usize,
    pub bilinearity_failures: Vec<String>,
}

impl BracketSheafReport {
    pub fn passed(&self) -> bool {
        self.restriction_failures.is_empty() && self.bilinearity_failures.is_empty()
    }
}

/// For every open `U`, pair of probes `(f, g)` over `U` and `V < U`,
/// compares `{f, g}|_V` with `{f|_V, g|_V}`; also checks additivity in the
/// first slot on each open.
pub fn bracket_sheaf_morphism_check(
    b: &BracketSheaf,
    p: &FunctionPresheaf,
    probes: &[Section],
    max_pairs: usize,
) -> Result<BracketSheafReport, PoissonError> {
    if b.pi.ambient != p.ambient() {
        return Err(
            SheafError::Mismatch(format!("bivector on {} over a lattice on {}", b.pi.ambient, p.ambient())).into()
        );
    }
    let mut report = BracketSheafReport::default();
    let mut by_open: BTreeMap<&str, Vec<&Section>> = BTreeMap::new();
    for s in probes {
        by_open.entry(s.domain.as_str()).or_default().push(s);
    }
    let inclusions = p.lattice().strict_inclusions();
    for (u, sections) in &by_open {
        let mut pairs = 0;
        'pairs: for (a, f) in sections.iter().enumerate() {
            for (c, g) in sections.iter().enumerate() {
                if a == c {
                    continue;
                }
                if pairs >= max_pairs {
                    break 'pairs;
                }
                pairs += 1;
                let whole = b.bracket(f, g)?;
                for &(v, _) in inclusions.iter().filter(|(_, uu)| uu == u) {
                    report.restrictions_checked += 1;
                    let down = p.restrict(&whole, v)?;
                    let local = b.bracket(&p.restrict(f, v)?, &p.restrict(g, v)?)?;
                    let verdict = p.sections_equal(&down, &local)?;
                    if !verdict.is_equal() {
                        report.restriction_failures.push(format!(
                            "{u}>{v} ({}, {}): {} vs {} {verdict}",
                            f.expr, g.expr, down.expr, local.expr
                        ));
                    }
                }
                let h = sections[(c + 1) % sections.len()];
                let sum = Section { expr: f.expr.clone().add(h.expr.clone()), domain: f.domain.clone() };
                let lhs = b.bracket(&sum, g)?;
                let rhs = Section { expr: whole.expr.clone().add(b.bracket(h, g)?.expr), domain: f.domain.clone() };
                report.bilinearity_checked += 1;
                let verdict = p.sections_equal(&lhs, &rhs)?;
                if !verdict.is_equal() {
                    report.bilinearity_failures.push(format!("{u} ({}, {}, {}): {verdict}", f.expr, h.expr, g.expr));
                }
            }
        }
    }
    Ok(report)
}
