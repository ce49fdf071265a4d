use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use super::{germ_equal, FunctionPresheaf, Germ, OpenLattice, Section, SheafError, EMPTY_OPEN};
use crate::corners::linalg::invert;
use crate::corners::{OpenBox, Region, SmoothMapDesc};
use crate::expr::{canonicalize, Expr, Poly, Rational};
use crate::sampling::SamplingConfig;

/// The `U`-component of a morphism: sections over `U` go to sections over
/// `image_open`, by substituting `substitution[i]` for `x_{i+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphismComponent {
    pub image_open: String,
    pub substitution: Vec<Expr>,
}

/// A morphism of function presheaves, one component per open of its
/// domain lattice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SheafMorphismDesc {
    pub components: BTreeMap<String, MorphismComponent>,
}

impl SheafMorphismDesc {
    pub fn identity(lattice: &OpenLattice) -> Self {
        let substitution: Vec<Expr> = (1..=lattice.ambient().n).map(Expr::var).collect();
        let components = lattice
            .names()
            .map(|u| {
                (u.to_string(), MorphismComponent { image_open: u.to_string(), substitution: substitution.clone() })
            })
            .collect();
        SheafMorphismDesc { components }
    }

    pub fn component(&self, open: &str) -> Result<&MorphismComponent, SheafError> {
        self.components.get(open).ok_or_else(|| SheafError::MissingComponent(open.to_string()))
    }

    pub fn apply(&self, s: &Section) -> Result<Section, SheafError> {
        let c = self.component(&s.domain)?;
        Ok(Section { expr: canonicalize(&s.expr.substitute(&c.substitution)), domain: c.image_open.clone() })
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SheafMorphismDesc) -> Result<SheafMorphismDesc, SheafError> {
        let mut components = BTreeMap::new();
        for (u, first) in &self.components {
            let second = next.component(&first.image_open)?;
            let substitution =
                first.substitution.iter().map(|e| canonicalize(&e.substitute(&second.substitution))).collect();
            components.insert(u.clone(), MorphismComponent { image_open: second.image_open.clone(), substitution });
        }
        Ok(SheafMorphismDesc { components })
    }
}

/// Square, invertible, one nonzero entry per row: preimages of boxes are
/// boxes.
fn monomial_inverse(map: &SmoothMapDesc) -> Option<Vec<(usize, Rational, Rational)>> {
    let (a, b) = map.affine_parts()?;
    if map.source.n != map.target.n {
        return None;
    }
    // for each target coordinate i: y_i = a * x_j + b
    let mut rows = Vec::with_capacity(a.len());
    let mut used = vec![false; map.source.n];
    for (row, offset) in a.iter().zip(&b) {
        let nonzero: Vec<usize> = (0..row.len()).filter(|&j| !row[j].is_zero()).collect();
        let [j] = nonzero[..] else { return None };
        if used[j] {
            return None;
        }
        used[j] = true;
        rows.push((j, row[j].clone(), offset.clone()));
    }
    Some(rows)
}

fn box_preimage(map: &SmoothMapDesc, rows: &[(usize, Rational, Rational)], b: &OpenBox) -> Option<OpenBox> {
    let mut intervals = vec![(Rational::zero(), Rational::zero()); map.source.n];
    for (i, (j, a, off)) in rows.iter().enumerate() {
        let (lo, hi) = &b.intervals[i];
        let (p, q) = ((lo - off) / a, (hi - off) / a);
        let (mut lo, hi) = if a.is_positive() { (p, q) } else { (q, p) };
        if *j < map.source.k && lo.is_negative() {
            lo = Rational::zero();
        }
        if lo >= hi {
            return None;
        }
        intervals[*j] = (lo, hi);
    }
    Some(OpenBox::new(intervals))
}

fn computed_preimage(map: &SmoothMapDesc, target: &Region) -> Option<Region> {
    let rows = monomial_inverse(map)?;
    let boxes = target.boxes.iter().filter_map(|b| box_preimage(map, &rows, b)).collect();
    Region::new(map.source, boxes).ok()
}

/// Samples both directions of `f^{-1}(U) = V`.
fn validate_preimage(
    map: &SmoothMapDesc,
    source: &OpenLattice,
    target: &OpenLattice,
    u: &str,
    v: &str,
    sampling: &SamplingConfig,
) -> Result<(), SheafError> {
    let (ru, rv) = (target.region(u)?, source.region(v)?);
    let mismatch = |p: &crate::expr::Point| SheafError::PreimageMismatch {
        target: u.into(),
        source_open: v.into(),
        point: p.to_string(),
    };
    for p in rv.sample_region().points(sampling.count, sampling.seed) {
        if !ru.contains(&map.apply(&p)?) {
            return Err(mismatch(&p));
        }
    }
    let names: Vec<String> = source.names().map(String::from).collect();
    let everything = source.union_region(&names)?;
    for p in everything.sample_region().points(sampling.count, sampling.seed) {
        if ru.contains(&map.apply(&p)?) && !rv.contains(&p) {
            return Err(mismatch(&p));
        }
    }
    Ok(())
}

/// The pullback `f_#`: for each open `U` of the target lattice, sections
/// over `U` go to `c ∘ f` over the source open representing `f^{-1}(U)`.
///
/// Preimages are computed for coordinatewise affine bijections and must be
/// declared otherwise; declared preimages are checked by sampling.
pub fn pullback_morphism(
    map: &SmoothMapDesc,
    source: &OpenLattice,
    target: &OpenLattice,
    declared: &BTreeMap<String, String>,
    sampling: &SamplingConfig,
) -> Result<SheafMorphismDesc, SheafError> {
    if map.source != source.ambient() || map.target != target.ambient() {
        return Err(SheafError::Mismatch(format!(
            "map {} -> {} between lattices over {} and {}",
            map.source,
            map.target,
            source.ambient(),
            target.ambient()
        )));
    }
    let mut components = BTreeMap::new();
    for u in target.names() {
        let image_open = if u == EMPTY_OPEN {
            EMPTY_OPEN.to_string()
        } else if let Some(v) = declared.get(u) {
            validate_preimage(map, source, target, u, v, sampling)?;
            v.clone()
        } else {
            let pre = computed_preimage(map, target.region(u)?).ok_or_else(|| SheafError::MissingPreimage(u.into()))?;
            if pre.is_empty() {
                EMPTY_OPEN.to_string()
            } else {
                source
                    .names()
                    .find(|v| source.region(v).map(|r| r.same_set(&pre)).unwrap_or(false))
                    .ok_or_else(|| SheafError::MissingPreimage(u.into()))?
                    .to_string()
            }
        };
        components.insert(u.to_string(), MorphismComponent { image_open, substitution: map.components.clone() });
    }
    Ok(SheafMorphismDesc { components })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareFailure {
    pub u: String,
    pub v: String,
    pub probe: usize,
    pub detail: String,
}

impl fmt::Display for SquareFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{} probe#{} {}", self.u, self.v, self.probe, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MorphismSquareReport {
    pub squares_checked: usize,
    pub failures: Vec<SquareFailure>,
}

impl MorphismSquareReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For every `V < U` and probe `s` over `U`, compares `m(U)(s)|_{m V}`
/// with `m(V)(s|_V)`.
pub fn check_morphism_square(
    m: &SheafMorphismDesc,
    source: &FunctionPresheaf,
    target: &FunctionPresheaf,
    probes: &[Section],
) -> Result<MorphismSquareReport, SheafError> {
    let mut report = MorphismSquareReport::default();
    for (index, s) in probes.iter().enumerate() {
        let image = m.apply(s)?;
        for (v, u) in source.lattice().strict_inclusions() {
            if u != s.domain {
                continue;
            }
            report.squares_checked += 1;
            let fail = |detail: String| SquareFailure { u: u.into(), v: v.into(), probe: index, detail };
            let image_v = &m.component(v)?.image_open;
            let down = match target.restrict(&image, image_v) {
                Ok(x) => x,
                Err(e) => {
                    report.failures.push(fail(e.to_string()));
                    continue;
                }
            };
            let across = m.apply(&source.restrict(s, v)?)?;
            let verdict = target.sections_equal(&down, &across)?;
            if !verdict.is_equal() {
                report.failures.push(fail(format!("{} vs {}: {verdict}", down.expr, across.expr)));
            }
        }
    }
    Ok(report)
}

/// Outcome of a stalk-map check at one point, relative to the probe sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StalkIsoVerdict {
    pub domain_probes: usize,
    pub codomain_probes: usize,
    /// Distinct domain germs with equal images.
    pub collisions: Vec<(usize, usize)>,
    /// Codomain germs with no preimage among the probes or by inversion.
    pub unmatched: Vec<usize>,
    /// Codomain germs matched by inverting an affine substitution.
    pub inverted: usize,
}

impl StalkIsoVerdict {
    pub fn injective(&self) -> bool {
        self.collisions.is_empty()
    }

    pub fn surjective(&self) -> bool {
        self.unmatched.is_empty()
    }

    pub fn is_iso(&self) -> bool {
        self.injective() && self.surjective()
    }
}

impl fmt::Display for StalkIsoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = if self.is_iso() { "isomorphism" } else { "not an isomorphism" };
        write!(
            f,
            "{word} on probes ({} domain, {} codomain; {} collisions, {} unmatched, {} by inversion)",
            self.domain_probes,
            self.codomain_probes,
            self.collisions.len(),
            self.unmatched.len(),
            self.inverted
        )
    }
}

/// `Poly` substitution inverse of an affine bijection, as expressions.
fn affine_inverse(substitution: &[Expr]) -> Option<Vec<Expr>> {
    let n = substitution.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    if substitution.iter().any(|e| e.max_var() > n) {
        return None;
    }
    for e in substitution {
        let (row, offset) = Poly::from_expr(e).affine_parts(n)?;
        a.push(row);
        b.push(offset);
    }
    let inv = invert(&a)?;
    // x = A^{-1} (y - b)
    Some(
        inv.iter()
            .map(|row| {
                let mut p = Poly::zero();
                for (j, c) in row.iter().enumerate() {
                    p = p.add(&Poly::var(j + 1).sub(&Poly::constant(b[j].clone())).scale(c));
                }
                p.to_expr()
            })
            .collect(),
    )
}

/// Checks the induced stalk map at `x` on finitely many germs.
///
/// Domain probes are germs of the source presheaf, codomain probes are
/// germs of `target` at `x`. Codomain germs without a listed preimage are
/// matched by inverting the substitution when it is an affine bijection.
pub fn stalkwise_iso_check(
    m: &SheafMorphismDesc,
    target: &FunctionPresheaf,
    x: &crate::expr::Point,
    domain_probes: &[Germ],
    codomain_probes: &[Germ],
) -> Result<StalkIsoVerdict, SheafError> {
    let config = target.sampling();
    let image = |g: &Germ| -> Result<Germ, SheafError> { super::germ_at(target, &m.apply(&g.section)?, x) };
    let images = domain_probes.iter().map(image).collect::<Result<Vec<_>, _>>()?;
    let mut verdict = StalkIsoVerdict {
        domain_probes: domain_probes.len(),
        codomain_probes: codomain_probes.len(),
        ..Default::default()
    };
    for i in 0..domain_probes.len() {
        for j in i + 1..domain_probes.len() {
            if !germ_equal(&domain_probes[i], &domain_probes[j], config)?.is_equal()
                && germ_equal(&images[i], &images[j], config)?.is_equal()
            {
                verdict.collisions.push((i, j));
            }
        }
    }
    let inverse = domain_probes
        .first()
        .map(|g| m.component(&g.section.domain))
        .transpose()?
        .and_then(|c| affine_inverse(&c.substitution).map(|inv| (c.substitution.clone(), inv)));
    for (k, probe) in codomain_probes.iter().enumerate() {
        let mut matched = false;
        for img in &images {
            if germ_equal(img, probe, config)?.is_equal() {
                matched = true;
                break;
            }
        }
        if !matched {
            if let Some((forward, inv)) = &inverse {
                let pre = probe.section.expr.substitute(inv);
                let back = canonicalize(&pre.substitute(forward));
                let candidate =
                    Germ { section: Section { expr: back, domain: probe.section.domain.clone() }, ..probe.clone() };
                if germ_equal(&candidate, probe, config)?.is_equal() {
                    verdict.inverted += 1;
                    matched = true;
                }
            }
        }
        if !matched {
            verdict.unmatched.push(k);
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corners::ModelSpace;
    use crate::expr::{parse, Point};
    use crate::sheaf::germ_at;

    fn line_lattice(opens: &[(&str, i64, i64)]) -> OpenLattice {
        let s = ModelSpace::euclidean(1);
        OpenLattice::new(
            s,
            opens
                .iter()
                .map(|(n, lo, hi)| (n.to_string(), Region::single(s, OpenBox::from_ints(&[(*lo, *hi)])).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn map(text: &str) -> SmoothMapDesc {
        let s = ModelSpace::euclidean(1);
        SmoothMapDesc::new(s, s, vec![parse(text, 1).unwrap()]).unwrap()
    }

    #[test]
    fn pullback_substitutes() {
        let l = line_lattice(&[("U", -4, 4)]);
        let m = pullback_morphism(&map("x1^2"), &l, &l, &BTreeMap::new(), &SamplingConfig::default());
        assert!(matches!(m, Err(SheafError::MissingPreimage(_))));

        let y = line_lattice(&[("U", -1, 4)]);
        let x = line_lattice(&[("P", -2, 2)]);
        let declared = BTreeMap::from([("U".to_string(), "P".to_string())]);
        let m = pullback_morphism(&map("x1^2"), &x, &y, &declared, &SamplingConfig::default()).unwrap();
        let c = Section { expr: parse("x1 + 1", 1).unwrap(), domain: "U".into() };
        assert_eq!(m.apply(&c).unwrap().expr.to_string(), "x1^2 + 1");
    }

    #[test]
    fn wrong_declared_preimage_is_caught() {
        let y = line_lattice(&[("U", -1, 4)]);
        let x = line_lattice(&[("P", -1, 2), ("Q", -2, 2)]);
        let declared = BTreeMap::from([("U".to_string(), "P".to_string())]);
        let err = pullback_morphism(&map("x1^2"), &x, &y, &declared, &SamplingConfig::default()).unwrap_err();
        assert!(matches!(err, SheafError::PreimageMismatch { .. }));
    }

    #[test]
    fn affine_preimages_computed() {
        let y = line_lattice(&[("U", 0, 4), ("V", 1, 2)]);
        let x = line_lattice(&[("A", -1, 3), ("B", 0, 1)]);
        let m = pullback_morphism(&map("x1 + 1"), &x, &y, &BTreeMap::new(), &SamplingConfig::default()).unwrap();
        assert_eq!(m.component("U").unwrap().image_open, "A");
        assert_eq!(m.component("V").unwrap().image_open, "B");
        let (py, px) = (FunctionPresheaf::new(y), FunctionPresheaf::new(x));
        let probes: Vec<Section> =
            ["x1", "x1^3 - 2", "0"].iter().map(|t| py.section(parse(t, 1).unwrap(), "U").unwrap()).collect();
        assert!(check_morphism_square(&m, &py, &px, &probes).unwrap().passed());
    }

    #[test]
    fn corrupted_component_fails_square() {
        let l = line_lattice(&[("U", 0, 4), ("V", 1, 2)]);
        let mut m = SheafMorphismDesc::identity(&l);
        m.components.get_mut("V").unwrap().substitution = vec![parse("x1 + 1", 1).unwrap()];
        let p = FunctionPresheaf::new(l.clone());
        let probes = vec![p.section(Expr::var(1), "U").unwrap()];
        let report = check_morphism_square(&m, &p, &p, &probes).unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!((report.failures[0].u.as_str(), report.failures[0].v.as_str()), ("U", "V"));
        assert!(check_morphism_square(&SheafMorphismDesc::identity(&l), &p, &p, &probes).unwrap().passed());
    }

    #[test]
    fn functoriality() {
        let l = line_lattice(&[("U", -8, 8)]);
        let f = map("2*x1");
        let g = map("x1 - 3");
        let empty = BTreeMap::new();
        let lat = |lo, hi| line_lattice(&[("U", lo, hi)]);
        let c = SamplingConfig::default();
        // f: (-4,4) -> (-8,8), g: (-8,8) -> (-11,5)
        let fs = pullback_morphism(&f, &lat(-4, 4), &l, &empty, &c).unwrap();
        let gs = pullback_morphism(&g, &l, &lat(-11, 5), &empty, &c).unwrap();
        let gf = pullback_morphism(&g.after(&f).unwrap(), &lat(-4, 4), &lat(-11, 5), &empty, &c).unwrap();
        assert_eq!(gs.then(&fs).unwrap(), gf);
    }

    #[test]
    fn stalk_maps() {
        let y = line_lattice(&[("U", -4, 4)]);
        let x = line_lattice(&[("A", -5, 3)]);
        let m = pullback_morphism(&map("x1 + 1"), &x, &y, &BTreeMap::new(), &SamplingConfig::default()).unwrap();
        let (py, px) = (FunctionPresheaf::new(y), FunctionPresheaf::new(x));
        let at = |p: &FunctionPresheaf, t: &str, d: &str, pt: i64| {
            germ_at(p, &p.section(parse(t, 1).unwrap(), d).unwrap(), &Point::from_ints(&[pt])).unwrap()
        };
        let dom: Vec<Germ> = ["x1", "x1^2", "1"].iter().map(|t| at(&py, t, "U", 1)).collect();
        let cod: Vec<Germ> = ["x1", "x1^2", "x1^3"].iter().map(|t| at(&px, t, "A", 0)).collect();
        let v = stalkwise_iso_check(&m, &px, &Point::from_ints(&[0]), &dom, &cod).unwrap();
        assert!(v.is_iso(), "{v}");
        assert!(v.inverted > 0);

        let y2 = line_lattice(&[("U", -1, 4)]);
        let x2 = line_lattice(&[("P", -2, 2)]);
        let declared = BTreeMap::from([("U".to_string(), "P".to_string())]);
        let sq = pullback_morphism(&map("x1^2"), &x2, &y2, &declared, &SamplingConfig::default()).unwrap();
        let (py, px) = (FunctionPresheaf::new(y2), FunctionPresheaf::new(x2));
        let dom: Vec<Germ> = ["x1", "x1^2"].iter().map(|t| at(&py, t, "U", 0)).collect();
        let cod: Vec<Germ> = ["x1", "x1^2"].iter().map(|t| at(&px, t, "P", 0)).collect();
        let v = stalkwise_iso_check(&sq, &px, &Point::from_ints(&[0]), &dom, &cod).unwrap();
        assert!(v.injective());
        assert_eq!(v.unmatched, vec![0]);
    }
}
