use std::collections::BTreeMap;
use std::fmt;

use super::{OpenLattice, SheafError, EMPTY_OPEN};
use crate::corners::ModelSpace;
use crate::expr::{canonicalize, evaluate, expr_equal_on, EqualityVerdict, Expr, ExprError, Poly};
use crate::sampling::SamplingConfig;

/// A function `expr` regarded as an element of `O(domain)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Section {
    pub expr: Expr,
    pub domain: String,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.expr, self.domain)
    }
}

/// The structure presheaf `U -> C^inf(U)` over a lattice of opens.
///
/// Restriction is formal (the expression is kept, the domain shrinks).
/// `overrides` perturbs individual restriction maps `p^U_V(s) = s + delta`,
/// which is only useful for building deliberately broken presheaves.
#[derive(Clone, Debug)]
pub struct FunctionPresheaf {
    lattice: OpenLattice,
    overrides: BTreeMap<(String, String), Expr>,
    sampling: SamplingConfig,
}

impl FunctionPresheaf {
    pub fn new(lattice: OpenLattice) -> Self {
        FunctionPresheaf { lattice, overrides: BTreeMap::new(), sampling: SamplingConfig::default() }
    }

    pub fn with_sampling(mut self, sampling: SamplingConfig) -> Self {
        self.sampling = sampling;
        self
    }

    /// Replaces `p^U_V` by `s -> s + delta`.
    pub fn with_restriction_override(mut self, u: &str, v: &str, delta: Expr) -> Result<Self, SheafError> {
        if !self.lattice.leq(v, u) {
            return Err(SheafError::NotIncluded { v: v.into(), u: u.into() });
        }
        self.overrides.insert((u.to_string(), v.to_string()), delta);
        Ok(self)
    }

    pub fn lattice(&self) -> &OpenLattice {
        &self.lattice
    }

    pub fn ambient(&self) -> ModelSpace {
        self.lattice.ambient()
    }

    pub fn sampling(&self) -> &SamplingConfig {
        &self.sampling
    }

    /// Validates and builds a section over `domain`.
    pub fn section(&self, expr: Expr, domain: &str) -> Result<Section, SheafError> {
        let region = self.lattice.region(domain)?;
        expr.check_dimension(self.ambient().n)
            .map_err(|source| SheafError::InvalidSection { domain: domain.into(), source })?;
        if domain == EMPTY_OPEN {
            return Ok(Section { expr: Expr::zero(), domain: domain.into() });
        }
        if !Poly::from_expr(&expr).is_polynomial() {
            for p in region.sample_region().points(self.sampling.count, self.sampling.seed) {
                if let Err(ExprError::DivisionByZero) = evaluate(&expr, &p) {
                    return Err(SheafError::Singular { domain: domain.into(), point: p.to_string() });
                }
            }
        }
        Ok(Section { expr, domain: domain.into() })
    }

    pub fn zero_section(&self, domain: &str) -> Result<Section, SheafError> {
        self.section(Expr::zero(), domain)
    }

    /// `s|_V`.
    pub fn restrict(&self, s: &Section, v: &str) -> Result<Section, SheafError> {
        self.lattice.region(v)?;
        if !self.lattice.leq(v, &s.domain) {
            return Err(SheafError::NotIncluded { v: v.into(), u: s.domain.clone() });
        }
        if v == EMPTY_OPEN {
            return Ok(Section { expr: Expr::zero(), domain: v.into() });
        }
        let expr = match self.overrides.get(&(s.domain.clone(), v.to_string())) {
            Some(delta) => s.expr.clone().add(delta.clone()),
            None => s.expr.clone(),
        };
        Ok(Section { expr, domain: v.into() })
    }

    /// Compares two sections over the same open.
    pub fn sections_equal(&self, a: &Section, b: &Section) -> Result<EqualityVerdict, SheafError> {
        if a.domain != b.domain {
            return Err(SheafError::Mismatch(format!("sections over `{}` and `{}`", a.domain, b.domain)));
        }
        self.equal_on(&a.expr, &b.expr, &a.domain)
    }

    pub(crate) fn equal_on(&self, a: &Expr, b: &Expr, domain: &str) -> Result<EqualityVerdict, SheafError> {
        let region = self.lattice.region(domain)?;
        if region.is_empty() {
            return Ok(EqualityVerdict::ProvenEqual);
        }
        Ok(expr_equal_on(a, b, &region.sample_region(), &self.sampling))
    }

    fn is_zero_on(&self, s: &Section) -> Result<bool, SheafError> {
        Ok(self.equal_on(&s.expr, &Expr::zero(), &s.domain)?.is_equal())
    }

    /// Checks `p^U_W = p^V_W ∘ p^U_V` for every strict chain below each
    /// section's domain.
    pub fn check_composition(&self, sections: &[Section]) -> Result<CompositionReport, SheafError> {
        let mut report = CompositionReport::default();
        let chains = self.lattice.strict_chains();
        for (index, s) in sections.iter().enumerate() {
            for &(w, v, u) in chains.iter().filter(|c| c.2 == s.domain) {
                let two_step = self.restrict(&self.restrict(s, v)?, w)?;
                let direct = self.restrict(s, w)?;
                let verdict = self.sections_equal(&two_step, &direct)?;
                report.chains_checked += 1;
                if !verdict.is_equal() {
                    report.failures.push(ChainFailure {
                        section: index,
                        u: u.into(),
                        v: v.into(),
                        w: w.into(),
                        verdict,
                    });
                }
            }
        }
        Ok(report)
    }

    fn validate_cover(&self, cover: &[String], target: &str) -> Result<(), SheafError> {
        let region = self.lattice.region(target)?;
        for member in cover {
            self.lattice.region(member)?;
            if !self.lattice.leq(member, target) {
                return Err(SheafError::CoverMemberOutside { member: member.clone(), target: target.into() });
            }
        }
        let union = self.lattice.union_region(cover)?;
        if let Some(p) = region.point_outside(&union) {
            return Err(SheafError::NotACover { target: target.into(), point: p.to_string() });
        }
        Ok(())
    }

    /// Locality: if every `s|_{U_i}` vanishes then `s` vanishes.
    pub fn check_locality(&self, cover: &[String], target: &str, s: &Section) -> Result<LocalityOutcome, SheafError> {
        self.validate_cover(cover, target)?;
        if s.domain != target {
            return Err(SheafError::Mismatch(format!("section lives on `{}`, not `{target}`", s.domain)));
        }
        let mut all_zero = true;
        for member in cover {
            if !self.is_zero_on(&self.restrict(s, member)?)? {
                all_zero = false;
                break;
            }
        }
        let section_zero = self.is_zero_on(s)?;
        Ok(LocalityOutcome { restrictions_vanish: all_zero, section_vanishes: section_zero })
    }

    /// Gluing: compatible parts over a cover assemble into one section.
    pub fn glue(&self, cover: &[String], target: &str, parts: &[Section]) -> Result<Glued, SheafError> {
        self.validate_cover(cover, target)?;
        if parts.len() != cover.len() {
            return Err(SheafError::Mismatch(format!("{} parts for a cover of {}", parts.len(), cover.len())));
        }
        for (index, (part, member)) in parts.iter().zip(cover).enumerate() {
            if &part.domain != member {
                return Err(SheafError::PartDomain { index, expected: member.clone(), actual: part.domain.clone() });
            }
        }
        let mut sampled = false;
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let overlap = self.lattice.meet(&cover[i], &cover[j])?;
                let verdict =
                    self.sections_equal(&self.restrict(&parts[i], overlap)?, &self.restrict(&parts[j], overlap)?)?;
                if !verdict.is_equal() {
                    return Err(SheafError::OverlapMismatch { i, j, overlap: overlap.to_string() });
                }
                sampled |= matches!(verdict, EqualityVerdict::SampledEqual { .. });
            }
        }
        let Some(first) = parts.first() else {
            // the empty cover only covers the empty open
            return Ok(Glued { section: self.zero_section(target)?, sampled });
        };
        let glued = self.section(canonicalize(&first.expr), target)?;
        for (part, member) in parts.iter().zip(cover) {
            let verdict = self.sections_equal(&self.restrict(&glued, member)?, part)?;
            if !verdict.is_equal() {
                return Err(SheafError::NotRepresentable);
            }
            sampled |= matches!(verdict, EqualityVerdict::SampledEqual { .. });
        }
        Ok(Glued { section: glued, sampled })
    }

    /// Exactness of `0 -> F(U) -> prod F(U_i) => prod F(U_i ∩ U_j)` on a
    /// probe set: restriction is injective on distinct probes, and every
    /// compatible tuple assembled from probe restrictions glues.
    pub fn check_equalizer(
        &self,
        target: &str,
        cover: &[String],
        probes: &[Section],
    ) -> Result<EqualizerReport, SheafError> {
        self.validate_cover(cover, target)?;
        let mut report = EqualizerReport { probes: probes.len(), ..Default::default() };
        let restricted: Vec<Vec<Section>> =
            probes.iter().map(|s| cover.iter().map(|m| self.restrict(s, m)).collect()).collect::<Result<_, _>>()?;

        for i in 0..probes.len() {
            for j in i + 1..probes.len() {
                if self.sections_equal(&probes[i], &probes[j])?.is_equal() {
                    continue;
                }
                let mut same_tuple = true;
                for k in 0..cover.len() {
                    if !self.sections_equal(&restricted[i][k], &restricted[j][k])?.is_equal() {
                        same_tuple = false;
                        break;
                    }
                }
                if same_tuple {
                    report.injectivity_failures.push((i, j));
                }
            }
        }

        if probes.is_empty() {
            return Ok(report);
        }
        // every choice of one probe per cover member, capped
        let total = (probes.len() as u64).checked_pow(cover.len() as u32).unwrap_or(u64::MAX);
        let limit = total.min(EqualizerReport::TUPLE_LIMIT);
        for code in 0..limit {
            let mut c = code;
            let choice: Vec<usize> = (0..cover.len())
                .map(|_| {
                    let pick = (c % probes.len() as u64) as usize;
                    c /= probes.len() as u64;
                    pick
                })
                .collect();
            let parts: Vec<Section> = choice.iter().enumerate().map(|(k, &p)| restricted[p][k].clone()).collect();
            report.tuples += 1;
            match self.glue(cover, target, &parts) {
                Ok(_) => report.glued += 1,
                Err(SheafError::OverlapMismatch { .. }) => report.incompatible += 1,
                Err(e) => report.glue_failures.push(format!("tuple {choice:?}: {e}")),
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainFailure {
    pub section: usize,
    pub u: String,
    pub v: String,
    pub w: String,
    pub verdict: EqualityVerdict,
}

impl fmt::Display for ChainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}>{} section#{} {}", self.u, self.v, self.w, self.section, self.verdict)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompositionReport {
    pub chains_checked: usize,
    pub failures: Vec<ChainFailure>,
}

impl CompositionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalityOutcome {
    pub restrictions_vanish: bool,
    pub section_vanishes: bool,
}

impl LocalityOutcome {
    /// The axiom holds for this section unless the hypothesis holds and the
    /// conclusion fails.
    pub fn holds(&self) -> bool {
        !self.restrictions_vanish || self.section_vanishes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Glued {
    pub section: Section,
    /// Some overlap comparison needed the sampled fallback.
    pub sampled: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EqualizerReport {
    pub probes: usize,
    /// Pairs of distinct probes with identical restriction tuples.
    pub injectivity_failures: Vec<(usize, usize)>,
    pub tuples: usize,
    pub glued: usize,
    /// Tuples rejected for disagreeing on an overlap; not counterexamples.
    pub incompatible: usize,
    pub glue_failures: Vec<String>,
}

impl EqualizerReport {
    pub const TUPLE_LIMIT: u64 = 4096;

    pub fn passed(&self) -> bool {
        self.injectivity_failures.is_empty() && self.glue_failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corners::{OpenBox, Region};
    use crate::expr::parse;

    fn line_presheaf() -> FunctionPresheaf {
        let s = ModelSpace::euclidean(1);
        let open = |n: &str, lo, hi| (n.to_string(), Region::single(s, OpenBox::from_ints(&[(lo, hi)])).unwrap());
        let lattice =
            OpenLattice::new(s, vec![open("U", 0, 3), open("A", 0, 2), open("B", 1, 3), open("AB", 1, 2)]).unwrap();
        FunctionPresheaf::new(lattice)
    }

    fn cover() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn restriction_is_formal_and_checked() {
        let p = line_presheaf();
        let s = p.section(parse("x1^2", 1).unwrap(), "U").unwrap();
        assert_eq!(p.restrict(&s, "A").unwrap().expr, s.expr);
        let a = p.section(parse("x1", 1).unwrap(), "A").unwrap();
        assert!(matches!(p.restrict(&a, "B"), Err(SheafError::NotIncluded { .. })));
        assert!(p.check_composition(&[s]).unwrap().passed());
    }

    #[test]
    fn corrupted_restriction_is_reported() {
        let p = line_presheaf().with_restriction_override("U", "AB", Expr::one()).unwrap();
        let s = p.section(parse("x1 + 1", 1).unwrap(), "U").unwrap();
        let report = p.check_composition(&[s]).unwrap();
        assert!(!report.passed());
        assert!(report.failures.iter().all(|f| f.u == "U" && f.w == "AB"));
    }

    #[test]
    fn gluing_examples() {
        let p = line_presheaf();
        let parts = vec![p.section(Expr::var(1), "A").unwrap(), p.section(Expr::var(1), "B").unwrap()];
        let glued = p.glue(&cover(), "U", &parts).unwrap();
        assert_eq!(glued.section, Section { expr: Expr::var(1), domain: "U".into() });

        let bad = vec![p.section(Expr::var(1), "A").unwrap(), p.section(parse("x1 + 1", 1).unwrap(), "B").unwrap()];
        assert_eq!(p.glue(&cover(), "U", &bad), Err(SheafError::OverlapMismatch { i: 0, j: 1, overlap: "AB".into() }));
    }

    #[test]
    fn non_cover_rejected() {
        let p = line_presheaf();
        let parts = vec![p.section(Expr::var(1), "A").unwrap()];
        assert!(matches!(p.glue(&["A".into()], "U", &parts), Err(SheafError::NotACover { .. })));
    }

    #[test]
    fn locality_examples() {
        let p = line_presheaf();
        let zero = p.zero_section("U").unwrap();
        assert!(p.check_locality(&cover(), "U", &zero).unwrap().holds());
        let x = p.section(Expr::var(1), "U").unwrap();
        let outcome = p.check_locality(&cover(), "U", &x).unwrap();
        assert!(!outcome.restrictions_vanish && outcome.holds());
        let fake_zero = p.section(parse("x1*0", 1).unwrap(), "U").unwrap();
        let outcome = p.check_locality(&cover(), "U", &fake_zero).unwrap();
        assert!(outcome.restrictions_vanish && outcome.section_vanishes);
    }

    #[test]
    fn equalizer_on_small_probe_set() {
        let p = line_presheaf();
        let probes: Vec<Section> =
            ["0", "x1", "x1^2"].iter().map(|t| p.section(parse(t, 1).unwrap(), "U").unwrap()).collect();
        let report = p.check_equalizer("U", &cover(), &probes).unwrap();
        assert!(report.passed());
        assert_eq!(report.tuples, 9);
        assert_eq!(report.glued, 3);
        assert_eq!(report.incompatible, 6);
        let single = p.check_equalizer("U", &["U".into()], &probes).unwrap();
        assert!(single.passed());
        assert_eq!(single.glued, 3);
    }

    #[test]
    fn singular_section_rejected() {
        let p = line_presheaf();
        assert!(p.section(parse("1/(x1 + 5)", 1).unwrap(), "U").is_ok());
        assert!(matches!(p.section(parse("1/(x1 - x1)", 1).unwrap(), "U"), Err(SheafError::Singular { .. })));
    }
}
