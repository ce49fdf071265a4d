//! JSON manifests: model space, open lattice, sections, covers, maps,
//! bivector and fibre-product descriptors, validated on load.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::corners::{FibreProductDesc, GridSpec, ModelSpace, OpenBox, Region, SmoothMapDesc};
use crate::expr::{parse, parse_rational, Expr, Rational};
use crate::poisson::{BivectorField, BracketSheaf};
use crate::sampling::SamplingConfig;
use crate::sheaf::{FunctionPresheaf, OpenLattice, Section};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifestError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{location}: unresolved name `{name}`")]
    Unresolved { location: String, name: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

fn invalid(location: impl fmt::Display, message: impl fmt::Display) -> ManifestError {
    ManifestError::Invalid { location: location.to_string(), message: message.to_string() }
}

/// A bound written either as a JSON integer or as a rational string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    fn value(&self, location: &str) -> Result<Rational, ManifestError> {
        match self {
            Number::Int(n) => Ok(crate::expr::rat(*n)),
            Number::Text(t) => parse_rational(t).ok_or_else(|| invalid(location, format!("`{t}` is not a rational"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    expr: String,
    domain: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverride {
    from: String,
    to: String,
    delta: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCover {
    target: String,
    members: Vec<String>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GlueExpectation {
    Glue,
    Mismatch,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGluing {
    name: String,
    target: String,
    parts: Vec<String>,
    expect: GlueExpectation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    source: ModelSpace,
    target: ModelSpace,
    components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBivector {
    pi: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFibre {
    x: ModelSpace,
    y: ModelSpace,
    z: ModelSpace,
    f: Vec<String>,
    g: Vec<String>,
    x_box: Vec<(Number, Number)>,
    y_box: Vec<(Number, Number)>,
    step: Number,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPullback {
    name: String,
    map: String,
    #[serde(default)]
    preimages: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    model_space: ModelSpace,
    #[serde(default)]
    opens: BTreeMap<String, Vec<Vec<(Number, Number)>>>,
    #[serde(default)]
    inclusions: Vec<(String, String)>,
    #[serde(default)]
    restriction_overrides: Vec<RawOverride>,
    #[serde(default)]
    sections: BTreeMap<String, RawSection>,
    #[serde(default)]
    covers: Vec<RawCover>,
    #[serde(default)]
    gluings: Vec<RawGluing>,
    #[serde(default)]
    maps: BTreeMap<String, RawMap>,
    #[serde(default)]
    bivector: Option<RawBivector>,
    #[serde(default)]
    bracket_overrides: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    fibre_products: BTreeMap<String, RawFibre>,
    #[serde(default)]
    pullbacks: Vec<RawPullback>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverDecl {
    pub target: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GluingDecl {
    pub name: String,
    pub target: String,
    pub parts: Vec<String>,
    pub expect: GlueExpectation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibreDecl {
    pub desc: FibreProductDesc,
    pub grid: GridSpec,
}

/// Pullback of the manifest's own presheaf along a self-map.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackDecl {
    pub name: String,
    pub map: String,
    pub preimages: BTreeMap<String, String>,
}

/// A fully validated manifest.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub space: ModelSpace,
    pub presheaf: FunctionPresheaf,
    pub inclusions: Vec<(String, String)>,
    pub sections: BTreeMap<String, Section>,
    pub covers: Vec<CoverDecl>,
    pub gluings: Vec<GluingDecl>,
    pub maps: BTreeMap<String, SmoothMapDesc>,
    pub bracket: Option<BracketSheaf>,
    pub fibre_products: BTreeMap<String, FibreDecl>,
    pub pullbacks: Vec<PullbackDecl>,
}

impl Manifest {
    pub fn section(&self, name: &str) -> Result<&Section, ManifestError> {
        self.sections
            .get(name)
            .ok_or_else(|| ManifestError::Unresolved { location: "sections".into(), name: name.into() })
    }

    pub fn lattice(&self) -> &OpenLattice {
        self.presheaf.lattice()
    }
}

pub fn load_manifest(path: &Path, sampling: &SamplingConfig) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ManifestError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_manifest(&text, sampling)
}

fn expr_at(text: &str, n: usize, location: &str) -> Result<Expr, ManifestError> {
    parse(text, n).map_err(|e| invalid(location, e))
}

fn exprs_at(texts: &[String], n: usize, location: &str) -> Result<Vec<Expr>, ManifestError> {
    texts.iter().enumerate().map(|(i, t)| expr_at(t, n, &format!("{location}[{i}]"))).collect()
}

fn resolve_open(lattice: &OpenLattice, name: &str, location: &str) -> Result<(), ManifestError> {
    if lattice.has(name) {
        Ok(())
    } else {
        Err(ManifestError::Unresolved { location: location.into(), name: name.into() })
    }
}

fn window(raw: &[(Number, Number)], location: &str) -> Result<Vec<(Rational, Rational)>, ManifestError> {
    raw.iter()
        .enumerate()
        .map(|(i, (lo, hi))| {
            let at = format!("{location}[{i}]");
            Ok((lo.value(&at)?, hi.value(&at)?))
        })
        .collect()
}

fn bivector(
    space: ModelSpace,
    entries: &BTreeMap<String, String>,
    location: &str,
) -> Result<BivectorField, ManifestError> {
    let mut parsed = Vec::new();
    for (key, text) in entries {
        let at = format!("{location}.\"{key}\"");
        let index = key
            .split_once(',')
            .and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| invalid(&at, "component key must look like \"i,j\""))?;
        parsed.push((index, expr_at(text, space.n, &at)?));
    }
    BivectorField::from_entries(space, &parsed).map_err(|e| invalid(location, e))
}

pub fn parse_manifest(text: &str, sampling: &SamplingConfig) -> Result<Manifest, ManifestError> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|e| ManifestError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let space = raw.model_space;
    if space.k > space.n {
        return Err(invalid("model_space", format!("corner index {} exceeds dimension {}", space.k, space.n)));
    }
    let n = space.n;

    let mut opens = Vec::new();
    for (name, boxes) in &raw.opens {
        let at = format!("opens.{name}");
        let boxes = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| Ok(OpenBox::new(window(b, &format!("{at}[{i}]"))?)))
            .collect::<Result<Vec<_>, ManifestError>>()?;
        let region = Region::new(space, boxes).map_err(|e| invalid(&at, e))?;
        opens.push((name.clone(), region));
    }
    let lattice = OpenLattice::new(space, opens).map_err(|e| invalid("opens", e))?;

    for (i, (v, u)) in raw.inclusions.iter().enumerate() {
        let at = format!("inclusions[{i}]");
        resolve_open(&lattice, v, &at)?;
        resolve_open(&lattice, u, &at)?;
        lattice.validate_inclusion(v, u).map_err(|e| invalid(&at, e))?;
    }

    let mut presheaf = FunctionPresheaf::new(lattice.clone()).with_sampling(*sampling);
    for (i, o) in raw.restriction_overrides.iter().enumerate() {
        let at = format!("restriction_overrides[{i}]");
        resolve_open(&lattice, &o.from, &at)?;
        resolve_open(&lattice, &o.to, &at)?;
        let delta = expr_at(&o.delta, n, &format!("{at}.delta"))?;
        presheaf = presheaf.with_restriction_override(&o.from, &o.to, delta).map_err(|e| invalid(&at, e))?;
    }

    let mut sections = BTreeMap::new();
    for (name, s) in &raw.sections {
        let at = format!("sections.{name}");
        resolve_open(&lattice, &s.domain, &format!("{at}.domain"))?;
        let expr = expr_at(&s.expr, n, &format!("{at}.expr"))?;
        sections.insert(name.clone(), presheaf.section(expr, &s.domain).map_err(|e| invalid(&at, e))?);
    }

    let mut covers = Vec::new();
    for (i, c) in raw.covers.iter().enumerate() {
        let at = format!("covers[{i}]");
        resolve_open(&lattice, &c.target, &format!("{at}.target"))?;
        for m in &c.members {
            resolve_open(&lattice, m, &format!("{at}.members"))?;
        }
        covers.push(CoverDecl { target: c.target.clone(), members: c.members.clone() });
    }

    let mut gluings = Vec::new();
    for g in &raw.gluings {
        let at = format!("gluings.{}", g.name);
        resolve_open(&lattice, &g.target, &format!("{at}.target"))?;
        for p in &g.parts {
            if !sections.contains_key(p) {
                return Err(ManifestError::Unresolved { location: format!("{at}.parts"), name: p.clone() });
            }
        }
        gluings.push(GluingDecl {
            name: g.name.clone(),
            target: g.target.clone(),
            parts: g.parts.clone(),
            expect: g.expect,
        });
    }

    let mut maps = BTreeMap::new();
    for (name, m) in &raw.maps {
        let at = format!("maps.{name}");
        let components = exprs_at(&m.components, m.source.n, &format!("{at}.components"))?;
        maps.insert(name.clone(), SmoothMapDesc::new(m.source, m.target, components).map_err(|e| invalid(&at, e))?);
    }

    let bracket = match &raw.bivector {
        None => {
            if !raw.bracket_overrides.is_empty() {
                return Err(invalid("bracket_overrides", "declared without a bivector"));
            }
            None
        }
        Some(b) => {
            let mut sheaf = BracketSheaf::new(bivector(space, &b.pi, "bivector.pi")?);
            for (open, entries) in &raw.bracket_overrides {
                let at = format!("bracket_overrides.{open}");
                resolve_open(&lattice, open, &at)?;
                sheaf.overrides.insert(open.clone(), bivector(space, entries, &at)?);
            }
            Some(sheaf)
        }
    };

    let mut fibre_products = BTreeMap::new();
    for (name, f) in &raw.fibre_products {
        let at = format!("fibre_products.{name}");
        for (label, s) in [("x", f.x), ("y", f.y), ("z", f.z)] {
            if s.k > s.n {
                return Err(invalid(
                    format!("{at}.{label}"),
                    format!("corner index {} exceeds dimension {}", s.k, s.n),
                ));
            }
        }
        let fm = SmoothMapDesc::new(f.x, f.z, exprs_at(&f.f, f.x.n, &format!("{at}.f"))?)
            .map_err(|e| invalid(format!("{at}.f"), e))?;
        let gm = SmoothMapDesc::new(f.y, f.z, exprs_at(&f.g, f.y.n, &format!("{at}.g"))?)
            .map_err(|e| invalid(format!("{at}.g"), e))?;
        let desc = FibreProductDesc::new(fm, gm).map_err(|e| invalid(&at, e))?;
        let grid = GridSpec {
            x_box: window(&f.x_box, &format!("{at}.x_box"))?,
            y_box: window(&f.y_box, &format!("{at}.y_box"))?,
            step: f.step.value(&format!("{at}.step"))?,
        };
        fibre_products.insert(name.clone(), FibreDecl { desc, grid });
    }

    let mut pullbacks = Vec::new();
    for p in &raw.pullbacks {
        let at = format!("pullbacks.{}", p.name);
        let Some(m) = maps.get(&p.map) else {
            return Err(ManifestError::Unresolved { location: format!("{at}.map"), name: p.map.clone() });
        };
        if m.source != space || m.target != space {
            return Err(invalid(&at, format!("map `{}` must be a self-map of {space}", p.map)));
        }
        for (u, v) in &p.preimages {
            resolve_open(&lattice, u, &format!("{at}.preimages"))?;
            resolve_open(&lattice, v, &format!("{at}.preimages"))?;
        }
        pullbacks.push(PullbackDecl { name: p.name.clone(), map: p.map.clone(), preimages: p.preimages.clone() });
    }

    Ok(Manifest {
        space,
        presheaf,
        inclusions: raw.inclusions,
        sections,
        covers,
        gluings,
        maps,
        bracket,
        fibre_products,
        pullbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Manifest, ManifestError> {
        parse_manifest(text, &SamplingConfig::default())
    }

    #[test]
    fn minimal_manifest() {
        let m = load(r#"{"model_space": {"n": 2, "k": 1}}"#).unwrap();
        assert!(m.lattice().is_empty());
        assert!(m.bracket.is_none());
    }

    #[test]
    fn json_errors_carry_location() {
        match load("{\n  \"model_space\": {\"n\": 2,, }\n}") {
            Err(ManifestError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unresolved_open() {
        let err = load(
            r#"{"model_space": {"n": 1, "k": 0},
                "opens": {"U": [[[0, 1]]]},
                "sections": {"f": {"expr": "x1", "domain": "V"}}}"#,
        )
        .unwrap_err();
        assert_eq!(err, ManifestError::Unresolved { location: "sections.f.domain".into(), name: "V".into() });
    }

    #[test]
    fn bounds_accept_rational_strings() {
        let m = load(r#"{"model_space": {"n": 1, "k": 1}, "opens": {"U": [[["1/2", "5/2"]]]}}"#).unwrap();
        assert!(m.lattice().has("U"));
    }

    #[test]
    fn contradicted_inclusion() {
        let err = load(
            r#"{"model_space": {"n": 1, "k": 0},
                "opens": {"U": [[[0, 3]]], "V": [[[1, 2]]]},
                "inclusions": [["U", "V"]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::Invalid { ref location, .. } if location == "inclusions[0]"));
    }

    #[test]
    fn antisymmetry_conflict() {
        let err =
            load(r#"{"model_space": {"n": 2, "k": 0}, "bivector": {"pi": {"1,2": "x1", "2,1": "x1"}}}"#).unwrap_err();
        assert!(err.to_string().contains("not opposite"), "{err}");
    }
}
