use std::collections::{BTreeMap, BTreeSet};

use super::SheafError;
use crate::corners::{ModelSpace, Region};

/// Name of the implicit empty open, present in every lattice.
pub const EMPTY_OPEN: &str = "empty";

/// Finite, intersection-closed family of named opens of a model space.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenLattice {
    ambient: ModelSpace,
    opens: BTreeMap<String, Region>,
    /// `(v, u)` with `v ⊆ u`, reflexive pairs included.
    leq: BTreeSet<(String, String)>,
    meet: BTreeMap<(String, String), String>,
}

impl OpenLattice {
    /// Builds the lattice, computing inclusions and intersections exactly
    /// from the box geometry. Fails if some pairwise intersection is not
    /// itself one of the listed opens.
    pub fn new(ambient: ModelSpace, opens: Vec<(String, Region)>) -> Result<Self, SheafError> {
        let mut map = BTreeMap::new();
        for (name, region) in opens {
            if name == EMPTY_OPEN {
                return Err(SheafError::ReservedName(name));
            }
            if region.ambient != ambient {
                return Err(SheafError::AmbientMismatch { open: name, expected: ambient, actual: region.ambient });
            }
            if region.is_empty() {
                return Err(SheafError::EmptyOpen(name));
            }
            if map.insert(name.clone(), region).is_some() {
                return Err(SheafError::DuplicateOpen(name));
            }
        }
        let names: Vec<&String> = map.keys().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if map[*a].same_set(&map[*b]) {
                    return Err(SheafError::DuplicateOpen(format!("{a} = {b}")));
                }
            }
        }
        map.insert(EMPTY_OPEN.to_string(), Region::empty(ambient));

        let mut leq = BTreeSet::new();
        for (v, rv) in &map {
            for (u, ru) in &map {
                if rv.is_subset_of(ru) {
                    leq.insert((v.clone(), u.clone()));
                }
            }
        }
        let mut meet = BTreeMap::new();
        for (a, ra) in &map {
            for (b, rb) in &map {
                let cut = ra.intersect(rb);
                let name = if cut.is_empty() {
                    Some(EMPTY_OPEN.to_string())
                } else {
                    map.iter().find(|(_, r)| r.same_set(&cut)).map(|(n, _)| n.clone())
                };
                match name {
                    Some(n) => {
                        meet.insert((a.clone(), b.clone()), n);
                    }
                    None => return Err(SheafError::NotIntersectionClosed { a: a.clone(), b: b.clone() }),
                }
            }
        }
        Ok(OpenLattice { ambient, opens: map, leq, meet })
    }

    pub fn ambient(&self) -> ModelSpace {
        self.ambient
    }

    /// All open names in lexicographic order, `empty` included.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.opens.keys().map(String::as_str)
    }

    /// Number of declared (non-empty) opens.
    pub fn len(&self) -> usize {
        self.opens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn region(&self, name: &str) -> Result<&Region, SheafError> {
        self.opens.get(name).ok_or_else(|| SheafError::UnknownOpen(name.to_string()))
    }

    pub fn has(&self, name: &str) -> bool {
        self.opens.contains_key(name)
    }

    pub fn leq(&self, v: &str, u: &str) -> bool {
        self.leq.contains(&(v.to_string(), u.to_string()))
    }

    pub fn meet(&self, a: &str, b: &str) -> Result<&str, SheafError> {
        self.meet
            .get(&(a.to_string(), b.to_string()))
            .map(String::as_str)
            .ok_or_else(|| SheafError::UnknownOpen(if self.has(a) { b.to_string() } else { a.to_string() }))
    }

    /// Strict inclusions `v < u`.
    pub fn strict_inclusions(&self) -> Vec<(&str, &str)> {
        self.leq.iter().filter(|(v, u)| v != u).map(|(v, u)| (v.as_str(), u.as_str())).collect()
    }

    /// Strict chains `w < v < u`.
    pub fn strict_chains(&self) -> Vec<(&str, &str, &str)> {
        let strict = self.strict_inclusions();
        let mut out = Vec::new();
        for &(v, u) in &strict {
            for &(w, v2) in &strict {
                if v2 == v {
                    out.push((w, v, u));
                }
            }
        }
        out.sort();
        out
    }

    /// Maximal non-empty opens.
    pub fn tops(&self) -> Vec<&str> {
        self.opens
            .keys()
            .filter(|u| u.as_str() != EMPTY_OPEN)
            .filter(|u| !self.opens.keys().any(|w| w != *u && self.leq(u, w)))
            .map(String::as_str)
            .collect()
    }

    /// Checks a declared inclusion `v ⊆ u` against the geometry.
    pub fn validate_inclusion(&self, v: &str, u: &str) -> Result<(), SheafError> {
        let (rv, ru) = (self.region(v)?, self.region(u)?);
        match rv.point_outside(ru) {
            None => Ok(()),
            Some(p) => Err(SheafError::InclusionContradicted { v: v.into(), u: u.into(), point: p.to_string() }),
        }
    }

    /// Union of the named opens, as a region.
    pub fn union_region(&self, names: &[String]) -> Result<Region, SheafError> {
        let regions = names.iter().map(|n| self.region(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(Region::union(&regions, self.ambient))
    }
}
