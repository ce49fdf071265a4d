//! Presheaves and sheaves of smooth functions over a finite lattice of
//! opens: restriction, the locality and gluing axioms, the equalizer
//! sequence, stalks and germs, sheaf morphisms and pullbacks.

mod germ;
mod lattice;
mod morphism;
mod presheaf;

use thiserror::Error;

use crate::corners::{CornerError, ModelSpace};
use crate::expr::ExprError;

pub use germ::{germ_at, germ_equal, in_maximal_ideal, residue, residue_exact, Germ};
pub use lattice::{OpenLattice, EMPTY_OPEN};
pub use morphism::{
    check_morphism_square, pullback_morphism, stalkwise_iso_check, MorphismComponent, MorphismSquareReport,
    SheafMorphismDesc, SquareFailure, StalkIsoVerdict,
};
pub use presheaf::{
    ChainFailure, CompositionReport, EqualizerReport, FunctionPresheaf, Glued, LocalityOutcome, Section,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error("unknown open `{0}`")]
    UnknownOpen(String),
    #[error("open name `{0}` is reserved")]
    ReservedName(String),
    #[error("duplicate open `{0}`")]
    DuplicateOpen(String),
    #[error("open `{0}` has an empty region")]
    EmptyOpen(String),
    #[error("open `{open}` lives in {actual}, lattice ambient is {expected}")]
    AmbientMismatch { open: String, expected: ModelSpace, actual: ModelSpace },
    #[error("intersection of `{a}` and `{b}` is not a listed open")]
    NotIntersectionClosed { a: String, b: String },
    #[error("declared inclusion {v} <= {u} contradicted at {point}")]
    InclusionContradicted { v: String, u: String, point: String },
    #[error("`{v}` is not included in `{u}`")]
    NotIncluded { v: String, u: String },
    #[error("section over `{domain}`: {source}")]
    InvalidSection { domain: String, source: ExprError },
    #[error("section is singular at {point} in `{domain}`")]
    Singular { domain: String, point: String },
    #[error("cover of `{target}` misses {point}")]
    NotACover { target: String, point: String },
    #[error("cover member `{member}` is not inside `{target}`")]
    CoverMemberOutside { member: String, target: String },
    #[error("part {index} lives on `{actual}`, cover expects `{expected}`")]
    PartDomain { index: usize, expected: String, actual: String },
    #[error("parts {i} and {j} disagree on overlap `{overlap}`")]
    OverlapMismatch { i: usize, j: usize, overlap: String },
    #[error("compatible parts do not come from a single expression (cover overlaps are disconnected)")]
    NotRepresentable,
    #[error("point {point} is outside `{domain}`")]
    PointOutside { point: String, domain: String },
    #[error("germs are based at different points {a} and {b}")]
    DifferentBasePoints { a: String, b: String },
    #[error("no preimage declared or computable for target open `{0}`")]
    MissingPreimage(String),
    #[error("declared preimage `{source_open}` of `{target}` maps {point} outside the target")]
    PreimageMismatch { target: String, source_open: String, point: String },
    #[error("morphism has no component for open `{0}`")]
    MissingComponent(String),
    #[error("map and lattices disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Corner(#[from] CornerError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
