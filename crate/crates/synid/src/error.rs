//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("invalid node name `{0}`")]
    InvalidName(String),

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("directed part of the graph has a cycle through `{0}`")]
    Cycle(String),

    #[error("node `{0}` is already fixed")]
    AlreadyFixed(String),

    #[error("node `{0}` is not fixable")]
    NotFixable(String),

    #[error("no valid fixing sequence for district {{{}}}: stuck on {{{}}}", district.join(", "), stuck.join(", "))]
    NoValidSequence {
        district: Vec<String>,
        stuck: Vec<String>,
    },

    #[error("no module assigned to object `{0}`")]
    NoModule(String),

    #[error("no morphism named `{0}`")]
    NoMorphism(String),

    #[error("cannot hide `{0}`: its codomain is already the unit")]
    HideUnit(String),

    #[error("morphism `{0}` has no recorded interior")]
    NoInterior(String),

    #[error("conflicting modules for object `{object}`: `{left}` vs `{right}`")]
    ModuleConflict {
        object: String,
        left: String,
        right: String,
    },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("joint state space too large: {0} states (limit {1})")]
    StateSpaceTooLarge(u64, u64),

    #[error("no domain declared for variable `{0}`")]
    MissingDomain(String),

    #[error("no table for morphism `{0}`")]
    MissingTable(String),

    #[error("object `{0}` does not resolve to a model variable")]
    UnresolvableObject(String),

    #[error("table for `{0}` is not normalized: {1}")]
    NotNormalized(String, String),

    #[error("deterministic interpretation needs 0/1 tables: {0}")]
    NotFunctional(String),

    #[error("value `{value}` is not in the domain of `{var}`")]
    UnknownValue { var: String, value: String },

    #[error("missing value for input `{0}`")]
    MissingValue(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
