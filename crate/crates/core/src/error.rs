use thiserror::Error;

use crate::axioms::AxiomViolation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("contract `{contract}` does not involve {agent}")]
    ForeignContract { contract: String, agent: String },

    #[error("market has {count} contracts; at most {max} are supported")]
    TooManyContracts { count: usize, max: usize },

    #[error("hospital `{hospital}` has {count} contracts; at most {max} are supported")]
    TooManyHospitalContracts { hospital: String, count: usize, max: usize },

    #[error("{0} is not an allocation: two contracts share a doctor")]
    NotAnAllocation(String),

    #[error("ranking for hospital `{hospital}` is incomplete: {detail}")]
    IncompleteRanking { hospital: String, detail: String },

    #[error("preference for doctor `{doctor}` is invalid: {detail}")]
    InvalidPreference { doctor: String, detail: String },

    #[error("profile is invalid: {0}")]
    InvalidProfile(String),

    #[error("hospital preferences violate a required axiom: {0}")]
    AxiomViolated(Box<AxiomViolation>),

    #[error("invalid quantile: {0}")]
    InvalidQuantile(String),

    #[error("invalid quota: {0}")]
    InvalidQuota(String),

    #[error("table rule has no entry for the requested profile")]
    MissingTableEntry,

    #[error("assembled quantile allocation is not stable: {0}")]
    UnstableQuantile(String),

    #[error("enumeration needs {required} rule evaluations, above the budget of {budget}")]
    Guardrail { required: u128, budget: u64 },

    #[error("misreport is not a manipulation at the given truthful preference")]
    NotAManipulation,

    #[error("outcome set is empty")]
    EmptyOutcomes,

    #[error("rule cannot be evaluated on any profile with the given report")]
    NoCoverage,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
