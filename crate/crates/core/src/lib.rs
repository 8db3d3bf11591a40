//! Matching with contracts between doctors and hospitals.
//!
//! Markets, deferred acceptance in both directions, stable-set enumeration,
//! quantile stable rules, axiom checkers for hospital rankings and an
//! exhaustive auditor for obvious manipulations by doctors.

pub mod axioms;
pub mod error;
pub mod families;
pub mod fixtures;
pub mod manipulation;
pub mod market;
pub mod mechanisms;
pub mod set;
pub mod spec_file;

pub use axioms::{
    check_lad, check_responsive, check_substitutable, generate_responsive, validate_market, Axiom, AxiomViolation,
};
pub use error::{Error, Result};
pub use manipulation::{
    audit_nom, best_in, classify_obvious, enumerate_preferences, find_manipulations, option_set, worst_in,
    AuditConfig, AuditReport, Auditor, ManipulationWitness, Obviousness, Verdict,
};
pub use market::{
    Allocation, DoctorId, DoctorOutcome, DoctorPreference, DoctorProfile, HospitalId, HospitalPreference, Market,
    TailOrder,
};
pub use mechanisms::{
    apply_rule, doctor_optimal, doctor_proposing_da, enumerate_stable, hospital_optimal, hospital_proposing_da,
    is_stable, quantile_rule, DaTrace, Quantile, Rule, TableRule,
};
pub use set::{ContractId, ContractSet};
