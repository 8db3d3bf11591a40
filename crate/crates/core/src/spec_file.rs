//! JSON market files.
//!
//! ```json
//! {
//!   "doctors": ["d1", "d2"],
//!   "hospitals": ["h1", "h2"],
//!   "contracts": [{"id": "x", "doctor": "d1", "hospital": "h1"}, ...],
//!   "hospital_prefs": {
//!     "h1": {"ranking": [["x"], ["y"], []]},
//!     "h2": {"responsive": {"order": ["w"], "quota": 1}}
//!   },
//!   "doctor_profiles": {"main": {"d1": ["y", "x"], "d2": ["w"]}}
//! }
//! ```
//!
//! Rankings must list every allocation of the hospital's contracts, `[]`
//! being the empty one. Doctors missing from a profile find nothing acceptable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error;
use crate::market::{DoctorPreference, DoctorProfile, Market};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpecFile {
    pub doctors: Vec<String>,
    pub hospitals: Vec<String>,
    pub contracts: Vec<ContractSpec>,
    pub hospital_prefs: BTreeMap<String, HospitalPrefSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub doctor_profiles: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSpec {
    pub id: String,
    pub doctor: String,
    pub hospital: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HospitalPrefSpec {
    Ranking(Vec<Vec<String>>),
    Responsive(ResponsiveSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponsiveSpec {
    pub order: Vec<String>,
    pub quota: i64,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{context}: {source}")]
    Semantic {
        context: String,
        #[source]
        source: Error,
    },
}

/// A parsed market together with its named doctor profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketSpec {
    pub market: Market,
    pub profiles: BTreeMap<String, DoctorProfile>,
}

impl MarketSpec {
    pub fn profile(&self, name: &str) -> Result<&DoctorProfile, SpecError> {
        self.profiles.get(name).ok_or_else(|| SpecError::Semantic {
            context: "profile lookup".into(),
            source: Error::UnknownId {
                kind: "profile",
                id: name.to_owned(),
            },
        })
    }
}

pub fn parse_market(path: impl AsRef<Path>) -> Result<MarketSpec, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_market_str(&text)
}

pub fn parse_market_str(text: &str) -> Result<MarketSpec, SpecError> {
    let file: MarketSpecFile = serde_json::from_str(text).map_err(|e| SpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_spec_file(&file)
}

pub fn from_spec_file(file: &MarketSpecFile) -> Result<MarketSpec, SpecError> {
    let semantic = |context: String| move |source: Error| SpecError::Semantic { context, source };

    let mut builder = Market::builder();
    for d in &file.doctors {
        builder = builder.doctor(d.clone());
    }
    for h in &file.hospitals {
        builder = builder.hospital(h.clone());
    }
    for c in &file.contracts {
        builder = builder.contract(c.id.clone(), c.doctor.clone(), c.hospital.clone());
    }
    for (hospital, pref) in &file.hospital_prefs {
        match pref {
            HospitalPrefSpec::Ranking(r) => builder.set_ranking(hospital.clone(), r.clone()),
            HospitalPrefSpec::Responsive(ResponsiveSpec { order, quota }) => {
                if *quota < 0 {
                    return Err(SpecError::Semantic {
                        context: format!("hospital_prefs.{hospital}.responsive.quota"),
                        source: Error::InvalidQuota(format!("quota {quota} is negative")),
                    });
                }
                builder.set_responsive(hospital.clone(), order.clone(), *quota as usize);
            }
        }
    }
    let market = builder.build().map_err(semantic("market".into()))?;

    let mut profiles = BTreeMap::new();
    for (name, lists) in &file.doctor_profiles {
        let ctx = format!("doctor_profiles.{name}");
        let mut prefs: Vec<DoctorPreference> = market.doctors().map(DoctorPreference::empty).collect();
        for (doctor, contracts) in lists {
            let d = market.doctor_id(doctor).ok_or_else(|| SpecError::Semantic {
                context: ctx.clone(),
                source: Error::UnknownId {
                    kind: "doctor",
                    id: doctor.clone(),
                },
            })?;
            let ids = contracts
                .iter()
                .map(|c| {
                    market.contract_id(c).ok_or_else(|| Error::UnknownId {
                        kind: "contract",
                        id: c.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(semantic(ctx.clone()))?;
            prefs[d.index()] = DoctorPreference::new(&market, d, ids).map_err(semantic(ctx.clone()))?;
        }
        let profile = DoctorProfile::new(&market, prefs).map_err(semantic(ctx.clone()))?;
        profiles.insert(name.clone(), profile);
    }
    Ok(MarketSpec { market, profiles })
}

/// Serialises a market with explicit rankings.
pub fn to_spec_file(market: &Market, profiles: &BTreeMap<String, DoctorProfile>) -> MarketSpecFile {
    let label = |c| market.contract_label(c).to_owned();
    MarketSpecFile {
        doctors: market.doctors().map(|d| market.doctor_name(d).to_owned()).collect(),
        hospitals: market.hospitals().map(|h| market.hospital_name(h).to_owned()).collect(),
        contracts: market
            .contracts()
            .iter()
            .map(|c| ContractSpec {
                id: c.name.clone(),
                doctor: market.doctor_name(c.doctor).to_owned(),
                hospital: market.hospital_name(c.hospital).to_owned(),
            })
            .collect(),
        hospital_prefs: market
            .hospitals()
            .map(|h| {
                let ranking = market
                    .hospital_pref(h)
                    .ranking()
                    .iter()
                    .map(|s| s.iter().map(label).collect())
                    .collect();
                (market.hospital_name(h).to_owned(), HospitalPrefSpec::Ranking(ranking))
            })
            .collect(),
        doctor_profiles: profiles
            .iter()
            .map(|(name, p)| {
                let lists = market
                    .doctors()
                    .map(|d| {
                        let acceptable = p.get(d).acceptable().iter().map(|&c| label(c)).collect();
                        (market.doctor_name(d).to_owned(), acceptable)
                    })
                    .collect();
                (name.clone(), lists)
            })
            .collect(),
    }
}

pub fn serialize_market(market: &Market, profiles: &BTreeMap<String, DoctorProfile>) -> String {
    let mut out = serde_json::to_string_pretty(&to_spec_file(market, profiles)).expect("spec file serialises");
    out.push('\n');
    out
}

/// SHA-256 of the canonical compact serialisation, hex encoded.
pub fn market_digest(market: &Market) -> String {
    let canonical = serde_json::to_string(&to_spec_file(market, &BTreeMap::new())).expect("spec file serialises");
    let hash = Sha256::digest(canonical.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}
