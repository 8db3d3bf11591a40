//! Market data model and the choice primitives everything else is built on.
//!
//! A [`Market`] fixes the doctors, the hospitals, the universal contract set
//! and one complete strict ranking per hospital over the allocations drawn
//! from its own contracts. Doctor preferences are not part of the market:
//! they are reports, collected in a [`DoctorProfile`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::axioms::AxiomViolation;
use crate::error::{Error, Result};
use crate::set::{ContractId, ContractSet, MAX_CONTRACTS};

/// Largest `|X_h|` for which a complete ranking of `A(X_h)` is accepted.
pub const MAX_HOSPITAL_CONTRACTS: usize = 16;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DoctorId(pub(crate) usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HospitalId(pub(crate) usize);

impl DoctorId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl HospitalId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Agent {
    Doctor(DoctorId),
    Hospital(HospitalId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contract {
    pub id: ContractId,
    pub name: String,
    pub doctor: DoctorId,
    pub hospital: HospitalId,
}

/// A contract set with at most one contract per doctor.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(ContractSet);

impl Allocation {
    pub const EMPTY: Allocation = Allocation(ContractSet::EMPTY);

    pub fn new(market: &Market, contracts: ContractSet) -> Result<Self> {
        if !contracts.is_subset(market.all_contracts()) {
            return Err(Error::UnknownId {
                kind: "contract",
                id: format!("{contracts:?}"),
            });
        }
        if !market.is_allocation(contracts) {
            return Err(Error::NotAnAllocation(market.format_set(contracts)));
        }
        Ok(Allocation(contracts))
    }

    pub(crate) fn new_unchecked(contracts: ContractSet) -> Self {
        Allocation(contracts)
    }

    pub fn contracts(self) -> ContractSet {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0.is_empty()
    }

    pub fn len(self) -> usize {
        self.0.len()
    }

    /// The contract of `doctor` in this allocation, if any.
    pub fn outcome_of(self, market: &Market, doctor: DoctorId) -> DoctorOutcome {
        match self.0.intersection(market.contracts_of_doctor(doctor)).first() {
            Some(c) => DoctorOutcome::Matched(c),
            None => DoctorOutcome::Unmatched,
        }
    }

    /// Contracts of `hospital` in this allocation.
    pub fn part_of(self, market: &Market, hospital: HospitalId) -> ContractSet {
        self.0.intersection(market.contracts_of_hospital(hospital))
    }

    pub fn canonical_cmp(self, other: Self) -> Ordering {
        self.0.canonical_cmp(other.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DoctorOutcome {
    Matched(ContractId),
    Unmatched,
}

impl DoctorOutcome {
    pub fn contract(self) -> Option<ContractId> {
        match self {
            DoctorOutcome::Matched(c) => Some(c),
            DoctorOutcome::Unmatched => None,
        }
    }

    pub fn as_set(self) -> ContractSet {
        match self {
            DoctorOutcome::Matched(c) => ContractSet::singleton(c),
            DoctorOutcome::Unmatched => ContractSet::EMPTY,
        }
    }
}

/// How a doctor's unacceptable contracts are ordered among themselves.
///
/// They always sit strictly below the unmatched outcome. Stable rules are
/// individually rational, so the choice only matters for diagnostics.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum TailOrder {
    /// Lower contract id is better.
    #[default]
    Ascending,
    Descending,
}

/// A doctor's strict order: the acceptable contracts, best first, then the
/// unmatched outcome, then every other own contract.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoctorPreference {
    owner: DoctorId,
    acceptable: Vec<ContractId>,
}

impl DoctorPreference {
    pub fn new(market: &Market, owner: DoctorId, acceptable: Vec<ContractId>) -> Result<Self> {
        market.check_doctor(owner)?;
        let own = market.contracts_of_doctor(owner);
        let mut seen = ContractSet::EMPTY;
        for &c in &acceptable {
            if !own.contains(c) {
                return Err(Error::InvalidPreference {
                    doctor: market.doctor_name(owner).to_owned(),
                    detail: format!("contract `{}` belongs to another doctor", market.contract_label(c)),
                });
            }
            if seen.contains(c) {
                return Err(Error::InvalidPreference {
                    doctor: market.doctor_name(owner).to_owned(),
                    detail: format!("contract `{}` listed twice", market.contract_label(c)),
                });
            }
            seen.insert(c);
        }
        Ok(DoctorPreference { owner, acceptable })
    }

    pub(crate) fn new_unchecked(owner: DoctorId, acceptable: Vec<ContractId>) -> Self {
        DoctorPreference { owner, acceptable }
    }

    /// The preference that finds every contract unacceptable.
    pub fn empty(owner: DoctorId) -> Self {
        DoctorPreference {
            owner,
            acceptable: Vec::new(),
        }
    }

    pub fn owner(&self) -> DoctorId {
        self.owner
    }

    pub fn acceptable(&self) -> &[ContractId] {
        &self.acceptable
    }

    pub fn is_acceptable(&self, contract: ContractId) -> bool {
        self.acceptable.contains(&contract)
    }

    /// `C_d(Y)`: the best acceptable contract of this doctor inside `available`.
    pub fn choose(&self, available: ContractSet) -> DoctorOutcome {
        self.acceptable
            .iter()
            .copied()
            .find(|&c| available.contains(c))
            .map_or(DoctorOutcome::Unmatched, DoctorOutcome::Matched)
    }

    fn key(&self, outcome: DoctorOutcome, tail: TailOrder) -> (u8, i64) {
        match outcome {
            DoctorOutcome::Unmatched => (1, 0),
            DoctorOutcome::Matched(c) => match self.acceptable.iter().position(|&a| a == c) {
                Some(pos) => (2, -(pos as i64)),
                None => match tail {
                    TailOrder::Ascending => (0, -(c.index() as i64)),
                    TailOrder::Descending => (0, c.index() as i64),
                },
            },
        }
    }

    /// `Greater` when `a` is strictly preferred to `b`.
    pub fn compare(&self, a: DoctorOutcome, b: DoctorOutcome) -> Ordering {
        self.compare_with_tail(a, b, TailOrder::Ascending)
    }

    pub fn compare_with_tail(&self, a: DoctorOutcome, b: DoctorOutcome, tail: TailOrder) -> Ordering {
        self.key(a, tail).cmp(&self.key(b, tail))
    }

    /// Strict preference `a P_d b`.
    pub fn prefers(&self, a: DoctorOutcome, b: DoctorOutcome) -> bool {
        self.compare(a, b) == Ordering::Greater
    }
}

/// A hospital's complete strict ranking of `A(X_h)`, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HospitalPreference {
    owner: HospitalId,
    domain: ContractSet,
    ranking: Vec<ContractSet>,
}

impl HospitalPreference {
    pub fn owner(&self) -> HospitalId {
        self.owner
    }

    /// `X_h`.
    pub fn domain(&self) -> ContractSet {
        self.domain
    }

    pub fn ranking(&self) -> &[ContractSet] {
        &self.ranking
    }

    /// `C_h(Y)`: the highest ranked allocation contained in `available`.
    pub fn choose(&self, available: ContractSet) -> ContractSet {
        let avail = available.intersection(self.domain);
        // the ranking is complete, so the empty set always matches
        self.ranking
            .iter()
            .copied()
            .find(|r| r.is_subset(avail))
            .unwrap_or(ContractSet::EMPTY)
    }

    /// Position in the ranking (0 = best). `None` for sets outside `A(X_h)`.
    pub fn position(&self, set: ContractSet) -> Option<usize> {
        self.ranking.iter().position(|&r| r == set)
    }

    /// `a ≻_h b`.
    pub fn prefers(&self, a: ContractSet, b: ContractSet) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(pa), Some(pb)) => pa < pb,
            _ => false,
        }
    }
}

#[derive(Default)]
pub(crate) struct AxiomCache {
    pub(crate) substitutable: OnceLock<Option<AxiomViolation>>,
    pub(crate) lad: OnceLock<Option<AxiomViolation>>,
}

impl Clone for AxiomCache {
    fn clone(&self) -> Self {
        AxiomCache {
            substitutable: self.substitutable.clone(),
            lad: self.lad.clone(),
        }
    }
}

/// Doctors, hospitals, contracts and the fixed hospital rankings.
#[derive(Clone)]
pub struct Market {
    doctors: Vec<String>,
    hospitals: Vec<String>,
    contracts: Vec<Contract>,
    hospital_prefs: Vec<HospitalPreference>,
    by_doctor: Vec<ContractSet>,
    by_hospital: Vec<ContractSet>,
    pub(crate) axiom_cache: AxiomCache,
}

impl PartialEq for Market {
    fn eq(&self, other: &Self) -> bool {
        self.doctors == other.doctors
            && self.hospitals == other.hospitals
            && self.contracts == other.contracts
            && self.hospital_prefs == other.hospital_prefs
    }
}

impl Eq for Market {}

impl fmt::Debug for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Market")
            .field("doctors", &self.doctors)
            .field("hospitals", &self.hospitals)
            .field("contracts", &self.contracts)
            .field("hospital_prefs", &self.hospital_prefs)
            .finish()
    }
}

impl Market {
    pub fn builder() -> MarketBuilder {
        MarketBuilder::default()
    }

    pub fn num_doctors(&self) -> usize {
        self.doctors.len()
    }

    pub fn num_hospitals(&self) -> usize {
        self.hospitals.len()
    }

    pub fn num_contracts(&self) -> usize {
        self.contracts.len()
    }

    pub fn doctors(&self) -> impl Iterator<Item = DoctorId> + '_ {
        (0..self.doctors.len()).map(DoctorId)
    }

    pub fn hospitals(&self) -> impl Iterator<Item = HospitalId> + '_ {
        (0..self.hospitals.len()).map(HospitalId)
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn contract(&self, id: ContractId) -> &Contract {
        &self.contracts[id.index()]
    }

    /// `X`.
    pub fn all_contracts(&self) -> ContractSet {
        ContractSet::first_n(self.contracts.len())
    }

    pub fn contracts_of_doctor(&self, doctor: DoctorId) -> ContractSet {
        self.by_doctor[doctor.0]
    }

    pub fn contracts_of_hospital(&self, hospital: HospitalId) -> ContractSet {
        self.by_hospital[hospital.0]
    }

    pub fn hospital_pref(&self, hospital: HospitalId) -> &HospitalPreference {
        &self.hospital_prefs[hospital.0]
    }

    pub fn hospital_prefs(&self) -> &[HospitalPreference] {
        &self.hospital_prefs
    }

    pub fn doctor_name(&self, doctor: DoctorId) -> &str {
        &self.doctors[doctor.0]
    }

    pub fn hospital_name(&self, hospital: HospitalId) -> &str {
        &self.hospitals[hospital.0]
    }

    pub fn contract_label(&self, id: ContractId) -> &str {
        &self.contracts[id.index()].name
    }

    pub fn doctor_id(&self, name: &str) -> Option<DoctorId> {
        self.doctors.iter().position(|d| d == name).map(DoctorId)
    }

    pub fn hospital_id(&self, name: &str) -> Option<HospitalId> {
        self.hospitals.iter().position(|h| h == name).map(HospitalId)
    }

    pub fn contract_id(&self, name: &str) -> Option<ContractId> {
        self.contracts
            .iter()
            .position(|c| c.name == name)
            .map(ContractId::from_index)
    }

    /// Resolves a list of contract names into a set.
    pub fn contract_set(&self, names: &[&str]) -> Result<ContractSet> {
        names
            .iter()
            .map(|n| {
                self.contract_id(n).ok_or_else(|| Error::UnknownId {
                    kind: "contract",
                    id: (*n).to_owned(),
                })
            })
            .collect()
    }

    pub(crate) fn check_doctor(&self, doctor: DoctorId) -> Result<()> {
        if doctor.0 < self.doctors.len() {
            Ok(())
        } else {
            Err(Error::UnknownId {
                kind: "doctor",
                id: format!("#{}", doctor.0),
            })
        }
    }

    /// Renders a set as `{a, b}` using contract names.
    pub fn format_set(&self, set: ContractSet) -> String {
        let names: Vec<&str> = set.iter().map(|c| self.contract_label(c)).collect();
        format!("{{{}}}", names.join(", "))
    }

    pub fn format_outcome(&self, outcome: DoctorOutcome) -> String {
        match outcome {
            DoctorOutcome::Matched(c) => self.contract_label(c).to_owned(),
            DoctorOutcome::Unmatched => "∅".to_owned(),
        }
    }

    pub fn format_preference(&self, pref: &DoctorPreference) -> String {
        let mut parts: Vec<&str> = pref.acceptable().iter().map(|&c| self.contract_label(c)).collect();
        parts.push("∅");
        parts.join(",")
    }

    /// `Y_i`: the contracts of `Y` involving `agent`.
    pub fn restrict(&self, set: ContractSet, agent: Agent) -> Result<ContractSet> {
        match agent {
            Agent::Doctor(d) if d.0 < self.doctors.len() => Ok(set.intersection(self.by_doctor[d.0])),
            Agent::Hospital(h) if h.0 < self.hospitals.len() => Ok(set.intersection(self.by_hospital[h.0])),
            Agent::Doctor(d) => Err(Error::UnknownId {
                kind: "doctor",
                id: format!("#{}", d.0),
            }),
            Agent::Hospital(h) => Err(Error::UnknownId {
                kind: "hospital",
                id: format!("#{}", h.0),
            }),
        }
    }

    pub fn is_allocation(&self, set: ContractSet) -> bool {
        self.by_doctor
            .iter()
            .all(|&own| set.intersection(own).len() <= 1)
    }

    /// `A(Y)`: every allocation contained in `Y`, in canonical order.
    pub fn allocations_of(&self, set: ContractSet) -> Vec<Allocation> {
        let mut out = vec![ContractSet::EMPTY];
        for &own in &self.by_doctor {
            let options = set.intersection(own);
            if options.is_empty() {
                continue;
            }
            let mut next = Vec::with_capacity(out.len() * (options.len() + 1));
            for &partial in &out {
                next.push(partial);
                for c in options {
                    next.push(partial.with(c));
                }
            }
            out = next;
        }
        out.sort_by(|a, b| a.canonical_cmp(*b));
        out.into_iter().map(Allocation).collect()
    }

    /// `|A(Y)|` without materialising it.
    pub fn count_allocations(&self, set: ContractSet) -> u128 {
        self.by_doctor
            .iter()
            .map(|&own| 1 + set.intersection(own).len() as u128)
            .product()
    }

    /// `C_h(Y)` for the market's ranking of `hospital`.
    pub fn choice_hospital(&self, hospital: HospitalId, set: ContractSet) -> Allocation {
        Allocation(self.hospital_prefs[hospital.0].choose(set))
    }

    /// `C_H(Y)`.
    pub fn choice_hospitals_all(&self, set: ContractSet) -> ContractSet {
        self.hospital_prefs
            .iter()
            .fold(ContractSet::EMPTY, |acc, pref| acc.union(pref.choose(set)))
    }

    /// `C_D(Y)` under the reported profile.
    pub fn choice_doctors_all(&self, profile: &DoctorProfile, set: ContractSet) -> ContractSet {
        profile
            .prefs
            .iter()
            .fold(ContractSet::EMPTY, |acc, pref| acc.union(pref.choose(set).as_set()))
    }
}

/// `C_d(Y)`.
pub fn choice_doctor(pref: &DoctorPreference, set: ContractSet) -> DoctorOutcome {
    pref.choose(set)
}

/// `C_h(Y)` for an explicit ranking.
pub fn choice_hospital(pref: &HospitalPreference, set: ContractSet) -> ContractSet {
    pref.choose(set)
}

#[derive(Clone, Debug, Default)]
pub struct MarketBuilder {
    doctors: Vec<String>,
    hospitals: Vec<String>,
    contracts: Vec<(String, String, String)>,
    rankings: HashMap<String, RankingSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum RankingSpec {
    Explicit(Vec<Vec<String>>),
    Responsive { order: Vec<String>, quota: usize },
}

impl MarketBuilder {
    pub fn doctor(mut self, name: impl Into<String>) -> Self {
        self.doctors.push(name.into());
        self
    }

    pub fn hospital(mut self, name: impl Into<String>) -> Self {
        self.hospitals.push(name.into());
        self
    }

    pub fn contract(mut self, name: impl Into<String>, doctor: impl Into<String>, hospital: impl Into<String>) -> Self {
        self.contracts.push((name.into(), doctor.into(), hospital.into()));
        self
    }

    /// Complete ranking of `A(X_h)`, best first; `[]` is the empty allocation.
    pub fn ranking<S: AsRef<str>>(mut self, hospital: impl Into<String>, ranking: &[Vec<S>]) -> Self {
        let ranking = ranking
            .iter()
            .map(|set| set.iter().map(|s| s.as_ref().to_owned()).collect())
            .collect();
        self.rankings.insert(hospital.into(), RankingSpec::Explicit(ranking));
        self
    }

    /// Responsive ranking induced by a strict order over the hospital's
    /// contracts and a quota.
    pub fn responsive<S: AsRef<str>>(mut self, hospital: impl Into<String>, order: &[S], quota: usize) -> Self {
        let order = order.iter().map(|s| s.as_ref().to_owned()).collect();
        self.rankings
            .insert(hospital.into(), RankingSpec::Responsive { order, quota });
        self
    }

    pub fn set_ranking(&mut self, hospital: impl Into<String>, ranking: Vec<Vec<String>>) {
        self.rankings.insert(hospital.into(), RankingSpec::Explicit(ranking));
    }

    pub fn set_responsive(&mut self, hospital: impl Into<String>, order: Vec<String>, quota: usize) {
        self.rankings
            .insert(hospital.into(), RankingSpec::Responsive { order, quota });
    }

    pub fn build(self) -> Result<Market> {
        fn unique(kind: &'static str, names: &[String]) -> Result<()> {
            let mut seen = std::collections::HashSet::new();
            for n in names {
                if !seen.insert(n.as_str()) {
                    return Err(Error::DuplicateId { kind, id: n.clone() });
                }
            }
            Ok(())
        }
        unique("doctor", &self.doctors)?;
        unique("hospital", &self.hospitals)?;
        let contract_names: Vec<String> = self.contracts.iter().map(|c| c.0.clone()).collect();
        unique("contract", &contract_names)?;
        if self.contracts.len() > MAX_CONTRACTS {
            return Err(Error::TooManyContracts {
                count: self.contracts.len(),
                max: MAX_CONTRACTS,
            });
        }

        let mut contracts = Vec::with_capacity(self.contracts.len());
        let mut by_doctor = vec![ContractSet::EMPTY; self.doctors.len()];
        let mut by_hospital = vec![ContractSet::EMPTY; self.hospitals.len()];
        for (i, (name, doctor, hospital)) in self.contracts.iter().enumerate() {
            let d = self.doctors.iter().position(|x| x == doctor).ok_or_else(|| Error::UnknownId {
                kind: "doctor",
                id: doctor.clone(),
            })?;
            let h = self.hospitals.iter().position(|x| x == hospital).ok_or_else(|| Error::UnknownId {
                kind: "hospital",
                id: hospital.clone(),
            })?;
            let id = ContractId::from_index(i);
            by_doctor[d].insert(id);
            by_hospital[h].insert(id);
            contracts.push(Contract {
                id,
                name: name.clone(),
                doctor: DoctorId(d),
                hospital: HospitalId(h),
            });
        }

        for name in self.rankings.keys() {
            if !self.hospitals.contains(name) {
                return Err(Error::UnknownId {
                    kind: "hospital",
                    id: name.clone(),
                });
            }
        }

        let mut market = Market {
            doctors: self.doctors,
            hospitals: self.hospitals,
            contracts,
            hospital_prefs: Vec::new(),
            by_doctor,
            by_hospital,
            axiom_cache: AxiomCache::default(),
        };

        let mut prefs = Vec::with_capacity(market.hospitals.len());
        for h in market.hospitals() {
            let name = market.hospital_name(h).to_owned();
            let raw = self.rankings.get(&name).ok_or_else(|| Error::IncompleteRanking {
                hospital: name.clone(),
                detail: "no ranking given".into(),
            })?;
            let pref = match raw {
                RankingSpec::Explicit(raw) => market.resolve_ranking(h, raw)?,
                RankingSpec::Responsive { order, quota } => {
                    let ids = order
                        .iter()
                        .map(|c| {
                            market.contract_id(c).ok_or_else(|| Error::UnknownId {
                                kind: "contract",
                                id: c.clone(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    crate::axioms::generate_responsive(&market, h, &ids, *quota as i64)?
                }
            };
            prefs.push(pref);
        }
        market.hospital_prefs = prefs;
        Ok(market)
    }
}

impl Market {
    /// Validates a complete ranking of `A(X_h)` given as contract sets.
    pub fn hospital_preference(&self, h: HospitalId, ranking: Vec<ContractSet>) -> Result<HospitalPreference> {
        let raw: Vec<Vec<String>> = ranking
            .iter()
            .map(|s| s.iter().map(|c| self.contract_label(c).to_owned()).collect())
            .collect();
        self.resolve_ranking(h, &raw)
    }

    fn resolve_ranking(&self, h: HospitalId, raw: &[Vec<String>]) -> Result<HospitalPreference> {
        let name = self.hospital_name(h).to_owned();
        let domain = self.by_hospital[h.0];
        if domain.len() > MAX_HOSPITAL_CONTRACTS {
            return Err(Error::TooManyHospitalContracts {
                hospital: name,
                count: domain.len(),
                max: MAX_HOSPITAL_CONTRACTS,
            });
        }
        let mut ranking = Vec::with_capacity(raw.len());
        let mut seen = std::collections::HashSet::new();
        for entry in raw {
            let mut set = ContractSet::EMPTY;
            for c in entry {
                let id = self.contract_id(c).ok_or_else(|| Error::UnknownId {
                    kind: "contract",
                    id: c.clone(),
                })?;
                if !domain.contains(id) {
                    return Err(Error::ForeignContract {
                        contract: c.clone(),
                        agent: format!("hospital `{name}`"),
                    });
                }
                if set.contains(id) {
                    return Err(Error::IncompleteRanking {
                        hospital: name,
                        detail: format!("contract `{c}` repeated inside one entry"),
                    });
                }
                set.insert(id);
            }
            if !self.is_allocation(set) {
                return Err(Error::NotAnAllocation(self.format_set(set)));
            }
            if !seen.insert(set) {
                return Err(Error::IncompleteRanking {
                    hospital: name,
                    detail: format!("{} ranked twice", self.format_set(set)),
                });
            }
            ranking.push(set);
        }
        let expected = self.count_allocations(domain);
        if ranking.len() as u128 != expected {
            let missing = self
                .allocations_of(domain)
                .into_iter()
                .find(|a| !seen.contains(&a.contracts()))
                .map(|a| self.format_set(a.contracts()))
                .unwrap_or_default();
            return Err(Error::IncompleteRanking {
                hospital: name,
                detail: format!("{} of {} allocations ranked; missing {}", ranking.len(), expected, missing),
            });
        }
        Ok(HospitalPreference {
            owner: h,
            domain,
            ranking,
        })
    }

    /// Copy of this market with one hospital's ranking replaced.
    pub fn with_ranking(&self, hospital: HospitalId, ranking: Vec<ContractSet>) -> Result<Market> {
        let pref = self.hospital_preference(hospital, ranking)?;
        let mut next = Market {
            axiom_cache: AxiomCache::default(),
            ..self.clone()
        };
        next.hospital_prefs[hospital.0] = pref;
        Ok(next)
    }
}

/// One reported preference per doctor, indexed by doctor id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoctorProfile {
    prefs: Vec<DoctorPreference>,
}

impl DoctorProfile {
    pub fn new(market: &Market, prefs: Vec<DoctorPreference>) -> Result<Self> {
        if prefs.len() != market.num_doctors() {
            return Err(Error::InvalidProfile(format!(
                "{} preferences for {} doctors",
                prefs.len(),
                market.num_doctors()
            )));
        }
        for (i, p) in prefs.iter().enumerate() {
            if p.owner.0 != i {
                return Err(Error::InvalidProfile(format!(
                    "slot {} holds the preference of `{}`",
                    i,
                    market.doctor_name(p.owner)
                )));
            }
            // re-validate contract ownership against this market
            DoctorPreference::new(market, p.owner, p.acceptable.clone())?;
        }
        Ok(DoctorProfile { prefs })
    }

    pub(crate) fn new_unchecked(prefs: Vec<DoctorPreference>) -> Self {
        DoctorProfile { prefs }
    }

    /// Builds a profile from contract names; missing doctors list nothing.
    pub fn from_names(market: &Market, lists: &[(&str, &[&str])]) -> Result<Self> {
        let mut prefs: Vec<DoctorPreference> = market.doctors().map(DoctorPreference::empty).collect();
        for (doctor, names) in lists {
            let d = market.doctor_id(doctor).ok_or_else(|| Error::UnknownId {
                kind: "doctor",
                id: (*doctor).to_owned(),
            })?;
            let ids = names
                .iter()
                .map(|n| {
                    market.contract_id(n).ok_or_else(|| Error::UnknownId {
                        kind: "contract",
                        id: (*n).to_owned(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            prefs[d.0] = DoctorPreference::new(market, d, ids)?;
        }
        Ok(DoctorProfile { prefs })
    }

    pub fn get(&self, doctor: DoctorId) -> &DoctorPreference {
        &self.prefs[doctor.0]
    }

    pub fn prefs(&self) -> &[DoctorPreference] {
        &self.prefs
    }

    /// `(P'_d, P_{-d})`.
    pub fn with(&self, pref: DoctorPreference) -> DoctorProfile {
        let mut prefs = self.prefs.clone();
        let slot = pref.owner.0;
        prefs[slot] = pref;
        DoctorProfile { prefs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(m: &Market, names: &[&str]) -> ContractSet {
        m.contract_set(names).unwrap()
    }

    #[test]
    fn restrict_examples() {
        let m = fixtures::theorem2();
        let h1 = m.hospital_id("h1").unwrap();
        let d1 = m.doctor_id("d1").unwrap();
        let all = set(&m, &["x", "y", "w"]);
        assert_eq!(m.restrict(all, Agent::Hospital(h1)).unwrap(), set(&m, &["x", "y"]));
        assert_eq!(m.restrict(ContractSet::EMPTY, Agent::Doctor(d1)).unwrap(), ContractSet::EMPTY);
        assert_eq!(m.restrict(set(&m, &["w"]), Agent::Doctor(d1)).unwrap(), ContractSet::EMPTY);
        assert!(matches!(
            m.restrict(all, Agent::Doctor(DoctorId(7))),
            Err(Error::UnknownId { kind: "doctor", .. })
        ));
    }

    #[test]
    fn allocations_of_examples() {
        let m = fixtures::theorem2();
        assert_eq!(m.allocations_of(ContractSet::EMPTY), vec![Allocation::EMPTY]);
        let xy: Vec<_> = m
            .allocations_of(set(&m, &["x", "y"]))
            .into_iter()
            .map(|a| a.contracts())
            .collect();
        assert_eq!(xy, vec![ContractSet::EMPTY, set(&m, &["x"]), set(&m, &["y"])]);
        let xw: Vec<_> = m
            .allocations_of(set(&m, &["x", "w"]))
            .into_iter()
            .map(|a| a.contracts())
            .collect();
        assert_eq!(
            xw,
            vec![ContractSet::EMPTY, set(&m, &["x"]), set(&m, &["x", "w"]), set(&m, &["w"])]
        );
    }

    #[test]
    fn choice_doctor_examples() {
        let m = fixtures::theorem2();
        let d1 = m.doctor_id("d1").unwrap();
        let p1 = DoctorPreference::new(&m, d1, vec![m.contract_id("y").unwrap(), m.contract_id("x").unwrap()]).unwrap();
        assert_eq!(
            choice_doctor(&p1, set(&m, &["x", "y", "w"])),
            DoctorOutcome::Matched(m.contract_id("y").unwrap())
        );
        assert_eq!(choice_doctor(&p1, ContractSet::EMPTY), DoctorOutcome::Unmatched);
        let p1_mis = DoctorPreference::new(&m, d1, vec![m.contract_id("y").unwrap()]).unwrap();
        assert_eq!(choice_doctor(&p1_mis, set(&m, &["x", "w"])), DoctorOutcome::Unmatched);
    }

    #[test]
    fn choice_hospital_examples() {
        let m = fixtures::theorem2();
        let h1 = m.hospital_id("h1").unwrap();
        assert_eq!(m.choice_hospital(h1, set(&m, &["x", "y"])).contracts(), set(&m, &["x"]));
        assert_eq!(m.choice_hospital(h1, set(&m, &["w"])).contracts(), ContractSet::EMPTY);

        let m4 = fixtures::theorem4(3);
        let h1 = m4.hospital_id("h1").unwrap();
        assert_eq!(
            m4.choice_hospital(h1, set(&m4, &["x1", "x2"])).contracts(),
            set(&m4, &["x2"])
        );
    }

    #[test]
    fn aggregate_choice_examples() {
        let m = fixtures::theorem2();
        let p = DoctorProfile::from_names(&m, &[("d1", &["y", "x"]), ("d2", &["w"])]).unwrap();
        assert_eq!(m.choice_doctors_all(&p, m.all_contracts()), set(&m, &["y", "w"]));
        assert_eq!(m.choice_doctors_all(&p, ContractSet::EMPTY), ContractSet::EMPTY);
        assert_eq!(m.choice_hospitals_all(m.all_contracts()), set(&m, &["x", "w"]));
        assert_eq!(m.choice_hospitals_all(ContractSet::EMPTY), ContractSet::EMPTY);
        assert_eq!(m.choice_hospitals_all(set(&m, &["y", "w"])), set(&m, &["y", "w"]));
    }

    #[test]
    fn single_doctor_aggregate_equals_individual_choice() {
        let m = Market::builder()
            .doctor("d")
            .hospital("h")
            .contract("a", "d", "h")
            .contract("b", "d", "h")
            .ranking("h", &[vec!["a"], vec!["b"], vec![]])
            .build()
            .unwrap();
        let p = DoctorProfile::from_names(&m, &[("d", &["b", "a"])]).unwrap();
        let d = m.doctor_id("d").unwrap();
        for y in m.all_contracts().subsets() {
            assert_eq!(m.choice_doctors_all(&p, y), p.get(d).choose(y).as_set());
        }
    }

    #[test]
    fn outcome_comparison_tiers() {
        let m = fixtures::theorem4(3);
        let d1 = m.doctor_id("d1").unwrap();
        let ids: Vec<_> = ["x1", "x2", "x3"].iter().map(|n| m.contract_id(n).unwrap()).collect();
        let p = DoctorPreference::new(&m, d1, vec![ids[1]]).unwrap();
        let matched = DoctorOutcome::Matched;
        assert!(p.prefers(matched(ids[1]), DoctorOutcome::Unmatched));
        assert!(p.prefers(DoctorOutcome::Unmatched, matched(ids[0])));
        assert!(p.prefers(matched(ids[0]), matched(ids[2])));
        assert_eq!(
            p.compare_with_tail(matched(ids[0]), matched(ids[2]), TailOrder::Descending),
            Ordering::Less
        );
    }

    #[test]
    fn incomplete_ranking_is_rejected() {
        let err = Market::builder()
            .doctor("d")
            .hospital("h")
            .contract("a", "d", "h")
            .ranking("h", &[vec!["a"]])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::IncompleteRanking { .. }), "{err}");
    }

    #[test]
    fn non_allocation_in_ranking_is_rejected() {
        let err = Market::builder()
            .doctor("d")
            .hospital("h")
            .contract("a", "d", "h")
            .contract("b", "d", "h")
            .ranking("h", &[vec!["a", "b"], vec!["a"], vec!["b"], vec![]])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::NotAnAllocation(_)), "{err}");
    }

    #[test]
    fn allocation_rejects_shared_doctor() {
        let m = fixtures::theorem2();
        assert!(Allocation::new(&m, set(&m, &["x", "y"])).is_err());
        assert!(Allocation::new(&m, set(&m, &["x", "w"])).is_ok());
    }

    fn naive_allocations(m: &Market, y: ContractSet) -> Vec<ContractSet> {
        let mut out: Vec<ContractSet> = y.subsets().filter(|s| m.is_allocation(*s)).collect();
        out.sort_by(|a, b| a.canonical_cmp(*b));
        out
    }

    #[test]
    fn allocations_of_matches_filtered_powerset() {
        let m = Market::builder()
            .doctor("d1")
            .doctor("d2")
            .doctor("d3")
            .hospital("h")
            .hospital("k")
            .contract("a", "d1", "h")
            .contract("b", "d1", "k")
            .contract("c", "d2", "h")
            .contract("e", "d2", "k")
            .contract("f", "d2", "k")
            .contract("g", "d3", "k")
            .ranking("h", &[vec!["a", "c"], vec!["a"], vec!["c"], vec![]])
            .responsive("k", &["b", "e", "f", "g"], 3)
            .build()
            .unwrap();
        for y in m.all_contracts().subsets() {
            let fast: Vec<_> = m.allocations_of(y).into_iter().map(|a| a.contracts()).collect();
            assert_eq!(fast, naive_allocations(&m, y));
            assert_eq!(m.count_allocations(y), fast.len() as u128);
        }
    }
}
