//! Stable matching rules: doctor- and hospital-proposing deferred acceptance,
//! the brute-force stable set, stability predicates and quantile rules.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axioms::{ensure_lad, ensure_substitutable};
use crate::error::{Error, Result};
use crate::market::{Allocation, DoctorProfile, HospitalId, Market};
use crate::set::ContractSet;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Doctors,
    Hospitals,
}

/// One iteration of deferred acceptance.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaRound {
    /// Contracts not rejected so far (`X^t`).
    pub available: ContractSet,
    /// Offers made by the proposing side (`O^t`).
    pub offers: ContractSet,
    /// The receiving side's choice from the offers.
    pub accepted: ContractSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaTrace {
    pub side: Side,
    pub rounds: Vec<DaRound>,
    pub output: Allocation,
}

impl DaTrace {
    /// `T`.
    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    /// `O_A^t`: every offer made up to and including round `t` (1-based).
    pub fn cumulative_offers(&self, t: usize) -> ContractSet {
        self.rounds[..t]
            .iter()
            .fold(ContractSet::EMPTY, |acc, r| acc.union(r.offers))
    }
}

fn run_da(market: &Market, profile: &DoctorProfile, side: Side, mut trace: Option<&mut Vec<DaRound>>) -> Allocation {
    let mut available = market.all_contracts();
    loop {
        let (offers, accepted) = match side {
            Side::Doctors => {
                let offers = market.choice_doctors_all(profile, available);
                (offers, market.choice_hospitals_all(offers))
            }
            Side::Hospitals => {
                let offers = market.choice_hospitals_all(available);
                (offers, market.choice_doctors_all(profile, offers))
            }
        };
        if let Some(rounds) = trace.as_deref_mut() {
            rounds.push(DaRound {
                available,
                offers,
                accepted,
            });
        }
        if accepted == offers {
            return Allocation::new_unchecked(offers);
        }
        // at least one offer was rejected, so the available set shrinks
        available = available.difference(offers.difference(accepted));
    }
}

fn traced(market: &Market, profile: &DoctorProfile, side: Side) -> Result<DaTrace> {
    ensure_substitutable(market)?;
    let mut rounds = Vec::new();
    let output = run_da(market, profile, side, Some(&mut rounds));
    Ok(DaTrace { side, rounds, output })
}

/// Doctor-proposing deferred acceptance with its full round trace.
pub fn doctor_proposing_da(market: &Market, profile: &DoctorProfile) -> Result<DaTrace> {
    traced(market, profile, Side::Doctors)
}

/// Hospital-proposing deferred acceptance: the same loop with the roles of
/// the two sides swapped.
pub fn hospital_proposing_da(market: &Market, profile: &DoctorProfile) -> Result<DaTrace> {
    traced(market, profile, Side::Hospitals)
}

/// Output of doctor-proposing DA, without the trace.
pub fn doctor_optimal(market: &Market, profile: &DoctorProfile) -> Result<Allocation> {
    ensure_substitutable(market)?;
    Ok(run_da(market, profile, Side::Doctors, None))
}

/// Output of hospital-proposing DA, without the trace.
pub fn hospital_optimal(market: &Market, profile: &DoctorProfile) -> Result<Allocation> {
    ensure_substitutable(market)?;
    Ok(run_da(market, profile, Side::Hospitals, None))
}

/// `C_D(Y) = C_H(Y) = Y`.
pub fn is_individually_rational(allocation: Allocation, market: &Market, profile: &DoctorProfile) -> bool {
    let y = allocation.contracts();
    market.choice_doctors_all(profile, y) == y && market.choice_hospitals_all(y) == y
}

/// Contracts outside `Y` that both of their endpoints would pick from `Y ∪ {x}`.
pub fn blocking_contracts(allocation: Allocation, market: &Market, profile: &DoctorProfile) -> ContractSet {
    let y = allocation.contracts();
    market
        .all_contracts()
        .difference(y)
        .iter()
        .filter(|&x| {
            let with = y.with(x);
            let c = market.contract(x);
            profile.get(c.doctor).choose(with).contract() == Some(x)
                && market.hospital_pref(c.hospital).choose(with).contains(x)
        })
        .collect()
}

pub fn is_stable(allocation: Allocation, market: &Market, profile: &DoctorProfile) -> bool {
    is_individually_rational(allocation, market, profile) && blocking_contracts(allocation, market, profile).is_empty()
}

/// Every stable allocation, in canonical order. Works for any hospital
/// rankings; it is the trusted oracle for the proposing algorithms.
pub fn enumerate_stable(market: &Market, profile: &DoctorProfile) -> Vec<Allocation> {
    market
        .allocations_of(market.all_contracts())
        .into_iter()
        .filter(|&a| is_stable(a, market, profile))
        .collect()
}

/// The element of `stable` that every doctor weakly prefers to every other.
pub fn unanimous_doctor_best(market: &Market, profile: &DoctorProfile, stable: &[Allocation]) -> Option<Allocation> {
    stable.iter().copied().find(|best| {
        market.doctors().all(|d| {
            let pref = profile.get(d);
            stable
                .iter()
                .all(|other| !pref.prefers(other.outcome_of(market, d), best.outcome_of(market, d)))
        })
    })
}

/// The element of `stable` that every hospital weakly prefers to every other.
pub fn unanimous_hospital_best(market: &Market, stable: &[Allocation]) -> Option<Allocation> {
    let part = |a: &Allocation, h: HospitalId| a.part_of(market, h);
    stable.iter().copied().find(|best| {
        market.hospitals().all(|h| {
            let pref = market.hospital_pref(h);
            stable.iter().all(|other| !pref.prefers(part(other, h), part(best, h)))
        })
    })
}

/// Exact rational in `[0, 1]`, kept in lowest terms.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quantile {
    num: u64,
    den: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Quantile {
    pub const ZERO: Quantile = Quantile { num: 0, den: 1 };
    pub const ONE: Quantile = Quantile { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidQuantile("zero denominator".into()));
        }
        if num > den {
            return Err(Error::InvalidQuantile(format!("{num}/{den} exceeds 1")));
        }
        let g = gcd(num, den).max(1);
        Ok(Quantile {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    /// `⌈k·q⌉` in integer arithmetic, lifted to 1 when `q = 0`.
    pub fn position(self, k: usize) -> usize {
        let k = k as u128;
        let (num, den) = (self.num as u128, self.den as u128);
        let ceil = (k * num + den - 1) / den;
        ceil.max(1) as usize
    }
}

impl fmt::Display for Quantile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Quantile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|e| Error::InvalidQuantile(format!("`{s}`: {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Quantile::new(parse(n)?, parse(d)?),
            None => Quantile::new(parse(s)?, 1),
        }
    }
}

/// The q-quantile stable rule: each doctor gets the `⌈kq⌉`-th best of its
/// outcomes across the `k` stable allocations, counted with multiplicity.
pub fn quantile_rule(market: &Market, profile: &DoctorProfile, q: Quantile) -> Result<Allocation> {
    ensure_substitutable(market)?;
    ensure_lad(market)?;
    let stable = enumerate_stable(market, profile);
    if stable.is_empty() {
        return Err(Error::UnstableQuantile("no stable allocation exists".into()));
    }
    let position = q.position(stable.len());
    let mut joined = ContractSet::EMPTY;
    for d in market.doctors() {
        let pref = profile.get(d);
        let mut outcomes: Vec<_> = stable.iter().map(|a| a.outcome_of(market, d)).collect();
        outcomes.sort_by(|a, b| pref.compare(*b, *a));
        joined = joined.union(outcomes[position - 1].as_set());
    }
    let allocation = Allocation::new(market, joined)
        .map_err(|_| Error::UnstableQuantile(format!("{} is not an allocation", market.format_set(joined))))?;
    if !is_stable(allocation, market, profile) {
        return Err(Error::UnstableQuantile(format!(
            "{} is not stable",
            market.format_set(joined)
        )));
    }
    Ok(allocation)
}

/// An explicit profile-to-allocation map, possibly partial.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableRule {
    entries: HashMap<DoctorProfile, Allocation>,
}

impl TableRule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: DoctorProfile, allocation: Allocation) {
        self.entries.insert(profile, allocation);
    }

    pub fn get(&self, profile: &DoctorProfile) -> Option<Allocation> {
        self.entries.get(profile).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    DoctorOptimal,
    HospitalOptimal,
    Quantile(Quantile),
    Table(Arc<TableRule>),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::DoctorOptimal => f.write_str("doctor-optimal"),
            Rule::HospitalOptimal => f.write_str("hospital-optimal"),
            Rule::Quantile(q) => write!(f, "quantile:{q}"),
            Rule::Table(t) => write!(f, "table({} entries)", t.len()),
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doctor-optimal" => Ok(Rule::DoctorOptimal),
            "hospital-optimal" => Ok(Rule::HospitalOptimal),
            _ => match s.strip_prefix("quantile:") {
                Some(q) => Ok(Rule::Quantile(q.parse()?)),
                None => Err(Error::UnknownId {
                    kind: "rule",
                    id: s.to_owned(),
                }),
            },
        }
    }
}

impl Rule {
    /// Checks the market-level preconditions of this rule once.
    pub fn check_market(&self, market: &Market) -> Result<()> {
        match self {
            Rule::DoctorOptimal | Rule::HospitalOptimal => ensure_substitutable(market),
            Rule::Quantile(_) => ensure_substitutable(market).and_then(|_| ensure_lad(market)),
            Rule::Table(_) => Ok(()),
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self, Rule::Table(_))
    }
}

pub fn apply_rule(rule: &Rule, market: &Market, profile: &DoctorProfile) -> Result<Allocation> {
    match rule {
        Rule::DoctorOptimal => doctor_optimal(market, profile),
        Rule::HospitalOptimal => hospital_optimal(market, profile),
        Rule::Quantile(q) => quantile_rule(market, profile, *q),
        Rule::Table(table) => table.get(profile).ok_or(Error::MissingTableEntry),
    }
}
