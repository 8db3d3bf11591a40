//! Brute-force checkers for the conditions imposed on hospital rankings:
//! substitutability, the law of aggregate demand and responsiveness.
//!
//! Every checker scans the subset lattice of `X_h` exhaustively. Nested pairs
//! are reduced to single-contract removals: both substitutability and LAD hold
//! for every chain `Y ⊆ W` iff they hold for every `W - {y} ⊆ W`, so the
//! reported witness is always a one-step pair.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{HospitalId, HospitalPreference, Market};
use crate::set::{ContractId, ContractSet};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Substitutability,
    Lad,
    Responsiveness { quota: usize },
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Substitutability => f.write_str("substitutability"),
            Axiom::Lad => f.write_str("lad"),
            Axiom::Responsiveness { quota } => write!(f, "responsiveness(quota={quota})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Witness {
    /// Substitutability: `contract ∈ C(larger)` but `contract ∉ C(smaller)`.
    /// LAD: `|C(smaller)| > |C(larger)|` (`contract` is `None`).
    Nested {
        smaller: ContractSet,
        larger: ContractSet,
        contract: Option<ContractId>,
    },
    /// An allocation above the quota ranked above the empty set.
    OverQuota { set: ContractSet },
    /// `base ∪ {first} ≻ base ∪ {second}` disagrees with `{first} ≻ {second}`.
    /// `None` stands for the empty contract.
    Pairwise {
        base: ContractSet,
        first: Option<ContractId>,
        second: Option<ContractId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub hospital: HospitalId,
    pub witness: Witness,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails for hospital #{}: {:?}", self.axiom, self.hospital.index(), self.witness)
    }
}

impl AxiomViolation {
    /// Re-derives the violation from the ranking alone.
    pub fn replays(&self, pref: &HospitalPreference) -> bool {
        if pref.owner() != self.hospital {
            return false;
        }
        match (&self.axiom, &self.witness) {
            (
                Axiom::Substitutability,
                Witness::Nested {
                    smaller,
                    larger,
                    contract: Some(x),
                },
            ) => {
                smaller.is_subset(*larger)
                    && larger.is_subset(pref.domain())
                    && smaller.contains(*x)
                    && pref.choose(*larger).contains(*x)
                    && !pref.choose(*smaller).contains(*x)
            }
            (Axiom::Lad, Witness::Nested { smaller, larger, .. }) => {
                smaller.is_subset(*larger)
                    && larger.is_subset(pref.domain())
                    && pref.choose(*smaller).len() > pref.choose(*larger).len()
            }
            (Axiom::Responsiveness { quota }, Witness::OverQuota { set }) => {
                set.len() > *quota && pref.prefers(*set, ContractSet::EMPTY)
            }
            (Axiom::Responsiveness { quota }, Witness::Pairwise { base, first, second }) => {
                let lift = |c: Option<ContractId>| c.map_or(ContractSet::EMPTY, ContractSet::singleton);
                base.len() < *quota
                    && first != second
                    && pref.position(base.union(lift(*first))).is_some()
                    && pref.position(base.union(lift(*second))).is_some()
                    && pref.prefers(base.union(lift(*first)), base.union(lift(*second)))
                        != pref.prefers(lift(*first), lift(*second))
            }
            _ => false,
        }
    }
}

fn violation(pref: &HospitalPreference, axiom: Axiom, witness: Witness) -> AxiomViolation {
    AxiomViolation {
        axiom,
        hospital: pref.owner(),
        witness,
    }
}

fn scan_substitutable(pref: &HospitalPreference, all: bool) -> Vec<AxiomViolation> {
    let mut out = Vec::new();
    for larger in pref.domain().subsets() {
        let chosen = pref.choose(larger);
        for x in chosen {
            for y in larger.without(x) {
                let smaller = larger.without(y);
                if !pref.choose(smaller).contains(x) {
                    out.push(violation(
                        pref,
                        Axiom::Substitutability,
                        Witness::Nested {
                            smaller,
                            larger,
                            contract: Some(x),
                        },
                    ));
                    if !all {
                        return out;
                    }
                }
            }
        }
    }
    out
}

fn scan_lad(pref: &HospitalPreference, all: bool) -> Vec<AxiomViolation> {
    let mut out = Vec::new();
    for larger in pref.domain().subsets() {
        let size = pref.choose(larger).len();
        for y in larger {
            let smaller = larger.without(y);
            if pref.choose(smaller).len() > size {
                out.push(violation(
                    pref,
                    Axiom::Lad,
                    Witness::Nested {
                        smaller,
                        larger,
                        contract: None,
                    },
                ));
                if !all {
                    return out;
                }
            }
        }
    }
    out
}

fn scan_responsive(market: &Market, pref: &HospitalPreference, quota: usize, all: bool) -> Vec<AxiomViolation> {
    let axiom = Axiom::Responsiveness { quota };
    let mut out = Vec::new();
    let domain = pref.domain();
    let allocations = market.allocations_of(domain);
    for a in &allocations {
        let set = a.contracts();
        if set.len() > quota && pref.prefers(set, ContractSet::EMPTY) {
            out.push(violation(pref, axiom, Witness::OverQuota { set }));
            if !all {
                return out;
            }
        }
    }
    let lift = |c: Option<ContractId>| c.map_or(ContractSet::EMPTY, ContractSet::singleton);
    let items: Vec<Option<ContractId>> = std::iter::once(None).chain(domain.iter().map(Some)).collect();
    for (i, &first) in items.iter().enumerate() {
        for &second in &items[i + 1..] {
            let pair = lift(first).union(lift(second));
            let singles = pref.prefers(lift(first), lift(second));
            for a in &allocations {
                let base = a.contracts();
                if base.len() >= quota || !base.intersection(pair).is_empty() {
                    continue;
                }
                let with_first = base.union(lift(first));
                let with_second = base.union(lift(second));
                if !market.is_allocation(with_first) || !market.is_allocation(with_second) {
                    continue;
                }
                if pref.prefers(with_first, with_second) != singles {
                    out.push(violation(pref, axiom, Witness::Pairwise { base, first, second }));
                    if !all {
                        return out;
                    }
                }
            }
        }
    }
    out
}

/// First substitutability violation in canonical scan order, if any.
pub fn check_substitutable(pref: &HospitalPreference) -> Result<(), AxiomViolation> {
    scan_substitutable(pref, false).pop().map_or(Ok(()), Err)
}

pub fn substitutability_violations(pref: &HospitalPreference) -> Vec<AxiomViolation> {
    scan_substitutable(pref, true)
}

/// Law of aggregate demand: `|C(Y)| ≤ |C(Z)|` whenever `Y ⊆ Z`.
pub fn check_lad(pref: &HospitalPreference) -> Result<(), AxiomViolation> {
    scan_lad(pref, false).pop().map_or(Ok(()), Err)
}

pub fn lad_violations(pref: &HospitalPreference) -> Vec<AxiomViolation> {
    scan_lad(pref, true)
}

/// Responsiveness with a quota: sets above the quota are worse than `∅`, and
/// adding `x` rather than `y` to any small base follows `{x}` vs `{y}`.
pub fn check_responsive(market: &Market, pref: &HospitalPreference, quota: usize) -> Result<(), AxiomViolation> {
    scan_responsive(market, pref, quota, false).pop().map_or(Ok(()), Err)
}

pub fn responsiveness_violations(market: &Market, pref: &HospitalPreference, quota: usize) -> Vec<AxiomViolation> {
    scan_responsive(market, pref, quota, true)
}

fn rank_vector_cmp(a: &[usize], b: &[usize]) -> Ordering {
    // Less = better. A strict extension is better than its prefix.
    for i in 0.. {
        match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) if x != y => return x.cmp(y),
            (Some(_), Some(_)) => continue,
            (None, Some(_)) => return Ordering::Greater,
            (Some(_), None) => return Ordering::Less,
            (None, None) => return Ordering::Equal,
        }
    }
    unreachable!()
}

/// Canonical responsive completion of a contract order with a quota.
///
/// Allocations of size at most `quota` are ranked lexicographically by their
/// ascending rank vectors, an extension beating its own prefix, which places
/// `∅` last among them. Larger allocations follow in canonical id order.
pub fn generate_responsive(
    market: &Market,
    hospital: HospitalId,
    order: &[ContractId],
    quota: i64,
) -> Result<HospitalPreference> {
    if quota < 0 {
        return Err(Error::InvalidQuota(format!("quota {quota} is negative")));
    }
    let quota = quota as usize;
    let domain = market.contracts_of_hospital(hospital);
    let listed: ContractSet = order.iter().copied().collect();
    if listed != domain || order.len() != domain.len() {
        return Err(Error::IncompleteRanking {
            hospital: market.hospital_name(hospital).to_owned(),
            detail: "responsive order must list every contract of the hospital exactly once".into(),
        });
    }
    let rank = |c: ContractId| order.iter().position(|&o| o == c).unwrap();
    let (mut small, large): (Vec<ContractSet>, Vec<ContractSet>) = market
        .allocations_of(domain)
        .into_iter()
        .map(|a| a.contracts())
        .partition(|s| s.len() <= quota);
    small.sort_by_cached_key(|s| {
        let mut v: Vec<usize> = s.iter().map(rank).collect();
        v.sort_unstable();
        RankKey(v)
    });
    small.extend(large);
    market.hospital_preference(hospital, small)
}

#[derive(PartialEq, Eq)]
struct RankKey(Vec<usize>);

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_vector_cmp(&self.0, &other.0)
    }
}

/// Runs the requested checkers on every hospital and returns all first
/// violations, in hospital order.
pub fn validate_market(market: &Market, require: &[Axiom]) -> Result<(), Vec<AxiomViolation>> {
    let per_hospital: Vec<Vec<AxiomViolation>> = market
        .hospital_prefs()
        .par_iter()
        .map(|pref| {
            require
                .iter()
                .filter_map(|axiom| match axiom {
                    Axiom::Substitutability => check_substitutable(pref).err(),
                    Axiom::Lad => check_lad(pref).err(),
                    Axiom::Responsiveness { quota } => check_responsive(market, pref, *quota).err(),
                })
                .collect()
        })
        .collect();
    let all: Vec<AxiomViolation> = per_hospital.into_iter().flatten().collect();
    if all.is_empty() {
        Ok(())
    } else {
        Err(all)
    }
}

/// Cached substitutability check for the whole market.
pub fn ensure_substitutable(market: &Market) -> Result<()> {
    let cached = market.axiom_cache.substitutable.get_or_init(|| {
        market
            .hospital_prefs()
            .iter()
            .find_map(|p| check_substitutable(p).err())
    });
    match cached {
        None => Ok(()),
        Some(v) => Err(Error::AxiomViolated(Box::new(v.clone()))),
    }
}

/// Cached LAD check for the whole market.
pub fn ensure_lad(market: &Market) -> Result<()> {
    let cached = market
        .axiom_cache
        .lad
        .get_or_init(|| market.hospital_prefs().iter().find_map(|p| check_lad(p).err()));
    match cached {
        None => Ok(()),
        Some(v) => Err(Error::AxiomViolated(Box::new(v.clone()))),
    }
}
