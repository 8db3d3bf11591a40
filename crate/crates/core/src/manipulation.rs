//! Exhaustive manipulation audits for doctors.
//!
//! An [`Auditor`] evaluates a rule once on every profile of the market's
//! preference domain and keeps the outcomes in a dense table indexed in mixed
//! radix (first doctor most significant). Option sets, manipulations and
//! obviousness are then read off the table. The standalone functions at the
//! bottom of the module recompute everything directly from the rule and are
//! used to replay witnesses independently of the table.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{Allocation, DoctorId, DoctorOutcome, DoctorPreference, DoctorProfile, Market, TailOrder};
use crate::mechanisms::{apply_rule, Rule};
use crate::set::{ContractId, ContractSet};
use crate::spec_file::market_digest;

/// Default cap on rule evaluations per audit.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// `Σ_{j=0..m} m!/(m-j)!`: the number of strict orders over every subset of
/// `m` contracts.
pub fn domain_size(m: usize) -> u128 {
    let mut total: u128 = 1;
    let mut term: u128 = 1;
    for j in 0..m {
        term = term.saturating_mul((m - j) as u128);
        total = total.saturating_add(term);
    }
    total
}

/// Every preference a doctor can report, in canonical order: by length, then
/// lexicographically by contract id.
#[derive(Clone, Debug)]
pub struct PreferenceDomain {
    doctor: DoctorId,
    members: Vec<DoctorPreference>,
    index: HashMap<Vec<ContractId>, usize>,
}

impl PreferenceDomain {
    pub fn doctor(&self) -> DoctorId {
        self.doctor
    }

    pub fn members(&self) -> &[DoctorPreference] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, pref: &DoctorPreference) -> Option<usize> {
        if pref.owner() != self.doctor {
            return None;
        }
        self.index.get(pref.acceptable()).copied()
    }
}

pub fn enumerate_preferences(market: &Market, doctor: DoctorId, budget: u64) -> Result<PreferenceDomain> {
    market.check_doctor(doctor)?;
    let own: Vec<ContractId> = market.contracts_of_doctor(doctor).to_vec();
    let size = domain_size(own.len());
    if size > budget as u128 {
        return Err(Error::Guardrail { required: size, budget });
    }
    let mut members = Vec::with_capacity(size as usize);
    for len in 0..=own.len() {
        let mut prefix = Vec::with_capacity(len);
        permutations(&own, len, &mut prefix, ContractSet::EMPTY, &mut |p| {
            members.push(DoctorPreference::new_unchecked(doctor, p.to_vec()))
        });
    }
    let index = members
        .iter()
        .enumerate()
        .map(|(i, p)| (p.acceptable().to_vec(), i))
        .collect();
    Ok(PreferenceDomain { doctor, members, index })
}

fn permutations(
    items: &[ContractId],
    len: usize,
    prefix: &mut Vec<ContractId>,
    used: ContractSet,
    emit: &mut impl FnMut(&[ContractId]),
) {
    if prefix.len() == len {
        emit(prefix);
        return;
    }
    for &c in items {
        if used.contains(c) {
            continue;
        }
        prefix.push(c);
        permutations(items, len, prefix, used.with(c), emit);
        prefix.pop();
    }
}

/// Every doctor profile of the market, first doctor most significant.
pub fn all_profiles(market: &Market, budget: u64) -> Result<Vec<DoctorProfile>> {
    let required = market
        .doctors()
        .map(|d| domain_size(market.contracts_of_doctor(d).len()))
        .fold(1u128, |acc, s| acc.saturating_mul(s));
    if required > budget as u128 {
        return Err(Error::Guardrail { required, budget });
    }
    let domains = market
        .doctors()
        .map(|d| enumerate_preferences(market, d, budget))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(domains.len())];
    for dom in &domains {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<DoctorPreference>| {
                dom.members().iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push(p.clone());
                    next
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(DoctorProfile::new_unchecked).collect())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Obviousness {
    NotObvious,
    /// The worst outcome under the misreport beats the worst under the truth.
    WorstCase,
    /// The best outcome under the misreport beats the best under the truth.
    BestCase,
    Both,
}

impl Obviousness {
    fn from_flags(worst: bool, best: bool) -> Self {
        match (worst, best) {
            (false, false) => Obviousness::NotObvious,
            (true, false) => Obviousness::WorstCase,
            (false, true) => Obviousness::BestCase,
            (true, true) => Obviousness::Both,
        }
    }

    pub fn is_obvious(self) -> bool {
        self != Obviousness::NotObvious
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Obviousness::NotObvious => "none",
            Obviousness::WorstCase => "worst_case",
            Obviousness::BestCase => "best_case",
            Obviousness::Both => "both",
        }
    }
}

/// Option sets of the truthful and the misreported preference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptionSets {
    pub truthful: Vec<DoctorOutcome>,
    pub misreport: Vec<DoctorOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationWitness {
    pub doctor: DoctorId,
    pub truth: DoctorPreference,
    pub misreport: DoctorPreference,
    /// Reports of the other doctors, in doctor order.
    pub subprofile: Vec<DoctorPreference>,
    pub truthful_outcome: DoctorOutcome,
    pub manipulated_outcome: DoctorOutcome,
    /// `None` until classified.
    pub obvious: Option<Obviousness>,
    pub option_sets: Option<OptionSets>,
    /// Canonical ordering key: truth, misreport and subprofile indices.
    pub indices: (usize, usize, usize),
}

impl ManipulationWitness {
    fn profile_with(&self, market: &Market, pref: &DoctorPreference) -> Result<DoctorProfile> {
        let mut prefs = self.subprofile.clone();
        prefs.insert(self.doctor.index(), pref.clone());
        DoctorProfile::new(market, prefs)
    }

    /// Recomputes both outcomes, and for classified witnesses both option
    /// sets, straight from the rule.
    pub fn replay(&self, rule: &Rule, market: &Market, budget: u64) -> Result<bool> {
        let truthful = apply_rule(rule, market, &self.profile_with(market, &self.truth)?)?.outcome_of(market, self.doctor);
        let manipulated =
            apply_rule(rule, market, &self.profile_with(market, &self.misreport)?)?.outcome_of(market, self.doctor);
        if truthful != self.truthful_outcome
            || manipulated != self.manipulated_outcome
            || !self.truth.prefers(manipulated, truthful)
        {
            return Ok(false);
        }
        let Some(obvious) = self.obvious else {
            return Ok(true);
        };
        let truthful_set = option_set(rule, market, self.doctor, &self.truth, budget)?;
        let misreport_set = option_set(rule, market, self.doctor, &self.misreport, budget)?;
        if let Some(sets) = &self.option_sets {
            if sets.truthful != truthful_set || sets.misreport != misreport_set {
                return Ok(false);
            }
        }
        let recomputed = obviousness_of(&self.truth, &truthful_set, &misreport_set, TailOrder::default())?;
        Ok(recomputed == obvious)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Not obviously manipulable.
    Nom,
    /// Obviously manipulable.
    Om,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Nom => "NOM",
            Verdict::Om => "OM",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditStats {
    pub profiles_total: u64,
    pub profiles_evaluated: u64,
    pub manipulations: u64,
    pub obvious_manipulations: u64,
    /// Set for table rules that do not cover every profile.
    pub partial_coverage: bool,
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub market_digest: String,
    pub rule: String,
    pub verdict: Verdict,
    /// One witness per manipulating (doctor, truth, misreport) triple, at the
    /// first improving subprofile. Only obvious ones unless all were requested.
    pub witnesses: Vec<ManipulationWitness>,
    pub stats: AuditStats,
    pub elapsed: Duration,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct AuditConfig {
    pub budget: u64,
    pub all_witnesses: bool,
    pub tail: TailOrder,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            budget: DEFAULT_BUDGET,
            all_witnesses: false,
            tail: TailOrder::Ascending,
        }
    }
}

const UNCOVERED: u64 = u64::MAX;

pub struct Auditor<'a> {
    market: &'a Market,
    rule: Rule,
    config: AuditConfig,
    domains: Vec<PreferenceDomain>,
    strides: Vec<usize>,
    total: usize,
    outcomes: Vec<u64>,
    /// Per doctor, per report index: deduplicated option set, canonical order.
    options: Vec<Vec<Vec<DoctorOutcome>>>,
}

impl<'a> Auditor<'a> {
    pub fn new(rule: Rule, market: &'a Market, config: AuditConfig) -> Result<Self> {
        rule.check_market(market)?;
        let required = market
            .doctors()
            .map(|d| domain_size(market.contracts_of_doctor(d).len()))
            .fold(1u128, |acc, s| acc.saturating_mul(s));
        if required > config.budget as u128 {
            return Err(Error::Guardrail {
                required,
                budget: config.budget,
            });
        }
        let domains = market
            .doctors()
            .map(|d| enumerate_preferences(market, d, config.budget))
            .collect::<Result<Vec<_>>>()?;
        let total = required as usize;
        let mut strides = vec![1usize; domains.len()];
        for i in (0..domains.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * domains[i + 1].len();
        }

        let outcomes = (0..total)
            .into_par_iter()
            .map(|idx| {
                let prefs = domains
                    .iter()
                    .zip(&strides)
                    .map(|(dom, &stride)| dom.members[(idx / stride) % dom.len()].clone())
                    .collect();
                let profile = DoctorProfile::new_unchecked(prefs);
                match apply_rule(&rule, market, &profile) {
                    Ok(a) => Ok(a.contracts().bits()),
                    Err(Error::MissingTableEntry) => Ok(UNCOVERED),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<u64>>>()?;

        let mut auditor = Auditor {
            market,
            rule,
            config,
            domains,
            strides,
            total,
            outcomes,
            options: Vec::new(),
        };
        auditor.options = market
            .doctors()
            .map(|d| {
                (0..auditor.domains[d.index()].len())
                    .map(|r| {
                        let set: BTreeSet<DoctorOutcome> =
                            (0..auditor.subprofile_count(d)).filter_map(|s| auditor.outcome(d, r, s)).collect();
                        set.into_iter().collect()
                    })
                    .collect()
            })
            .collect();
        Ok(auditor)
    }

    pub fn market(&self) -> &Market {
        self.market
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn domain(&self, doctor: DoctorId) -> &PreferenceDomain {
        &self.domains[doctor.index()]
    }

    pub fn profile_count(&self) -> usize {
        self.total
    }

    pub fn subprofile_count(&self, doctor: DoctorId) -> usize {
        self.total / self.domains[doctor.index()].len()
    }

    fn profile_index(&self, doctor: DoctorId, report: usize, sub: usize) -> usize {
        let stride = self.strides[doctor.index()];
        let radix = self.domains[doctor.index()].len();
        let high = sub / stride;
        let low = sub % stride;
        high * stride * radix + report * stride + low
    }

    /// Rule outcome of `doctor` reporting domain member `report` against
    /// subprofile `sub`; `None` when a table rule does not cover the profile.
    pub fn outcome(&self, doctor: DoctorId, report: usize, sub: usize) -> Option<DoctorOutcome> {
        let bits = self.outcomes[self.profile_index(doctor, report, sub)];
        if bits == UNCOVERED {
            return None;
        }
        Some(Allocation::new_unchecked(ContractSet::from_bits(bits)).outcome_of(self.market, doctor))
    }

    pub fn subprofile(&self, doctor: DoctorId, sub: usize) -> Vec<DoctorPreference> {
        let idx = self.profile_index(doctor, 0, sub);
        self.domains
            .iter()
            .zip(&self.strides)
            .filter(|(dom, _)| dom.doctor != doctor)
            .map(|(dom, &stride)| dom.members[(idx / stride) % dom.len()].clone())
            .collect()
    }

    fn report_index(&self, doctor: DoctorId, pref: &DoctorPreference) -> Result<usize> {
        self.domains
            .get(doctor.index())
            .and_then(|dom| dom.position(pref))
            .ok_or_else(|| Error::InvalidPreference {
                doctor: self.market.doctor_name(doctor).to_owned(),
                detail: "preference is not in the doctor's domain".into(),
            })
    }

    /// `O^φ(P_d)` as a deduplicated, canonically ordered list.
    pub fn option_set(&self, doctor: DoctorId, pref: &DoctorPreference) -> Result<&[DoctorOutcome]> {
        let r = self.report_index(doctor, pref)?;
        Ok(&self.options[doctor.index()][r])
    }

    fn prefers(&self, truth: &DoctorPreference, a: DoctorOutcome, b: DoctorOutcome) -> bool {
        truth.compare_with_tail(a, b, self.config.tail) == std::cmp::Ordering::Greater
    }

    fn first_improvement(&self, doctor: DoctorId, t: usize, m: usize) -> Option<usize> {
        let truth = &self.domains[doctor.index()].members[t];
        (0..self.subprofile_count(doctor)).find(|&s| match (self.outcome(doctor, t, s), self.outcome(doctor, m, s)) {
            (Some(honest), Some(lie)) => self.prefers(truth, lie, honest),
            _ => false,
        })
    }

    fn witness(&self, doctor: DoctorId, t: usize, m: usize, s: usize) -> ManipulationWitness {
        let dom = &self.domains[doctor.index()];
        ManipulationWitness {
            doctor,
            truth: dom.members[t].clone(),
            misreport: dom.members[m].clone(),
            subprofile: self.subprofile(doctor, s),
            truthful_outcome: self.outcome(doctor, t, s).expect("covered"),
            manipulated_outcome: self.outcome(doctor, m, s).expect("covered"),
            obvious: None,
            option_sets: None,
            indices: (t, m, s),
        }
    }

    /// Every (misreport, subprofile) pair where misreporting strictly helps.
    pub fn find_manipulations(&self, doctor: DoctorId, truth: &DoctorPreference) -> Result<Vec<ManipulationWitness>> {
        let t = self.report_index(doctor, truth)?;
        let mut out = Vec::new();
        for m in 0..self.domains[doctor.index()].len() {
            if m == t {
                continue;
            }
            for s in 0..self.subprofile_count(doctor) {
                if let (Some(honest), Some(lie)) = (self.outcome(doctor, t, s), self.outcome(doctor, m, s)) {
                    if self.prefers(truth, lie, honest) {
                        out.push(self.witness(doctor, t, m, s));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn is_manipulation(&self, doctor: DoctorId, truth: &DoctorPreference, misreport: &DoctorPreference) -> Result<bool> {
        let t = self.report_index(doctor, truth)?;
        let m = self.report_index(doctor, misreport)?;
        Ok(t != m && self.first_improvement(doctor, t, m).is_some())
    }

    fn classify_indices(&self, doctor: DoctorId, t: usize, m: usize) -> Obviousness {
        let truth = &self.domains[doctor.index()].members[t];
        let honest = &self.options[doctor.index()][t];
        let lie = &self.options[doctor.index()][m];
        obviousness_of(truth, honest, lie, self.config.tail).expect("manipulations have nonempty option sets")
    }

    /// Which of the worst-case and best-case comparisons favour the misreport.
    /// Only defined for actual manipulations.
    pub fn classify_obvious(
        &self,
        doctor: DoctorId,
        truth: &DoctorPreference,
        misreport: &DoctorPreference,
    ) -> Result<Obviousness> {
        if !self.is_manipulation(doctor, truth, misreport)? {
            return Err(Error::NotAManipulation);
        }
        let t = self.report_index(doctor, truth)?;
        let m = self.report_index(doctor, misreport)?;
        Ok(self.classify_indices(doctor, t, m))
    }

    pub fn audit(&self) -> AuditReport {
        self.audit_with(|_, _| true)
    }

    /// Audit restricted to misreports accepted by `allow`.
    pub fn audit_with(&self, allow: impl Fn(DoctorId, &DoctorPreference) -> bool + Sync) -> AuditReport {
        let started = Instant::now();
        let per_doctor: Vec<(Vec<ManipulationWitness>, u64, u64)> = self
            .market
            .doctors()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|d| {
                let dom = &self.domains[d.index()];
                let mut witnesses = Vec::new();
                let (mut manipulations, mut obvious_count) = (0u64, 0u64);
                for t in 0..dom.len() {
                    for m in 0..dom.len() {
                        if m == t || !allow(d, &dom.members[m]) {
                            continue;
                        }
                        let Some(s) = self.first_improvement(d, t, m) else {
                            continue;
                        };
                        manipulations += 1;
                        let obvious = self.classify_indices(d, t, m);
                        if obvious.is_obvious() {
                            obvious_count += 1;
                        }
                        if obvious.is_obvious() || self.config.all_witnesses {
                            let mut w = self.witness(d, t, m, s);
                            w.obvious = Some(obvious);
                            w.option_sets = Some(OptionSets {
                                truthful: self.options[d.index()][t].clone(),
                                misreport: self.options[d.index()][m].clone(),
                            });
                            witnesses.push(w);
                        }
                    }
                }
                (witnesses, manipulations, obvious_count)
            })
            .collect();

        let mut stats = AuditStats {
            profiles_total: self.total as u64,
            profiles_evaluated: self.outcomes.iter().filter(|&&o| o != UNCOVERED).count() as u64,
            ..AuditStats::default()
        };
        stats.partial_coverage = stats.profiles_evaluated < stats.profiles_total;
        let mut witnesses = Vec::new();
        for (w, manipulations, obvious) in per_doctor {
            witnesses.extend(w);
            stats.manipulations += manipulations;
            stats.obvious_manipulations += obvious;
        }
        let verdict = if stats.obvious_manipulations > 0 {
            Verdict::Om
        } else {
            Verdict::Nom
        };
        AuditReport {
            market_digest: market_digest(self.market),
            rule: self.rule.to_string(),
            verdict,
            witnesses,
            stats,
            elapsed: started.elapsed(),
        }
    }
}

fn extreme(pref: &DoctorPreference, outcomes: &[DoctorOutcome], tail: TailOrder, best: bool) -> Result<DoctorOutcome> {
    let cmp = |a: &&DoctorOutcome, b: &&DoctorOutcome| pref.compare_with_tail(**a, **b, tail);
    let found = if best {
        outcomes.iter().max_by(cmp)
    } else {
        outcomes.iter().min_by(cmp)
    };
    found.copied().ok_or(Error::EmptyOutcomes)
}

/// `W_d(P_d, Y)`: the worst outcome in the set under `pref`.
pub fn worst_in(pref: &DoctorPreference, outcomes: &[DoctorOutcome]) -> Result<DoctorOutcome> {
    extreme(pref, outcomes, TailOrder::default(), false)
}

/// `C_d(P_d, Y)` over outcomes: the best outcome in the set under `pref`.
pub fn best_in(pref: &DoctorPreference, outcomes: &[DoctorOutcome]) -> Result<DoctorOutcome> {
    extreme(pref, outcomes, TailOrder::default(), true)
}

fn obviousness_of(
    truth: &DoctorPreference,
    honest: &[DoctorOutcome],
    lie: &[DoctorOutcome],
    tail: TailOrder,
) -> Result<Obviousness> {
    let better = |a, b| truth.compare_with_tail(a, b, tail) == std::cmp::Ordering::Greater;
    let worst = better(extreme(truth, lie, tail, false)?, extreme(truth, honest, tail, false)?);
    let best = better(extreme(truth, lie, tail, true)?, extreme(truth, honest, tail, true)?);
    Ok(Obviousness::from_flags(worst, best))
}

fn other_domains(market: &Market, doctor: DoctorId, budget: u64) -> Result<Vec<PreferenceDomain>> {
    let required = market
        .doctors()
        .filter(|&d| d != doctor)
        .map(|d| domain_size(market.contracts_of_doctor(d).len()))
        .fold(1u128, |acc, s| acc.saturating_mul(s));
    if required > budget as u128 {
        return Err(Error::Guardrail { required, budget });
    }
    market
        .doctors()
        .filter(|&d| d != doctor)
        .map(|d| enumerate_preferences(market, d, budget))
        .collect()
}

/// `O^φ(P_d)` computed directly: the rule is evaluated against every
/// subprofile of the other doctors. Uncovered table entries are skipped.
pub fn option_set(
    rule: &Rule,
    market: &Market,
    doctor: DoctorId,
    pref: &DoctorPreference,
    budget: u64,
) -> Result<Vec<DoctorOutcome>> {
    if pref.owner() != doctor {
        return Err(Error::InvalidPreference {
            doctor: market.doctor_name(doctor).to_owned(),
            detail: "preference belongs to another doctor".into(),
        });
    }
    let others = other_domains(market, doctor, budget)?;
    let mut digits = vec![0usize; others.len()];
    let mut found = BTreeSet::new();
    loop {
        let mut prefs: Vec<DoctorPreference> = others
            .iter()
            .zip(&digits)
            .map(|(dom, &i)| dom.members[i].clone())
            .collect();
        prefs.insert(doctor.index(), pref.clone());
        match apply_rule(rule, market, &DoctorProfile::new_unchecked(prefs)) {
            Ok(a) => {
                found.insert(a.outcome_of(market, doctor));
            }
            Err(Error::MissingTableEntry) => {}
            Err(e) => return Err(e),
        }
        // odometer over the other doctors' domains, last doctor fastest
        let mut pos = others.len();
        loop {
            if pos == 0 {
                return Ok(found.into_iter().collect());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < others[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

pub fn find_manipulations(
    rule: &Rule,
    market: &Market,
    doctor: DoctorId,
    truth: &DoctorPreference,
    budget: u64,
) -> Result<Vec<ManipulationWitness>> {
    let config = AuditConfig {
        budget,
        ..AuditConfig::default()
    };
    Auditor::new(rule.clone(), market, config)?.find_manipulations(doctor, truth)
}

pub fn classify_obvious(
    rule: &Rule,
    market: &Market,
    doctor: DoctorId,
    truth: &DoctorPreference,
    misreport: &DoctorPreference,
    budget: u64,
) -> Result<Obviousness> {
    let config = AuditConfig {
        budget,
        ..AuditConfig::default()
    };
    Auditor::new(rule.clone(), market, config)?.classify_obvious(doctor, truth, misreport)
}

/// Quantifies over every doctor, truthful preference and misreport.
pub fn audit_nom(rule: &Rule, market: &Market, config: AuditConfig) -> Result<AuditReport> {
    Ok(Auditor::new(rule.clone(), market, config)?.audit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mechanisms::{Quantile, TableRule};
    use std::sync::Arc;

    fn pref(m: &Market, doctor: &str, names: &[&str]) -> DoctorPreference {
        let d = m.doctor_id(doctor).unwrap();
        DoctorPreference::new(m, d, names.iter().map(|n| m.contract_id(n).unwrap()).collect()).unwrap()
    }

    fn matched(m: &Market, name: &str) -> DoctorOutcome {
        DoctorOutcome::Matched(m.contract_id(name).unwrap())
    }

    #[test]
    fn domain_sizes() {
        assert_eq!(domain_size(0), 1);
        assert_eq!(domain_size(2), 5);
        assert_eq!(domain_size(3), 16);
        assert_eq!(domain_size(5), 326);
    }

    #[test]
    fn enumerate_small_domains() {
        let m = fixtures::theorem2();
        let d1 = m.doctor_id("d1").unwrap();
        let dom = enumerate_preferences(&m, d1, DEFAULT_BUDGET).unwrap();
        let shown: Vec<String> = dom.members().iter().map(|p| m.format_preference(p)).collect();
        assert_eq!(shown, vec!["∅", "x,∅", "y,∅", "x,y,∅", "y,x,∅"]);

        let lonely = Market::builder().doctor("d").hospital("h").ranking("h", &[Vec::<&str>::new()]).build().unwrap();
        let d = lonely.doctor_id("d").unwrap();
        assert_eq!(enumerate_preferences(&lonely, d, DEFAULT_BUDGET).unwrap().len(), 1);

        let m4 = fixtures::theorem4(3);
        let d1 = m4.doctor_id("d1").unwrap();
        let dom = enumerate_preferences(&m4, d1, DEFAULT_BUDGET).unwrap();
        assert_eq!(dom.len(), 16);
        let distinct: BTreeSet<_> = dom.members().iter().collect();
        assert_eq!(distinct.len(), 16);
        assert!(matches!(
            enumerate_preferences(&m4, d1, 10),
            Err(Error::Guardrail { required: 16, budget: 10 })
        ));
    }

    #[test]
    fn worst_and_best() {
        let m = fixtures::theorem2();
        let p1 = pref(&m, "d1", &["y", "x"]);
        let (x, y) = (matched(&m, "x"), matched(&m, "y"));
        assert_eq!(worst_in(&p1, &[y]).unwrap(), y);
        assert_eq!(worst_in(&p1, &[x, DoctorOutcome::Unmatched]).unwrap(), DoctorOutcome::Unmatched);
        assert_eq!(worst_in(&p1, &[x, y]).unwrap(), x);
        assert_eq!(best_in(&p1, &[y]).unwrap(), y);
        assert_eq!(best_in(&p1, &[x, y]).unwrap(), y);
        assert_eq!(best_in(&p1, &[DoctorOutcome::Unmatched]).unwrap(), DoctorOutcome::Unmatched);
        assert_eq!(worst_in(&p1, &[]), Err(Error::EmptyOutcomes));
        assert_eq!(best_in(&p1, &[]), Err(Error::EmptyOutcomes));
    }

    #[test]
    fn theorem2_option_sets_under_hospital_optimal() {
        let m = fixtures::theorem2();
        let d1 = m.doctor_id("d1").unwrap();
        let rule = Rule::HospitalOptimal;
        let truth = pref(&m, "d1", &["y", "x"]);
        let lie = pref(&m, "d1", &["y"]);
        assert_eq!(option_set(&rule, &m, d1, &truth, DEFAULT_BUDGET).unwrap(), vec![matched(&m, "x")]);
        assert_eq!(option_set(&rule, &m, d1, &lie, DEFAULT_BUDGET).unwrap(), vec![matched(&m, "y")]);

        let auditor = Auditor::new(rule.clone(), &m, AuditConfig::default()).unwrap();
        assert_eq!(auditor.option_set(d1, &truth).unwrap(), &[matched(&m, "x")]);
        let found = auditor.find_manipulations(d1, &truth).unwrap();
        let via_lie: Vec<_> = found.iter().filter(|w| w.misreport == lie).collect();
        // one witness per report of d2
        assert_eq!(via_lie.len(), 2);
        assert_eq!(
            classify_obvious(&rule, &m, d1, &truth, &lie, DEFAULT_BUDGET).unwrap(),
            Obviousness::Both
        );
    }

    #[test]
    fn single_doctor_option_set_is_the_rule_outcome() {
        let m = Market::builder()
            .doctor("d")
            .hospital("h")
            .contract("a", "d", "h")
            .ranking("h", &[vec!["a"], vec![]])
            .build()
            .unwrap();
        let d = m.doctor_id("d").unwrap();
        let p = pref(&m, "d", &["a"]);
        assert_eq!(option_set(&Rule::DoctorOptimal, &m, d, &p, 10).unwrap(), vec![matched(&m, "a")]);
    }

    #[test]
    fn strategy_proof_table_has_no_manipulations() {
        let m = Market::builder()
            .doctor("d")
            .hospital("h")
            .contract("a", "d", "h")
            .ranking("h", &[vec!["a"], vec![]])
            .build()
            .unwrap();
        let d = m.doctor_id("d").unwrap();
        let mut table = TableRule::new();
        let a = Allocation::new(&m, m.contract_set(&["a"]).unwrap()).unwrap();
        table.insert(DoctorProfile::from_names(&m, &[("d", &["a"])]).unwrap(), a);
        table.insert(DoctorProfile::from_names(&m, &[]).unwrap(), Allocation::EMPTY);
        let rule = Rule::Table(Arc::new(table));
        for truth in enumerate_preferences(&m, d, 10).unwrap().members() {
            assert!(find_manipulations(&rule, &m, d, truth, 10).unwrap().is_empty());
        }
    }

    #[test]
    fn theorem4_quantile_manipulation() {
        let m = fixtures::theorem4(3);
        let d1 = m.doctor_id("d1").unwrap();
        let rule = Rule::Quantile(Quantile::new(1, 2).unwrap());
        let truth = pref(&m, "d1", &["x1", "x2", "x3"]);
        let lie = pref(&m, "d1", &["x1"]);
        let found = find_manipulations(&rule, &m, d1, &truth, DEFAULT_BUDGET).unwrap();
        assert!(found
            .iter()
            .any(|w| w.misreport == lie && w.manipulated_outcome == matched(&m, "x1") && w.truthful_outcome == matched(&m, "x2")));
        assert_eq!(
            classify_obvious(&rule, &m, d1, &truth, &lie, DEFAULT_BUDGET).unwrap(),
            Obviousness::Both
        );
    }

    #[test]
    fn classify_rejects_non_manipulations() {
        let m = fixtures::theorem2();
        let d1 = m.doctor_id("d1").unwrap();
        let truth = pref(&m, "d1", &["y", "x"]);
        let same_outcome = pref(&m, "d1", &["x"]);
        assert_eq!(
            classify_obvious(&Rule::HospitalOptimal, &m, d1, &truth, &same_outcome, DEFAULT_BUDGET),
            Err(Error::NotAManipulation)
        );
    }

    #[test]
    fn audits_of_the_bundled_markets() {
        let m = fixtures::theorem2();
        let om = audit_nom(&Rule::HospitalOptimal, &m, AuditConfig::default()).unwrap();
        assert_eq!(om.verdict, Verdict::Om);
        let truth = pref(&m, "d1", &["y", "x"]);
        let lie = pref(&m, "d1", &["y"]);
        assert!(om.witnesses.iter().any(|w| w.truth == truth && w.misreport == lie));
        for w in &om.witnesses {
            assert!(w.replay(&Rule::HospitalOptimal, &m, DEFAULT_BUDGET).unwrap());
        }
        let nom = audit_nom(&Rule::DoctorOptimal, &m, AuditConfig::default()).unwrap();
        assert_eq!(nom.verdict, Verdict::Nom);
        assert!(nom.witnesses.is_empty());

        let grid = fixtures::no_contracts_2x2_spec().market;
        let report = audit_nom(&Rule::HospitalOptimal, &grid, AuditConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Nom);
    }

    #[test]
    fn audit_guardrail_reports_required_size() {
        let m = fixtures::theorem4(3);
        let err = audit_nom(
            &Rule::DoctorOptimal,
            &m,
            AuditConfig {
                budget: 31,
                ..AuditConfig::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::Guardrail { required: 32, budget: 31 });
    }

    #[test]
    fn partial_table_flags_coverage() {
        let m = fixtures::theorem2();
        let mut table = TableRule::new();
        let p = DoctorProfile::from_names(&m, &[("d1", &["y", "x"]), ("d2", &["w"])]).unwrap();
        table.insert(p, Allocation::new(&m, m.contract_set(&["y", "w"]).unwrap()).unwrap());
        let report = audit_nom(&Rule::Table(Arc::new(table)), &m, AuditConfig::default()).unwrap();
        assert!(report.stats.partial_coverage);
        assert_eq!(report.stats.profiles_evaluated, 1);
        assert_eq!(report.stats.profiles_total, 10);
        assert_eq!(report.verdict, Verdict::Nom);
    }

    #[test]
    fn quantile_audit_refuses_lad_violations() {
        let m = Market::builder()
            .doctor("d1")
            .doctor("d2")
            .doctor("d3")
            .hospital("h")
            .contract("a", "d1", "h")
            .contract("b", "d2", "h")
            .contract("c", "d3", "h")
            .ranking(
                "h",
                &[
                    vec!["c"],
                    vec!["a", "b"],
                    vec!["a"],
                    vec!["b"],
                    vec![],
                    vec!["a", "c"],
                    vec!["b", "c"],
                    vec!["a", "b", "c"],
                ],
            )
            .build()
            .unwrap();
        let rule = Rule::Quantile(Quantile::new(1, 2).unwrap());
        assert!(matches!(
            audit_nom(&rule, &m, AuditConfig::default()),
            Err(Error::AxiomViolated(_))
        ));
    }
}
