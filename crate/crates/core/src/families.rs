//! Market generators for exhaustive and randomized sweeps.
//!
//! Rules only look at a hospital's choice function, so hospitals are
//! enumerated by choice function rather than by ranking. A choice class is a
//! choice function on the subsets of `X_h` that is allocation-valued,
//! substitutable and satisfies irrelevance of rejected contracts. Each class
//! is turned back into one complete ranking that induces it.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::market::{HospitalId, Market};
use crate::set::{ContractId, ContractSet};

/// Local view of a hospital's contracts: bit `i` of a mask is `contracts[i]`.
struct Local {
    contracts: Vec<ContractId>,
    doctor_of: Vec<usize>,
}

impl Local {
    fn new(market: &Market, h: HospitalId) -> Self {
        let contracts: Vec<ContractId> = market.contracts_of_hospital(h).iter().collect();
        let doctor_of = contracts.iter().map(|&c| market.contract(c).doctor.index()).collect();
        Local { contracts, doctor_of }
    }

    fn n(&self) -> usize {
        self.contracts.len()
    }

    fn is_allocation(&self, mask: u32) -> bool {
        let mut seen = 0u64;
        for i in 0..self.n() {
            if mask >> i & 1 == 1 {
                let bit = 1u64 << self.doctor_of[i];
                if seen & bit != 0 {
                    return false;
                }
                seen |= bit;
            }
        }
        true
    }

    fn to_set(&self, mask: u32) -> ContractSet {
        (0..self.n()).filter(|i| mask >> i & 1 == 1).map(|i| self.contracts[i]).collect()
    }

    /// Subset masks ordered by size, then value.
    fn masks_by_size(&self) -> Vec<u32> {
        let mut masks: Vec<u32> = (0..1u32 << self.n()).collect();
        masks.sort_by_key(|&m| (m.count_ones(), m));
        masks
    }

    fn candidates(&self, mask: u32, max_chosen: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut sub = mask;
        loop {
            if sub.count_ones() as usize <= max_chosen && self.is_allocation(sub) {
                out.push(sub);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        out.reverse();
        out
    }

    fn consistent(&self, choice: &[u32], mask: u32, cand: u32) -> bool {
        for i in 0..self.n() {
            let bit = 1u32 << i;
            if mask & bit == 0 {
                continue;
            }
            let rest = mask & !bit;
            // chosen contracts stay chosen when another contract leaves
            if cand & rest & !choice[rest as usize] != 0 {
                return false;
            }
            // removing a rejected contract changes nothing
            if cand & bit == 0 && choice[rest as usize] != cand {
                return false;
            }
        }
        true
    }

    /// A ranking of every allocation whose induced choice function is
    /// `choice`, or `None` if there is none.
    fn ranking(&self, choice: &[u32]) -> Option<Vec<ContractSet>> {
        let size = 1usize << self.n();
        let nodes: Vec<u32> = (0..size as u32).filter(|&m| self.is_allocation(m)).collect();
        // beaten_by[t]: sets that must rank above t
        let mut above = vec![0u64; size];
        let slot: Vec<usize> = {
            let mut s = vec![usize::MAX; size];
            for (i, &m) in nodes.iter().enumerate() {
                s[m as usize] = i;
            }
            s
        };
        if nodes.len() > 64 {
            return None;
        }
        for y in 0..size as u32 {
            let best = choice[y as usize];
            let mut t = y;
            loop {
                if t != best && slot[t as usize] != usize::MAX {
                    above[t as usize] |= 1 << slot[best as usize];
                }
                if t == 0 {
                    break;
                }
                t = (t - 1) & y;
            }
        }
        let mut placed = 0u64;
        let mut order = Vec::with_capacity(nodes.len());
        while order.len() < nodes.len() {
            let next = nodes
                .iter()
                .enumerate()
                .filter(|&(i, &m)| placed >> i & 1 == 0 && above[m as usize] & !placed == 0)
                .map(|(_, &m)| self.to_set(m))
                .min_by(|a, b| a.canonical_cmp(*b))?;
            let m = nodes.iter().position(|&m| self.to_set(m) == next).expect("node");
            placed |= 1 << m;
            order.push(next);
        }
        for y in 0..size as u32 {
            let avail = self.to_set(y);
            let first = order.iter().find(|s| s.is_subset(avail)).copied();
            if first != Some(self.to_set(choice[y as usize])) {
                return None;
            }
        }
        Some(order)
    }
}

/// Every substitutable choice class of hospital `h` (one ranking each), with
/// at most `max_chosen` contracts chosen from any set.
pub fn choice_classes(market: &Market, h: HospitalId, max_chosen: usize) -> Vec<Vec<ContractSet>> {
    let local = Local::new(market, h);
    let order = local.masks_by_size();
    let mut choice = vec![0u32; 1 << local.n()];
    let mut out = Vec::new();
    enumerate(&local, &order, 0, max_chosen, &mut choice, &mut |choice| {
        if let Some(r) = local.ranking(choice) {
            out.push(r);
        }
        true
    });
    out
}

/// One substitutable choice class drawn by randomized search.
pub fn random_choice_class<R: Rng + ?Sized>(
    market: &Market,
    h: HospitalId,
    max_chosen: usize,
    rng: &mut R,
) -> Vec<ContractSet> {
    let local = Local::new(market, h);
    let order = local.masks_by_size();
    let mut choice = vec![0u32; 1 << local.n()];
    let mut found = None;
    random_search(&local, &order, 0, max_chosen, &mut choice, rng, &mut found);
    found.expect("a responsive choice class always exists")
}

fn enumerate(
    local: &Local,
    order: &[u32],
    k: usize,
    max_chosen: usize,
    choice: &mut Vec<u32>,
    emit: &mut impl FnMut(&[u32]) -> bool,
) -> bool {
    let Some(&mask) = order.get(k) else {
        return emit(choice);
    };
    for cand in local.candidates(mask, max_chosen) {
        if local.consistent(choice, mask, cand) {
            choice[mask as usize] = cand;
            if !enumerate(local, order, k + 1, max_chosen, choice, emit) {
                return false;
            }
        }
    }
    true
}

fn random_search<R: Rng + ?Sized>(
    local: &Local,
    order: &[u32],
    k: usize,
    max_chosen: usize,
    choice: &mut Vec<u32>,
    rng: &mut R,
    found: &mut Option<Vec<ContractSet>>,
) {
    let Some(&mask) = order.get(k) else {
        *found = local.ranking(choice);
        return;
    };
    let mut cands = local.candidates(mask, max_chosen);
    cands.shuffle(rng);
    for cand in cands {
        if local.consistent(choice, mask, cand) {
            choice[mask as usize] = cand;
            random_search(local, order, k + 1, max_chosen, choice, rng, found);
            if found.is_some() {
                return;
            }
        }
    }
}

/// A uniformly shuffled complete ranking, with no axioms imposed.
pub fn random_ranking<R: Rng + ?Sized>(market: &Market, h: HospitalId, rng: &mut R) -> Vec<ContractSet> {
    let mut ranking: Vec<ContractSet> = market
        .allocations_of(market.contracts_of_hospital(h))
        .into_iter()
        .map(|a| a.contracts())
        .collect();
    ranking.shuffle(rng);
    ranking
}

/// Every complete ranking of a hospital's allocations, in lexicographic
/// permutation order. Only sensible for a handful of allocations.
pub fn all_rankings(market: &Market, h: HospitalId) -> Vec<Vec<ContractSet>> {
    let items: Vec<ContractSet> = market
        .allocations_of(market.contracts_of_hospital(h))
        .into_iter()
        .map(|a| a.contracts())
        .collect();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..items.len()).collect();
    loop {
        out.push(perm.iter().map(|&i| items[i]).collect());
        // next permutation
        let Some(i) = (1..perm.len()).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..perm.len()).rev().find(|&j| perm[j] > perm[i - 1]).expect("pivot");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

/// A market with doctors `d1..`, hospitals `h1..` and one contract `x1..` per
/// listed `(doctor, hospital)` index pair. Every hospital starts out
/// accepting everything it can.
pub fn market_shape(doctors: usize, hospitals: usize, pairs: &[(usize, usize)]) -> Result<Market> {
    let mut builder = Market::builder();
    for d in 1..=doctors {
        builder = builder.doctor(format!("d{d}"));
    }
    for h in 1..=hospitals {
        builder = builder.hospital(format!("h{h}"));
    }
    let mut per_hospital = vec![Vec::new(); hospitals];
    for (i, &(d, h)) in pairs.iter().enumerate() {
        let name = format!("x{}", i + 1);
        builder = builder.contract(name.clone(), format!("d{}", d + 1), format!("h{}", h + 1));
        if let Some(list) = per_hospital.get_mut(h) {
            list.push(name);
        }
    }
    for (h, order) in per_hospital.into_iter().enumerate() {
        let quota = order.len();
        builder.set_responsive(format!("h{}", h + 1), order, quota);
    }
    builder.build()
}

/// Replaces every hospital's ranking.
pub fn with_rankings(market: &Market, rankings: &[Vec<ContractSet>]) -> Result<Market> {
    let mut out = market.clone();
    for (h, ranking) in market.hospitals().zip(rankings) {
        out = out.with_ranking(h, ranking.clone())?;
    }
    Ok(out)
}

/// Every market obtained by giving each hospital one of its listed rankings.
pub fn ranking_product(market: &Market, per_hospital: &[Vec<Vec<ContractSet>>]) -> Vec<Market> {
    let total: usize = per_hospital.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; per_hospital.len()];
    for _ in 0..total {
        let rankings: Vec<Vec<ContractSet>> =
            digits.iter().zip(per_hospital).map(|(&i, list)| list[i].clone()).collect();
        out.push(with_rankings(market, &rankings).expect("enumerated rankings are complete"));
        for (digit, list) in digits.iter_mut().zip(per_hospital).rev() {
            *digit += 1;
            if *digit < list.len() {
                break;
            }
            *digit = 0;
        }
    }
    out
}

/// All multisets of `size` pairs drawn from `pairs`, as sorted index lists.
pub fn pair_multisets(pairs: &[(usize, usize)], size: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(
        pairs: &[(usize, usize)],
        start: usize,
        left: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..pairs.len() {
            cur.push(pairs[i]);
            go(pairs, i, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pairs, 0, size, &mut Vec::new(), &mut out);
    out
}

#[derive(Copy, Clone, Debug)]
pub struct RandomMarketParams {
    pub doctors: usize,
    pub hospitals: usize,
    pub contracts: usize,
    pub max_hospital_contracts: usize,
}

/// A random many-to-one market: contracts land on uniform doctor-hospital
/// pairs (redrawn while some hospital exceeds its cap) and every hospital
/// gets a random substitutable choice class. Panics when the contracts cannot
/// fit under the cap.
pub fn random_market<R: Rng + ?Sized>(params: RandomMarketParams, rng: &mut R) -> Market {
    assert!(
        params.contracts == 0 || (params.doctors > 0 && params.hospitals * params.max_hospital_contracts >= params.contracts),
        "{params:?} cannot be realised"
    );
    let pairs = loop {
        let pairs: Vec<(usize, usize)> = (0..params.contracts)
            .map(|_| (rng.gen_range(0..params.doctors), rng.gen_range(0..params.hospitals)))
            .collect();
        let fits = (0..params.hospitals)
            .all(|h| pairs.iter().filter(|p| p.1 == h).count() <= params.max_hospital_contracts);
        if fits {
            break pairs;
        }
    };
    let base = market_shape(params.doctors, params.hospitals, &pairs).expect("generated shape is valid");
    let rankings: Vec<Vec<ContractSet>> = base
        .hospitals()
        .map(|h| random_choice_class(&base, h, usize::MAX, rng))
        .collect();
    with_rankings(&base, &rankings).expect("generated rankings are complete")
}

/// One-to-one markets with two doctors and two hospitals: every multiset of at
/// most `max_contracts` doctor-hospital pairs, with every unit-demand choice
/// class at each hospital.
pub fn one_to_one_2x2(max_contracts: usize) -> Vec<Market> {
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut out = Vec::new();
    for size in 0..=max_contracts {
        for shape in pair_multisets(&pairs, size) {
            let base = market_shape(2, 2, &shape).expect("2x2 shape is valid");
            let per: Vec<_> = base.hospitals().map(|h| choice_classes(&base, h, 1)).collect();
            out.extend(ranking_product(&base, &per));
        }
    }
    out
}

/// Contract patterns with at most one contract per doctor-hospital pair in
/// which every agent has a contract, one per relabelling class.
pub fn bipartite_patterns(doctors: usize, hospitals: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..doctors).flat_map(|d| (0..hospitals).map(move |h| (d, h))).collect();
    let doctor_perms = permutations_of(doctors);
    let hospital_perms = permutations_of(hospitals);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> =
            (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
        let covers = (0..doctors).all(|d| edges.iter().any(|e| e.0 == d))
            && (0..hospitals).all(|h| edges.iter().any(|e| e.1 == h));
        if !covers {
            continue;
        }
        let key = doctor_perms
            .iter()
            .flat_map(|pd| {
                hospital_perms.iter().map(|ph| {
                    let mut relabelled: Vec<(usize, usize)> = edges.iter().map(|&(d, h)| (pd[d], ph[h])).collect();
                    relabelled.sort_unstable();
                    relabelled
                })
            })
            .min()
            .expect("at least one relabelling");
        if seen.insert(key.clone()) {
            out.push(key);
        }
    }
    out
}

fn permutations_of(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations_of(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Visits every market without multiple contracts per pair with up to
/// `max_doctors` doctors and `max_hospitals` hospitals, every agent holding a
/// contract, up to relabelling of agents, and every combination of
/// substitutable choice classes.
pub fn visit_no_contracts_markets(max_doctors: usize, max_hospitals: usize, visit: &mut impl FnMut(&Market)) {
    for doctors in 1..=max_doctors {
        for hospitals in 1..=max_hospitals {
            for pattern in bipartite_patterns(doctors, hospitals) {
                let base = market_shape(doctors, hospitals, &pattern).expect("pattern is valid");
                let per: Vec<Vec<Vec<ContractSet>>> =
                    base.hospitals().map(|h| choice_classes(&base, h, usize::MAX)).collect();
                let total: usize = per.iter().map(Vec::len).product();
                let mut digits = vec![0usize; per.len()];
                let mut market = base.clone();
                let mut current = vec![usize::MAX; per.len()];
                for _ in 0..total {
                    for (h, (&digit, list)) in base.hospitals().zip(digits.iter().zip(&per)) {
                        if current[h.index()] != digit {
                            market = market.with_ranking(h, list[digit].clone()).expect("class ranking is complete");
                            current[h.index()] = digit;
                        }
                    }
                    visit(&market);
                    for (digit, list) in digits.iter_mut().zip(&per).rev() {
                        *digit += 1;
                        if *digit < list.len() {
                            break;
                        }
                        *digit = 0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_lad, check_substitutable};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn unit_demand_classes_are_acceptable_lists() {
        for n in 0..=3 {
            let m = market_shape(n, 1, &(0..n).map(|d| (d, 0)).collect::<Vec<_>>()).unwrap();
            let h = m.hospital_id("h1").unwrap();
            let classes = choice_classes(&m, h, 1);
            assert_eq!(classes.len() as u128, crate::manipulation::domain_size(n), "n = {n}");
        }
    }

    #[test]
    fn classes_are_substitutable_and_distinct() {
        let m = market_shape(3, 1, &[(0, 0), (1, 0), (2, 0)]).unwrap();
        let h = m.hospital_id("h1").unwrap();
        let classes = choice_classes(&m, h, usize::MAX);
        assert!(classes.len() > 16);
        let mut seen = std::collections::HashSet::new();
        for r in &classes {
            let market = m.with_ranking(h, r.clone()).unwrap();
            let pref = market.hospital_pref(h);
            assert!(check_substitutable(pref).is_ok());
            let choices: Vec<ContractSet> =
                m.contracts_of_hospital(h).subsets().map(|s| pref.choose(s)).collect();
            assert!(seen.insert(choices));
        }
    }

    #[test]
    fn same_doctor_contracts_are_never_chosen_together() {
        let m = market_shape(1, 1, &[(0, 0), (0, 0)]).unwrap();
        let h = m.hospital_id("h1").unwrap();
        // allocations: {}, {x1}, {x2}; orders of the acceptable ones
        assert_eq!(choice_classes(&m, h, usize::MAX).len(), 5);
    }

    #[test]
    fn random_classes_are_substitutable() {
        let mut rng = StdRng::seed_from_u64(7);
        let params = RandomMarketParams {
            doctors: 3,
            hospitals: 2,
            contracts: 5,
            max_hospital_contracts: 4,
        };
        for _ in 0..20 {
            let m = random_market(params, &mut rng);
            for h in m.hospitals() {
                assert!(check_substitutable(m.hospital_pref(h)).is_ok());
            }
        }
    }

    #[test]
    fn some_classes_violate_lad() {
        let m = market_shape(3, 1, &[(0, 0), (1, 0), (2, 0)]).unwrap();
        let h = m.hospital_id("h1").unwrap();
        let classes = choice_classes(&m, h, usize::MAX);
        let violating = classes
            .iter()
            .filter(|r| {
                let market = m.with_ranking(h, (*r).clone()).unwrap();
                check_lad(market.hospital_pref(h)).is_err()
            })
            .count();
        assert!(violating > 0 && violating < classes.len());
    }

    #[test]
    fn all_rankings_counts_permutations() {
        let m = market_shape(2, 1, &[(0, 0), (1, 0)]).unwrap();
        let h = m.hospital_id("h1").unwrap();
        let all = all_rankings(&m, h);
        assert_eq!(all.len(), 24);
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 24);
    }

    #[test]
    fn pattern_counts() {
        assert_eq!(bipartite_patterns(1, 1).len(), 1);
        assert_eq!(bipartite_patterns(2, 2).len(), 3);
        assert_eq!(bipartite_patterns(3, 3).len(), 17);
        let mut count = 0;
        visit_no_contracts_markets(2, 2, &mut |_| count += 1);
        // 2 + 4 + 6 + 52 markets
        assert_eq!(count, 64);
    }

    #[test]
    fn one_to_one_family_is_unit_demand() {
        let family = one_to_one_2x2(2);
        assert!(!family.is_empty());
        for m in &family {
            for h in m.hospitals() {
                let pref = m.hospital_pref(h);
                assert!(m.contracts_of_hospital(h).subsets().all(|s| pref.choose(s).len() <= 1));
            }
        }
    }

    #[test]
    fn multisets_and_products() {
        let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let counts: Vec<usize> = (0..=4).map(|k| pair_multisets(&pairs, k).len()).collect();
        assert_eq!(counts, vec![1, 4, 10, 20, 35]);
        let m = market_shape(2, 2, &[(0, 0), (1, 1)]).unwrap();
        let per: Vec<_> = m.hospitals().map(|h| choice_classes(&m, h, 1)).collect();
        assert_eq!(ranking_product(&m, &per).len(), 4);
    }
}
