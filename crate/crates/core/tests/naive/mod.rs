//! Straight-from-the-definition axiom checks on plain sets, sharing nothing
//! with the library checkers beyond reading a hospital's ranking.

#![allow(dead_code)]

use std::collections::BTreeSet;

use matchaudit::{HospitalId, Market};

pub struct NaiveHospital {
    contracts: Vec<usize>,
    doctor_of: Vec<usize>,
    ranking: Vec<BTreeSet<usize>>,
}

impl NaiveHospital {
    pub fn new(market: &Market, h: HospitalId) -> Self {
        let contracts: Vec<usize> = market.contracts_of_hospital(h).iter().map(|c| c.index()).collect();
        let doctor_of = contracts
            .iter()
            .map(|&c| market.contracts()[c].doctor.index())
            .collect();
        let ranking = market
            .hospital_pref(h)
            .ranking()
            .iter()
            .map(|s| s.iter().map(|c| c.index()).collect())
            .collect();
        NaiveHospital { contracts, doctor_of, ranking }
    }

    fn all_subsets(&self) -> Vec<BTreeSet<usize>> {
        let mut out = vec![BTreeSet::new()];
        for &c in &self.contracts {
            let grown: Vec<_> = out
                .iter()
                .map(|s: &BTreeSet<usize>| {
                    let mut t = s.clone();
                    t.insert(c);
                    t
                })
                .collect();
            out.extend(grown);
        }
        out
    }

    pub fn choose(&self, available: &BTreeSet<usize>) -> BTreeSet<usize> {
        for entry in &self.ranking {
            if entry.is_subset(available) {
                return entry.clone();
            }
        }
        panic!("ranking lacks the empty set");
    }

    fn rank(&self, set: &BTreeSet<usize>) -> Option<usize> {
        self.ranking.iter().position(|e| e == set)
    }

    /// Rejected contracts only grow as the available set grows.
    pub fn substitutable(&self) -> bool {
        let subsets = self.all_subsets();
        for small in &subsets {
            let rejected_small: BTreeSet<usize> = small.difference(&self.choose(small)).copied().collect();
            for large in &subsets {
                if !small.is_subset(large) {
                    continue;
                }
                let rejected_large: BTreeSet<usize> = large.difference(&self.choose(large)).copied().collect();
                if !rejected_small.is_subset(&rejected_large) {
                    return false;
                }
            }
        }
        true
    }

    pub fn lad(&self) -> bool {
        let subsets = self.all_subsets();
        for small in &subsets {
            for large in &subsets {
                if small.is_subset(large) && self.choose(small).len() > self.choose(large).len() {
                    return false;
                }
            }
        }
        true
    }

    pub fn responsive(&self, quota: usize) -> bool {
        let empty = self.rank(&BTreeSet::new()).expect("empty set ranked");
        if self.ranking.iter().enumerate().any(|(i, s)| s.len() > quota && i < empty) {
            return false;
        }
        let mut options: Vec<Option<usize>> = vec![None];
        options.extend(self.contracts.iter().map(|&c| Some(c)));
        let add = |base: &BTreeSet<usize>, c: Option<usize>| {
            let mut t = base.clone();
            if let Some(c) = c {
                t.insert(c);
            }
            t
        };
        let none = BTreeSet::new();
        for base in &self.ranking {
            if base.len() >= quota {
                continue;
            }
            for &x in &options {
                for &y in &options {
                    if x == y || x.is_some_and(|c| base.contains(&c)) || y.is_some_and(|c| base.contains(&c)) {
                        continue;
                    }
                    let (bx, by) = (add(base, x), add(base, y));
                    let (Some(rx), Some(ry)) = (self.rank(&bx), self.rank(&by)) else {
                        continue;
                    };
                    let sx = self.rank(&add(&none, x)).expect("singletons are allocations");
                    let sy = self.rank(&add(&none, y)).expect("singletons are allocations");
                    if (rx < ry) != (sx < sy) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn doctor_of(&self) -> &[usize] {
        &self.doctor_of
    }
}

/// Doctor assignments for `n` contracts at one hospital, one per partition of
/// the contracts by doctor.
pub fn doctor_assignments(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, next: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for d in 0..=next {
            cur.push(d);
            go(n, cur, next.max(d + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), 0, &mut out);
    out
}

/// A one-hospital market whose contract `i` belongs to doctor `assignment[i]`.
pub fn single_hospital(assignment: &[usize]) -> Market {
    let doctors = assignment.iter().max().map_or(0, |d| d + 1);
    let pairs: Vec<(usize, usize)> = assignment.iter().map(|&d| (d, 0)).collect();
    matchaudit::families::market_shape(doctors, 1, &pairs).expect("valid shape")
}
