//! Bitset of contract indices.
//!
//! Markets in this crate are desk-sized, so a single `u64` word holds any
//! contract set. Iteration is always in ascending contract id order, which is
//! the canonical order used in every report.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Hard cap on the number of contracts in one market.
pub const MAX_CONTRACTS: usize = 64;

/// Index of a contract inside its market. Ids are assigned in declaration order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContractId(pub(crate) u8);

impl ContractId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        debug_assert!(index < MAX_CONTRACTS);
        ContractId(index as u8)
    }
}

#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContractSet(u64);

impl ContractSet {
    pub const EMPTY: ContractSet = ContractSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ContractSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(id: ContractId) -> Self {
        ContractSet(1 << id.0)
    }

    /// The first `n` contract ids.
    pub fn first_n(n: usize) -> Self {
        if n >= 64 {
            ContractSet(u64::MAX)
        } else {
            ContractSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, id: ContractId) -> bool {
        self.0 & (1 << id.0) != 0
    }

    pub fn insert(&mut self, id: ContractId) {
        self.0 |= 1 << id.0;
    }

    pub fn remove(&mut self, id: ContractId) {
        self.0 &= !(1 << id.0);
    }

    pub fn with(self, id: ContractId) -> Self {
        ContractSet(self.0 | (1 << id.0))
    }

    pub fn without(self, id: ContractId) -> Self {
        ContractSet(self.0 & !(1 << id.0))
    }

    pub fn union(self, other: Self) -> Self {
        ContractSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ContractSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ContractSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest contract id in the set.
    pub fn first(self) -> Option<ContractId> {
        if self.0 == 0 {
            None
        } else {
            Some(ContractId(self.0.trailing_zeros() as u8))
        }
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    /// Every subset of `self`, starting with the empty set. Submask order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }

    /// Contract ids in ascending order.
    pub fn to_vec(self) -> Vec<ContractId> {
        self.iter().collect()
    }

    /// Lexicographic comparison of the ascending id lists. This is the
    /// canonical order of allocations in reports.
    pub fn canonical_cmp(self, other: Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for ContractSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

impl FromIterator<ContractId> for ContractSet {
    fn from_iter<I: IntoIterator<Item = ContractId>>(iter: I) -> Self {
        let mut set = ContractSet::EMPTY;
        for id in iter {
            set.insert(id);
        }
        set
    }
}

impl IntoIterator for ContractSet {
    type Item = ContractId;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

pub struct Iter(u64);

impl Iterator for Iter {
    type Item = ContractId;

    fn next(&mut self) -> Option<ContractId> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(ContractId(bit as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ContractSet;

    fn next(&mut self) -> Option<ContractSet> {
        let current = self.next?;
        // standard submask walk in increasing numeric order
        let following = (current.wrapping_sub(self.universe)) & self.universe;
        self.next = if following == 0 { None } else { Some(following) };
        Some(ContractSet(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u8]) -> ContractSet {
        ids.iter().map(|&i| ContractId(i)).collect()
    }

    #[test]
    fn subsets_enumerates_powerset_once() {
        let universe = set(&[1, 3, 4]);
        let all: Vec<_> = universe.subsets().collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], ContractSet::EMPTY);
        assert_eq!(*all.last().unwrap(), universe);
        let mut bits: Vec<u64> = all.iter().map(|s| s.bits()).collect();
        bits.sort();
        bits.dedup();
        assert_eq!(bits.len(), 8);
        assert!(all.iter().all(|s| s.is_subset(universe)));
    }

    #[test]
    fn empty_universe_has_one_subset() {
        assert_eq!(ContractSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn canonical_order_is_lexicographic_on_ids() {
        use std::cmp::Ordering::*;
        assert_eq!(set(&[0, 5]).canonical_cmp(set(&[1])), Less);
        assert_eq!(set(&[0]).canonical_cmp(set(&[0, 1])), Less);
        assert_eq!(ContractSet::EMPTY.canonical_cmp(set(&[0])), Less);
    }

    #[test]
    fn iteration_is_ascending() {
        assert_eq!(set(&[9, 2, 40]).to_vec(), vec![ContractId(2), ContractId(9), ContractId(40)]);
    }
}
