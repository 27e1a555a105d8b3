//! Multisets over interned object symbols.

use std::collections::BTreeMap;

use crate::system::SymbolId;

/// A multiset of objects. Zero-count entries are never stored.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Multiset(BTreeMap<SymbolId, u32>);

impl Multiset {
    pub fn new() -> Self {
        Multiset(BTreeMap::new())
    }

    pub fn singleton(sym: SymbolId) -> Self {
        let mut m = Multiset::new();
        m.add(sym, 1);
        m
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total object count (sum of multiplicities).
    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| c as u64).sum()
    }

    pub fn count(&self, sym: SymbolId) -> u32 {
        self.0.get(&sym).copied().unwrap_or(0)
    }

    pub fn add(&mut self, sym: SymbolId, n: u32) {
        if n == 0 {
            return;
        }
        *self.0.entry(sym).or_insert(0) += n;
    }

    pub fn add_all(&mut self, other: &Multiset) {
        for (&sym, &n) in &other.0 {
            self.add(sym, n);
        }
    }

    /// Removes `n` copies of `sym`. Panics if fewer are present; callers
    /// check availability before binding.
    pub fn remove(&mut self, sym: SymbolId, n: u32) {
        if n == 0 {
            return;
        }
        let c = self.0.get_mut(&sym).expect("removing absent symbol");
        assert!(*c >= n, "removing more copies than present");
        *c -= n;
        if *c == 0 {
            self.0.remove(&sym);
        }
    }

    pub fn remove_all(&mut self, other: &Multiset) {
        for (&sym, &n) in &other.0 {
            self.remove(sym, n);
        }
    }

    /// True iff `other` is contained in `self` (with multiplicities).
    pub fn contains(&self, other: &Multiset) -> bool {
        other.0.iter().all(|(&sym, &n)| self.count(sym) >= n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, u32)> + '_ {
        self.0.iter().map(|(&s, &c)| (s, c))
    }

    /// Renders the multiset with symbol names, for traces and digests.
    pub fn to_named(&self, alphabet: &[String]) -> BTreeMap<String, u32> {
        self.0
            .iter()
            .map(|(&sym, &c)| (alphabet[sym.0 as usize].clone(), c))
            .collect()
    }
}

impl FromIterator<(SymbolId, u32)> for Multiset {
    fn from_iter<T: IntoIterator<Item = (SymbolId, u32)>>(iter: T) -> Self {
        let mut m = Multiset::new();
        for (sym, n) in iter {
            m.add(sym, n);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_zero_entries() {
        let a = SymbolId(0);
        let mut m = Multiset::new();
        m.add(a, 2);
        m.remove(a, 2);
        assert!(m.is_empty());
        assert_eq!(m.count(a), 0);
    }

    #[test]
    fn containment_respects_multiplicity() {
        let a = SymbolId(0);
        let b = SymbolId(1);
        let mut big = Multiset::new();
        big.add(a, 3);
        big.add(b, 1);
        let mut small = Multiset::new();
        small.add(a, 2);
        assert!(big.contains(&small));
        small.add(b, 2);
        assert!(!big.contains(&small));
    }
}
