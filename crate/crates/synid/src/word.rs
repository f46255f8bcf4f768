//! Words of the free commutative monoid over object names.
//!
//! An [`ObjectWord`] is a multiset of object names. The empty word is the
//! monoidal unit `1`. Multiplication adds multiplicities; difference is
//! truncated multiset subtraction (clamped at zero per object).

use std::collections::BTreeMap;
use std::fmt;

/// A multiset of object names with positive multiplicities.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectWord {
    counts: BTreeMap<String, u32>,
}

impl ObjectWord {
    /// The monoidal unit `1` (empty word).
    pub fn unit() -> Self {
        Self::default()
    }

    /// A single object with multiplicity one.
    pub fn single(name: impl Into<String>) -> Self {
        Self::power(name, 1)
    }

    /// `V^k`. A zero power is the unit.
    pub fn power(name: impl Into<String>, k: u32) -> Self {
        let mut w = Self::unit();
        w.insert(name, k);
        w
    }

    /// Builds a word from `(object, count)` pairs; zero counts are ignored.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut w = Self::unit();
        for (name, k) in pairs {
            w.insert(name, k);
        }
        w
    }

    /// Adds `k` occurrences of `name`.
    pub fn insert(&mut self, name: impl Into<String>, k: u32) {
        if k == 0 {
            return;
        }
        *self.counts.entry(name.into()).or_insert(0) += k;
    }

    /// Removes one occurrence of `name`; no-op if absent.
    pub fn remove_one(&mut self, name: &str) {
        if let Some(c) = self.counts.get_mut(name) {
            *c -= 1;
            if *c == 0 {
                self.counts.remove(name);
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        self.counts.is_empty()
    }

    /// Multiplicity of `name` (zero if absent).
    pub fn multiplicity(&self, name: &str) -> u32 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.counts.contains_key(name)
    }

    /// Distinct objects, in lexicographic order.
    pub fn objects(&self) -> impl Iterator<Item = &String> {
        self.counts.keys()
    }

    /// `(object, multiplicity)` pairs, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, u32)> {
        self.counts.iter().map(|(k, v)| (k, *v))
    }

    /// Total number of occurrences.
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    /// Monoid product: multiplicities add.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (name, k) in other.iter() {
            out.insert(name.clone(), k);
        }
        out
    }

    /// Truncated multiset difference: per object `max(0, a - b)`.
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Self::unit();
        for (name, k) in self.iter() {
            let d = k.saturating_sub(other.multiplicity(name));
            out.insert(name.clone(), d);
        }
        out
    }

    /// Per-object minimum of two words.
    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Self::unit();
        for (name, k) in self.iter() {
            out.insert(name.clone(), k.min(other.multiplicity(name)));
        }
        out
    }

    /// True if the two words share at least one object.
    pub fn meets(&self, other: &Self) -> bool {
        self.counts.keys().any(|k| other.contains(k))
    }

    /// Renders factors ordered by `rank`, as space-separated `V^k` terms,
    /// or `1` for the unit.
    pub fn format_with<F>(&self, mut rank: F) -> String
    where
        F: FnMut(&str) -> (u32, u32),
    {
        if self.is_unit() {
            return "1".to_string();
        }
        let mut factors: Vec<(&String, u32)> = self.iter().collect();
        factors.sort_by_key(|(name, _)| rank(name));
        factors
            .iter()
            .map(|(name, k)| {
                if *k == 1 {
                    (*name).clone()
                } else {
                    format!("{name}^{k}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Debug for ObjectWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_with(|_| (0, 0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_adds_multiplicities() {
        let ab = ObjectWord::from_pairs([("A", 1), ("B", 1)]);
        let a = ObjectWord::single("A");
        let p = ab.product(&a);
        assert_eq!(p.multiplicity("A"), 2);
        assert_eq!(p.multiplicity("B"), 1);
    }

    #[test]
    fn difference_truncates() {
        let xu = ObjectWord::from_pairs([("X", 1), ("U", 1)]);
        let u = ObjectWord::single("U");
        assert_eq!(xu.difference(&u), ObjectWord::single("X"));
        // clamped at zero per object
        assert_eq!(u.difference(&xu), ObjectWord::unit());
    }

    #[test]
    fn unit_is_identity() {
        let w = ObjectWord::from_pairs([("A", 2), ("C", 1)]);
        assert_eq!(w.product(&ObjectWord::unit()), w);
        assert_eq!(ObjectWord::unit().product(&w), w);
    }

    #[test]
    fn zero_counts_not_stored() {
        let mut w = ObjectWord::unit();
        w.insert("A", 0);
        assert!(w.is_unit());
        w.insert("A", 1);
        w.remove_one("A");
        assert!(w.is_unit());
        assert!(!w.contains("A"));
    }

    #[test]
    fn format_orders_by_rank() {
        let w = ObjectWord::from_pairs([("U", 1), ("X", 1)]);
        // declaration order X before U
        let order = |name: &str| if name == "X" { (0, 0) } else { (1, 0) };
        assert_eq!(w.format_with(order), "X U");
        assert_eq!(ObjectWord::unit().format_with(order), "1");
        assert_eq!(ObjectWord::power("U", 3).format_with(order), "U^3");
    }
}
