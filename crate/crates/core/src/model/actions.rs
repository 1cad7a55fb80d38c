use std::fmt;

use crate::model::ActionId;

/// Upper bound on the number of actions a model may declare.
pub const MAX_ACTIONS: usize = 64;

/// A set of action ids stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    /// All actions `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ACTIONS, "at most {MAX_ACTIONS} actions are supported");
        if n == MAX_ACTIONS {
            ActionSet(u64::MAX)
        } else {
            ActionSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: ActionId) -> Self {
        ActionSet(1u64 << a)
    }

    pub fn from_bits(bits: u64) -> Self {
        ActionSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, a: ActionId) -> bool {
        a < MAX_ACTIONS && self.0 & (1u64 << a) != 0
    }

    pub fn insert(&mut self, a: ActionId) {
        self.0 |= 1u64 << a;
    }

    pub fn remove(&mut self, a: ActionId) {
        self.0 &= !(1u64 << a);
    }

    pub fn intersection(self, other: ActionSet) -> ActionSet {
        ActionSet(self.0 & other.0)
    }

    pub fn union(self, other: ActionSet) -> ActionSet {
        ActionSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: ActionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// The `k`-th smallest member, if any.
    pub fn nth(self, k: usize) -> Option<ActionId> {
        self.iter().nth(k)
    }

    pub fn iter(self) -> impl Iterator<Item = ActionId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }
}

impl FromIterator<ActionId> for ActionSet {
    fn from_iter<I: IntoIterator<Item = ActionId>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterates_in_ascending_order() {
        let set: ActionSet = [5, 0, 3].into_iter().collect();
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0, 3, 5]);
        assert_eq!(set.len(), 3);
        assert_eq!(set.nth(1), Some(3));
        assert_eq!(set.nth(3), None);
    }

    #[test]
    fn full_covers_boundary() {
        assert_eq!(ActionSet::full(0), ActionSet::EMPTY);
        assert_eq!(ActionSet::full(3).len(), 3);
        assert_eq!(ActionSet::full(64).len(), 64);
    }

    #[test]
    fn set_algebra() {
        let a: ActionSet = [0, 1].into_iter().collect();
        let b: ActionSet = [1, 2].into_iter().collect();
        assert_eq!(a.intersection(b), ActionSet::singleton(1));
        assert_eq!(a.union(b).len(), 3);
        assert!(ActionSet::singleton(1).is_subset(a));
        assert!(!b.is_subset(a));
    }
}
