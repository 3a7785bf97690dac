use std::fmt;

use fixedbitset::FixedBitSet;

/// Dense index of a component inside a validated [`Community`](crate::Community).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub usize);

impl ComponentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A set of components, stored as a bitset sized to the community.
///
/// Iteration always yields ids in ascending order, which is the canonical
/// order used for enumeration and tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentSet {
    bits: FixedBitSet,
}

impl ComponentSet {
    pub fn empty(universe: usize) -> Self {
        ComponentSet {
            bits: FixedBitSet::with_capacity(universe),
        }
    }

    pub fn from_ids<I: IntoIterator<Item = ComponentId>>(universe: usize, ids: I) -> Self {
        let mut set = ComponentSet::empty(universe);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, id: ComponentId) {
        self.bits.insert(id.0);
    }

    pub fn remove(&mut self, id: ComponentId) {
        self.bits.set(id.0, false);
    }

    #[inline]
    pub fn contains(&self, id: ComponentId) -> bool {
        self.bits.contains(id.0)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_subset(&self, other: &ComponentSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = ComponentId> + '_ {
        self.bits.ones().map(ComponentId)
    }

    pub fn to_vec(&self) -> Vec<ComponentId> {
        self.iter().collect()
    }
}
