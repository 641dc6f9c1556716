use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Largest item count an [`ItemSet`] can represent.
pub const MAX_REPRESENTABLE_ITEMS: usize = 32;

/// A set of items as a bitmask; bit `i` is item `i`.
///
/// Ordering is by bitmask value, which is also the order subsets are scanned
/// in and the order ties are broken by.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ItemSet(u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_bits(bits: u32) -> Self {
        ItemSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_REPRESENTABLE_ITEMS);
        if n == MAX_REPRESENTABLE_ITEMS {
            ItemSet(u32::MAX)
        } else {
            ItemSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(item: usize) -> Self {
        assert!(item < MAX_REPRESENTABLE_ITEMS);
        ItemSet(1 << item)
    }

    pub fn contains(self, item: usize) -> bool {
        item < MAX_REPRESENTABLE_ITEMS && self.0 & (1 << item) != 0
    }

    pub fn with(self, item: usize) -> Self {
        ItemSet(self.0 | ItemSet::singleton(item).0)
    }

    pub fn without(self, item: usize) -> Self {
        ItemSet(self.0 & !ItemSet::singleton(item).0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    /// Items in increasing order.
    pub fn iter(self) -> Items {
        Items(self.0)
    }

    /// Every subset of `{0, .., n-1}`, in bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = ItemSet> {
        let end = 1u64 << n;
        (0..end).map(|b| ItemSet(b as u32))
    }

    /// Every subset of `self`, including `self` and the empty set.
    pub fn subsets(self) -> impl Iterator<Item = ItemSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(ItemSet(cur))
        })
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(ItemSet::EMPTY, ItemSet::with)
    }
}

impl IntoIterator for ItemSet {
    type Item = usize;
    type IntoIter = Items;
    fn into_iter(self) -> Items {
        self.iter()
    }
}

pub struct Items(u32);

impl Iterator for Items {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Items {}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = items.iter().find(|&&i| i >= MAX_REPRESENTABLE_ITEMS) {
            return Err(de::Error::custom(format!("item index {bad} out of range")));
        }
        Ok(items.into_iter().collect())
    }
}
