//! Bitmask-encoded subsets of a small ground set.

use std::fmt;

/// Hard cap on ground-set size; subset tables have `2^n` entries.
pub const MAX_ELEMENTS: usize = 20;

/// A subset of `{0, .., n-1}` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ElementSet(pub u32);

impl ElementSet {
    pub const EMPTY: ElementSet = ElementSet(0);

    /// The full set `{0, .., n-1}`.
    #[inline]
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= 31);
        ElementSet(((1u64 << n) - 1) as u32)
    }

    #[inline]
    pub fn singleton(e: usize) -> Self {
        ElementSet(1 << e)
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter()
            .fold(ElementSet::EMPTY, |acc, e| acc.with(e))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, e: usize) -> bool {
        self.0 >> e & 1 == 1
    }

    #[inline]
    pub fn with(self, e: usize) -> Self {
        ElementSet(self.0 | 1 << e)
    }

    #[inline]
    pub fn without(self, e: usize) -> Self {
        ElementSet(self.0 & !(1 << e))
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        ElementSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        ElementSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        ElementSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_proper_subset(self, other: Self) -> bool {
        self.is_subset(other) && self != other
    }

    #[inline]
    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest element, if any.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest element index plus one (0 for the empty set).
    #[inline]
    pub fn span(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    pub fn iter(self) -> Elements {
        Elements(self.0)
    }

    /// All subsets of `self`, starting with the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }

    /// Applies `perm` (old index -> new index) to every element.
    pub fn permute(self, perm: &[usize]) -> Self {
        self.iter()
            .fold(ElementSet::EMPTY, |acc, e| acc.with(perm[e]))
    }

    /// Renumbers the elements of `self` that lie in `domain` to `0..|domain|`
    /// preserving order. Elements outside `domain` are dropped.
    pub fn compress(self, domain: ElementSet) -> Self {
        let mut out = 0u32;
        for (i, e) in domain.iter().enumerate() {
            if self.contains(e) {
                out |= 1 << i;
            }
        }
        ElementSet(out)
    }

    /// Inverse of [`compress`](Self::compress).
    pub fn expand(self, domain: ElementSet) -> Self {
        let mut out = ElementSet::EMPTY;
        for (i, e) in domain.iter().enumerate() {
            if self.contains(i) {
                out = out.with(e);
            }
        }
        out
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ElementSet::from_elements(iter)
    }
}

impl IntoIterator for ElementSet {
    type Item = usize;
    type IntoIter = Elements;
    fn into_iter(self) -> Elements {
        self.iter()
    }
}

#[derive(Clone)]
pub struct Elements(u32);

impl Iterator for Elements {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let e = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Elements {}

/// Iterates the subsets of a mask in increasing numeric order.
#[derive(Clone)]
pub struct Subsets {
    universe: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = ElementSet;

    fn next(&mut self) -> Option<ElementSet> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            Some((cur | !self.universe).wrapping_add(1) & self.universe)
        };
        Some(ElementSet(cur))
    }
}

/// All `k`-subsets of `{0, .., n-1}` in colex order.
pub fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = ElementSet> {
    let limit: u64 = 1 << n;
    let start: Option<u64> = if k > n {
        None
    } else if k == 0 {
        Some(0)
    } else {
        Some((1u64 << k) - 1)
    };
    let mut cur = start;
    std::iter::from_fn(move || {
        let x = cur?;
        cur = if x == 0 {
            None
        } else {
            // Gosper's hack
            let c = x & x.wrapping_neg();
            let r = x + c;
            let nx = (((r ^ x) >> 2) / c) | r;
            (nx < limit).then_some(nx)
        };
        Some(ElementSet(x as u32))
    })
}
