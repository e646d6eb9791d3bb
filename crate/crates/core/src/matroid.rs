//! Explicit matroids stored by their basis family.
//!
//! Rank, closure and flats are derived from the bases on first use and cached
//! behind [`OnceLock`]s, so a `Matroid` can be shared between threads.

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::set::{k_subsets, ElementSet, MAX_ELEMENTS};

/// Contraction and deletion sets describing a minor `M / contract \ delete`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MinorSpec {
    pub contract: ElementSet,
    pub delete: ElementSet,
}

impl MinorSpec {
    pub fn new(contract: ElementSet, delete: ElementSet) -> Result<Self> {
        if !contract.is_disjoint(delete) {
            return Err(Error::Invalid(format!(
                "contract set {contract} and delete set {delete} overlap"
            )));
        }
        Ok(MinorSpec { contract, delete })
    }

    pub fn identity() -> Self {
        MinorSpec::default()
    }
}

pub struct Matroid {
    size: usize,
    rank: usize,
    bases: Vec<ElementSet>,
    labels: Option<Arc<[String]>>,
    rank_table: OnceLock<Box<[u8]>>,
    flats: OnceLock<Vec<ElementSet>>,
}

impl Clone for Matroid {
    fn clone(&self) -> Self {
        Matroid {
            size: self.size,
            rank: self.rank,
            bases: self.bases.clone(),
            labels: self.labels.clone(),
            rank_table: self.rank_table.clone(),
            flats: self.flats.clone(),
        }
    }
}

impl PartialEq for Matroid {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.bases == other.bases
    }
}

impl Eq for Matroid {}

impl fmt::Debug for Matroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matroid")
            .field("size", &self.size)
            .field("rank", &self.rank)
            .field("bases", &self.bases)
            .finish()
    }
}

impl Matroid {
    /// Builds a matroid from a basis family, checking the matroid axioms.
    pub fn from_bases(size: usize, bases: impl IntoIterator<Item = ElementSet>) -> Result<Self> {
        if size > MAX_ELEMENTS {
            return Err(Error::TooLarge {
                size,
                cap: MAX_ELEMENTS,
            });
        }
        let ground = ElementSet::full(size);
        let mut bases: Vec<ElementSet> = bases.into_iter().collect();
        bases.sort_unstable();
        bases.dedup();
        let Some(&first) = bases.first() else {
            return Err(Error::NotAMatroid {
                reason: "the basis family is empty".into(),
                exchange_failure: None,
            });
        };
        if let Some(b) = bases.iter().find(|b| !b.is_subset(ground)) {
            return Err(Error::NotAMatroid {
                reason: format!("basis {b} is not contained in the ground set of {size} elements"),
                exchange_failure: None,
            });
        }
        let rank = first.len();
        if let Some(b) = bases.iter().find(|b| b.len() != rank) {
            return Err(Error::NotAMatroid {
                reason: format!("bases {first} and {b} have different sizes"),
                exchange_failure: None,
            });
        }
        let m = Matroid::from_sorted_bases(size, rank, bases);
        m.check_axioms()?;
        Ok(m)
    }

    /// Builds a matroid from bases known to satisfy the axioms (sorted, deduplicated).
    pub(crate) fn from_sorted_bases(size: usize, rank: usize, bases: Vec<ElementSet>) -> Self {
        debug_assert!(bases.windows(2).all(|w| w[0] < w[1]));
        Matroid {
            size,
            rank,
            bases,
            labels: None,
            rank_table: OnceLock::new(),
            flats: OnceLock::new(),
        }
    }

    /// Builds a matroid from its circuits. The circuit family is checked to be
    /// exactly the circuit family of the resulting matroid.
    pub fn from_circuits(
        size: usize,
        circuits: impl IntoIterator<Item = ElementSet>,
    ) -> Result<Self> {
        if size > MAX_ELEMENTS {
            return Err(Error::TooLarge {
                size,
                cap: MAX_ELEMENTS,
            });
        }
        let mut circuits: Vec<ElementSet> = circuits.into_iter().collect();
        circuits.sort_unstable();
        circuits.dedup();
        let ground = ElementSet::full(size);
        let independent = |x: ElementSet| circuits.iter().all(|c| !c.is_subset(x));
        let mut indep = vec![false; 1 << size];
        let mut rank = 0;
        for x in ground.subsets() {
            if independent(x) {
                indep[x.bits() as usize] = true;
                rank = rank.max(x.len());
            }
        }
        let bases: Vec<ElementSet> = k_subsets(size, rank)
            .filter(|b| indep[b.bits() as usize])
            .collect();
        let m = Matroid::from_bases(size, bases)?;
        let mut actual = m.circuits();
        actual.sort_unstable();
        if actual != circuits {
            return Err(Error::NotAMatroid {
                reason: "the given sets violate the circuit axioms".into(),
                exchange_failure: None,
            });
        }
        Ok(m)
    }

    /// All `rank`-subsets except `non_bases` are bases.
    pub fn from_non_bases(
        size: usize,
        rank: usize,
        non_bases: impl IntoIterator<Item = ElementSet>,
    ) -> Result<Self> {
        if size > MAX_ELEMENTS {
            return Err(Error::TooLarge {
                size,
                cap: MAX_ELEMENTS,
            });
        }
        let excluded: HashSet<ElementSet> = non_bases.into_iter().collect();
        if let Some(x) = excluded.iter().find(|x| x.len() != rank) {
            return Err(Error::NotAMatroid {
                reason: format!("non-basis {x} does not have {rank} elements"),
                exchange_failure: None,
            });
        }
        Matroid::from_bases(
            size,
            k_subsets(size, rank).filter(|b| !excluded.contains(b)),
        )
    }

    /// The uniform matroid `U_{rank,size}`.
    pub fn uniform(rank: usize, size: usize) -> Self {
        assert!(rank <= size && size <= MAX_ELEMENTS);
        let mut bases: Vec<ElementSet> = k_subsets(size, rank).collect();
        bases.sort_unstable();
        Matroid::from_sorted_bases(size, rank, bases)
    }

    /// The free matroid on `size` elements.
    pub fn free(size: usize) -> Self {
        Matroid::uniform(size, size)
    }

    /// The cycle matroid of the complete graph on four vertices. Element `i`
    /// is the `i`-th edge in the order 01, 02, 03, 12, 13, 23.
    pub fn mk4() -> Self {
        let triangles = [[0, 1, 3], [0, 2, 4], [1, 2, 5], [3, 4, 5]].map(ElementSet::from_elements);
        Matroid::from_non_bases(6, 3, triangles).expect("M(K4) is a matroid")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::Invalid(format!(
                "{} labels given for {} elements",
                labels.len(),
                self.size
            )));
        }
        self.labels = Some(labels.into());
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of element `e`.
    pub fn label(&self, e: usize) -> String {
        match &self.labels {
            Some(l) => l[e].clone(),
            None => e.to_string(),
        }
    }

    /// Formats a set using element labels.
    pub fn show(&self, x: ElementSet) -> String {
        let names: Vec<String> = x.iter().map(|e| self.label(e)).collect();
        format!("{{{}}}", names.join(","))
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn ground(&self) -> ElementSet {
        ElementSet::full(self.size)
    }

    /// Rank of the whole ground set.
    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn bases(&self) -> &[ElementSet] {
        &self.bases
    }

    pub fn is_basis(&self, x: ElementSet) -> bool {
        x.len() == self.rank && self.bases.binary_search(&x).is_ok()
    }

    fn rank_table(&self) -> &[u8] {
        self.rank_table.get_or_init(|| {
            let n = self.size;
            let total = 1usize << n;
            let mut indep = vec![false; total];
            for b in &self.bases {
                indep[b.bits() as usize] = true;
            }
            // Down-close the basis family.
            for x in (0..total).rev() {
                if indep[x] {
                    let mut rest = x;
                    while rest != 0 {
                        let low = rest & rest.wrapping_neg();
                        indep[x ^ low] = true;
                        rest ^= low;
                    }
                }
            }
            let mut table = vec![0u8; total];
            for x in 1..total {
                table[x] = if indep[x] {
                    x.count_ones() as u8
                } else {
                    let mut best = 0;
                    let mut rest = x;
                    while rest != 0 {
                        let low = rest & rest.wrapping_neg();
                        best = best.max(table[x ^ low]);
                        rest ^= low;
                    }
                    best
                };
            }
            table.into_boxed_slice()
        })
    }

    /// Rank of `x`: the size of a largest basis intersection.
    #[inline]
    pub fn rank_of(&self, x: ElementSet) -> usize {
        debug_assert!(x.is_subset(self.ground()));
        self.rank_table()[x.bits() as usize] as usize
    }

    #[inline]
    pub fn is_independent(&self, x: ElementSet) -> bool {
        self.rank_of(x) == x.len()
    }

    pub fn closure(&self, x: ElementSet) -> ElementSet {
        let r = self.rank_of(x);
        let mut out = x;
        for e in self.ground().difference(x) {
            if self.rank_of(x.with(e)) == r {
                out = out.with(e);
            }
        }
        out
    }

    pub fn is_flat(&self, x: ElementSet) -> bool {
        let r = self.rank_of(x);
        self.ground()
            .difference(x)
            .iter()
            .all(|e| self.rank_of(x.with(e)) > r)
    }

    /// All flats, sorted by rank and then by mask.
    pub fn flats(&self) -> &[ElementSet] {
        self.flats.get_or_init(|| {
            let mut flats: Vec<ElementSet> = self
                .ground()
                .subsets()
                .filter(|&x| self.is_flat(x))
                .collect();
            flats.sort_by_key(|&f| (self.rank_of(f), f));
            flats
        })
    }

    pub fn loops(&self) -> ElementSet {
        self.closure(ElementSet::EMPTY)
    }

    pub fn coloops(&self) -> ElementSet {
        self.ground()
            .iter()
            .filter(|&e| self.bases.iter().all(|b| b.contains(e)))
            .collect()
    }

    /// Minimal dependent sets, in mask order.
    pub fn circuits(&self) -> Vec<ElementSet> {
        self.ground()
            .subsets()
            .filter(|&x| {
                !x.is_empty()
                    && self.rank_of(x) + 1 == x.len()
                    && x.iter().all(|e| self.is_independent(x.without(e)))
            })
            .collect()
    }

    /// Number of bases containing each element.
    pub fn element_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.size];
        for b in &self.bases {
            for e in b.iter() {
                deg[e] += 1;
            }
        }
        deg
    }

    pub fn dual(&self) -> Matroid {
        let ground = self.ground();
        let mut bases: Vec<ElementSet> = self.bases.iter().map(|b| ground.difference(*b)).collect();
        bases.sort_unstable();
        let mut m = Matroid::from_sorted_bases(self.size, self.size - self.rank, bases);
        m.labels = self.labels.clone();
        m
    }

    /// The minor `self / contract \ delete`, with the remaining elements
    /// renumbered in increasing order.
    pub fn minor(&self, spec: &MinorSpec) -> Matroid {
        debug_assert!(spec.contract.is_disjoint(spec.delete));
        let kept = self
            .ground()
            .difference(spec.contract)
            .difference(spec.delete);
        let c = spec.contract;
        let rc = self.rank_of(c);
        let r = self.rank_of(kept.union(c)) - rc;
        let k = kept.len();
        let mut bases: Vec<ElementSet> = k_subsets(k, r)
            .filter(|y| {
                let y = y.expand(kept);
                self.rank_of(y.union(c)) - rc == r
            })
            .collect();
        bases.sort_unstable();
        let mut m = Matroid::from_sorted_bases(k, r, bases);
        if let Some(labels) = &self.labels {
            m.labels = Some(kept.iter().map(|e| labels[e].clone()).collect());
        }
        m
    }

    pub fn restrict(&self, keep: ElementSet) -> Matroid {
        self.minor(&MinorSpec {
            contract: ElementSet::EMPTY,
            delete: self.ground().difference(keep),
        })
    }

    pub fn delete(&self, x: ElementSet) -> Matroid {
        self.minor(&MinorSpec {
            contract: ElementSet::EMPTY,
            delete: x,
        })
    }

    pub fn contract(&self, x: ElementSet) -> Matroid {
        self.minor(&MinorSpec {
            contract: x,
            delete: ElementSet::EMPTY,
        })
    }

    /// Direct sum; the elements of `other` follow those of `self`.
    pub fn direct_sum(&self, other: &Matroid) -> Result<Matroid> {
        let size = self.size + other.size;
        if size > MAX_ELEMENTS {
            return Err(Error::TooLarge {
                size,
                cap: MAX_ELEMENTS,
            });
        }
        let shift = self.size;
        let mut bases = Vec::with_capacity(self.bases.len() * other.bases.len());
        for a in &self.bases {
            for b in &other.bases {
                bases.push(ElementSet(a.bits() | b.bits() << shift));
            }
        }
        bases.sort_unstable();
        let mut m = Matroid::from_sorted_bases(size, self.rank + other.rank, bases);
        if self.labels.is_some() || other.labels.is_some() {
            let labels = (0..self.size)
                .map(|e| self.label(e))
                .chain((0..other.size).map(|e| other.label(e)))
                .collect();
            m.labels = Some(labels);
        }
        Ok(m)
    }

    /// Relabels element `e` as `perm[e]`.
    pub fn permute(&self, perm: &[usize]) -> Matroid {
        assert_eq!(perm.len(), self.size);
        let mut bases: Vec<ElementSet> = self.bases.iter().map(|b| b.permute(perm)).collect();
        bases.sort_unstable();
        let mut m = Matroid::from_sorted_bases(self.size, self.rank, bases);
        if let Some(labels) = &self.labels {
            let mut new = vec![String::new(); self.size];
            for (e, &p) in perm.iter().enumerate() {
                new[p] = labels[e].clone();
            }
            m.labels = Some(new.into());
        }
        m
    }

    /// Adds `count` loops after the existing elements.
    pub fn add_loops(&self, count: usize) -> Result<Matroid> {
        let loops = Matroid::from_sorted_bases(count, 0, vec![ElementSet::EMPTY]);
        self.direct_sum(&loops)
    }

    fn check_axioms(&self) -> Result<()> {
        // Local submodularity of the rank function derived from the
        // down-closure of the bases characterises matroids.
        for x in self.ground().subsets() {
            let r = self.rank_of(x);
            let flat_like: Vec<usize> = self
                .ground()
                .difference(x)
                .iter()
                .filter(|&e| self.rank_of(x.with(e)) == r)
                .collect();
            for (i, &e) in flat_like.iter().enumerate() {
                for &f in &flat_like[i + 1..] {
                    if self.rank_of(x.with(e).with(f)) != r {
                        return Err(self.axiom_failure());
                    }
                }
            }
        }
        Ok(())
    }

    fn axiom_failure(&self) -> Error {
        let set: HashSet<ElementSet> = self.bases.iter().copied().collect();
        for &b1 in &self.bases {
            for &b2 in &self.bases {
                for x in b1.difference(b2) {
                    let ok = b2
                        .difference(b1)
                        .iter()
                        .any(|y| set.contains(&b1.without(x).with(y)));
                    if !ok {
                        return Error::NotAMatroid {
                            reason: format!(
                                "basis exchange fails for {b1} and {b2} at element {x}"
                            ),
                            exchange_failure: Some((b1, b2)),
                        };
                    }
                }
            }
        }
        Error::NotAMatroid {
            reason: "rank function is not submodular".into(),
            exchange_failure: None,
        }
    }
}
