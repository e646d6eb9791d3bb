//! Modular cuts, single-element extensions and deflation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::canonical::{canonical_key, CanonicalKey, CANONICAL_CAP};
use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::{k_subsets, ElementSet, MAX_ELEMENTS};

/// Default bound on the number of flats for modular-cut enumeration.
pub const DEFAULT_FLAT_CAP: usize = 64;

/// An up-closed family of flats that is closed under intersections of
/// modular pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModularCut {
    /// The ⊆-minimal members.
    pub minimal_flats: Vec<ElementSet>,
    /// All members, sorted by mask.
    pub flats: Vec<ElementSet>,
}

impl ModularCut {
    pub fn empty() -> Self {
        ModularCut {
            minimal_flats: Vec::new(),
            flats: Vec::new(),
        }
    }

    /// Builds a cut from its member flats (any order).
    pub fn from_flats(mut flats: Vec<ElementSet>) -> Self {
        flats.sort_unstable();
        flats.dedup();
        let minimal_flats = flats
            .iter()
            .copied()
            .filter(|f| !flats.iter().any(|g| g.is_proper_subset(*f)))
            .collect();
        ModularCut {
            minimal_flats,
            flats,
        }
    }

    /// The principal cut generated by a flat: all flats containing it.
    pub fn principal(m: &Matroid, flat: ElementSet) -> Self {
        ModularCut::from_flats(
            m.flats()
                .iter()
                .copied()
                .filter(|g| flat.is_subset(*g))
                .collect(),
        )
    }

    pub fn contains(&self, f: ElementSet) -> bool {
        self.flats.binary_search(&f).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.flats.is_empty()
    }

    /// Checks the defining properties against `m`.
    pub fn validate(&self, m: &Matroid) -> Result<()> {
        for &f in &self.flats {
            if !f.is_subset(m.ground()) || !m.is_flat(f) {
                return Err(Error::InvalidCut(format!("{f} is not a flat")));
            }
        }
        for &f in &self.flats {
            for &g in m.flats() {
                if f.is_subset(g) && !self.contains(g) {
                    return Err(Error::InvalidCut(format!(
                        "not up-closed: {f} is a member but {g} is not"
                    )));
                }
            }
        }
        for (i, &f) in self.flats.iter().enumerate() {
            for &g in &self.flats[i + 1..] {
                if is_modular_pair(m, f, g) && !self.contains(f.intersection(g)) {
                    return Err(Error::InvalidCut(format!(
                        "modular pair {f}, {g} has its intersection outside the cut"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn is_modular_pair(m: &Matroid, f: ElementSet, g: ElementSet) -> bool {
    m.rank_of(f) + m.rank_of(g) == m.rank_of(f.union(g)) + m.rank_of(f.intersection(g))
}

/// Enumerates every modular cut of `m`, including the empty cut and the full
/// lattice.
///
/// Flats are decided in decreasing rank order. A flat may join the cut only
/// if all of its upper covers did; joining forces the intersections with
/// every modular partner already in the cut, which lie lower and are decided
/// later.
pub fn modular_cuts(m: &Matroid, flat_cap: usize) -> Result<Vec<ModularCut>> {
    let flats = m.flats();
    if flats.len() > flat_cap {
        return Err(Error::FlatLatticeTooLarge {
            flats: flats.len(),
            cap: flat_cap,
        });
    }
    let count = flats.len();
    let index: HashMap<ElementSet, usize> =
        flats.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let ranks: Vec<usize> = flats.iter().map(|&f| m.rank_of(f)).collect();
    let covers: Vec<Vec<usize>> = (0..count)
        .map(|i| {
            (0..count)
                .filter(|&j| ranks[j] == ranks[i] + 1 && flats[i].is_subset(flats[j]))
                .collect()
        })
        .collect();
    // meets[i][j] = index of the intersection when (i, j) is a modular pair.
    let meets: Vec<Vec<Option<usize>>> = (0..count)
        .map(|i| {
            (0..count)
                .map(|j| {
                    is_modular_pair(m, flats[i], flats[j])
                        .then(|| index[&flats[i].intersection(flats[j])])
                })
                .collect()
        })
        .collect();

    struct State<'a> {
        flats: &'a [ElementSet],
        covers: &'a [Vec<usize>],
        meets: &'a [Vec<Option<usize>>],
        member: Vec<bool>,
        forced: Vec<u32>,
        chosen: Vec<usize>,
        out: Vec<ModularCut>,
    }

    fn visit(st: &mut State<'_>, pos: usize) {
        // `pos` counts down; flats[pos - 1] is decided next.
        if pos == 0 {
            let members = st.chosen.iter().map(|&i| st.flats[i]).collect();
            st.out.push(ModularCut::from_flats(members));
            return;
        }
        let i = pos - 1;
        let covers_in = st.covers[i].iter().all(|&j| st.member[j]);
        if covers_in {
            let mut newly_forced = Vec::new();
            let mut ok = true;
            for &j in &st.chosen {
                if let Some(meet) = st.meets[i][j] {
                    if meet > i {
                        // Already decided; it must be in the cut.
                        if !st.member[meet] {
                            ok = false;
                            break;
                        }
                    } else if meet < i {
                        newly_forced.push(meet);
                    }
                }
            }
            if ok {
                for &f in &newly_forced {
                    st.forced[f] += 1;
                }
                st.member[i] = true;
                st.chosen.push(i);
                visit(st, pos - 1);
                st.chosen.pop();
                st.member[i] = false;
                for &f in &newly_forced {
                    st.forced[f] -= 1;
                }
            }
        }
        if st.forced[i] == 0 {
            visit(st, pos - 1);
        }
    }

    let mut st = State {
        flats,
        covers: &covers,
        meets: &meets,
        member: vec![false; count],
        forced: vec![0; count],
        chosen: Vec::new(),
        out: Vec::new(),
    };
    visit(&mut st, count);
    Ok(st.out)
}

/// The single-element extension of `m` by a new element (index `m.size()`)
/// attached through `cut`: the new element lies in the closure of exactly
/// the flats of the cut.
pub fn extend_by_cut(m: &Matroid, cut: &ModularCut) -> Result<Matroid> {
    cut.validate(m)?;
    let n = m.size();
    if n + 1 > MAX_ELEMENTS {
        return Err(Error::TooLarge {
            size: n + 1,
            cap: MAX_ELEMENTS,
        });
    }
    let e = n;
    let bases: Vec<ElementSet> = if cut.is_empty() {
        m.bases().iter().map(|b| b.with(e)).collect()
    } else {
        let r = m.rank();
        let mut bases: Vec<ElementSet> = m.bases().to_vec();
        if r > 0 {
            for i in k_subsets(n, r - 1) {
                if m.is_independent(i) && !cut.contains(m.closure(i)) {
                    bases.push(i.with(e));
                }
            }
        }
        bases
    };
    let mut ext = Matroid::from_bases(n + 1, bases)?;
    if let Some(labels) = m.labels() {
        let mut labels = labels.to_vec();
        let mut fresh = format!("e{}", n + 1);
        while labels.contains(&fresh) {
            fresh.push('\'');
        }
        labels.push(fresh);
        ext = ext.with_labels(labels)?;
    }
    Ok(ext)
}

/// The flats of `m` whose closure in `ext` contains the element `e`.
pub fn recover_cut(m: &Matroid, ext: &Matroid, e: usize) -> ModularCut {
    ModularCut::from_flats(
        m.flats()
            .iter()
            .copied()
            .filter(|&f| ext.rank_of(f.with(e)) == ext.rank_of(f))
            .collect(),
    )
}

/// Minimal members of the cut `{F ∈ ℱ(M|keep) : e ∈ cl_M(F)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutMinimum {
    /// Exactly one minimal flat.
    Unique(ElementSet),
    /// Two or more minimal flats.
    Ambiguous(Vec<ElementSet>),
    /// The cut is empty (`e` is a coloop of `M|(keep ∪ {e})`).
    NoneInCut,
}

impl CutMinimum {
    pub fn unique(&self) -> Option<ElementSet> {
        match self {
            CutMinimum::Unique(f) => Some(*f),
            _ => None,
        }
    }
}

/// Flats of the restriction `m | keep`, as subsets of `keep`.
pub fn restriction_flats(m: &Matroid, keep: ElementSet) -> Vec<ElementSet> {
    keep.subsets()
        .filter(|&f| m.closure(f).intersection(keep) == f)
        .collect()
}

pub fn principal_cut_minimum(m: &Matroid, keep: ElementSet, e: usize) -> CutMinimum {
    debug_assert!(!keep.contains(e));
    let cut: Vec<ElementSet> = restriction_flats(m, keep)
        .into_iter()
        .filter(|&f| m.rank_of(f.with(e)) == m.rank_of(f))
        .collect();
    let minimal: Vec<ElementSet> = cut
        .iter()
        .copied()
        .filter(|f| !cut.iter().any(|g| g.is_proper_subset(*f)))
        .collect();
    match minimal.len() {
        0 => CutMinimum::NoneInCut,
        1 => CutMinimum::Unique(minimal[0]),
        _ => CutMinimum::Ambiguous(minimal),
    }
}

/// Evidence that `m | kept` is a deflate of `m`: re-adding `removal_order`
/// one element at a time, each element's cut over the current restriction
/// has the unique minimal flat recorded at the same position.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DeflationCertificate {
    pub kept: ElementSet,
    pub removal_order: Vec<usize>,
    pub minimal_flats: Vec<ElementSet>,
}

impl DeflationCertificate {
    pub fn is_trivial(&self) -> bool {
        self.removal_order.is_empty()
    }

    /// Replays the certificate step by step.
    pub fn verify(&self, m: &Matroid) -> bool {
        if self.removal_order.len() != self.minimal_flats.len() {
            return false;
        }
        let mut current = self.kept;
        for (&e, &flat) in self.removal_order.iter().zip(&self.minimal_flats) {
            if current.contains(e) || e >= m.size() {
                return false;
            }
            if principal_cut_minimum(m, current, e) != CutMinimum::Unique(flat) {
                return false;
            }
            current = current.with(e);
        }
        current == m.ground()
    }
}

/// Sets `S` such that `m | S` is a deflate of `m`, found by removing one
/// element at a time; each maps to the removed element, the remaining set and
/// the unique minimal flat that justified the removal.
fn deflate_search(
    m: &Matroid,
    greedy: bool,
) -> HashMap<ElementSet, Option<(ElementSet, usize, ElementSet)>> {
    let mut parent: HashMap<ElementSet, Option<(ElementSet, usize, ElementSet)>> = HashMap::new();
    parent.insert(m.ground(), None);
    let mut queue = VecDeque::from([m.ground()]);
    while let Some(s) = queue.pop_front() {
        for e in s.iter() {
            let rest = s.without(e);
            if parent.contains_key(&rest) {
                continue;
            }
            if let CutMinimum::Unique(f) = principal_cut_minimum(m, rest, e) {
                parent.insert(rest, Some((s, e, f)));
                queue.push_back(rest);
                if greedy {
                    break;
                }
            }
        }
    }
    parent
}

fn certificate_for(
    parent: &HashMap<ElementSet, Option<(ElementSet, usize, ElementSet)>>,
    kept: ElementSet,
) -> DeflationCertificate {
    let mut removal_order = Vec::new();
    let mut minimal_flats = Vec::new();
    let mut cur = kept;
    while let Some(Some((up, e, f))) = parent.get(&cur) {
        removal_order.push(*e);
        minimal_flats.push(*f);
        cur = *up;
    }
    DeflationCertificate {
        kept,
        removal_order,
        minimal_flats,
    }
}

/// A deflate of `m` on as few elements as possible, by exhaustive search over
/// removal orders. Ties are broken by the smallest mask. Returns `m` with a
/// trivial certificate iff `m` is deflated.
pub fn minimal_deflate(m: &Matroid) -> (Matroid, DeflationCertificate) {
    let parent = deflate_search(m, false);
    let kept = parent
        .keys()
        .copied()
        .min_by_key(|s| (s.len(), *s))
        .expect("the ground set is always reachable");
    (m.restrict(kept), certificate_for(&parent, kept))
}

/// Removes removable elements greedily (smallest index first). Faster but may
/// stop at a larger deflate than [`minimal_deflate`].
pub fn greedy_deflate(m: &Matroid) -> (Matroid, DeflationCertificate) {
    let parent = deflate_search(m, true);
    let kept = parent
        .keys()
        .copied()
        .min_by_key(|s| (s.len(), *s))
        .expect("the ground set is always reachable");
    (m.restrict(kept), certificate_for(&parent, kept))
}

pub fn is_deflated(m: &Matroid) -> bool {
    m.ground().iter().all(|e| {
        principal_cut_minimum(m, m.ground().without(e), e)
            .unique()
            .is_none()
    })
}

/// Whether some deflate of `big` is isomorphic to `small`; returns its
/// certificate.
pub fn deflate_isomorphic_to(
    big: &Matroid,
    small: &Matroid,
) -> Result<Option<DeflationCertificate>> {
    if small.size() > big.size() || small.rank() > big.rank() {
        return Ok(None);
    }
    let target = canonical_key(small)?;
    let parent = deflate_search(big, false);
    let mut candidates: Vec<ElementSet> = parent
        .keys()
        .copied()
        .filter(|s| s.len() == small.size())
        .collect();
    candidates.sort_unstable();
    for s in candidates {
        let r = big.restrict(s);
        if r.rank() == small.rank() && canonical_key(&r)? == target {
            return Ok(Some(certificate_for(&parent, s)));
        }
    }
    Ok(None)
}

/// `r² · |E| + r + |E|`: the ground-set size that suffices for a
/// representation of a gammoid of rank `r` on `E`.
pub fn size_bound(m: &Matroid) -> usize {
    let r = m.rank();
    let n = m.size();
    r * r * n + r + n
}

struct Frame {
    matroid: Arc<Matroid>,
    cuts: Vec<ModularCut>,
    next: usize,
}

/// Lazily enumerates extensions of a matroid up to isomorphism by repeated
/// single-element extension, depth first, deduplicating by canonical key at
/// every intermediate size.
pub struct ExtensionStream {
    target: usize,
    all_sizes: bool,
    flat_cap: usize,
    stack: Vec<Frame>,
    seen: HashMap<usize, HashSet<CanonicalKey>>,
    pending: VecDeque<Result<Matroid>>,
    done: bool,
}

impl ExtensionStream {
    fn new(m: &Matroid, target: usize, all_sizes: bool, flat_cap: usize) -> Self {
        let mut stream = ExtensionStream {
            target,
            all_sizes,
            flat_cap,
            stack: Vec::new(),
            seen: HashMap::new(),
            pending: VecDeque::new(),
            done: false,
        };
        if target < m.size() {
            stream.pending.push_back(Err(Error::Invalid(format!(
                "target size {target} is smaller than the {} elements of the matroid",
                m.size()
            ))));
            return stream;
        }
        if target > CANONICAL_CAP {
            stream.pending.push_back(Err(Error::SizeExceeded {
                size: target,
                cap: CANONICAL_CAP,
            }));
            return stream;
        }
        match canonical_key(m) {
            Ok(key) => {
                stream.seen.entry(m.size()).or_default().insert(key);
            }
            Err(err) => {
                stream.pending.push_back(Err(err));
                return stream;
            }
        }
        if target == m.size() || all_sizes {
            stream.pending.push_back(Ok(m.clone()));
        }
        if target > m.size() {
            match modular_cuts(m, flat_cap) {
                Ok(cuts) => stream.stack.push(Frame {
                    matroid: Arc::new(m.clone()),
                    cuts,
                    next: 0,
                }),
                Err(err) => stream.pending.push_back(Err(err)),
            }
        }
        stream
    }

    fn step(&mut self) -> Option<Result<Matroid>> {
        loop {
            let top = self.stack.last_mut()?;
            if top.next == top.cuts.len() {
                self.stack.pop();
                continue;
            }
            let cut = &top.cuts[top.next];
            top.next += 1;
            let child = match extend_by_cut(&top.matroid, cut) {
                Ok(c) => c,
                Err(err) => return Some(Err(err)),
            };
            let key = match canonical_key(&child) {
                Ok(k) => k,
                Err(err) => return Some(Err(err)),
            };
            let size = child.size();
            if !self.seen.entry(size).or_default().insert(key) {
                continue;
            }
            if size < self.target {
                let cuts = match modular_cuts(&child, self.flat_cap) {
                    Ok(c) => c,
                    Err(err) => return Some(Err(err)),
                };
                self.stack.push(Frame {
                    matroid: Arc::new(child.clone()),
                    cuts,
                    next: 0,
                });
                if self.all_sizes {
                    return Some(Ok(child));
                }
            } else {
                return Some(Ok(child));
            }
        }
    }
}

impl Iterator for ExtensionStream {
    type Item = Result<Matroid>;

    fn next(&mut self) -> Option<Result<Matroid>> {
        if self.done {
            return None;
        }
        if let Some(item) = self.pending.pop_front() {
            if item.is_err() {
                self.done = true;
            }
            return Some(item);
        }
        let item = self.step();
        match &item {
            None | Some(Err(_)) => self.done = true,
            Some(Ok(_)) => {}
        }
        item
    }
}

/// One representative per isomorphism class of extensions of `m` with
/// exactly `target` elements.
pub fn extensions_up_to_iso(m: &Matroid, target: usize) -> ExtensionStream {
    ExtensionStream::new(m, target, false, DEFAULT_FLAT_CAP)
}

/// Like [`extensions_up_to_iso`] with a custom flat cap.
pub fn extensions_up_to_iso_with_cap(
    m: &Matroid,
    target: usize,
    flat_cap: usize,
) -> ExtensionStream {
    ExtensionStream::new(m, target, false, flat_cap)
}

/// One representative per isomorphism class of extensions of `m` with at
/// most `max_size` elements, starting with `m` itself.
pub fn extensions_up_to(m: &Matroid, max_size: usize, flat_cap: usize) -> ExtensionStream {
    ExtensionStream::new(m, max_size, true, flat_cap)
}
