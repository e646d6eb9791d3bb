//! Mason's α-invariant and the certificate tests used by the decision
//! procedure.

use crate::error::{Error, Result};
use crate::matroid::{Matroid, MinorSpec};
use crate::minors::{has_minor_isomorphic_to, mk4, u24};
use crate::set::{k_subsets, ElementSet};

/// α values for every subset of the ground set.
#[derive(Clone, Debug)]
pub struct AlphaTable {
    size: usize,
    values: Vec<i64>,
    flats: Vec<(ElementSet, i64)>,
    negative_witness: Option<ElementSet>,
}

impl AlphaTable {
    /// Resolves α on the flats in rank order, then derives every other subset
    /// from the sums of α over the flats it contains.
    pub fn new(m: &Matroid) -> Self {
        let n = m.size();
        let total = 1usize << n;
        let mut flats: Vec<(ElementSet, i64)> = Vec::with_capacity(m.flats().len());
        for &f in m.flats() {
            // Flats are sorted by rank, so proper sub-flats come earlier.
            let below: i64 = flats
                .iter()
                .filter(|(g, _)| g.is_proper_subset(f))
                .map(|(_, a)| *a)
                .sum();
            let a = f.len() as i64 - m.rank_of(f) as i64 - below;
            flats.push((f, a));
        }

        let mut on_flats = vec![0i64; total];
        for &(f, a) in &flats {
            on_flats[f.bits() as usize] = a;
        }
        // Sum over subsets: below[X] = Σ_{flats F ⊆ X} α(F).
        let mut below = on_flats.clone();
        for bit in 0..n {
            let step = 1usize << bit;
            for x in 0..total {
                if x & step != 0 {
                    below[x] += below[x ^ step];
                }
            }
        }
        let mut values = vec![0i64; total];
        for x in 0..total {
            let set = ElementSet(x as u32);
            let proper = below[x] - on_flats[x];
            values[x] = set.len() as i64 - m.rank_of(set) as i64 - proper;
        }
        // Scan from the full set down so that E is reported when it qualifies.
        let negative_witness = (0..total)
            .rev()
            .find(|&x| values[x] < 0)
            .map(|x| ElementSet(x as u32));
        AlphaTable {
            size: n,
            values,
            flats,
            negative_witness,
        }
    }

    #[inline]
    pub fn get(&self, x: ElementSet) -> i64 {
        debug_assert!(x.span() <= self.size);
        self.values[x.bits() as usize]
    }

    /// α on the flats, in rank order.
    pub fn flat_values(&self) -> &[(ElementSet, i64)] {
        &self.flats
    }

    /// Some subset with negative α, if one exists.
    pub fn negative_witness(&self) -> Option<ElementSet> {
        self.negative_witness
    }

    pub fn is_non_negative(&self) -> bool {
        self.negative_witness.is_none()
    }
}

pub fn alpha(m: &Matroid, x: ElementSet) -> i64 {
    AlphaTable::new(m).get(x)
}

/// `None` iff `α_M(X) ≥ 0` for every subset `X`, i.e. `m` is a strict
/// gammoid; otherwise a subset with negative α.
pub fn alpha_non_negative(m: &Matroid) -> Option<ElementSet> {
    AlphaTable::new(m).negative_witness()
}

/// Checks α only on flats. This is not known to be equivalent to the full
/// check and must not be used to certify strictness.
pub fn alpha_non_negative_flats_only_unsafe(m: &Matroid) -> Option<ElementSet> {
    AlphaTable::new(m)
        .flat_values()
        .iter()
        .find(|(_, a)| *a < 0)
        .map(|(f, _)| *f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SboVerdict {
    Orderable,
    NotOrderable,
}

/// A bijection `B1 \ B2 -> B2 \ B1` as `(from, to)` pairs.
pub type Bijection = Vec<(usize, usize)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SboWitness {
    pub basis_pair: (ElementSet, ElementSet),
    pub verdict: SboVerdict,
    /// For an orderable matroid, a passing bijection for `basis_pair`.
    pub bijection: Option<Bijection>,
    /// For a failing pair, each bijection with the first subset `X` (by
    /// increasing size) for which the exchange is not a basis. Left empty
    /// when `|B1 \ B2|` exceeds [`SBO_LISTING_CAP`].
    pub failing_subsets: Vec<(Bijection, ElementSet)>,
}

/// Largest `|B1 \ B2|` for which every failing bijection is listed.
pub const SBO_LISTING_CAP: usize = 7;

/// Decides strong base-orderability by searching, for every pair of bases,
/// a bijection between their differences that is the identity on the common
/// part and for which all simultaneous exchanges are bases.
pub fn strongly_base_orderable(m: &Matroid) -> SboWitness {
    let bases = m.bases();
    let mut hardest: Option<(usize, (ElementSet, ElementSet), Bijection)> = None;
    for (i, &b1) in bases.iter().enumerate() {
        for &b2 in &bases[i + 1..] {
            let from: Vec<usize> = b1.difference(b2).iter().collect();
            let to: Vec<usize> = b2.difference(b1).iter().collect();
            match find_bijection(m, b1, &from, &to) {
                Some(phi) => {
                    if hardest.as_ref().is_none_or(|(k, _, _)| from.len() > *k) {
                        hardest = Some((from.len(), (b1, b2), phi));
                    }
                }
                None => {
                    let failing_subsets = if from.len() <= SBO_LISTING_CAP {
                        list_failures(m, b1, &from, &to)
                    } else {
                        Vec::new()
                    };
                    return SboWitness {
                        basis_pair: (b1, b2),
                        verdict: SboVerdict::NotOrderable,
                        bijection: None,
                        failing_subsets,
                    };
                }
            }
        }
    }
    let (pair, bijection) = match hardest {
        Some((_, pair, phi)) => (pair, phi),
        None => ((bases[0], bases[0]), Vec::new()),
    };
    SboWitness {
        basis_pair: pair,
        verdict: SboVerdict::Orderable,
        bijection: Some(bijection),
        failing_subsets: Vec::new(),
    }
}

/// `(B1 \ X) ∪ φ[X]` for `X` given as a bitmask over positions in `from`.
fn exchange(b1: ElementSet, from: &[usize], image: &[usize], positions: u32) -> ElementSet {
    let mut out = b1;
    for (i, (&x, &y)) in from.iter().zip(image).enumerate() {
        if positions >> i & 1 == 1 {
            out = out.without(x).with(y);
        }
    }
    out
}

fn find_bijection(m: &Matroid, b1: ElementSet, from: &[usize], to: &[usize]) -> Option<Bijection> {
    let k = from.len();
    let mut image: Vec<usize> = Vec::with_capacity(k);
    let mut used = vec![false; k];

    fn extend(
        m: &Matroid,
        b1: ElementSet,
        from: &[usize],
        to: &[usize],
        image: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let i = image.len();
        if i == from.len() {
            return true;
        }
        for j in 0..to.len() {
            if used[j] {
                continue;
            }
            image.push(to[j]);
            // Every subset of the assigned positions that contains position i,
            // in increasing size.
            let mut subsets: Vec<u32> = (0u32..1 << i).map(|s| s | 1 << i).collect();
            subsets.sort_by_key(|s| s.count_ones());
            let ok = subsets
                .iter()
                .all(|&s| m.is_basis(exchange(b1, &from[..=i], image, s)));
            if ok {
                used[j] = true;
                if extend(m, b1, from, to, image, used) {
                    return true;
                }
                used[j] = false;
            }
            image.pop();
        }
        false
    }

    if extend(m, b1, from, to, &mut image, &mut used) {
        Some(from.iter().copied().zip(image).collect())
    } else {
        None
    }
}

fn list_failures(
    m: &Matroid,
    b1: ElementSet,
    from: &[usize],
    to: &[usize],
) -> Vec<(Bijection, ElementSet)> {
    let k = from.len();
    let mut subsets: Vec<u32> = (1u32..1 << k).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    let mut out = Vec::new();
    let mut perm: Vec<usize> = to.to_vec();
    permutations(&mut perm, 0, &mut |image| {
        let failing = subsets
            .iter()
            .find(|&&s| !m.is_basis(exchange(b1, from, image, s)))
            .expect("no passing bijection exists");
        let x: ElementSet = (0..k)
            .filter(|i| failing >> i & 1 == 1)
            .map(|i| from[i])
            .collect();
        out.push((from.iter().copied().zip(image.iter().copied()).collect(), x));
    });
    out
}

fn permutations(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Re-checks an orderable witness bijection or a failing pair.
pub fn verify_sbo_pair(m: &Matroid, b1: ElementSet, b2: ElementSet) -> Option<Bijection> {
    let from: Vec<usize> = b1.difference(b2).iter().collect();
    let to: Vec<usize> = b2.difference(b1).iter().collect();
    find_bijection(m, b1, &from, &to)
}

/// No `U_{2,4}` minor.
pub fn is_binary(m: &Matroid) -> bool {
    has_minor_isomorphic_to(m, &u24())
        .expect("U_{2,4} is within the canonicalization cap")
        .is_none()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesParallelOutcome {
    /// Neither `M(K_4)` nor `U_{2,4}` is a minor.
    Gammoid,
    /// An `M(K_4)` minor.
    NotGammoid(MinorSpec),
    /// No `M(K_4)` minor but a `U_{2,4}` minor.
    Inconclusive(MinorSpec),
}

pub fn series_parallel_gammoid_test(m: &Matroid) -> SeriesParallelOutcome {
    if let Some(w) = has_minor_isomorphic_to(m, &mk4()).expect("M(K4) within cap") {
        return SeriesParallelOutcome::NotGammoid(w);
    }
    match has_minor_isomorphic_to(m, &u24()).expect("U24 within cap") {
        Some(w) => SeriesParallelOutcome::Inconclusive(w),
        None => SeriesParallelOutcome::Gammoid,
    }
}

/// Searches an independent `X` with `|X| = r(M) - 3` and a subset `Y` of
/// `E \ X` with `α_{M/X}(Y) < 0`. Such a pair exhibits a rank-3 minor that
/// is not a strict gammoid, hence not a gammoid. `Y` is reported in the
/// element numbering of `m`.
pub fn rank3_contraction_witness(m: &Matroid) -> Result<Option<(ElementSet, ElementSet)>> {
    let r = m.rank();
    if r < 3 {
        return Err(Error::RankTooLow { rank: r });
    }
    let ground = m.ground();
    for x in k_subsets(m.size(), r - 3) {
        if !m.is_independent(x) {
            continue;
        }
        let rest = ground.difference(x);
        let minor = m.contract(x);
        debug_assert_eq!(minor.rank(), 3);
        if let Some(y) = alpha_non_negative(&minor) {
            return Ok(Some((x, y.expand(rest))));
        }
    }
    Ok(None)
}

/// Checks a rank-3 contraction witness.
pub fn verify_rank3_witness(m: &Matroid, x: ElementSet, y: ElementSet) -> bool {
    let r = m.rank();
    if r < 3 || x.len() != r - 3 || !m.is_independent(x) || !x.is_disjoint(y) {
        return false;
    }
    let rest = m.ground().difference(x);
    if !y.is_subset(rest) {
        return false;
    }
    alpha(&m.contract(x), y.compress(rest)) < 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_of_empty_is_zero() {
        for m in [
            Matroid::uniform(2, 4),
            Matroid::mk4(),
            Matroid::uniform(0, 3),
        ] {
            assert_eq!(alpha(&m, ElementSet::EMPTY), 0);
        }
    }

    #[test]
    fn mk4_alpha_of_ground() {
        let m = Matroid::mk4();
        assert_eq!(alpha(&m, m.ground()), -1);
        assert_eq!(alpha_non_negative(&m), Some(m.ground()));
    }

    #[test]
    fn uniform_is_strict() {
        assert_eq!(alpha_non_negative(&Matroid::uniform(2, 4)), None);
    }

    #[test]
    fn sbo_examples() {
        assert_eq!(
            strongly_base_orderable(&Matroid::uniform(2, 4)).verdict,
            SboVerdict::Orderable
        );
        assert_eq!(
            strongly_base_orderable(&Matroid::uniform(1, 2)).verdict,
            SboVerdict::Orderable
        );
        let w = strongly_base_orderable(&Matroid::mk4());
        assert_eq!(w.verdict, SboVerdict::NotOrderable);
        assert!(!w.failing_subsets.is_empty());
        let (b1, b2) = w.basis_pair;
        assert_eq!(verify_sbo_pair(&Matroid::mk4(), b1, b2), None);
    }

    #[test]
    fn orderable_witness_replays() {
        let m = Matroid::uniform(3, 6);
        let w = strongly_base_orderable(&m);
        let (b1, _) = w.basis_pair;
        let phi = w.bijection.unwrap();
        let from: Vec<usize> = phi.iter().map(|p| p.0).collect();
        let image: Vec<usize> = phi.iter().map(|p| p.1).collect();
        for s in 0u32..1 << from.len() {
            assert!(m.is_basis(exchange(b1, &from, &image, s)));
        }
    }

    #[test]
    fn binary_checks() {
        assert!(is_binary(&Matroid::mk4()));
        assert!(!is_binary(&Matroid::uniform(2, 4)));
        assert!(!is_binary(&Matroid::uniform(2, 5)));
    }

    #[test]
    fn series_parallel_outcomes() {
        assert!(matches!(
            series_parallel_gammoid_test(&Matroid::mk4()),
            SeriesParallelOutcome::NotGammoid(_)
        ));
        assert_eq!(
            series_parallel_gammoid_test(&Matroid::uniform(1, 3)),
            SeriesParallelOutcome::Gammoid
        );
        assert!(matches!(
            series_parallel_gammoid_test(&Matroid::uniform(2, 4)),
            SeriesParallelOutcome::Inconclusive(_)
        ));
    }

    #[test]
    fn rank3_witness_examples() {
        let m = Matroid::mk4();
        assert_eq!(
            rank3_contraction_witness(&m).unwrap(),
            Some((ElementSet::EMPTY, m.ground()))
        );
        assert_eq!(
            rank3_contraction_witness(&Matroid::uniform(4, 8)).unwrap(),
            None
        );
        assert!(matches!(
            rank3_contraction_witness(&Matroid::uniform(2, 4)),
            Err(Error::RankTooLow { rank: 2 })
        ));
    }
}
