//! Brute-force reference computations shared by the integration tests.
//! Everything here works on raw basis masks and avoids the library's own
//! algorithms, so agreement with the library is meaningful.

#![allow(dead_code)]

use std::collections::BTreeSet;

use gammoid_core::extension::extensions_up_to;
use gammoid_core::{ElementSet, Matroid};

pub type Bases = Vec<u32>;

pub fn popcount(x: u32) -> usize {
    x.count_ones() as usize
}

pub fn k_subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|&x| popcount(x) == k).collect()
}

/// Basis exchange: for B1, B2 and x in B1 \ B2 some y in B2 \ B1 has
/// B1 - x + y a basis.
pub fn is_basis_family(bases: &[u32]) -> bool {
    if bases.is_empty() {
        return false;
    }
    let set: BTreeSet<u32> = bases.iter().copied().collect();
    for &b1 in bases {
        for &b2 in bases {
            let mut d = b1 & !b2;
            while d != 0 {
                let x = d & d.wrapping_neg();
                d &= d - 1;
                let mut ok = false;
                let mut c = b2 & !b1;
                while c != 0 {
                    let y = c & c.wrapping_neg();
                    c &= c - 1;
                    if set.contains(&((b1 & !x) | y)) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

/// Every labelled matroid on `n` elements, as sorted basis lists.
pub fn all_labeled(n: usize) -> Vec<Bases> {
    let mut out = Vec::new();
    for r in 0..=n {
        let cands = k_subsets(n, r);
        for pick in 1u64..1 << cands.len() {
            let bases: Bases = (0..cands.len())
                .filter(|i| pick >> i & 1 == 1)
                .map(|i| cands[i])
                .collect();
            if is_basis_family(&bases) {
                out.push(bases);
            }
        }
    }
    out
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let e = rest.remove(i);
            prefix.push(e);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, e);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

pub fn permute_mask(x: u32, perm: &[usize]) -> u32 {
    (0..perm.len())
        .filter(|&e| x >> e & 1 == 1)
        .fold(0, |acc, e| acc | 1 << perm[e])
}

/// Isomorphism-invariant form: the least sorted basis list over all
/// relabellings.
pub fn iso_form(n: usize, bases: &[u32], perms: &[Vec<usize>]) -> (usize, Bases) {
    let best = perms
        .iter()
        .map(|p| {
            let mut b: Bases = bases.iter().map(|&x| permute_mask(x, p)).collect();
            b.sort_unstable();
            b
        })
        .min()
        .unwrap_or_default();
    (n, best)
}

pub fn rank(bases: &[u32], x: u32) -> usize {
    bases.iter().map(|&b| popcount(b & x)).max().unwrap_or(0)
}

pub fn is_flat(n: usize, bases: &[u32], x: u32) -> bool {
    let r = rank(bases, x);
    (0..n)
        .filter(|&e| x >> e & 1 == 0)
        .all(|e| rank(bases, x | 1 << e) > r)
}

/// The alpha recurrence evaluated directly over all subsets.
pub fn alpha_all(n: usize, bases: &[u32]) -> Vec<i64> {
    let full = 1u32 << n;
    let flats: Vec<bool> = (0..full).map(|x| is_flat(n, bases, x)).collect();
    let mut order: Vec<u32> = (0..full).collect();
    order.sort_by_key(|&x| popcount(x));
    let mut alpha = vec![0i64; full as usize];
    for x in order {
        let mut sum = 0;
        for f in 0..full {
            if f != x && f & !x == 0 && flats[f as usize] {
                sum += alpha[f as usize];
            }
        }
        alpha[x as usize] = popcount(x) as i64 - rank(bases, x) as i64 - sum;
    }
    alpha
}

/// Strong base-orderability by trying every bijection on every basis pair.
pub fn strongly_base_orderable(bases: &[u32]) -> bool {
    let set: BTreeSet<u32> = bases.iter().copied().collect();
    for &b1 in bases {
        for &b2 in bases {
            let d1: Vec<usize> = (0..32).filter(|&e| (b1 & !b2) >> e & 1 == 1).collect();
            let d2: Vec<usize> = (0..32).filter(|&e| (b2 & !b1) >> e & 1 == 1).collect();
            let found = permutations(d1.len()).into_iter().any(|p| {
                (0u32..1 << d1.len()).all(|sel| {
                    let mut x = b1;
                    for (i, &e) in d1.iter().enumerate() {
                        if sel >> i & 1 == 1 {
                            x = (x & !(1 << e)) | 1 << d2[p[i]];
                        }
                    }
                    set.contains(&x)
                })
            });
            if !found {
                return false;
            }
        }
    }
    true
}

pub fn to_matroid(n: usize, bases: &[u32]) -> Matroid {
    Matroid::from_bases(n, bases.iter().map(|&b| ElementSet(b))).expect("valid basis family")
}

pub fn masks(m: &Matroid) -> Bases {
    let mut b: Bases = m.bases().iter().map(|x| x.0).collect();
    b.sort_unstable();
    b
}

/// One matroid per isomorphism class on at most `max` elements, grown from
/// the empty matroid by single-element extensions.
pub fn corpus(max: usize) -> Vec<Matroid> {
    extensions_up_to(&Matroid::free(0), max, 64)
        .map(|m| m.expect("extension"))
        .collect()
}

/// A few named matroids on six elements.
pub fn named_six() -> Vec<(&'static str, Matroid)> {
    let whirl = Matroid::from_non_bases(
        6,
        3,
        [[0, 1, 2], [2, 3, 4], [4, 5, 0]]
            .iter()
            .map(|t| ElementSet::from_elements(t.iter().copied())),
    )
    .unwrap();
    vec![
        ("M(K4)", Matroid::mk4()),
        ("W3", whirl),
        ("U(3,6)", Matroid::uniform(3, 6)),
        ("U(2,6)", Matroid::uniform(2, 6)),
    ]
}

/// [`corpus`] on at most six elements, computed once per test binary.
pub fn small_corpus() -> &'static [Matroid] {
    static CORPUS: std::sync::OnceLock<Vec<Matroid>> = std::sync::OnceLock::new();
    CORPUS.get_or_init(|| corpus(6))
}

/// A corpus matroid with at most `max` elements, randomly relabelled.
pub fn arb_matroid(max: usize) -> impl proptest::strategy::Strategy<Value = Matroid> {
    use proptest::prelude::*;
    let pool: Vec<Matroid> = small_corpus()
        .iter()
        .filter(|m| m.size() <= max)
        .cloned()
        .collect();
    (proptest::sample::select(pool), any::<u64>()).prop_map(|(m, seed)| {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..m.size()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        m.permute(&perm)
    })
}
