//! Isomorphism-invariant keys for matroids.
//!
//! The key of a matroid is the lexicographically smallest encoding of its basis
//! family over all relabelings reachable by an individualization-refinement
//! search. Refinement only uses labeling-independent data, so the set of
//! leaves visited for two isomorphic matroids is the same up to relabeling and
//! equal keys mean isomorphic matroids.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::ElementSet;

/// Largest ground set accepted by exact canonicalization.
pub const CANONICAL_CAP: usize = 12;

/// Byte encoding `[n, r, b_0 lo, b_0 hi, b_1 lo, ...]` of the canonically
/// relabeled basis family. The key fully determines the matroid.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Arc<[u8]>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0[0] as usize
    }

    pub fn rank(&self) -> usize {
        self.0[1] as usize
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed canonical key {s:?}"));
        if !s.len().is_multiple_of(2) || s.len() < 4 {
            return Err(bad());
        }
        let bytes: Vec<u8> = (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let key = CanonicalKey(bytes.into());
        // Round-trip through the matroid to reject non-canonical encodings.
        let m = key.to_matroid()?;
        if canonical_key(&m)? != key {
            return Err(bad());
        }
        Ok(key)
    }

    /// The canonical representative encoded by this key.
    pub fn to_matroid(&self) -> Result<Matroid> {
        let bytes = &self.0;
        let n = bytes[0] as usize;
        let r = bytes[1] as usize;
        let body = &bytes[2..];
        if !body.len().is_multiple_of(2) || n > CANONICAL_CAP {
            return Err(Error::Invalid("malformed canonical key".into()));
        }
        let bases: Vec<ElementSet> = body
            .chunks(2)
            .map(|c| ElementSet(u16::from_le_bytes([c[0], c[1]]) as u32))
            .collect();
        let m = Matroid::from_bases(n, bases)?;
        if m.rank() != r {
            return Err(Error::Invalid("canonical key rank mismatch".into()));
        }
        Ok(m)
    }

    fn encode(n: usize, r: usize, bases: &[u16]) -> Self {
        let mut bytes = Vec::with_capacity(2 + 2 * bases.len());
        bytes.push(n as u8);
        bytes.push(r as u8);
        for b in bases {
            bytes.extend_from_slice(&b.to_le_bytes());
        }
        CanonicalKey(bytes.into())
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.to_hex();
        if hex.len() > 24 {
            write!(f, "Key({}..)", &hex[..24])
        } else {
            write!(f, "Key({hex})")
        }
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Computes the canonical key of `m`.
pub fn canonical_key(m: &Matroid) -> Result<CanonicalKey> {
    canonical_form(m).map(|(key, _)| key)
}

/// Computes the canonical key together with a relabeling `perm` (element
/// `e` of `m` becomes `perm[e]`) under which `m` has exactly that encoding.
pub fn canonical_form(m: &Matroid) -> Result<(CanonicalKey, Vec<usize>)> {
    let n = m.size();
    if n > CANONICAL_CAP {
        return Err(Error::SizeExceeded {
            size: n,
            cap: CANONICAL_CAP,
        });
    }
    let search = Search::new(m);
    let degrees = m.element_degrees();
    let loops = m.loops();
    let coloops = m.coloops();
    let initial: Vec<u64> = (0..n)
        .map(|e| {
            let kind = if loops.contains(e) {
                0
            } else if coloops.contains(e) {
                2
            } else {
                1
            };
            (kind << 32) | degrees[e] as u64
        })
        .collect();
    let colors = relabel(&initial);
    let mut best: Option<(Vec<u16>, Vec<usize>)> = None;
    search.run(colors, &mut best);
    let (code, perm) = best.expect("search visits at least one leaf");
    Ok((CanonicalKey::encode(n, m.rank(), &code), perm))
}

/// Whether `a` and `b` are isomorphic. Cheap invariants are compared first.
pub fn is_isomorphic(a: &Matroid, b: &Matroid) -> Result<bool> {
    if a.size() != b.size() || a.rank() != b.rank() || a.bases().len() != b.bases().len() {
        return Ok(false);
    }
    let mut da = a.element_degrees();
    let mut db = b.element_degrees();
    da.sort_unstable();
    db.sort_unstable();
    if da != db {
        return Ok(false);
    }
    Ok(canonical_key(a)? == canonical_key(b)?)
}

/// Maps arbitrary ordered values to dense ids `0..k` preserving order.
fn relabel<T: Ord + Clone>(values: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort();
    sorted.dedup();
    values
        .iter()
        .map(|v| sorted.binary_search(v).expect("present") as u32)
        .collect()
}

struct Search<'a> {
    m: &'a Matroid,
    /// `twin[e]` is the smallest element `f` such that swapping `e` and `f`
    /// is an automorphism.
    twin: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(m: &'a Matroid) -> Self {
        let n = m.size();
        let mut twin: Vec<usize> = (0..n).collect();
        for a in 0..n {
            if twin[a] != a {
                continue;
            }
            #[allow(clippy::needless_range_loop)]
            for b in a + 1..n {
                if twin[b] == b && swap_is_automorphism(m, a, b) {
                    twin[b] = a;
                }
            }
        }
        Search { m, twin }
    }

    fn run(&self, colors: Vec<u32>, best: &mut Option<(Vec<u16>, Vec<usize>)>) {
        let colors = self.refine(colors);
        let n = colors.len();
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let target = (0..n).find(|&c| counts[c] > 1);
        let Some(target) = target else {
            let perm: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
            let mut code: Vec<u16> = self
                .m
                .bases()
                .iter()
                .map(|b| b.permute(&perm).bits() as u16)
                .collect();
            code.sort_unstable();
            if best.as_ref().is_none_or(|(c, _)| code < *c) {
                *best = Some((code, perm));
            }
            return;
        };
        let mut tried_twins: Vec<usize> = Vec::new();
        for v in 0..n {
            if colors[v] as usize != target {
                continue;
            }
            let t = self.twin[v];
            if tried_twins.contains(&t) {
                continue;
            }
            tried_twins.push(t);
            let child: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(e, &c)| {
                    if e == v {
                        2 * c
                    } else if c as usize == target {
                        2 * c + 1
                    } else {
                        2 * c
                    }
                })
                .collect();
            self.run(relabel(&child), best);
        }
    }

    /// Refines a coloring by the color multisets of the bases through each
    /// element until the partition is stable.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        let mut classes = count_classes(&colors);
        loop {
            if classes == n {
                return colors;
            }
            let types: Vec<Vec<u32>> = self
                .m
                .bases()
                .iter()
                .map(|b| {
                    let mut t: Vec<u32> = b.iter().map(|e| colors[e]).collect();
                    t.sort_unstable();
                    t
                })
                .collect();
            let type_ids = relabel(&types);
            let mut per_element: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); n];
            for (b, &tid) in self.m.bases().iter().zip(&type_ids) {
                for e in b.iter() {
                    *per_element[e].entry(tid).or_default() += 1;
                }
            }
            let signatures: Vec<(u32, Vec<(u32, u32)>)> = (0..n)
                .map(|e| {
                    (
                        colors[e],
                        per_element[e].iter().map(|(&k, &v)| (k, v)).collect(),
                    )
                })
                .collect();
            let next = relabel(&signatures);
            let next_classes = count_classes(&next);
            colors = next;
            if next_classes == classes {
                return colors;
            }
            classes = next_classes;
        }
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn swap_is_automorphism(m: &Matroid, a: usize, b: usize) -> bool {
    m.bases().iter().all(|&x| {
        if x.contains(a) == x.contains(b) {
            true
        } else {
            let swapped = ElementSet(x.bits() ^ (1 << a) ^ (1 << b));
            m.is_basis(swapped)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_dual_u24() {
        let u = Matroid::uniform(2, 4);
        assert_eq!(
            canonical_key(&u).unwrap(),
            canonical_key(&u.dual()).unwrap()
        );
    }

    #[test]
    fn mk4_differs_from_u36() {
        let a = canonical_key(&Matroid::mk4()).unwrap();
        let b = canonical_key(&Matroid::uniform(3, 6)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn mk4_self_dual_up_to_iso() {
        let m = Matroid::mk4();
        assert!(is_isomorphic(&m, &m.dual()).unwrap());
    }

    #[test]
    fn random_relabelings_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = Matroid::mk4().direct_sum(&Matroid::uniform(1, 2)).unwrap();
        let key = canonical_key(&m).unwrap();
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..m.size()).collect();
            perm.shuffle(&mut rng);
            assert_eq!(canonical_key(&m.permute(&perm)).unwrap(), key);
        }
    }

    #[test]
    fn key_decodes_to_isomorphic_matroid() {
        let m = Matroid::mk4();
        let (key, perm) = canonical_form(&m).unwrap();
        let decoded = key.to_matroid().unwrap();
        assert_eq!(decoded, m.permute(&perm));
        assert_eq!(CanonicalKey::from_hex(&key.to_hex()).unwrap(), key);
    }

    #[test]
    fn oversized_is_rejected() {
        let m = Matroid::uniform(2, 13);
        assert!(matches!(
            canonical_key(&m),
            Err(Error::SizeExceeded { size: 13, .. })
        ));
    }

    #[test]
    fn non_isomorphic_same_counts() {
        // U_{1,2} (+) U_{1,2} and U_{2,3} (+) loop have the same size and rank.
        let a = Matroid::uniform(1, 2)
            .direct_sum(&Matroid::uniform(1, 2))
            .unwrap();
        let b = Matroid::uniform(2, 3).add_loops(1).unwrap();
        assert_ne!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
    }
}
