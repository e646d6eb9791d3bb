//! Exhaustive minor search.

use crate::canonical::{canonical_key, CANONICAL_CAP};
use crate::error::{Error, Result};
use crate::matroid::{Matroid, MinorSpec};
use crate::set::k_subsets;

/// Searches for a minor of `m` isomorphic to `pattern`.
///
/// Every minor can be written as `m / C \ D` with `C` independent and `D`
/// coindependent in `m / C`, so the scan runs over independent `C` with
/// `|C| = r(m) - r(pattern)` and kept sets `K` of the pattern's size with
/// `r(K ∪ C) = r(m)`.
pub fn has_minor_isomorphic_to(m: &Matroid, pattern: &Matroid) -> Result<Option<MinorSpec>> {
    let k = pattern.size();
    if k > CANONICAL_CAP {
        return Err(Error::SizeExceeded {
            size: k,
            cap: CANONICAL_CAP,
        });
    }
    let n = m.size();
    let r = m.rank();
    let rp = pattern.rank();
    if k > n || rp > r || (n - k) < (r - rp) {
        return Ok(None);
    }
    let target_key = canonical_key(pattern)?;
    let target_count = pattern.bases().len();
    let mut target_degrees = pattern.element_degrees();
    target_degrees.sort_unstable();

    let ground = m.ground();
    for contract in k_subsets(n, r - rp) {
        if !m.is_independent(contract) {
            continue;
        }
        let rest = ground.difference(contract);
        for kept in k_subsets(rest.len(), k) {
            let kept = kept.expand(rest);
            if m.rank_of(kept.union(contract)) != r {
                continue;
            }
            let mut count = 0;
            let mut degrees = vec![0usize; k];
            for y in k_subsets(k, rp) {
                if m.rank_of(y.expand(kept).union(contract)) == r {
                    count += 1;
                    for e in y.iter() {
                        degrees[e] += 1;
                    }
                }
            }
            if count != target_count {
                continue;
            }
            degrees.sort_unstable();
            if degrees != target_degrees {
                continue;
            }
            let spec = MinorSpec {
                contract,
                delete: rest.difference(kept),
            };
            if canonical_key(&m.minor(&spec))? == target_key {
                return Ok(Some(spec));
            }
        }
    }
    Ok(None)
}

/// `U_{2,4}`, the excluded minor for binary matroids.
pub fn u24() -> Matroid {
    Matroid::uniform(2, 4)
}

/// `M(K_4)`.
pub fn mk4() -> Matroid {
    Matroid::mk4()
}

/// Checks that `spec` applied to `m` yields a matroid isomorphic to `pattern`.
pub fn verify_minor_witness(m: &Matroid, pattern: &Matroid, spec: &MinorSpec) -> Result<bool> {
    let ground = m.ground();
    if !spec.contract.is_disjoint(spec.delete)
        || !spec.contract.union(spec.delete).is_subset(ground)
    {
        return Ok(false);
    }
    crate::canonical::is_isomorphic(&m.minor(spec), pattern)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_minor() {
        let w = has_minor_isomorphic_to(&u24(), &u24()).unwrap();
        assert_eq!(w, Some(MinorSpec::identity()));
    }

    #[test]
    fn pattern_larger_than_host() {
        assert_eq!(has_minor_isomorphic_to(&u24(), &mk4()).unwrap(), None);
    }

    #[test]
    fn mk4_has_no_u24_minor() {
        assert_eq!(has_minor_isomorphic_to(&mk4(), &u24()).unwrap(), None);
    }

    #[test]
    fn u25_has_u24_by_deletion() {
        let w = has_minor_isomorphic_to(&Matroid::uniform(2, 5), &u24())
            .unwrap()
            .unwrap();
        assert!(w.contract.is_empty());
        assert_eq!(w.delete.len(), 1);
    }

    #[test]
    fn u35_has_u24_by_contraction() {
        let m = Matroid::uniform(3, 5);
        let w = has_minor_isomorphic_to(&m, &u24()).unwrap().unwrap();
        assert_eq!(w.contract.len(), 1);
        assert!(verify_minor_witness(&m, &u24(), &w).unwrap());
    }
}
