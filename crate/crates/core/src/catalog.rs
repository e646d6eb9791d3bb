//! Named matroids used by the tests, the CLI and the bundled data files.

use crate::matroid::Matroid;
use crate::set::ElementSet;

/// The non-bases of `G_{8,4,1}` on elements labelled `1..=8`.
pub const G841_NON_BASES: [[usize; 4]; 5] = [
    [1, 3, 7, 8],
    [1, 5, 6, 8],
    [2, 3, 6, 8],
    [4, 5, 6, 7],
    [2, 4, 7, 8],
];

/// The non-bases of the dual of `G_{8,4,1}`.
pub const G841_DUAL_NON_BASES: [[usize; 4]; 5] = [
    [1, 2, 3, 8],
    [1, 3, 5, 6],
    [1, 4, 5, 7],
    [2, 3, 4, 7],
    [2, 4, 5, 6],
];

fn one_based(sets: &[[usize; 4]]) -> impl Iterator<Item = ElementSet> + '_ {
    sets.iter()
        .map(|s| ElementSet::from_elements(s.iter().map(|e| e - 1)))
}

fn labels_1_to(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Rank-4 matroid on 8 elements whose only non-spanning 4-sets are
/// [`G841_NON_BASES`]; element `i` carries the label `i + 1`.
pub fn g841() -> Matroid {
    Matroid::from_non_bases(8, 4, one_based(&G841_NON_BASES))
        .expect("G_{8,4,1} is a matroid")
        .with_labels(labels_1_to(8))
        .expect("8 labels")
}

pub fn g841_dual() -> Matroid {
    Matroid::from_non_bases(8, 4, one_based(&G841_DUAL_NON_BASES))
        .expect("dual of G_{8,4,1} is a matroid")
        .with_labels(labels_1_to(8))
        .expect("8 labels")
}

/// The `r`-subsets of a rank-`r` matroid that are not bases.
pub fn non_bases(m: &Matroid) -> Vec<ElementSet> {
    crate::set::k_subsets(m.size(), m.rank())
        .filter(|b| !m.is_basis(*b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_non_bases_match() {
        assert_eq!(g841().dual(), g841_dual());
    }
}
