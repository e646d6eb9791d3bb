mod common;

use common::*;
use gammoid_core::invariants::{
    alpha, alpha_non_negative, is_binary, rank3_contraction_witness, series_parallel_gammoid_test,
    strongly_base_orderable, verify_rank3_witness, AlphaTable, SboVerdict, SeriesParallelOutcome,
};
use gammoid_core::oracle::random_gammoid;
use gammoid_core::{ElementSet, Matroid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_matches_the_direct_recurrence(m in arb_matroid(6)) {
        let n = m.size();
        let brute = alpha_all(n, &masks(&m));
        for x in 0u32..1 << n {
            prop_assert_eq!(alpha(&m, ElementSet(x)), brute[x as usize], "subset {:b}", x);
        }
        let negative = brute.iter().any(|&a| a < 0);
        prop_assert_eq!(alpha_non_negative(&m).is_some(), negative);
        if let Some(x) = alpha_non_negative(&m) {
            prop_assert!(brute[x.0 as usize] < 0);
        }
    }

    #[test]
    fn recurrence_residual_vanishes(m in arb_matroid(6)) {
        let table = AlphaTable::new(&m);
        let flats = m.flats().to_vec();
        for x in m.ground().subsets() {
            let below: i64 = flats
                .iter()
                .filter(|&&f| f != x && f.is_subset(x))
                .map(|&f| table.get(f))
                .sum();
            let residual = x.len() as i64 - m.rank_of(x) as i64 - below - table.get(x);
            prop_assert_eq!(residual, 0);
        }
    }

    #[test]
    fn strong_base_orderability_matches_brute_force(m in arb_matroid(6)) {
        let lib = strongly_base_orderable(&m).verdict == SboVerdict::Orderable;
        prop_assert_eq!(lib, common::strongly_base_orderable(&masks(&m)));
        let dual = strongly_base_orderable(&m.dual()).verdict == SboVerdict::Orderable;
        prop_assert_eq!(lib, dual);
    }

    #[test]
    fn rank3_witnesses_check(m in arb_matroid(6)) {
        if m.rank() >= 3 {
            if let Some((x, y)) = rank3_contraction_witness(&m).unwrap() {
                prop_assert!(verify_rank3_witness(&m, x, y));
                prop_assert_eq!(x.len(), m.rank() - 3);
            }
        } else {
            prop_assert!(rank3_contraction_witness(&m).is_err());
        }
    }

    #[test]
    fn strict_oracle_gammoids_have_non_negative_alpha(seed in any::<u64>()) {
        let (rep, m) = random_gammoid(seed, 7, 7).unwrap();
        if rep.ground.len() == rep.digraph.vertex_count {
            prop_assert!(alpha_non_negative(&m).is_none());
        }
    }
}

#[test]
fn uniform_matroids_are_strict_gammoids() {
    for n in 0..=8 {
        for r in 0..=n {
            let m = Matroid::uniform(r, n);
            assert!(alpha_non_negative(&m).is_none(), "U({r},{n})");
            if n <= 6 {
                assert!(alpha_all(n, &masks(&m)).iter().all(|&a| a >= 0));
            }
        }
    }
}

#[test]
fn minor_based_tests() {
    assert!(is_binary(&Matroid::mk4()));
    assert!(!is_binary(&Matroid::uniform(2, 4)));
    assert!(!is_binary(&Matroid::uniform(2, 5)));
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
fn rank3_contractions_of_u48_are_strict() {
    assert_eq!(
        rank3_contraction_witness(&Matroid::uniform(4, 8)).unwrap(),
        None
    );
}
