use proptest::prelude::*;
use wlambda_core::betashift::{
    count_words, forbidden_word_adjacency, greedy_digits, multinacci, parry_admissible, Beta,
};
use wlambda_core::dimension::{locate_cylinder, lower_bound, upper_bound, Similarity};
use wlambda_core::expansion::{
    enumerate_level, eval_word, g_map, gamma_witness, lambda_interval, raw_sums, DEFAULT_LEVEL_CAP,
    DEFAULT_MERGE_TOL,
};
use wlambda_core::proximity::{count_near_pairs, param_interval, proximity_counts, SignedPoly, PARAM_HI, PARAM_LO};
use wlambda_core::{Interval, Lambda, Word};

fn lambda_strategy() -> impl Strategy<Value = Lambda> {
    (0.5001f64..0.9999).prop_map(|x| Lambda::new(x).unwrap())
}

fn word_strategy(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..2, 0..=max).prop_map(|b| Word::new(b).unwrap())
}

fn values(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 0..max)
}

/// Length-`n` words avoiding `0 1^m`, by direct filtering.
fn avoiding_count(m: usize, n: usize) -> u64 {
    let mut pattern = vec![0u8];
    pattern.extend(std::iter::repeat_n(1, m));
    (0..1u64 << n)
        .filter(|&idx| {
            let w: Vec<u8> = (0..n).map(|i| ((idx >> i) & 1) as u8).collect();
            !w.windows(pattern.len()).any(|win| win == pattern.as_slice())
        })
        .count() as u64
}

#[test]
fn multinacci_levels_match_word_avoidance() {
    for m in 2..=4u32 {
        let l = multinacci(m, 0.0).unwrap();
        let sft = forbidden_word_adjacency(m).unwrap();
        for n in 1..=18 {
            let level = enumerate_level(&l, n, DEFAULT_MERGE_TOL).unwrap().count() as u64;
            assert_eq!(level, avoiding_count(m as usize, n), "m={m} n={n}");
            assert_eq!(level, count_words(&sft, n).unwrap(), "m={m} n={n}");
        }
    }
}

#[test]
fn witness_bounds_level_growth() {
    let g = Lambda::golden();
    let w = gamma_witness(&g, 20, 1e-12).unwrap();
    let block = w.len() + 1;
    let per_block = ((1u64 << block) - 1) as f64;
    for l in 1..=24 {
        let c = enumerate_level(&g, l, DEFAULT_MERGE_TOL).unwrap().count() as f64;
        assert!(c.log2() <= l.div_ceil(block) as f64 * per_block.log2() + 1e-12, "l={l}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn concatenation_law(l in lambda_strategy(), a in word_strategy(12), b in word_strategy(12)) {
        prop_assert_eq!(eval_word(&l, &a.concat(&b)).to_bits(), g_map(&l, &a, eval_word(&l, &b)).to_bits());
    }

    #[test]
    fn raw_size_and_count(l in lambda_strategy(), n in 0usize..=12) {
        let raw = raw_sums(&l, n, DEFAULT_LEVEL_CAP).unwrap();
        prop_assert_eq!(raw.len(), 1usize << n);
        prop_assert!(enumerate_level(&l, n, DEFAULT_MERGE_TOL).unwrap().count() <= 1 << n);
    }

    #[test]
    fn near_pairs_symmetric(a in values(30), b in values(30), r in 0.0f64..5.0) {
        prop_assert_eq!(count_near_pairs(&a, &b, r), count_near_pairs(&b, &a, r));
    }

    #[test]
    fn near_pairs_scale(a in values(30), b in values(30), e in -4i32..4) {
        // Dividing by a power of two is exact, so the counts must agree.
        let r = 2f64.powi(e);
        let sa: Vec<f64> = a.iter().map(|x| x / r).collect();
        let sb: Vec<f64> = b.iter().map(|x| x / r).collect();
        prop_assert_eq!(count_near_pairs(&a, &b, r), count_near_pairs(&sa, &sb, 1.0));
    }

    #[test]
    fn translation_ratio_at_most_four(a in prop::collection::vec(-20.0f64..20.0, 1..40), t in -10.0f64..10.0, r in 0.01f64..5.0) {
        let shifted: Vec<f64> = a.iter().map(|x| x + t).collect();
        prop_assert!(count_near_pairs(&a, &shifted, r) <= 4 * count_near_pairs(&a, &a, r));
    }

    #[test]
    fn param_interval_stays_inside(coeffs in prop::collection::vec(-1i8..=1, 1..10), gamma in 1e-6f64..0.5) {
        let p = SignedPoly::new(coeffs).unwrap();
        let set = param_interval(&p, gamma);
        for w in set.intervals.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
        for iv in &set.intervals {
            prop_assert!(iv.lo >= PARAM_LO && iv.hi <= PARAM_HI && iv.lo <= iv.hi);
        }
    }

    #[test]
    fn greedy_digits_reconstruct_and_are_admissible(b in 1.01f64..2.0, x in 0.0f64..1.0, n in 1usize..40) {
        let beta = Beta::new(b).unwrap();
        let d = greedy_digits(&beta, x, n).unwrap();
        prop_assert!((x - d.value(&beta)).abs() < b.powi(-(n as i32)));
        prop_assert!(parry_admissible(&d, &beta));
    }

    #[test]
    fn bounds_at_most_inverse_alpha(l in lambda_strategy(), alpha in 1.01f64..5.0, n in 1usize..=12) {
        prop_assert!(lower_bound(&l, alpha).unwrap() <= 1.0 / alpha);
        prop_assert!(upper_bound(&l, alpha, n).unwrap() <= 1.0 / alpha + 1e-15);
        prop_assert!(lower_bound(&l, alpha).unwrap() > 0.0);
    }

    #[test]
    fn cylinder_postconditions(
        l in lambda_strategy(),
        slope in prop_oneof![-4.0f64..-0.3, 0.3f64..4.0],
        offset in -3.0f64..3.0,
        lo in -5.0f64..5.0,
        frac in 1e-5f64..0.999,
    ) {
        let f = Similarity::new(slope, offset).unwrap();
        let diam = frac * slope.abs() * lambda_interval(&l).diameter();
        let rep = locate_cylinder(&Interval::new(lo, lo + diam), &f, &l).unwrap();
        prop_assert!(rep.contained && rep.large, "{:?}", rep);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn proximity_counts_monotone(x in 0.51f64..0.66, n in 2usize..=8, k in 1usize..=3, r in 1u64..=2) {
        let l = Lambda::new(x).unwrap();
        let c = proximity_counts(&l, n, k, r).unwrap();
        let wider = proximity_counts(&l, n, k, r + 1).unwrap();
        let coarser = proximity_counts(&l, n, k - 1, r).unwrap();
        prop_assert!(c.tilde_count <= wider.tilde_count && c.restricted_count <= wider.restricted_count);
        prop_assert!(c.tilde_count <= coarser.tilde_count && c.restricted_count <= coarser.restricted_count);
        prop_assert!(c.restricted_count <= c.tilde_count);
    }
}
