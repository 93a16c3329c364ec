use std::sync::Arc;

use proptest::prelude::*;
use thermo_core::pressure::topological_entropy;
use thermo_core::symbolic::{build_beta_shift, build_manneville_pomeau, build_sft, SftSystem};
use thermo_core::Error;

fn words_by_power(sys: &SftSystem, n: usize) -> u128 {
    let m = sys.alphabet_size();
    let mut v = vec![1u128; m];
    for _ in 1..n {
        v = (0..m).map(|i| sys.successors(i).map(|j| v[j]).sum()).collect();
    }
    v.iter().sum()
}

#[test]
fn build_examples() {
    let full = build_sft(2, &[vec![1, 1], vec![1, 1]]).unwrap();
    assert_eq!(full.edge_count(), 4);
    let golden = build_sft(2, &[vec![1, 1], vec![1, 0]]).unwrap();
    assert!(!golden.allows(1, 1));
    assert!(golden.is_admissible(&[0, 1, 0]));
    assert!(!golden.is_admissible(&[0, 1, 1]));
    let loops = build_sft(2, &[vec![1, 0], vec![0, 1]]).unwrap();
    assert!(!loops.is_irreducible());
    assert!(matches!(
        build_sft(2, &[vec![1, 1], vec![0, 0]]),
        Err(Error::EmptyRowOrColumn { symbol: 1 })
    ));
}

#[test]
fn word_counts() {
    let full = SftSystem::full_shift(2);
    let golden = SftSystem::golden_mean();
    assert_eq!(full.enumerate_words(3, 100).unwrap().len(), 8);
    assert_eq!(golden.enumerate_words(3, 100).unwrap().len(), 5);
    assert_eq!(golden.enumerate_words(1, 100).unwrap().len(), 2);
    let words = golden.enumerate_words(4, 100).unwrap();
    let syms: Vec<&[usize]> = words.iter().map(|w| w.symbols()).collect();
    let mut sorted = syms.clone();
    sorted.sort();
    assert_eq!(syms, sorted);
    assert!(matches!(
        full.enumerate_words(20, 1000),
        Err(Error::CombinatorialOverflow { .. })
    ));
}

#[test]
fn higher_block_examples() {
    let full = SftSystem::full_shift(2);
    let hb = full.higher_block(2).unwrap();
    assert_eq!(hb.system.alphabet_size(), 4);
    assert_eq!(hb.system.edge_count(), 8);
    let golden = SftSystem::golden_mean();
    let hb = golden.higher_block(2).unwrap();
    let blocks: Vec<Vec<usize>> = (0..3).map(|s| hb.block(s).symbols().to_vec()).collect();
    assert_eq!(blocks, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
}

#[test]
fn beta_shift_examples() {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let (spec, sys) = build_beta_shift(g, 12).unwrap();
    assert_eq!(&spec.expansion[..4], &[1, 1, 0, 0]);
    assert!(spec.validate());
    let h = topological_entropy(&Arc::new(sys)).unwrap();
    assert!((h - g.ln()).abs() < 1e-10);

    let (_, two) = build_beta_shift(2.0, 10).unwrap();
    assert!((topological_entropy(&Arc::new(two)).unwrap() - 2f64.ln()).abs() < 1e-12);

    let (spec, sys) = build_beta_shift(1.5, 20).unwrap();
    assert!(spec.validate());
    assert!((topological_entropy(&Arc::new(sys)).unwrap() - 1.5f64.ln()).abs() < 0.01);

    assert!(matches!(build_beta_shift(1.0, 10), Err(Error::DegenerateBeta(_))));
}

#[test]
fn beta_entropy_error_shrinks_with_depth() {
    for beta in [1.3, 1.5, 1.8, 2.3, 2.7, 3.4] {
        let err = |d: usize| {
            let (_, sys) = build_beta_shift(beta, d).unwrap();
            (topological_entropy(&Arc::new(sys)).unwrap() - f64::ln(beta)).abs()
        };
        for d in 8..=24 {
            assert!(err(d) <= err(d - 4) + 1e-12, "beta {beta} depth {d}");
        }
    }
}

#[test]
fn manneville_pomeau_examples() {
    let mp = build_manneville_pomeau(1.0).unwrap();
    assert!((mp.eval(0.25) - 0.375).abs() < 1e-15);
    for alpha in [0.5, 1.0, 2.0] {
        let mp = build_manneville_pomeau(alpha).unwrap();
        assert_eq!(mp.eval(0.0), 0.0);
        assert_eq!(mp.derivative(0.0), 1.0);
        assert!((mp.eval(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(mp.derivative(0.75), 2.0);
        assert!((mp.branches()[0].map.eval(0.5) - 1.0).abs() < 1e-12);
        assert!(mp.full_branches().iter().all(|&b| b));
    }
}

fn irreducible_matrix() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (2usize..5).prop_flat_map(|m| {
        prop::collection::vec(prop::collection::vec(0u8..2, m), m).prop_map(move |mut rows| {
            for (i, row) in rows.iter_mut().enumerate() {
                row[(i + 1) % m] = 1;
            }
            rows[0][0] = 1;
            rows
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_matches_matrix_powers(rows in irreducible_matrix(), n in 1usize..7) {
        let sys = SftSystem::new("random", rows).unwrap();
        let words = sys.enumerate_words(n, 1 << 20).unwrap();
        prop_assert_eq!(words.len() as u128, words_by_power(&sys, n));
        prop_assert_eq!(sys.count_words(n), words_by_power(&sys, n));
    }

    #[test]
    fn higher_block_keeps_entropy(rows in irreducible_matrix(), k in 2usize..4) {
        let sys = Arc::new(SftSystem::new("random", rows).unwrap());
        let hb = sys.higher_block(k).unwrap();
        let h0 = topological_entropy(&sys).unwrap();
        let h1 = topological_entropy(&Arc::new(hb.system.clone())).unwrap();
        prop_assert!((h0 - h1).abs() < 1e-10);
    }

    #[test]
    fn mp_inverse_branches(alpha in 0.1f64..3.0, xs in prop::collection::vec(0.0f64..1.0, 100)) {
        let mp = build_manneville_pomeau(alpha).unwrap();
        for x in xs {
            let i = mp.branch_of(x);
            let back = mp.inverse_branch(i, mp.eval(x));
            prop_assert!((back - x).abs() < 1e-10, "alpha {} x {} back {}", alpha, x, back);
        }
    }
}
