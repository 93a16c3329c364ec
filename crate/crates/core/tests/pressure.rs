use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermo_core::measures::{LocallyConstantPotential, MarkovMeasure};
use thermo_core::pressure::{
    axiom_suite, coboundary_invariance_check, matrix_pressure, separated_set_pressure, transfer_operator_pressure,
    MatrixEngine, SeparatedEngine, TransferEngine, TransferOptions,
};
use thermo_core::symbolic::{build_manneville_pomeau, doubling_map, CylinderSpace, SftSystem};
use thermo_core::Error;

const LN2: f64 = std::f64::consts::LN_2;

fn full2() -> Arc<SftSystem> {
    Arc::new(SftSystem::full_shift(2))
}

fn golden() -> Arc<SftSystem> {
    Arc::new(SftSystem::golden_mean())
}

#[test]
fn matrix_examples() {
    let zero = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
    assert!((matrix_pressure(&zero).unwrap().log_lambda - LN2).abs() < 1e-12);
    let g = LocallyConstantPotential::on(&golden(), 1, vec![0.0, 0.0]).unwrap();
    let pg = matrix_pressure(&g).unwrap();
    assert!((pg.log_lambda - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    assert!((pg.log_lambda - 0.481212).abs() < 1e-6);
    assert!(pg.residual <= 1e-12);
    assert!(pg.right_vec.iter().chain(pg.left_vec.iter()).all(|&x| x > 0.0));
    let l3 = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 3f64.ln()]).unwrap();
    assert!((matrix_pressure(&l3).unwrap().log_lambda - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn reducible_is_rejected() {
    let loops = Arc::new(SftSystem::new("loops", vec![vec![1, 0], vec![0, 1]]).unwrap());
    let phi = LocallyConstantPotential::on(&loops, 1, vec![0.0, 0.0]).unwrap();
    assert!(matches!(matrix_pressure(&phi), Err(Error::NotIrreducible)));
}

#[test]
fn periodic_system_is_handled() {
    let flip = Arc::new(SftSystem::new("flip", vec![vec![0, 1], vec![1, 0]]).unwrap());
    let phi = LocallyConstantPotential::on(&flip, 1, vec![1.0, 3.0]).unwrap();
    assert!((matrix_pressure(&phi).unwrap().log_lambda - 2.0).abs() < 1e-10);
}

#[test]
fn separated_examples() {
    let zero = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
    let est = separated_set_pressure(&zero, 8).unwrap();
    assert!(est.depth_sequence.iter().all(|&(_, v)| (v - LN2).abs() < 1e-12));
    let l3 = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 3f64.ln()]).unwrap();
    let est = separated_set_pressure(&l3, 5).unwrap();
    assert!((est.depth_sequence[4].1 - 4f64.ln()).abs() < 1e-12);
    let g = LocallyConstantPotential::on(&golden(), 1, vec![0.0, 0.0]).unwrap();
    let est = separated_set_pressure(&g, 10).unwrap();
    assert!((est.depth_sequence[9].1 - (144f64).ln() / 10.0).abs() < 1e-12);
    assert!((est.value - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 0.05);
    assert!(est.bracket.0 <= est.value && est.value <= est.bracket.1);
    assert!(est.to_csv().starts_with("n,value_n,lower,upper\n1,"));
}

#[test]
fn separated_within_log2_over_n_on_oracles() {
    let l3 = 3f64.ln();
    for (sys, vals) in [(full2(), vec![0.0, 0.0]), (golden(), vec![0.0, 0.0]), (full2(), vec![0.0, l3])] {
        let phi = LocallyConstantPotential::on(&sys, 1, vals).unwrap();
        let exact = matrix_pressure(&phi).unwrap().log_lambda;
        let est = separated_set_pressure(&phi, 14).unwrap();
        for &(n, v) in &est.depth_sequence {
            assert!((v - exact).abs() <= LN2 / n as f64, "n {n}: {v} vs {exact}");
        }
    }
}

// With u = e^phi and r the right Perron vector, Z_n = 1 . L^{n-1} u lies
// between lambda^{n-1} min(u/r) and lambda^{n-1} max(u/r).
#[test]
fn separated_gap_decays_like_one_over_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sys in [full2(), golden()] {
        for _ in 0..5 {
            let space = CylinderSpace::new(&sys, 1).unwrap();
            let vals: Vec<f64> = (0..space.len()).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
            let phi = LocallyConstantPotential::new(&space, vals.clone()).unwrap();
            let pd = matrix_pressure(&phi).unwrap();
            let p = pd.log_lambda;
            let ratios: Vec<f64> = vals.iter().zip(&pd.right_vec).map(|(v, r)| v - r.ln() - p).collect();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let est = separated_set_pressure(&phi, 14).unwrap();
            for &(n, v) in &est.depth_sequence {
                let scaled = n as f64 * (v - p);
                assert!(lo - 1e-9 <= scaled && scaled <= hi + 1e-9, "n {n}: {scaled} not in [{lo}, {hi}]");
            }
            assert!(est.bracket.0 - 1e-12 <= p && p <= est.bracket.1 + 1e-12);
        }
    }
}

#[test]
fn transfer_examples() {
    let d = doubling_map();
    let one = transfer_operator_pressure(&d, 1.0, 10).unwrap();
    assert!(one.bracket.0.abs() < 1e-12 && one.bracket.1.abs() < 1e-12);
    let zero = transfer_operator_pressure(&d, 0.0, 10).unwrap();
    assert!((zero.value - LN2).abs() < 1e-12);
    let mp = build_manneville_pomeau(1.0).unwrap();
    let est = transfer_operator_pressure(&mp, 1.0, 18).unwrap();
    assert!(est.contains(0.0), "{:?}", est.bracket);
    assert!(est.width() <= 0.05);
}

#[test]
fn transfer_brackets_are_nested() {
    for map in [doubling_map(), build_manneville_pomeau(0.5).unwrap(), build_manneville_pomeau(2.0).unwrap()] {
        for t in [-1.0, 0.5, 0.9, 1.3, 2.5] {
            let est = transfer_operator_pressure(&map, t, 12).unwrap();
            for n in 0..est.depth_brackets.len() - 2 {
                let (a, b) = (est.depth_brackets[n], est.depth_brackets[n + 2]);
                assert!(a.0 <= b.0 && b.1 <= a.1, "{} t {t} n {n}", map.label());
            }
        }
    }
}

#[test]
fn transfer_depth_is_capped() {
    let mp = build_manneville_pomeau(1.0).unwrap();
    assert!(matches!(
        transfer_operator_pressure(&mp, 1.0, 25),
        Err(Error::DepthOverflow { .. })
    ));
}

#[test]
fn engines_satisfy_the_axioms() {
    let g = golden();
    let matrix = MatrixEngine {
        space: CylinderSpace::new(&g, 2).unwrap(),
    };
    let rep = axiom_suite(&matrix, 60, 11).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.translation.worst_violation <= 1e-10);
    assert!(rep.monotonicity.worst_violation <= 1e-10);
    assert!(rep.convexity.worst_violation <= 1e-10);

    let sep = SeparatedEngine {
        space: CylinderSpace::new(&full2(), 1).unwrap(),
        n_max: 10,
    };
    assert!(axiom_suite(&sep, 40, 12).unwrap().pass);

    let mp = build_manneville_pomeau(1.0).unwrap();
    let tr = TransferEngine::new(&mp, 6, TransferOptions::default()).unwrap();
    let rep = axiom_suite(&tr, 20, 13).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.to_csv().starts_with("axiom,worst_violation,worst_excess,pass\n"));
}

#[test]
fn coboundary_examples() {
    let zero = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
    let c = LocallyConstantPotential::on(&full2(), 1, vec![2.5, 2.5]).unwrap();
    assert!(coboundary_invariance_check(&zero, &c).unwrap().difference.abs() < 1e-14);
    let psi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 1.0]).unwrap();
    let rep = coboundary_invariance_check(&zero, &psi).unwrap();
    assert!((rep.pressure - LN2).abs() < 1e-10 && (rep.shifted_pressure - LN2).abs() < 1e-10);
}

fn vals(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coboundaries_do_not_move_pressure(phi in vals(2), psi in vals(2)) {
        let g = golden();
        let phi = LocallyConstantPotential::on(&g, 1, phi).unwrap();
        let psi = LocallyConstantPotential::on(&g, 1, psi).unwrap();
        prop_assert!(coboundary_invariance_check(&phi, &psi).unwrap().pass);
    }

    #[test]
    fn pressure_dominates_entropy_plus_integral(phi in vals(3), seed in any::<u64>()) {
        let g = golden();
        let space = CylinderSpace::new(&g, 2).unwrap();
        let phi = LocallyConstantPotential::new(&space, phi).unwrap();
        let mu = MarkovMeasure::random(&space, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let p = matrix_pressure(&phi).unwrap().log_lambda;
        prop_assert!(p - mu.integrate(&phi).unwrap() >= mu.ks_entropy() - 1e-10);
    }

    #[test]
    fn perron_data_is_normalized(phi in vals(4)) {
        let phi = LocallyConstantPotential::on(&full2(), 2, phi).unwrap();
        let pd = matrix_pressure(&phi).unwrap();
        prop_assert!(pd.residual <= 1e-12);
        prop_assert!((pd.right_vec.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dot: f64 = pd.left_vec.iter().zip(pd.right_vec.iter()).map(|(a, b)| a * b).sum();
        prop_assert!((dot - 1.0).abs() < 1e-10);
        prop_assert!(pd.right_vec.iter().chain(pd.left_vec.iter()).all(|&x| x > 0.0));
    }
}
