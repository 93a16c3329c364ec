use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermo_core::cocycle::{
    cfh_variational_check, exterior_power, lyapunov_exterior, lyapunov_oracle, lyapunov_qr,
    lyapunov_temperature_sweep, operator_norm, positive_pair, psi_phi_approx, singular_value_potential,
    subadditive_pressure, CocycleSpec, SingularWeight,
};
use thermo_core::duality::bernoulli_grid;
use thermo_core::measures::MarkovMeasure;
use thermo_core::pressure::topological_entropy;
use thermo_core::symbolic::SftSystem;
use thermo_core::Error;

const LN2: f64 = std::f64::consts::LN_2;

fn full2() -> Arc<SftSystem> {
    Arc::new(SftSystem::full_shift(2))
}

fn diag() -> CocycleSpec {
    CocycleSpec::constant(&full2(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])).unwrap()
}

fn w(a: &[f64]) -> SingularWeight {
    SingularWeight::new(a.to_vec()).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |_, _| rng.random_range(-2.0..2.0))
}

#[test]
fn potential_examples() {
    let spec = diag();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..12 {
        let word: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let v = singular_value_potential(&spec, &w(&[1.0, 0.0]), &word).unwrap();
        assert!((v - n as f64 * LN2).abs() < 1e-10);
        assert!(singular_value_potential(&spec, &w(&[1.0, 1.0]), &word).unwrap().abs() < 1e-10);
    }
    let id = CocycleSpec::constant(&full2(), DMatrix::identity(3, 3)).unwrap();
    assert_eq!(singular_value_potential(&id, &w(&[2.0, 1.0, -4.0]), &[1, 0, 1]).unwrap(), 0.0);

    let pp = positive_pair();
    let word = [0, 1, 1, 0, 1];
    let top = singular_value_potential(&pp, &w(&[1.0, 0.0]), &word).unwrap();
    assert!((top - operator_norm(&pp.product(&word)).ln()).abs() < 1e-10);
    assert!(singular_value_potential(&pp, &w(&[1.0, 0.0]), &[]).is_err());
}

#[test]
fn subadditive_pressure_examples() {
    let spec = diag();
    let est = subadditive_pressure(&spec, &w(&[1.0, 0.0]), 10).unwrap();
    assert!(est.per_depth.iter().all(|&(_, v)| (v - 2.0 * LN2).abs() < 1e-9));
    let det = subadditive_pressure(&spec, &w(&[1.0, 1.0]), 10).unwrap();
    assert!(det.per_depth.iter().all(|&(_, v)| (v - LN2).abs() < 1e-9));

    let golden = Arc::new(SftSystem::golden_mean());
    let g = CocycleSpec::constant(&golden, DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 1.0])).unwrap();
    let zero = subadditive_pressure(&g, &w(&[0.0, 0.0]), 14).unwrap();
    let h = topological_entropy(&golden).unwrap();
    assert!((zero.fekete_upper - zero.value).abs() < 1e-15);
    assert!(zero.value >= h - 1e-12 && zero.value - h < 0.05);
    assert!(est.to_csv().starts_with("n,value_n,fekete_upper\n1,"));
}

#[test]
fn positive_pair_sequence() {
    let est = subadditive_pressure(&positive_pair(), &w(&[1.0, 0.0]), 12).unwrap();
    let v: Vec<f64> = est.per_depth.iter().map(|p| p.1).collect();
    for n in 2..v.len() {
        assert!(v[n] <= v[n - 1] + 1e-12, "n {}: {} > {}", n + 1, v[n], v[n - 1]);
    }
    assert!((est.fekete_upper - v.iter().copied().fold(f64::INFINITY, f64::min)).abs() < 1e-15);
    assert_eq!(est.psi_min_depth.len(), 1 << 12);
}

#[test]
fn psi_examples() {
    let spec = diag();
    for n in [1, 5, 32, 64] {
        assert!((psi_phi_approx(&spec, &w(&[1.0, 0.0]), &[0, 1], n).unwrap() - LN2).abs() < 1e-12);
    }
    let id = CocycleSpec::constant(&full2(), DMatrix::identity(2, 2)).unwrap();
    assert_eq!(psi_phi_approx(&id, &w(&[1.0, 0.0]), &[1], 20).unwrap(), 0.0);
    assert!(psi_phi_approx(&spec, &w(&[1.0, 0.0]), &[0], 65).is_err());
}

// (1/n) log |M^n| = log rho + c/n + o(1/n), so the finite-N value sits about c/N above the limit.
#[test]
fn psi_converges_at_rate_one_over_n() {
    let pp = positive_pair();
    let a = w(&[1.0, 0.0]);
    let m = pp.product(&[0, 1]);
    let rho = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let limit = 0.5 * rho.ln();
    let vals: Vec<f64> = (1..=64).map(|n| psi_phi_approx(&pp, &a, &[0, 1], n).unwrap()).collect();
    assert!(vals.windows(2).all(|p| p[1] <= p[0]));
    assert!(vals.iter().all(|&v| v >= limit - 1e-12));
    let scaled: Vec<f64> = [16usize, 32, 64].iter().map(|&n| (vals[n - 1] - limit) * n as f64).collect();
    assert!(scaled.iter().all(|&s| (s - scaled[2]).abs() < 0.1 * scaled[2]), "{scaled:?}");
    assert!(vals[31] - limit <= 2e-3);
}

#[test]
fn exterior_power_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let m = random_matrix(&mut rng, 3);
        let s = m.singular_values();
        let mut s: Vec<f64> = s.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let w2 = operator_norm(&exterior_power(&m, 2));
        assert!((w2 - s[0] * s[1]).abs() <= 1e-10 * (s[0] * s[1]).max(1.0));
        assert!((operator_norm(&exterior_power(&m, 1)) - s[0]).abs() <= 1e-10 * s[0].max(1.0));
        assert!((exterior_power(&m, 3)[(0, 0)] - m.determinant()).abs() <= 1e-10);
    }
}

#[test]
fn lyapunov_examples() {
    let mu = MarkovMeasure::bernoulli(&full2(), &[0.3, 0.7]).unwrap();
    let l = lyapunov_qr(&diag(), &mu, 1000, 4, 1).unwrap();
    assert!((l.exponents[0] - LN2).abs() < 1e-10 && (l.exponents[1] + LN2).abs() < 1e-10);
    let id = CocycleSpec::constant(&full2(), DMatrix::identity(2, 2)).unwrap();
    let l = lyapunov_qr(&id, &mu, 1000, 4, 1).unwrap();
    assert!(l.exponents.iter().all(|x| x.abs() < 1e-12));
    assert!(l.to_csv().starts_with("i,lambda_i,stderr\n"));
    let (e, _) = lyapunov_exterior(&diag(), &mu, 1, 1000, 4, 1).unwrap();
    assert!((e - LN2).abs() < 1e-10);

    let stuck = MarkovMeasure::from_stochastic(
        mu.space(),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
    );
    if let Ok(r) = stuck {
        assert!(lyapunov_qr(&positive_pair(), &r, 1000, 2, 1).is_err());
    }
}

#[test]
fn qr_and_exterior_agree_on_the_positive_pair() {
    let pp = positive_pair();
    let mu = MarkovMeasure::bernoulli(&full2(), &[0.5, 0.5]).unwrap();
    let l = lyapunov_qr(&pp, &mu, 10_000, 200, 42).unwrap();
    let (e1, s1) = lyapunov_exterior(&pp, &mu, 1, 10_000, 200, 43).unwrap();
    let combined = (l.stderr[0].powi(2) + s1.powi(2)).sqrt();
    assert!((l.exponents[0] - e1).abs() <= 3.0 * combined, "{} vs {e1} ({combined})", l.exponents[0]);

    // top exterior power is |det|; det A0 = det A1 = 1
    let (e2, _) = lyapunov_exterior(&pp, &mu, 2, 10_000, 50, 44).unwrap();
    assert!(e2.abs() < 1e-9);
    let sum: f64 = l.exponents.iter().sum();
    let sum_err = l.stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
    assert!(sum.abs() <= 3.0 * sum_err + 1e-9, "{sum} {sum_err}");
}

#[test]
fn determinant_identity_on_random_cocycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mu = MarkovMeasure::bernoulli(&full2(), &[0.4, 0.6]).unwrap();
    for _ in 0..5 {
        let gens = vec![random_matrix(&mut rng, 3), random_matrix(&mut rng, 3)];
        let spec = CocycleSpec::new(&full2(), gens.clone()).unwrap();
        let l = lyapunov_qr(&spec, &mu, 2000, 40, 5).unwrap();
        let exact = 0.4 * gens[0].determinant().abs().ln() + 0.6 * gens[1].determinant().abs().ln();
        let sum: f64 = l.exponents.iter().sum();
        let err = l.stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((sum - exact).abs() <= 3.0 * err + 1e-9, "{sum} vs {exact}");
        assert!(l.exponents.windows(2).all(|p| p[0] >= p[1]));
    }
}

#[test]
fn cfh_examples() {
    let grid = bernoulli_grid(&full2(), 101).unwrap();
    let rep = cfh_variational_check(&diag(), &w(&[1.0, 0.0]), &grid, 10).unwrap();
    assert!(rep.pass && rep.gap.abs() <= 1e-6, "{}", rep.gap);
    let zero = cfh_variational_check(&diag(), &w(&[0.0, 0.0]), &grid, 10).unwrap();
    assert!(zero.pass && zero.gap.abs() <= 1e-6);

    let grid = bernoulli_grid(&full2(), 100).unwrap();
    let rep = cfh_variational_check(&positive_pair(), &w(&[1.0, 0.0]), &grid, 12).unwrap();
    assert!(rep.pass, "{}", rep.rows.iter().map(|r| r.excess).fold(f64::NEG_INFINITY, f64::max));
    assert!(rep.gap >= -1e-6 && rep.gap <= 0.1, "{}", rep.gap);
    assert!(rep.to_csv().starts_with("mu_id,entropy,f_star,total,excess\n"));
}

#[test]
fn zero_temperature_lyapunov_sweep() {
    let pp = positive_pair();
    let a = w(&[1.0, 0.0]);
    let oracle = lyapunov_oracle(&pp, &a, 8).unwrap();
    let sweep = lyapunov_temperature_sweep(&pp, &a, &[1.0, 4.0, 16.0, 64.0], 10, 8).unwrap();
    assert_eq!(sweep.oracle.max_average, oracle.max_average);
    assert!(sweep.limit_gap >= -1e-9);
    let vals: Vec<f64> = sweep.rows.iter().map(|r| r.pressure_over_t).collect();
    assert!(vals.windows(2).all(|p| p[1] <= p[0] + 1e-12));
    assert!(sweep.limit_gap < 0.05, "{}", sweep.limit_gap);
}

#[test]
fn weight_must_be_nonincreasing() {
    let e = SingularWeight::new(vec![0.0, 1.0]).unwrap_err();
    assert_eq!(e.name(), "InvalidParameter");
    assert!(matches!(e, Error::InvalidParameter { ref name, .. } if *name == "alpha"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn submultiplicative(seed in any::<u64>(), a1 in 0.0f64..2.0, d in 0.0f64..2.0, lu in 1usize..8, lv in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = vec![random_matrix(&mut rng, 2), random_matrix(&mut rng, 2)];
        prop_assume!(gens.iter().all(|g| g.determinant().abs() > 1e-3));
        let spec = CocycleSpec::new(&full2(), gens).unwrap();
        let a = w(&[a1, a1 - d]);
        let u: Vec<usize> = (0..lu).map(|_| rng.random_range(0..2)).collect();
        let v: Vec<usize> = (0..lv).map(|_| rng.random_range(0..2)).collect();
        let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
        // the cocycle applies u first, so A(uv) = A(v) A(u)
        let lhs = singular_value_potential(&spec, &a, &uv).unwrap();
        let rhs = singular_value_potential(&spec, &a, &u).unwrap() + singular_value_potential(&spec, &a, &v).unwrap();
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }

    #[test]
    fn fekete_bound_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = vec![random_matrix(&mut rng, 2), random_matrix(&mut rng, 2)];
        prop_assume!(gens.iter().all(|g| g.determinant().abs() > 1e-3));
        let spec = CocycleSpec::new(&full2(), gens).unwrap();
        let est = subadditive_pressure(&spec, &w(&[1.0, 0.5]), 8).unwrap();
        let mut best = f64::INFINITY;
        for &(_, v) in &est.per_depth {
            let next = best.min(v);
            prop_assert!(next <= best);
            best = next;
        }
        prop_assert_eq!(best, est.fekete_upper);
    }
}
