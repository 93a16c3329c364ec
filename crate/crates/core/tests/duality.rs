use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermo_core::duality::{
    bernoulli_grid, cone_entropy, cone_membership, default_depth, dual_entropy, envelope_equality_check, markov_grid,
    variational_identity_check, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use thermo_core::equilibrium::gibbs_state;
use thermo_core::measures::{LocallyConstantPotential, MarkovMeasure};
use thermo_core::pressure::matrix_pressure;
use thermo_core::symbolic::{CylinderSpace, SftSystem};

fn full2() -> Arc<SftSystem> {
    Arc::new(SftSystem::full_shift(2))
}

fn golden() -> Arc<SftSystem> {
    Arc::new(SftSystem::golden_mean())
}

fn h(mu: &MarkovMeasure, depth: usize) -> f64 {
    dual_entropy(mu, depth, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().value
}

fn objective(mu: &MarkovMeasure, phi: &LocallyConstantPotential) -> f64 {
    matrix_pressure(phi).unwrap().log_lambda - mu.integrate(phi).unwrap()
}

#[test]
fn dual_entropy_examples() {
    let half = MarkovMeasure::bernoulli(&full2(), &[0.5, 0.5]).unwrap();
    assert!((h(&half, 1) - std::f64::consts::LN_2).abs() < 1e-8);
    let skew = MarkovMeasure::bernoulli(&full2(), &[0.25, 0.75]).unwrap();
    let oracle = -(0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
    assert!((h(&skew, 1) - oracle).abs() < 1e-8);
    assert!((oracle - 0.562335).abs() < 1e-6);
    let parry = MarkovMeasure::parry(&golden()).unwrap();
    let r = dual_entropy(&parry, 1, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!((r.value - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-8);
    assert!(r.gradient_norm <= DEFAULT_TOL);
    assert!(!r.support_mismatch);
    assert!(r.value <= 2f64.ln() + r.argmin_potential.sup_norm());
}

#[test]
fn cone_examples() {
    let l2 = std::f64::consts::LN_2;
    let c = LocallyConstantPotential::on(&full2(), 1, vec![l2, l2]).unwrap();
    let m = cone_membership(&c).unwrap();
    assert!(m.member && m.margin.abs() < 1e-12);
    let zero = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
    assert!(!cone_membership(&zero).unwrap().member);
    let big = LocallyConstantPotential::on(&full2(), 1, vec![3.0, 3.0]).unwrap();
    let m = cone_membership(&big).unwrap();
    assert!(m.member && (m.margin - (3.0 - l2)).abs() < 1e-12);
}

#[test]
fn cone_entropy_examples() {
    let half = MarkovMeasure::bernoulli(&full2(), &[0.5, 0.5]).unwrap();
    assert!((cone_entropy(&half, 1, 1e-9).unwrap() - std::f64::consts::LN_2).abs() < 2e-8);
    let atom = MarkovMeasure::periodic_orbit(&full2(), &[0]).unwrap();
    assert!(cone_entropy(&atom, 1, 1e-9).unwrap().abs() < 1e-6);
    let parry = MarkovMeasure::parry(&golden()).unwrap();
    let a = cone_entropy(&parry, 1, 1e-9).unwrap();
    assert!((a - h(&parry, 1)).abs() < 2e-8);
}

#[test]
fn variational_examples() {
    let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 3f64.ln()]).unwrap();
    let rep = variational_identity_check(&phi, 1e-8, 20, 1).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!((rep.pressure - 4f64.ln()).abs() < 1e-12);
    assert!((rep.integral - 0.75 * 3f64.ln()).abs() < 1e-10);
    assert!((rep.dual_entropy - 0.562335).abs() < 1e-6);
    assert!(rep.sampled_max <= rep.pressure + 1e-12);

    for sys in [full2(), golden()] {
        let zero = LocallyConstantPotential::on(&sys, 1, vec![0.0, 0.0]).unwrap();
        let rep = variational_identity_check(&zero, 1e-8, 20, 2).unwrap();
        assert!(rep.pass);
        let parry = MarkovMeasure::parry(&sys).unwrap();
        assert!((rep.dual_entropy - parry.ks_entropy()).abs() < 1e-8);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let vals = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let phi = LocallyConstantPotential::on(&golden(), 1, vals).unwrap();
        assert!(variational_identity_check(&phi, 1e-8, 10, 3).unwrap().pass);
    }
}

#[test]
fn envelope_grids() {
    let bern = bernoulli_grid(&full2(), 50).unwrap();
    assert_eq!(bern.len(), 50);
    let rep = envelope_equality_check(&full2(), &bern, None).unwrap();
    assert!(rep.pass && rep.max_gap <= 1e-4, "{}", rep.max_gap);

    let markov = markov_grid(&golden(), 1, 50, 9).unwrap();
    let rep = envelope_equality_check(&golden(), &markov, None).unwrap();
    assert!(rep.pass && rep.max_gap <= 1e-4, "{}", rep.max_gap);
    assert!(rep.to_csv().starts_with("mu_id,value,ks_entropy,gap,iterations,gradient_norm\n0,"));

    let atoms = vec![
        MarkovMeasure::periodic_orbit(&full2(), &[0]).unwrap(),
        MarkovMeasure::periodic_orbit(&full2(), &[1]).unwrap(),
    ];
    let rep = envelope_equality_check(&full2(), &atoms, None).unwrap();
    assert!(rep.rows.iter().all(|r| r.value.abs() <= 1e-4));
}

#[test]
fn default_depth_follows_markov_order() {
    let bern = MarkovMeasure::bernoulli(&full2(), &[0.3, 0.7]).unwrap();
    assert_eq!(default_depth(&bern), 1);
    let m = markov_grid(&full2(), 1, 1, 4).unwrap().remove(0);
    assert_eq!(default_depth(&m), 2);
    assert!((h(&m, 2) - m.ks_entropy()).abs() < 1e-8);
}

#[test]
fn gradient_matches_finite_differences() {
    let sys = golden();
    let space = CylinderSpace::new(&sys, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let mu = MarkovMeasure::random(&space, &mut rng).unwrap();
        let x: Vec<f64> = (0..space.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let phi = LocallyConstantPotential::new(&space, x.clone()).unwrap();
        let pi = gibbs_state(&phi).unwrap().measure.marginal(2).unwrap();
        let m = mu.marginal(2).unwrap();
        let eps = 1e-5;
        for i in 0..x.len() {
            let analytic = pi.weights()[i] - m.weights()[i];
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += eps;
            dn[i] -= eps;
            let f = |v: Vec<f64>| objective(&mu, &LocallyConstantPotential::new(&space, v).unwrap());
            let fd = (f(up) - f(dn)) / (2.0 * eps);
            assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0), "{fd} vs {analytic}");
        }
    }
}

#[test]
fn nearby_measures_mix_affinely() {
    let sys = full2();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let space = CylinderSpace::new(&sys, 1).unwrap();
    for _ in 0..5 {
        let base = MarkovMeasure::random(&space, &mut rng).unwrap();
        let mut q = base.stochastic().clone();
        for i in 0..2 {
            let d = rng.random_range(-0.05..0.05);
            q[(i, 0)] = (q[(i, 0)] + d).clamp(0.05, 0.95);
            q[(i, 1)] = 1.0 - q[(i, 0)];
        }
        let mu1 = base;
        let mu2 = MarkovMeasure::from_stochastic(&space, q).unwrap();
        let (m1, m2) = (mu1.marginal(2).unwrap(), mu2.marginal(2).unwrap());
        let (h1, h2) = (h(&mu1, 1), h(&mu2, 1));
        for t in [0.25, 0.5, 0.75] {
            let mix = MarkovMeasure::from_marginal(&m1.mix(&m2, t).unwrap()).unwrap();
            let hm = h(&mix, 1);
            assert!((hm - (t * h1 + (1.0 - t) * h2)).abs() <= 1e-3, "t {t}: {hm} vs {h1}, {h2}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_is_convex(seed in any::<u64>(), t in 0.0f64..1.0) {
        let sys = golden();
        let space = CylinderSpace::new(&sys, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = MarkovMeasure::random(&space, &mut rng).unwrap();
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * y + (1.0 - t) * x).collect();
        let f = |v: &[f64]| objective(&mu, &LocallyConstantPotential::new(&space, v.to_vec()).unwrap());
        prop_assert!(f(&mid) <= t * f(&b) + (1.0 - t) * f(&a) + 1e-10);
    }

    #[test]
    fn deeper_families_lower_the_infimum(seed in any::<u64>()) {
        let sys = golden();
        let space = CylinderSpace::new(&sys, 2).unwrap();
        let mu = MarkovMeasure::random(&space, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (h1, h2, h3) = (h(&mu, 1), h(&mu, 2), h(&mu, 3));
        prop_assert!(h2 <= h1 + 1e-8);
        prop_assert!(h3 <= h2 + 1e-8);
        prop_assert!((h3 - mu.ks_entropy()).abs() < 1e-7);
    }

    #[test]
    fn dual_entropy_never_exceeds_a_dual_term(seed in any::<u64>(), x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let sys = golden();
        let space = CylinderSpace::new(&sys, 2).unwrap();
        let mu = MarkovMeasure::random(&space, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let phi = LocallyConstantPotential::new(&space, x).unwrap();
        prop_assert!(h(&mu, 2) <= objective(&mu, &phi) + 1e-8);
    }
}
