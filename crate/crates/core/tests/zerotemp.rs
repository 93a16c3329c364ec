use std::sync::Arc;

use proptest::prelude::*;
use thermo_core::equilibrium::gibbs_state;
use thermo_core::measures::LocallyConstantPotential;
use thermo_core::symbolic::{CylinderSpace, SftSystem};
use thermo_core::zerotemp::{
    accumulation_diagnostics, cyclic_average, default_t_grid, oracle_csv, orbit_mass, periodic_orbit_oracle,
    temperature_sweep, TemperatureSweep,
};
use thermo_core::Error;

fn full2() -> Arc<SftSystem> {
    Arc::new(SftSystem::full_shift(2))
}

fn golden() -> Arc<SftSystem> {
    Arc::new(SftSystem::golden_mean())
}

fn check_sweep(sweep: &TemperatureSweep, max_average: f64, log_m: f64) -> Result<(), String> {
    let rows = &sweep.rows;
    for w in rows.windows(2) {
        if w[1].pressure_over_t > w[0].pressure_over_t + 1e-10 {
            return Err(format!("P/t increases at t = {}", w[1].t));
        }
        if w[1].phi_integral < w[0].phi_integral - 1e-10 {
            return Err(format!("integral decreases at t = {}", w[1].t));
        }
    }
    for w in rows.windows(3) {
        let s0 = (w[1].pressure - w[0].pressure) / (w[1].t - w[0].t);
        let s1 = (w[2].pressure - w[1].pressure) / (w[2].t - w[1].t);
        if s1 < s0 - 1e-9 {
            return Err(format!("not convex at t = {}", w[1].t));
        }
    }
    for r in rows {
        if r.phi_integral > max_average + 1e-9 {
            return Err(format!("integral above the oracle at t = {}", r.t));
        }
        if r.pressure_over_t < max_average - log_m / r.t - 1e-9 {
            return Err(format!("P/t below the slope bracket at t = {}", r.t));
        }
    }
    Ok(())
}

#[test]
fn oracle_examples() {
    let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 1.0]).unwrap();
    let o = periodic_orbit_oracle(&phi, 8).unwrap();
    assert_eq!(o.max_average, 1.0);
    assert_eq!(o.witness_orbit.symbols(), &[1]);

    let phi = LocallyConstantPotential::on(&golden(), 1, vec![0.0, 1.0]).unwrap();
    let o = periodic_orbit_oracle(&phi, 10).unwrap();
    assert_eq!(o.max_average, 0.5);
    assert_eq!(o.witness_orbit.symbols(), &[0, 1]);
    assert_eq!(o.period, 2);
    assert_eq!(cyclic_average(&phi, o.witness_orbit.symbols()).unwrap(), o.max_average);
    assert!(oracle_csv(&o, &phi).unwrap().starts_with("orbit,period,average\n01,2,0.5\n"));

    let c = LocallyConstantPotential::on(&golden(), 2, vec![0.3; 3]).unwrap();
    let o = periodic_orbit_oracle(&c, 6).unwrap();
    assert!((o.max_average - 0.3).abs() < 1e-15);
    assert_eq!(o.period, 1);
}

#[test]
fn full_shift_sweep_matches_closed_form() {
    let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 1.0]).unwrap();
    let sweep = temperature_sweep(&phi, &default_t_grid(), 1).unwrap();
    for r in &sweep.rows {
        let closed = (1.0 + r.t.exp()).ln() / r.t;
        assert!((r.pressure_over_t - closed).abs() < 1e-12);
    }
    let last = sweep.rows.last().unwrap();
    assert_eq!(last.t, 50.0);
    assert!((last.pressure_over_t - 1.0).abs() < 1e-12);
    assert!(last.entropy <= 1e-8);
    let oracle = periodic_orbit_oracle(&phi, 8).unwrap();
    let rep = accumulation_diagnostics(&sweep, &oracle, &full2()).unwrap();
    assert!(rep.integral_gap <= 1e-6);
    assert!(rep.pass());
    check_sweep(&sweep, 1.0, 2f64.ln()).unwrap();
}

#[test]
fn golden_mean_zero_temperature() {
    let phi = LocallyConstantPotential::on(&golden(), 1, vec![0.0, 1.0]).unwrap();
    let sweep = temperature_sweep(&phi, &default_t_grid(), 2).unwrap();
    let oracle = periodic_orbit_oracle(&phi, 12).unwrap();
    let last = sweep.rows.last().unwrap();
    assert!((last.pressure_over_t - 0.5).abs() <= 2e-2);
    assert!(last.entropy <= 1e-6);
    check_sweep(&sweep, oracle.max_average, 2f64.ln()).unwrap();
    let rep = accumulation_diagnostics(&sweep, &oracle, &golden()).unwrap();
    assert!(rep.pass(), "{rep:?}");
    assert!(rep.tail_differences.windows(2).all(|w| w[1] <= w[0]));

    let g = gibbs_state(&phi.scale(50.0)).unwrap();
    assert!(orbit_mass(&g.measure, &[0, 1], 2).unwrap() >= 0.999);
    assert!(sweep.to_csv().starts_with("t,pressure,pressure_over_t,phi_integral,entropy"));
}

#[test]
fn symmetric_maximizers_keep_full_entropy() {
    let phi = LocallyConstantPotential::on(&full2(), 1, vec![1.0, 1.0]).unwrap();
    let sweep = temperature_sweep(&phi, &default_t_grid(), 1).unwrap();
    let oracle = periodic_orbit_oracle(&phi, 4).unwrap();
    assert!(oracle.witnesses.len() > 2);
    let last = sweep.rows.last().unwrap();
    assert!((last.entropy - 2f64.ln()).abs() < 1e-12);
    assert!(last.marginal.iter().all(|&w| (w - 0.5).abs() < 1e-12));
}

#[test]
fn overflow_guard() {
    let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 20.0]).unwrap();
    assert!(matches!(
        temperature_sweep(&phi, &[1.0, 40.0], 1),
        Err(Error::OverflowGuard(_))
    ));
    let small = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.1]).unwrap();
    assert!(temperature_sweep(&small, &[1.0, 600.0], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sweep_invariants(vals in prop::collection::vec(-2.0f64..2.0, 3), t0 in 0.05f64..0.5, ratio in 1.1f64..1.6) {
        let g = golden();
        let space = CylinderSpace::new(&g, 2).unwrap();
        let phi = LocallyConstantPotential::new(&space, vals).unwrap();
        let grid = thermo_core::zerotemp::geometric_grid(t0, ratio, 40.0);
        let sweep = temperature_sweep(&phi, &grid, 2).unwrap();
        let oracle = periodic_orbit_oracle(&phi, 10).unwrap();
        prop_assert!(check_sweep(&sweep, oracle.max_average, 2f64.ln()).is_ok(), "{:?}", check_sweep(&sweep, oracle.max_average, 2f64.ln()));
    }
}
