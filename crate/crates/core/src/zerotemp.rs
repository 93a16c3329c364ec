//! Zero-temperature sweeps `t -> P(t phi) / t` and a periodic-orbit maximizer oracle.

use std::sync::Arc;

use crate::equilibrium::gibbs_state;
use crate::error::{Error, Result};
use crate::measures::{LocallyConstantPotential, MarkovMeasure};
use crate::par;
use crate::pressure::topological_entropy;
use crate::report::{csv_row, fmt12};
use crate::symbolic::{format_symbols, SftSystem, Word, DEFAULT_WORD_CAP};

pub const TIE_TOL: f64 = 1e-12;
pub const EXPONENT_LIMIT: f64 = 700.0;
pub const T_MAX: f64 = 500.0;

/// Best periodic-orbit average of `phi` up to a period bound.
///
/// The value is a lower bound on `max int phi dnu` over invariant measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximizingOracle {
    pub max_average: f64,
    pub witness_orbit: Word,
    pub period: usize,
    /// Every primitive orbit within `1e-12` of the maximum, as lexicographically least rotations.
    pub witnesses: Vec<Word>,
    pub max_period: usize,
}

/// `(1/p) sum_i phi(w_i ... w_{i+k-1})` with indices taken mod `p`.
pub fn cyclic_average(phi: &LocallyConstantPotential, cycle: &[usize]) -> Result<f64> {
    let p = cycle.len();
    if p == 0 {
        return Err(Error::param("cycle", "must be nonempty"));
    }
    let k = phi.depth();
    let mut window = vec![0; k];
    let mut total = 0.0;
    for i in 0..p {
        for (t, slot) in window.iter_mut().enumerate() {
            *slot = cycle[(i + t) % p];
        }
        total += phi
            .value_of(&window)
            .ok_or(Error::InadmissibleWord { position: i })?;
    }
    Ok(total / p as f64)
}

fn is_canonical(w: &[usize]) -> bool {
    let p = w.len();
    (1..p).all(|r| {
        // an equal rotation means the word is a proper power
        w[r..].iter().chain(&w[..r]).cmp(w.iter()) == std::cmp::Ordering::Greater
    })
}

struct Best {
    value: f64,
    words: Vec<Vec<usize>>,
}

impl Best {
    fn offer(&mut self, value: f64, w: &[usize]) {
        if value > self.value + TIE_TOL {
            self.value = value;
            self.words.clear();
            self.words.push(w.to_vec());
        } else if value >= self.value - TIE_TOL {
            self.words.push(w.to_vec());
        }
    }
}

/// Brute force over cyclically admissible words of length `p <= max_period`.
pub fn periodic_orbit_oracle(phi: &LocallyConstantPotential, max_period: usize) -> Result<MaximizingOracle> {
    periodic_orbit_oracle_capped(phi, max_period, DEFAULT_WORD_CAP)
}

pub fn periodic_orbit_oracle_capped(phi: &LocallyConstantPotential, max_period: usize, cap: u64) -> Result<MaximizingOracle> {
    if max_period == 0 {
        return Err(Error::param("max_period", "must be at least 1"));
    }
    let sys = phi.system();
    let counts = sys.start_counts(max_period);
    let total = counts[1..]
        .iter()
        .flatten()
        .fold(0u128, |a, &b| a.saturating_add(b));
    if total > cap as u128 {
        return Err(Error::CombinatorialOverflow { count: total, cap });
    }
    let firsts: Vec<usize> = (0..sys.alphabet_size()).collect();
    let parts = par::map_slice(&firsts, |&s| -> Result<Best> {
        let mut best = Best {
            value: f64::NEG_INFINITY,
            words: Vec::new(),
        };
        let mut err = None;
        let mut path = vec![s];
        visit(sys, &mut path, max_period, &mut |w| {
            if err.is_some() || !sys.allows(w[w.len() - 1], w[0]) || !is_canonical(w) {
                return;
            }
            match cyclic_average(phi, w) {
                Ok(v) => best.offer(v, w),
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(best),
        }
    });
    let mut best = Best {
        value: f64::NEG_INFINITY,
        words: Vec::new(),
    };
    for part in parts {
        let part = part?;
        for w in part.words {
            best.offer(part.value, &w);
        }
    }
    let mut words = best.words;
    let top = words
        .iter()
        .map(|w| cyclic_average(phi, w))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    words.retain(|w| cyclic_average(phi, w).map(|v| v >= top - TIE_TOL).unwrap_or(false));
    words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let witness = words.first().cloned().ok_or(Error::param("max_period", "no periodic orbit found"))?;
    let max_average = cyclic_average(phi, &witness)?;
    Ok(MaximizingOracle {
        max_average,
        period: witness.len(),
        witness_orbit: Word::new(sys, witness)?,
        witnesses: words.into_iter().map(|w| Word::new(sys, w)).collect::<Result<_>>()?,
        max_period,
    })
}

/// Calls `leaf` on `path` and every admissible extension up to length `n`.
fn visit(sys: &SftSystem, path: &mut Vec<usize>, n: usize, leaf: &mut dyn FnMut(&[usize])) {
    leaf(path);
    if path.len() == n {
        return;
    }
    let last = *path.last().expect("nonempty");
    for s in sys.successors(last).collect::<Vec<_>>() {
        path.push(s);
        visit(sys, path, n, leaf);
        path.pop();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub pressure: f64,
    pub pressure_over_t: f64,
    pub phi_integral: f64,
    pub entropy: f64,
    /// Depth-`k` marginal of the equilibrium state of `t phi`.
    pub marginal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSweep {
    pub t_grid: Vec<f64>,
    pub depth: usize,
    pub rows: Vec<SweepRow>,
}

impl TemperatureSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,pressure,pressure_over_t,phi_integral,entropy\n");
        for r in &self.rows {
            out.push_str(&csv_row([
                fmt12(r.t),
                fmt12(r.pressure),
                fmt12(r.pressure_over_t),
                fmt12(r.phi_integral),
                fmt12(r.entropy),
            ]));
        }
        out
    }
}

/// Geometric grid `t_0 * ratio^i` up to `t_max`, with `t_max` appended.
pub fn geometric_grid(t0: f64, ratio: f64, t_max: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut t = t0;
    while t < t_max * (1.0 - 1e-12) {
        grid.push(t);
        t *= ratio;
    }
    grid.push(t_max);
    grid
}

pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(0.1, 1.3, 50.0)
}

/// Pressure and equilibrium state of `t phi` along an increasing grid.
///
/// `depth` is the depth of the recorded marginals and must be at least the depth of `phi`.
pub fn temperature_sweep(phi: &LocallyConstantPotential, t_grid: &[f64], depth: usize) -> Result<TemperatureSweep> {
    if t_grid.is_empty()
        || t_grid.iter().any(|&t| !(t.is_finite() && t > 0.0))
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::param("t_grid", "must be positive and increasing"));
    }
    let t_max = t_grid[t_grid.len() - 1];
    if t_max > T_MAX {
        return Err(Error::param("t_grid", format!("t must not exceed {T_MAX}")));
    }
    let load = t_max * phi.sup_norm();
    if load > EXPONENT_LIMIT {
        return Err(Error::OverflowGuard(load));
    }
    if depth < phi.depth() {
        return Err(Error::DepthMismatch {
            left: phi.depth(),
            right: depth,
        });
    }
    let rows = par::map_slice(t_grid, |&t| -> Result<SweepRow> {
        let g = gibbs_state(&phi.scale(t))?;
        Ok(SweepRow {
            t,
            pressure: g.log_lambda,
            pressure_over_t: g.log_lambda / t,
            phi_integral: g.measure.integrate(phi)?,
            entropy: g.measure.ks_entropy(),
            marginal: g.measure.marginal(depth)?.weights().to_vec(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureSweep {
        t_grid: t_grid.to_vec(),
        depth,
        rows,
    })
}

/// Total weight that a measure gives to the depth-`d` windows of a periodic orbit.
pub fn orbit_mass(mu: &MarkovMeasure, orbit: &[usize], depth: usize) -> Result<f64> {
    let m = mu.marginal(depth)?;
    let p = orbit.len();
    let mut windows: Vec<Vec<usize>> = (0..p).map(|i| (0..depth).map(|t| orbit[(i + t) % p]).collect()).collect();
    windows.sort();
    windows.dedup();
    Ok(windows.iter().filter_map(|w| m.weight_of(w)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationReport {
    /// `|int phi dmu_t - max_average|` at the last grid point.
    pub integral_gap: f64,
    pub integral_pass: bool,
    /// The last integral exceeds the oracle, so the period bound was too small.
    pub horizon_insufficient: bool,
    pub late_entropy: f64,
    pub topological_entropy: f64,
    pub entropy_pass: bool,
    /// `|h(t_i) - h(t_{i+1})|` over the last five grid points.
    pub tail_differences: Vec<f64>,
    pub tail_pass: bool,
}

impl AccumulationReport {
    pub fn pass(&self) -> bool {
        self.integral_pass && self.entropy_pass && self.tail_pass
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,value,pass\n");
        out.push_str(&csv_row(["integral_gap".into(), fmt12(self.integral_gap), self.integral_pass.to_string()]));
        out.push_str(&csv_row(["late_entropy".into(), fmt12(self.late_entropy), self.entropy_pass.to_string()]));
        let tail = self.tail_differences.last().copied().unwrap_or(0.0);
        out.push_str(&csv_row(["tail_difference".into(), fmt12(tail), self.tail_pass.to_string()]));
        out
    }
}

pub const INTEGRAL_TOL: f64 = 1e-6;

pub fn accumulation_diagnostics(sweep: &TemperatureSweep, oracle: &MaximizingOracle, sys: &Arc<SftSystem>) -> Result<AccumulationReport> {
    let last = sweep.rows.last().ok_or(Error::param("sweep", "has no rows"))?;
    let integral_gap = (last.phi_integral - oracle.max_average).abs();
    let horizon_insufficient = last.phi_integral > oracle.max_average + 1e-9;
    let h_top = topological_entropy(sys)?;
    let entropy_pass = last.entropy >= -1e-12 && last.entropy <= h_top + 1e-9;
    let tail: Vec<&SweepRow> = sweep.rows.iter().rev().take(5).rev().collect();
    let tail_differences: Vec<f64> = tail.windows(2).map(|w| (w[1].entropy - w[0].entropy).abs()).collect();
    let tail_pass = tail_differences.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(AccumulationReport {
        integral_gap,
        integral_pass: integral_gap <= INTEGRAL_TOL && !horizon_insufficient,
        horizon_insufficient,
        late_entropy: last.entropy,
        topological_entropy: h_top,
        entropy_pass,
        tail_differences,
        tail_pass,
    })
}

/// One row per tied witness: `orbit,period,average`.
pub fn oracle_csv(oracle: &MaximizingOracle, phi: &LocallyConstantPotential) -> Result<String> {
    let mut out = String::from("orbit,period,average\n");
    for w in &oracle.witnesses {
        out.push_str(&csv_row([format_symbols(w), w.len().to_string(), fmt12(cyclic_average(phi, w)?)]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2() -> Arc<SftSystem> {
        Arc::new(SftSystem::full_shift(2))
    }

    #[test]
    fn oracle_examples() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 1.0]).unwrap();
        let o = periodic_orbit_oracle(&phi, 8).unwrap();
        assert_eq!(o.max_average, 1.0);
        assert_eq!(o.witness_orbit.symbols(), &[1]);

        let gm = Arc::new(SftSystem::golden_mean());
        let phi = LocallyConstantPotential::on(&gm, 1, vec![0.0, 1.0]).unwrap();
        let o = periodic_orbit_oracle(&phi, 8).unwrap();
        assert_eq!(o.max_average, 0.5);
        assert_eq!(o.witness_orbit.symbols(), &[0, 1]);
        assert_eq!(o.witnesses.len(), 1);

        let c = LocallyConstantPotential::on(&full2(), 1, vec![0.3, 0.3]).unwrap();
        let o = periodic_orbit_oracle(&c, 4).unwrap();
        assert!((o.max_average - 0.3).abs() < 1e-15);
        assert_eq!(o.period, 1);
        // primitive necklaces of length <= 4 over two letters: 2 + 1 + 2 + 3
        assert_eq!(o.witnesses.len(), 8);
    }

    #[test]
    fn canonical_rotations() {
        assert!(is_canonical(&[0, 1]));
        assert!(!is_canonical(&[1, 0]));
        assert!(!is_canonical(&[0, 1, 0, 1]));
        assert!(is_canonical(&[0, 0, 1]));
    }

    #[test]
    fn closed_form_sweep() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 1.0]).unwrap();
        let sweep = temperature_sweep(&phi, &default_t_grid(), 1).unwrap();
        for r in &sweep.rows {
            let exact = (1.0 + r.t.exp()).ln() / r.t;
            assert!((r.pressure_over_t - exact).abs() < 1e-12);
        }
        let last = sweep.rows.last().unwrap();
        assert_eq!(last.t, 50.0);
        assert!((last.pressure_over_t - 1.0).abs() < 1e-4);
        assert!(last.entropy <= 1e-8);
        let o = periodic_orbit_oracle(&phi, 6).unwrap();
        let rep = accumulation_diagnostics(&sweep, &o, &full2()).unwrap();
        assert!(rep.integral_gap <= 1e-6 && rep.pass(), "{rep:?}");
    }

    #[test]
    fn overflow_guard() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 20.0]).unwrap();
        assert!(matches!(temperature_sweep(&phi, &[1.0, 50.0], 1), Err(Error::OverflowGuard(_))));
    }

    #[test]
    fn symmetric_maximizers_keep_full_entropy() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![1.0, 1.0]).unwrap();
        let sweep = temperature_sweep(&phi, &default_t_grid(), 1).unwrap();
        for r in &sweep.rows {
            assert!((r.entropy - 2f64.ln()).abs() < 1e-12);
            assert!((r.marginal[0] - 0.5).abs() < 1e-12);
        }
    }
}
