//! Equilibrium states of locally constant potentials and differentiability probes.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::{marginal_distance, LocallyConstantPotential, MarkovMeasure};
use crate::par;
use crate::pressure::matrix_pressure;
use crate::report::{csv_row, fmt12};
use crate::symbolic::CylinderSpace;

/// The Gibbs measure of a potential, as an order-`k` Markov chain on `k`-words.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub measure: MarkovMeasure,
    pub source_potential: LocallyConstantPotential,
    pub log_lambda: f64,
}

/// `P_ij = L_ij r_j / (lambda r_i)` and `pi_i = l_i r_i` from the Perron data of `phi`.
pub fn gibbs_state(phi: &LocallyConstantPotential) -> Result<GibbsState> {
    let pd = matrix_pressure(phi)?;
    let space = phi.space();
    let n = space.len();
    let top = phi.max_value();
    let lambda = (pd.log_lambda - top).exp();
    let r = &pd.right_vec;
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = (phi.value(i) - top).exp();
        let mut row = 0.0;
        for &j in space.successors(i) {
            let x = w * r[j] / (lambda * r[i]);
            p[(i, j)] = x;
            row += x;
        }
        for &j in space.successors(i) {
            p[(i, j)] /= row;
        }
    }
    let mut pi: Vec<f64> = pd.left_vec.iter().zip(r).map(|(l, r)| (l * r).max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    let pi = polish_stationary(&p, pi);
    Ok(GibbsState {
        measure: MarkovMeasure::new(space, p, pi)?,
        source_potential: phi.clone(),
        log_lambda: pd.log_lambda,
    })
}

/// A few fixed-point steps `pi <- P^T pi` to wash out eigenvector round-off.
fn polish_stationary(p: &DMatrix<f64>, mut pi: Vec<f64>) -> Vec<f64> {
    let n = pi.len();
    for _ in 0..4 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[(i, j)];
            }
        }
        let s: f64 = next.iter().sum();
        pi = next.into_iter().map(|x| x / s).collect();
    }
    pi
}

/// One direction of a tangency check.
#[derive(Debug, Clone, PartialEq)]
pub struct TangencyRow {
    pub psi_id: String,
    /// `Gamma(phi + psi) - Gamma(phi)`.
    pub lhs: f64,
    /// `int psi dmu`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyReport {
    pub max_violation: f64,
    pub directions_tested: usize,
    pub per_direction: Vec<TangencyRow>,
}

impl TangencyReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("psi_id,lhs,rhs,slack\n");
        for r in &self.per_direction {
            out.push_str(&csv_row([r.psi_id.clone(), fmt12(r.lhs), fmt12(r.rhs), fmt12(r.slack)]));
        }
        out
    }
}

/// Checks `Gamma(phi + psi) - Gamma(phi) >= int psi dmu_phi` for every `+psi` and `-psi`.
pub fn tangency_check(phi: &LocallyConstantPotential, directions: &[LocallyConstantPotential]) -> Result<TangencyReport> {
    let mu = gibbs_state(phi)?.measure;
    tangency_check_against(phi, &mu, directions)
}

/// The same inequality against an arbitrary candidate measure.
pub fn tangency_check_against(
    phi: &LocallyConstantPotential,
    mu: &MarkovMeasure,
    directions: &[LocallyConstantPotential],
) -> Result<TangencyReport> {
    if directions.is_empty() {
        return Err(Error::param("directions", "must be nonempty"));
    }
    let base = matrix_pressure(phi)?.log_lambda;
    let signed: Vec<(usize, f64)> = (0..directions.len()).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
    let rows = par::map_slice(&signed, |&(i, sign)| -> Result<TangencyRow> {
        let psi = directions[i].scale(sign);
        let lhs = matrix_pressure(&phi.add(&psi)?)?.log_lambda - base;
        let rhs = mu.integrate(&psi)?;
        Ok(TangencyRow {
            psi_id: format!("{}{}", if sign > 0.0 { '+' } else { '-' }, i),
            lhs,
            rhs,
            slack: lhs - rhs,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_violation = -rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(TangencyReport {
        max_violation,
        directions_tested: rows.len(),
        per_direction: rows,
    })
}

/// Coordinate directions followed by `random` directions uniform on the unit sphere.
pub fn sample_directions(space: &Arc<CylinderSpace>, random: usize, seed: u64) -> Result<Vec<LocallyConstantPotential>> {
    let n = space.len();
    let mut out = Vec::with_capacity(n + random);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        out.push(LocallyConstantPotential::new(space, v)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x /= norm);
        out.push(LocallyConstantPotential::new(space, v)?);
    }
    Ok(out)
}

pub const DEFAULT_T_GRID: [f64; 3] = [0.02, 0.01, 0.005];

#[derive(Debug, Clone, PartialEq)]
pub struct GateauxResult {
    pub derivative: f64,
    /// `(t, central difference, extrapolated value)`; the first row has no extrapolation.
    pub table: Vec<(f64, f64, Option<f64>)>,
}

/// Central differences of `t -> Gamma(phi + t psi)` at `t = 0`, Richardson-extrapolated
/// over consecutive grid points to cancel the `t^2` term.
pub fn gateaux_derivative(
    phi: &LocallyConstantPotential,
    psi: &LocallyConstantPotential,
    t_grid: &[f64],
) -> Result<GateauxResult> {
    if t_grid.is_empty()
        || t_grid.iter().any(|&t| !(t.is_finite() && t >= 1e-7))
        || t_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::param("t_grid", "must be decreasing with every step at least 1e-7"));
    }
    let diffs = par::map_slice(t_grid, |&t| -> Result<f64> {
        let up = matrix_pressure(&phi.combine(1.0, psi, t)?)?.log_lambda;
        let down = matrix_pressure(&phi.combine(1.0, psi, -t)?)?.log_lambda;
        Ok((up - down) / (2.0 * t))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    // Neville table in t^2; row i ends with the extrapolation through levels 0..=i.
    let mut table = vec![(t_grid[0], diffs[0], None)];
    let mut prev = vec![diffs[0]];
    for i in 1..t_grid.len() {
        let mut row = vec![diffs[i]];
        for k in 1..=i {
            let (a, b) = (t_grid[i - k] * t_grid[i - k], t_grid[i] * t_grid[i]);
            row.push((a * row[k - 1] - b * prev[k - 1]) / (a - b));
        }
        table.push((t_grid[i], diffs[i], row.last().copied()));
        prev = row;
    }
    let last = table.last().expect("nonempty");
    Ok(GateauxResult {
        derivative: last.2.unwrap_or(last.1),
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetRow {
    pub radius: f64,
    /// `sup |Gamma(phi + psi) - Gamma(phi) - int psi dmu_phi| / r` over `|psi|_sup = r`.
    pub sup_ratio: f64,
    /// Largest total variation between the depth-`k` marginals of `mu_{phi+psi}` and `mu_phi`.
    pub marginal_shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetReport {
    pub rows: Vec<FrechetRow>,
    /// `sup_ratio(r_i) / sup_ratio(r_{i+1})`.
    pub decay_factors: Vec<f64>,
    /// Fitted `C` in `marginal_shift <= C r`.
    pub continuity_constant: f64,
}

impl FrechetReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,sup_ratio,marginal_shift\n");
        for r in &self.rows {
            out.push_str(&csv_row([fmt12(r.radius), fmt12(r.sup_ratio), fmt12(r.marginal_shift)]));
        }
        out
    }
}

pub fn frechet_probe(
    phi: &LocallyConstantPotential,
    radius_grid: &[f64],
    directions: &[LocallyConstantPotential],
) -> Result<FrechetReport> {
    if radius_grid.is_empty()
        || radius_grid.iter().any(|&r| !(r.is_finite() && r > 0.0))
        || radius_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::param("radius_grid", "must be positive and decreasing"));
    }
    if directions.is_empty() {
        return Err(Error::param("directions", "must be nonempty"));
    }
    let gibbs = gibbs_state(phi)?;
    let base = gibbs.log_lambda;
    let depth = directions.iter().map(|d| d.depth()).max().unwrap_or(1).max(phi.depth());
    let reference = gibbs.measure.marginal(depth)?;
    let mut rows = Vec::with_capacity(radius_grid.len());
    for &r in radius_grid {
        let probes = par::map_slice(directions, |d| -> Result<(f64, f64)> {
            let norm = d.sup_norm();
            if norm == 0.0 {
                return Ok((0.0, 0.0));
            }
            let psi = d.scale(r / norm);
            let moved = phi.add(&psi)?;
            let g = gibbs_state(&moved)?;
            let ratio = (g.log_lambda - base - gibbs.measure.integrate(&psi)?).abs() / r;
            let shift = marginal_distance(&g.measure.marginal(depth)?, &reference)?;
            Ok((ratio, shift))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        rows.push(FrechetRow {
            radius: r,
            sup_ratio: probes.iter().map(|p| p.0).fold(0.0, f64::max),
            marginal_shift: probes.iter().map(|p| p.1).fold(0.0, f64::max),
        });
    }
    let decay_factors = rows.windows(2).map(|w| w[0].sup_ratio / w[1].sup_ratio).collect();
    let continuity_constant = rows.iter().map(|r| r.marginal_shift / r.radius).fold(0.0, f64::max);
    Ok(FrechetReport {
        rows,
        decay_factors,
        continuity_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::marginal_distance;
    use crate::symbolic::SftSystem;

    fn full2() -> Arc<SftSystem> {
        Arc::new(SftSystem::full_shift(2))
    }

    #[test]
    fn bernoulli_quarter() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 3f64.ln()]).unwrap();
        let g = gibbs_state(&phi).unwrap();
        let target = MarkovMeasure::bernoulli(&full2(), &[0.25, 0.75]).unwrap();
        let d = marginal_distance(&g.measure.marginal(3).unwrap(), &target.marginal(3).unwrap()).unwrap();
        assert!(d < 1e-12);
        assert!((g.log_lambda - 4f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn zero_potential_gives_parry() {
        let gm = Arc::new(SftSystem::golden_mean());
        let phi = LocallyConstantPotential::on(&gm, 1, vec![0.0, 0.0]).unwrap();
        let g = gibbs_state(&phi).unwrap();
        let parry = MarkovMeasure::parry(&gm).unwrap();
        let d = marginal_distance(&g.measure.marginal(2).unwrap(), &parry.marginal(2).unwrap()).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn constant_potential_is_uniform() {
        for c in [-5.0, 0.3, 40.0] {
            let phi = LocallyConstantPotential::on(&full2(), 1, vec![c, c]).unwrap();
            let g = gibbs_state(&phi).unwrap();
            assert!((g.measure.stationary()[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn tangency_closed_form() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
        let psi = phi.with_values(vec![0.0, 1.0]).unwrap();
        let rep = tangency_check(&phi, &[psi]).unwrap();
        let plus = &rep.per_direction[0];
        let expected = ((1.0 + 1f64.exp()) / 2.0).ln() - 0.5;
        assert!((plus.slack - expected).abs() < 1e-12);
        assert!((plus.slack - 0.1201).abs() < 1e-4);
        let c = phi.with_values(vec![2.5, 2.5]).unwrap();
        let rep = tangency_check(&phi, &[c]).unwrap();
        assert!(rep.per_direction.iter().all(|r| r.slack.abs() < 1e-12));
    }

    #[test]
    fn gateaux_examples() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
        let one = phi.with_values(vec![1.0, 1.0]).unwrap();
        let d = gateaux_derivative(&phi, &one, &DEFAULT_T_GRID).unwrap();
        assert!((d.derivative - 1.0).abs() < 1e-12);
        let e1 = phi.with_values(vec![0.0, 1.0]).unwrap();
        let d = gateaux_derivative(&phi, &e1, &DEFAULT_T_GRID).unwrap();
        assert!((d.derivative - 0.5).abs() < 1e-9);

        let gm = Arc::new(SftSystem::golden_mean());
        let phi = LocallyConstantPotential::on(&gm, 1, vec![0.0, 0.0]).unwrap();
        let e0 = phi.with_values(vec![1.0, 0.0]).unwrap();
        let d = gateaux_derivative(&phi, &e0, &DEFAULT_T_GRID).unwrap();
        let gold = (1.0 + 5f64.sqrt()) / 2.0;
        let parry0 = gold * gold / (1.0 + gold * gold);
        assert!((d.derivative - parry0).abs() < 1e-9);
        assert!((parry0 - 0.7236).abs() < 1e-4);
    }

    #[test]
    fn bad_grids_rejected() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.0, 0.0]).unwrap();
        assert!(gateaux_derivative(&phi, &phi, &[0.01, 0.02]).is_err());
        assert!(gateaux_derivative(&phi, &phi, &[1e-9]).is_err());
        assert!(frechet_probe(&phi, &[0.1, 0.2], &[phi.clone()]).is_err());
    }

    #[test]
    fn frechet_ratio_halves() {
        let phi = LocallyConstantPotential::on(&full2(), 1, vec![0.2, -0.4]).unwrap();
        let dirs = sample_directions(phi.space(), 10, 7).unwrap();
        let rep = frechet_probe(&phi, &[0.1, 0.05, 0.025], &dirs).unwrap();
        for f in &rep.decay_factors {
            assert!((1.5..=2.5).contains(f), "factor {f}");
        }
        let c = phi.with_values(vec![1.0, 1.0]).unwrap();
        let rep = frechet_probe(&phi, &[0.1, 0.05], &[c]).unwrap();
        assert!(rep.rows.iter().all(|r| r.sup_ratio < 1e-12));
    }
}
