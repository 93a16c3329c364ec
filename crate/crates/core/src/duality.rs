//! The dual entropy `inf_phi { P(phi) - int phi dmu }` over locally constant potentials.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::gibbs_state;
use crate::error::{Error, Result};
use crate::measures::{LocallyConstantPotential, MarkovMeasure};
use crate::par;
use crate::pressure::matrix_pressure;
use crate::report::{csv_row, fmt12};
use crate::symbolic::{CylinderSpace, SftSystem};

/// Box for potential coordinates.
pub const COORD_BOUND: f64 = 50.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct DualEntropyResult {
    /// Objective at `argmin_potential`, an upper bound on the depth-`k` infimum.
    pub value: f64,
    pub argmin_potential: LocallyConstantPotential,
    /// Max-norm of the projected gradient at the returned point.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub depth: usize,
    /// Set when a coordinate sits on the `[-50, 50]` box, i.e. the measure
    /// gives no weight to words the minimizer would push to `-inf`.
    pub support_mismatch: bool,
}

/// `F(x) = P(x) - <m, x>` and its gradient `pi(x) - m`.
struct Objective<'a> {
    space: &'a Arc<CylinderSpace>,
    target: &'a [f64],
}

impl Objective<'_> {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let phi = LocallyConstantPotential::new(self.space, x.to_vec())?;
        let g = gibbs_state(&phi)?;
        let pairing: f64 = self.target.iter().zip(x).map(|(m, v)| m * v).sum();
        let grad = g
            .measure
            .stationary()
            .iter()
            .zip(self.target)
            .map(|(p, m)| p - m)
            .collect();
        Ok((g.log_lambda - pairing, grad))
    }
}

fn projected(x: &[f64], g: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .map(|(&x, &g)| {
            if (x <= -COORD_BOUND && g > 0.0) || (x >= COORD_BOUND && g < 0.0) {
                0.0
            } else {
                g
            }
        })
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn start_point(target: &[f64]) -> Vec<f64> {
    target
        .iter()
        .map(|&m| if m > 0.0 { m.ln().max(-COORD_BOUND) } else { -COORD_BOUND })
        .collect()
}

/// Projected BFGS with Armijo backtracking inside the coordinate box.
fn minimize(obj: &Objective<'_>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64, f64, usize)> {
    let n = obj.target.len();
    let mut x = start_point(obj.target);
    let (mut f, mut g) = obj.eval(&x)?;
    let mut h = DMatrix::<f64>::identity(n, n);
    for iter in 0..max_iter {
        let pg = projected(&x, &g);
        let pg_norm = max_norm(&pg);
        if pg_norm <= tol {
            return Ok((x, f, pg_norm, iter));
        }
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, g)| *p != 0.0 || *g == 0.0).collect();
        let gv = DVector::from_fn(n, |i, _| if free[i] { g[i] } else { 0.0 });
        let mut d = -(&h * &gv);
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if d.dot(&gv) >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -gv.clone();
        }
        let slack = 1e-14 * f.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..n)
                .map(|i| (x[i] + step * d[i]).clamp(-COORD_BOUND, COORD_BOUND))
                .collect();
            let (ft, gt) = obj.eval(&trial)?;
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            if ft <= f + 1e-4 * decrease + slack {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if h != DMatrix::identity(n, n) {
                h = DMatrix::identity(n, n);
                continue;
            }
            return Err(Error::ConvergenceFailure { iterations: iter });
        };
        let s = DVector::from_fn(n, |i, _| xn[i] - x[i]);
        let y = DVector::from_fn(n, |i, _| gn[i] - g[i]);
        let sy = s.dot(&y);
        if sy > 1e-18 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - rho * &s * y.transpose();
            let right = &i - rho * &y * s.transpose();
            h = &left * &h * &right + rho * &s * s.transpose();
        }
        x = xn;
        f = fnew;
        g = gn;
    }
    let pg_norm = max_norm(&projected(&x, &g));
    if pg_norm <= tol {
        Ok((x, f, pg_norm, max_iter))
    } else {
        Err(Error::ConvergenceFailure { iterations: max_iter })
    }
}

fn target_marginal(mu: &MarkovMeasure, depth: usize) -> Result<(Arc<CylinderSpace>, Vec<f64>)> {
    if depth == 0 {
        return Err(Error::param("depth", "must be at least 1"));
    }
    if !mu.is_irreducible() && mu.stationary().iter().all(|&p| p > 0.0) {
        return Err(Error::NonIrreducibleMeasure);
    }
    let m = mu.marginal(depth)?;
    Ok((Arc::clone(m.space()), m.weights().to_vec()))
}

/// Minimizes `P(phi) - int phi dmu` over depth-`k` potentials.
pub fn dual_entropy(mu: &MarkovMeasure, depth: usize, tol: f64, max_iter: usize) -> Result<DualEntropyResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let (space, target) = target_marginal(mu, depth)?;
    let obj = Objective {
        space: &space,
        target: &target,
    };
    let (x, value, gradient_norm, iterations) = minimize(&obj, tol, max_iter)?;
    let support_mismatch = x.iter().any(|v| v.abs() >= COORD_BOUND);
    Ok(DualEntropyResult {
        value,
        argmin_potential: LocallyConstantPotential::new(&space, x)?,
        gradient_norm,
        iterations,
        depth,
        support_mismatch,
    })
}

/// Smallest depth at which `mu` is the Gibbs state of a locally constant potential.
///
/// An order-`r` chain is a depth-`r` Gibbs state exactly when its positive
/// transition probabilities factor as `log P_ij = a_i + b_j`; otherwise the
/// depth-`(r+1)` potential `log P` realizes it.
pub fn default_depth(mu: &MarkovMeasure) -> usize {
    let r = mu.order();
    if factorizes(mu.stochastic()) {
        r
    } else {
        r + 1
    }
}

fn factorizes(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    let mut a: Vec<Option<f64>> = vec![None; n];
    let mut b: Vec<Option<f64>> = vec![None; n];
    for root in 0..n {
        if a[root].is_some() || (0..n).all(|j| p[(root, j)] <= 0.0) {
            continue;
        }
        a[root] = Some(0.0);
        let mut stack = vec![(true, root)];
        while let Some((is_row, v)) = stack.pop() {
            for u in 0..n {
                let (i, j) = if is_row { (v, u) } else { (u, v) };
                if p[(i, j)] <= 0.0 {
                    continue;
                }
                let lp = p[(i, j)].ln();
                if is_row {
                    let want = lp - a[i].expect("row set");
                    match b[j] {
                        None => {
                            b[j] = Some(want);
                            stack.push((false, j));
                        }
                        Some(x) if (x - want).abs() > 1e-9 => return false,
                        _ => {}
                    }
                } else {
                    let want = lp - b[j].expect("column set");
                    match a[i] {
                        None => {
                            a[i] = Some(want);
                            stack.push((true, i));
                        }
                        Some(x) if (x - want).abs() > 1e-9 => return false,
                        _ => {}
                    }
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeMembership {
    pub member: bool,
    /// `-P(-phi)`.
    pub margin: f64,
}

/// Membership of `phi` in `{phi : P(-phi) <= 0}`.
pub fn cone_membership(phi: &LocallyConstantPotential) -> Result<ConeMembership> {
    let margin = -matrix_pressure(&phi.scale(-1.0))?.log_lambda;
    Ok(ConeMembership {
        member: margin >= -1e-12,
        margin,
    })
}

/// `inf { int phi dmu : P(-phi) <= 0 }` over depth-`k` potentials.
///
/// Writes `phi = P(psi) - psi`, which lies on the boundary of the cone, and
/// runs iterative scaling `psi <- psi + log(m / pi(psi))` until the Gibbs
/// marginal of `psi` matches the depth-`k` marginal `m` of `mu`.
pub fn cone_entropy(mu: &MarkovMeasure, depth: usize, tol: f64) -> Result<f64> {
    cone_entropy_with(mu, depth, tol, 20 * DEFAULT_MAX_ITER)
}

pub fn cone_entropy_with(mu: &MarkovMeasure, depth: usize, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let (space, target) = target_marginal(mu, depth)?;
    let mut psi = start_point(&target);
    for _ in 0..max_iter {
        let g = gibbs_state(&LocallyConstantPotential::new(&space, psi.clone())?)?;
        let pi = g.measure.stationary();
        let gap = pi
            .iter()
            .zip(&target)
            .zip(&psi)
            .map(|((p, m), x)| {
                let outward = (*x <= -COORD_BOUND && p > m) || (*x >= COORD_BOUND && p < m);
                if outward {
                    0.0
                } else {
                    (p - m).abs()
                }
            })
            .fold(0.0, f64::max);
        let phi = LocallyConstantPotential::new(&space, psi.iter().map(|x| g.log_lambda - x).collect())?;
        if gap <= tol {
            return mu.integrate(&phi);
        }
        for ((x, p), m) in psi.iter_mut().zip(pi).zip(&target) {
            let step = if *m > 0.0 && *p > 0.0 { (m / p).ln() } else { -COORD_BOUND };
            *x = (*x + step).clamp(-COORD_BOUND, COORD_BOUND);
        }
        let top = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        psi.iter_mut().for_each(|x| *x = (*x - top).max(-COORD_BOUND));
    }
    Err(Error::ConvergenceFailure { iterations: max_iter })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub pressure: f64,
    pub dual_entropy: f64,
    pub integral: f64,
    /// `dual_entropy + integral - pressure`.
    pub defect: f64,
    pub samples: usize,
    /// Largest `h(nu) + int phi dnu` over sampled Markov measures `nu`.
    pub sampled_max: f64,
    pub pass: bool,
}

/// Checks that the Gibbs state of `phi` attains `P(phi) = h + int phi` and
/// that sampled Markov measures of the same order stay below it.
pub fn variational_identity_check(phi: &LocallyConstantPotential, tol: f64, samples: usize, seed: u64) -> Result<VariationalReport> {
    let g = gibbs_state(phi)?;
    let mu = &g.measure;
    let dual = dual_entropy(mu, phi.depth(), DEFAULT_TOL.min(tol), DEFAULT_MAX_ITER)?;
    let integral = mu.integrate(phi)?;
    let defect = dual.value + integral - g.log_lambda;
    let space = Arc::clone(phi.space());
    let values = par::map_indices(samples, |i| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let nu = MarkovMeasure::random(&space, &mut rng)?;
        Ok(nu.ks_entropy() + nu.integrate(phi)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let sampled_max = values.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let pass = defect.abs() <= tol && !(sampled_max > g.log_lambda + tol);
    Ok(VariationalReport {
        pressure: g.log_lambda,
        dual_entropy: dual.value,
        integral,
        defect,
        samples,
        sampled_max,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub mu_id: usize,
    pub value: f64,
    pub ks_entropy: f64,
    pub gap: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub rows: Vec<EnvelopeRow>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl EnvelopeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu_id,value,ks_entropy,gap,iterations,gradient_norm\n");
        for r in &self.rows {
            out.push_str(&csv_row([
                r.mu_id.to_string(),
                fmt12(r.value),
                fmt12(r.ks_entropy),
                fmt12(r.gap),
                r.iterations.to_string(),
                fmt12(r.gradient_norm),
            ]));
        }
        out
    }
}

pub const ENVELOPE_TOL: f64 = 1e-4;

/// `|dual_entropy(mu) - h(mu)|` across a grid; `depth = None` uses [`default_depth`].
pub fn envelope_equality_check(sys: &Arc<SftSystem>, mu_grid: &[MarkovMeasure], depth: Option<usize>) -> Result<EnvelopeReport> {
    if mu_grid.iter().any(|mu| mu.system() != sys) {
        return Err(Error::SystemMismatch);
    }
    let rows = par::map_indices(mu_grid.len(), |i| -> Result<EnvelopeRow> {
        let mu = &mu_grid[i];
        let k = depth.unwrap_or_else(|| default_depth(mu));
        let d = dual_entropy(mu, k, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let h = mu.ks_entropy();
        Ok(EnvelopeRow {
            mu_id: i,
            value: d.value,
            ks_entropy: h,
            gap: (d.value - h).abs(),
            iterations: d.iterations,
            gradient_norm: d.gradient_norm,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    Ok(EnvelopeReport {
        rows,
        max_gap,
        tolerance: ENVELOPE_TOL,
        pass: max_gap <= ENVELOPE_TOL,
    })
}

/// Bernoulli measures `(p, 1-p)` on the full 2-shift with `p` evenly spaced in `[0.02, 0.98]`.
pub fn bernoulli_grid(sys: &Arc<SftSystem>, count: usize) -> Result<Vec<MarkovMeasure>> {
    if sys.alphabet_size() != 2 {
        return Err(Error::param("sys", "Bernoulli grid needs two symbols"));
    }
    (0..count)
        .map(|i| {
            let p = 0.02 + 0.96 * i as f64 / (count.max(2) - 1) as f64;
            MarkovMeasure::bernoulli(sys, &[p, 1.0 - p])
        })
        .collect()
}

/// Random full-support order-`order` Markov measures, one ChaCha8 stream per measure.
pub fn markov_grid(sys: &Arc<SftSystem>, order: usize, count: usize, seed: u64) -> Result<Vec<MarkovMeasure>> {
    let space = CylinderSpace::new(sys, order)?;
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            MarkovMeasure::random(&space, &mut rng)
        })
        .collect()
}
