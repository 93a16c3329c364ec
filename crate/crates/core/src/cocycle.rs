//! One-step linear cocycles over subshifts: singular-value potentials,
//! sub-additive pressure and Lyapunov exponents.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::MarkovMeasure;
use crate::par::{self, LogSumExp};
use crate::report::{csv_row, fmt12};
use crate::symbolic::{SftSystem, Word, DEFAULT_WORD_CAP};

pub const MAX_PSI_DEPTH: usize = 64;

/// One invertible `l x l` generator per symbol; `A^n(x) = A(x_{n-1}) ... A(x_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleSpec {
    dimension: usize,
    generators: Vec<DMatrix<f64>>,
    system: Arc<SftSystem>,
}

impl CocycleSpec {
    pub fn new(system: &Arc<SftSystem>, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = system.alphabet_size();
        if generators.len() != m {
            return Err(Error::param("generators", format!("need one matrix per symbol ({m})")));
        }
        let l = generators[0].nrows();
        if l == 0 {
            return Err(Error::param("generators", "dimension must be at least 1"));
        }
        for (s, a) in generators.iter().enumerate() {
            if a.nrows() != l || a.ncols() != l {
                return Err(Error::param("generators", format!("generator {s} is not {l}x{l}")));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::param("generators", format!("generator {s} has a non-finite entry")));
            }
            if a.determinant().abs() <= 1e-12 {
                return Err(Error::param("generators", format!("generator {s} is not invertible")));
            }
        }
        Ok(CocycleSpec {
            dimension: l,
            generators,
            system: Arc::clone(system),
        })
    }

    /// The same matrix for every symbol.
    pub fn constant(system: &Arc<SftSystem>, a: DMatrix<f64>) -> Result<Self> {
        Self::new(system, vec![a; system.alphabet_size()])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn system(&self) -> &Arc<SftSystem> {
        &self.system
    }

    /// `s_1 / s_l` of each generator.
    pub fn condition_numbers(&self) -> Vec<f64> {
        self.generators
            .iter()
            .map(|a| {
                let s = a.singular_values();
                s.max() / s.min()
            })
            .collect()
    }

    /// `A^n` along `w`, without renormalization.
    pub fn product(&self, w: &[usize]) -> DMatrix<f64> {
        w.iter()
            .fold(DMatrix::identity(self.dimension, self.dimension), |m, &s| &self.generators[s] * m)
    }
}

/// Exponent vector of a singular-value potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularWeight {
    alpha: Vec<f64>,
}

impl SingularWeight {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("alpha", "must be a nonempty finite vector"));
        }
        if alpha.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("alpha", "must be nonincreasing"));
        }
        Ok(SingularWeight { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        Self::new(self.alpha.iter().map(|a| a * t).collect())
    }

    /// Coefficients `c_k = alpha_k - alpha_{k+1}` with `alpha_{l+1} = 0`, so that
    /// `sum alpha_i log s_i = sum c_k log |wedge^k M|`.
    fn wedge_coefficients(&self) -> Vec<f64> {
        let l = self.alpha.len();
        (0..l)
            .map(|k| self.alpha[k] - if k + 1 < l { self.alpha[k + 1] } else { 0.0 })
            .collect()
    }
}

/// `k`-subsets of `0..l` in lexicographic order.
fn subsets(l: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, l: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..l {
            cur.push(i);
            rec(i + 1, l, k, cur, out);
            cur.pop();
        }
    }
    rec(0, l, k, &mut cur, &mut out);
    out
}

/// The `k`-th compound matrix: all `k x k` minors, rows and columns in lexicographic subset order.
pub fn exterior_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let l = m.nrows();
    assert!(k >= 1 && k <= l && m.ncols() == l, "exterior power needs 1 <= k <= l on a square matrix");
    let sets = subsets(l, k);
    let n = sets.len();
    DMatrix::from_fn(n, n, |i, j| {
        DMatrix::from_fn(k, k, |a, b| m[(sets[i][a], sets[j][b])]).determinant()
    })
}

pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// Renormalized product of compound matrices, one per exterior degree.
#[derive(Clone)]
struct WedgeProduct {
    mats: Vec<DMatrix<f64>>,
    logs: Vec<f64>,
}

struct Compounds {
    /// `wedge[s][k-1]` is the `k`-th compound of generator `s`.
    wedge: Vec<Vec<DMatrix<f64>>>,
    coeffs: Vec<f64>,
}

impl Compounds {
    fn new(spec: &CocycleSpec, alpha: &SingularWeight) -> Result<Self> {
        if alpha.alpha.len() != spec.dimension {
            return Err(Error::param(
                "alpha",
                format!("need {} entries to match the cocycle dimension", spec.dimension),
            ));
        }
        let wedge = spec
            .generators
            .iter()
            .map(|a| (1..=spec.dimension).map(|k| exterior_power(a, k)).collect())
            .collect();
        Ok(Compounds {
            wedge,
            coeffs: alpha.wedge_coefficients(),
        })
    }

    fn identity(&self) -> WedgeProduct {
        let mats: Vec<DMatrix<f64>> = self.wedge[0].iter().map(|c| DMatrix::identity(c.nrows(), c.ncols())).collect();
        WedgeProduct {
            logs: vec![0.0; mats.len()],
            mats,
        }
    }

    fn push(&self, p: &WedgeProduct, s: usize) -> WedgeProduct {
        let mut out = p.clone();
        for k in 0..out.mats.len() {
            let m = &self.wedge[s][k] * &p.mats[k];
            let scale = m.amax();
            if scale > 0.0 && scale.is_finite() {
                out.mats[k] = m / scale;
                out.logs[k] = p.logs[k] + scale.ln();
            } else {
                out.mats[k] = m;
            }
        }
        out
    }

    /// `sum_i alpha_i log s_i` of the accumulated product.
    fn potential(&self, p: &WedgeProduct) -> Result<f64> {
        let mut total = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let norm = operator_norm(&p.mats[k]);
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::SingularProduct);
            }
            total += c * (p.logs[k] + norm.ln());
        }
        Ok(total)
    }
}

/// `log prod s_i(A^n(w))^{alpha_i}`.
pub fn singular_value_potential(spec: &CocycleSpec, alpha: &SingularWeight, w: &[usize]) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::WordTooShort { len: 0, needed: 1 });
    }
    if !spec.system.is_admissible(w) {
        return Err(Error::InadmissibleWord { position: 0 });
    }
    let c = Compounds::new(spec, alpha)?;
    let p = w.iter().fold(c.identity(), |p, &s| c.push(&p, s));
    c.potential(&p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivePressureEstimate {
    /// `(n, (1/n) log Z_n)`.
    pub per_depth: Vec<(usize, f64)>,
    pub fekete_upper: f64,
    pub value: f64,
    /// `min_{n <= n_max} (1/n) phi_n(w)` for every admissible `n_max`-word `w`, in lexicographic order.
    pub psi_min_depth: Vec<f64>,
}

impl SubadditivePressureEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value_n,fekete_upper\n");
        let mut best = f64::INFINITY;
        for &(n, v) in &self.per_depth {
            best = best.min(v);
            out.push_str(&csv_row([n.to_string(), fmt12(v), fmt12(best)]));
        }
        out
    }
}

struct Enum<'a> {
    sys: &'a SftSystem,
    c: &'a Compounds,
    n_max: usize,
}

struct Acc {
    sums: Vec<LogSumExp>,
    psi: Vec<f64>,
    err: Option<Error>,
}

impl Enum<'_> {
    fn descend(&self, acc: &mut Acc, last: usize, prod: &WedgeProduct, n: usize, psi: f64) {
        let phi = match self.c.potential(prod) {
            Ok(v) => v,
            Err(e) => {
                acc.err.get_or_insert(e);
                return;
            }
        };
        acc.sums[n].push(phi);
        let psi = psi.min(phi / n as f64);
        if n == self.n_max {
            acc.psi.push(psi);
            return;
        }
        for s in self.sys.successors(last) {
            let next = self.c.push(prod, s);
            self.descend(acc, s, &next, n + 1, psi);
        }
    }
}

/// `(1/n) log sum_{|w| = n} e^{phi_alpha(w)}` for `n <= n_max`, with the Fekete bound.
pub fn subadditive_pressure(spec: &CocycleSpec, alpha: &SingularWeight, n_max: usize) -> Result<SubadditivePressureEstimate> {
    subadditive_pressure_capped(spec, alpha, n_max, DEFAULT_WORD_CAP)
}

pub fn subadditive_pressure_capped(
    spec: &CocycleSpec,
    alpha: &SingularWeight,
    n_max: usize,
    cap: u64,
) -> Result<SubadditivePressureEstimate> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let sys = &spec.system;
    let count = sys.count_words(n_max);
    if count > cap as u128 {
        return Err(Error::CombinatorialOverflow { count, cap });
    }
    let c = Compounds::new(spec, alpha)?;
    let e = Enum { sys, c: &c, n_max };
    let firsts: Vec<usize> = (0..sys.alphabet_size()).collect();
    let parts = par::map_slice(&firsts, |&s| {
        let mut acc = Acc {
            sums: vec![LogSumExp::new(); n_max + 1],
            psi: Vec::new(),
            err: None,
        };
        let p = c.push(&c.identity(), s);
        e.descend(&mut acc, s, &p, 1, f64::INFINITY);
        acc
    });
    let mut sums = vec![LogSumExp::new(); n_max + 1];
    let mut psi_min_depth = Vec::with_capacity(count as usize);
    for part in parts {
        if let Some(err) = part.err {
            return Err(err);
        }
        for (a, b) in sums.iter_mut().zip(&part.sums) {
            a.merge(b);
        }
        psi_min_depth.extend(part.psi);
    }
    let per_depth: Vec<(usize, f64)> = (1..=n_max).map(|n| (n, sums[n].value() / n as f64)).collect();
    let fekete_upper = per_depth.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(SubadditivePressureEstimate {
        value: per_depth[n_max - 1].1,
        per_depth,
        fekete_upper,
        psi_min_depth,
    })
}

/// `min_{1 <= n <= N} (1/n) phi_n` along prefixes of the periodic extension of `w`.
pub fn psi_phi_approx(spec: &CocycleSpec, alpha: &SingularWeight, w: &[usize], n: usize) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::WordTooShort { len: 0, needed: 1 });
    }
    if n == 0 || n > MAX_PSI_DEPTH {
        return Err(Error::param("N", format!("must be in 1..={MAX_PSI_DEPTH}")));
    }
    let p = w.len();
    let cyclic_ok = (0..p).all(|i| w[i] < spec.system.alphabet_size() && spec.system.allows(w[i], w[(i + 1) % p]));
    if !cyclic_ok {
        return Err(Error::InadmissibleWord { position: 0 });
    }
    let c = Compounds::new(spec, alpha)?;
    let mut prod = c.identity();
    let mut best = f64::INFINITY;
    for i in 0..n {
        prod = c.push(&prod, w[i % p]);
        best = best.min(c.potential(&prod)? / (i + 1) as f64);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    pub measure: MarkovMeasure,
    pub samples: usize,
    pub stderr: Vec<f64>,
}

impl LyapunovSpectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,lambda_i,stderr\n");
        for (i, (l, s)) in self.exponents.iter().zip(&self.stderr).enumerate() {
            out.push_str(&csv_row([(i + 1).to_string(), fmt12(*l), fmt12(*s)]));
        }
        out
    }
}

/// Symbol sequence of a sampled orbit: first symbols of the visited states.
fn sample_orbit(mu: &MarkovMeasure, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let draw = |weights: &mut dyn Iterator<Item = (usize, f64)>, u: f64| -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, w) in weights {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    };
    let space = mu.space();
    let p = mu.stochastic();
    let mut state = draw(&mut mu.stationary().iter().copied().enumerate(), rng.random::<f64>());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(space.word(state)[0]);
        let succ = space.successors(state);
        state = draw(&mut succ.iter().map(|&j| (j, p[(state, j)])), rng.random::<f64>());
    }
    out
}

fn check_ergodic(mu: &MarkovMeasure, spec: &CocycleSpec) -> Result<()> {
    if mu.system() != &spec.system {
        return Err(Error::SystemMismatch);
    }
    if !mu.is_irreducible() {
        return Err(Error::NonIrreducibleMeasure);
    }
    Ok(())
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Exponents from repeated QR re-orthonormalization along sampled orbits.
pub fn lyapunov_qr(spec: &CocycleSpec, mu: &MarkovMeasure, n_steps: usize, n_samples: usize, seed: u64) -> Result<LyapunovSpectrum> {
    check_ergodic(mu, spec)?;
    if n_steps == 0 || n_samples == 0 {
        return Err(Error::param("n_steps", "steps and samples must be positive"));
    }
    let l = spec.dimension;
    let per_sample = par::map_indices(n_samples, |i| -> Result<Vec<f64>> {
        let mut rng = sample_rng(seed, i);
        let orbit = sample_orbit(mu, n_steps, &mut rng);
        let mut q = DMatrix::<f64>::identity(l, l);
        let mut sums = vec![0.0; l];
        for &s in &orbit {
            let qr = (&spec.generators[s] * &q).qr();
            let r = qr.r();
            for (k, sum) in sums.iter_mut().enumerate() {
                let d = r[(k, k)].abs();
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::SingularProduct);
                }
                *sum += d.ln();
            }
            q = qr.q();
        }
        Ok(sums.into_iter().map(|x| x / n_steps as f64).collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut stats: Vec<(f64, f64)> = (0..l)
        .map(|k| mean_and_stderr(&per_sample.iter().map(|v| v[k]).collect::<Vec<_>>()))
        .collect();
    stats.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovSpectrum {
        exponents: stats.iter().map(|s| s.0).collect(),
        stderr: stats.iter().map(|s| s.1).collect(),
        measure: mu.clone(),
        samples: n_samples,
    })
}

/// `(1/n) log |wedge^k A^n|` averaged over sampled orbits, with its standard error.
pub fn lyapunov_exterior(
    spec: &CocycleSpec,
    mu: &MarkovMeasure,
    k: usize,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_ergodic(mu, spec)?;
    if k == 0 || k > spec.dimension {
        return Err(Error::param("k", format!("must be in 1..={}", spec.dimension)));
    }
    if n_steps == 0 || n_samples == 0 {
        return Err(Error::param("n_steps", "steps and samples must be positive"));
    }
    let wedge: Vec<DMatrix<f64>> = spec.generators.iter().map(|a| exterior_power(a, k)).collect();
    let dim = wedge[0].nrows();
    let values = par::map_indices(n_samples, |i| -> Result<f64> {
        let mut rng = sample_rng(seed, i);
        let orbit = sample_orbit(mu, n_steps, &mut rng);
        let mut m = DMatrix::<f64>::identity(dim, dim);
        let mut log = 0.0;
        for &s in &orbit {
            m = &wedge[s] * m;
            let scale = m.amax();
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::SingularProduct);
            }
            m /= scale;
            log += scale.ln();
        }
        Ok((log + operator_norm(&m).ln()) / n_steps as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(mean_and_stderr(&values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfhRow {
    pub mu_id: usize,
    pub entropy: f64,
    /// `int psi^{(N)} dmu` over depth-`N` cylinders.
    pub f_star: f64,
    pub total: f64,
    /// `total - pressure_upper`; positive values violate the inequality.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfhReport {
    pub pressure_upper: f64,
    pub depth: usize,
    pub rows: Vec<CfhRow>,
    pub best_lower: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CfhReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu_id,entropy,f_star,total,excess\n");
        for r in &self.rows {
            out.push_str(&csv_row([
                r.mu_id.to_string(),
                fmt12(r.entropy),
                fmt12(r.f_star),
                fmt12(r.total),
                fmt12(r.excess),
            ]));
        }
        out
    }
}

pub const CFH_TOL: f64 = 1e-6;

/// Checks `h(mu) + F*(Phi, mu) <= P(Phi)` on a grid of Markov measures.
///
/// `F*` is estimated by `int psi^{(N)} dmu` with `N = n_max`, reusing the
/// per-word minima of the pressure enumeration.
pub fn cfh_variational_check(
    spec: &CocycleSpec,
    alpha: &SingularWeight,
    measure_grid: &[MarkovMeasure],
    n_max: usize,
) -> Result<CfhReport> {
    if measure_grid.is_empty() {
        return Err(Error::param("measure_grid", "must be nonempty"));
    }
    let est = subadditive_pressure(spec, alpha, n_max)?;
    let pressure_upper = est.fekete_upper;
    let rows = par::map_indices(measure_grid.len(), |i| -> Result<CfhRow> {
        let mu = &measure_grid[i];
        check_ergodic(mu, spec)?;
        let marginal = mu.marginal(n_max)?;
        let f_star: f64 = marginal.weights().iter().zip(&est.psi_min_depth).map(|(w, p)| w * p).sum();
        let entropy = mu.ks_entropy();
        let total = entropy + f_star;
        Ok(CfhRow {
            mu_id: i,
            entropy,
            f_star,
            total,
            excess: total - pressure_upper,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let best_lower = rows.iter().map(|r| r.total).fold(f64::NEG_INFINITY, f64::max);
    Ok(CfhReport {
        pressure_upper,
        depth: n_max,
        gap: pressure_upper - best_lower,
        pass: rows.iter().all(|r| r.excess <= CFH_TOL),
        best_lower,
        tolerance: CFH_TOL,
        rows,
    })
}

/// `(1/p) sum alpha_i log |lambda_i(A^p(w))|` on a periodic orbit, moduli in decreasing order.
pub fn periodic_lyapunov_average(spec: &CocycleSpec, alpha: &SingularWeight, cycle: &[usize]) -> Result<f64> {
    let m = spec.product(cycle);
    let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    if moduli.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::SingularProduct);
    }
    Ok(alpha.alpha.iter().zip(&moduli).map(|(a, x)| a * x.ln()).sum::<f64>() / cycle.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovOptimum {
    pub max_average: f64,
    pub witness_orbit: Word,
    pub max_period: usize,
}

/// Best periodic Lyapunov average over primitive cycles of period at most `max_period`.
pub fn lyapunov_oracle(spec: &CocycleSpec, alpha: &SingularWeight, max_period: usize) -> Result<LyapunovOptimum> {
    if max_period == 0 {
        return Err(Error::param("max_period", "must be at least 1"));
    }
    let sys = &spec.system;
    let count: u128 = (1..=max_period).map(|p| sys.count_words(p)).sum();
    if count > DEFAULT_WORD_CAP as u128 {
        return Err(Error::CombinatorialOverflow {
            count,
            cap: DEFAULT_WORD_CAP,
        });
    }
    let mut cycles = Vec::new();
    for p in 1..=max_period {
        let mut buf = Vec::with_capacity(p);
        sys.visit_words(&mut buf, p, &mut |w| {
            let closes = sys.allows(w[p - 1], w[0]);
            let canonical = (1..p).all(|r| w[r..].iter().chain(&w[..r]).cmp(w.iter()) == std::cmp::Ordering::Greater);
            if closes && canonical {
                cycles.push(w.to_vec());
            }
        });
    }
    let values = par::map_slice(&cycles, |c| periodic_lyapunov_average(spec, alpha, c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 + 1e-12 { (i, v) } else { acc });
    Ok(LyapunovOptimum {
        max_average: value,
        witness_orbit: Word::new(sys, cycles[best].clone())?,
        max_period,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSweepRow {
    pub t: f64,
    /// `(1/t) min_n (1/n) log Z_n(t alpha)`.
    pub pressure_over_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSweep {
    pub rows: Vec<LyapunovSweepRow>,
    pub oracle: LyapunovOptimum,
    /// Last `pressure_over_t` minus the oracle average; nonnegative up to round-off.
    pub limit_gap: f64,
}

impl LyapunovSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,pressure_over_t,oracle\n");
        for r in &self.rows {
            out.push_str(&csv_row([fmt12(r.t), fmt12(r.pressure_over_t), fmt12(self.oracle.max_average)]));
        }
        out
    }
}

/// Zero-temperature sweep of `t -> P(t alpha) / t` against periodic Lyapunov optimization.
pub fn lyapunov_temperature_sweep(
    spec: &CocycleSpec,
    alpha: &SingularWeight,
    t_grid: &[f64],
    n_max: usize,
    max_period: usize,
) -> Result<LyapunovSweep> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t.is_finite() && t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("t_grid", "must be positive and increasing"));
    }
    let rows = t_grid
        .iter()
        .map(|&t| {
            let est = subadditive_pressure(spec, &alpha.scale(t)?, n_max)?;
            Ok(LyapunovSweepRow {
                t,
                pressure_over_t: est.fekete_upper / t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle = lyapunov_oracle(spec, alpha, max_period)?;
    let limit_gap = rows.last().expect("nonempty").pressure_over_t - oracle.max_average;
    Ok(LyapunovSweep { rows, oracle, limit_gap })
}

/// The two-generator positive example `[[2,1],[1,1]]`, `[[1,1],[1,2]]` over the full 2-shift.
pub fn positive_pair() -> CocycleSpec {
    let sys = Arc::new(SftSystem::full_shift(2));
    CocycleSpec::new(
        &sys,
        vec![
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]),
        ],
    )
    .expect("valid generators")
}
