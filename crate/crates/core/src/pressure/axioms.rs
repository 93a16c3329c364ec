use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::matrix_pressure;
use super::separated::separated_set_pressure;
use super::transfer::{build_geometries, nested_brackets, BranchPotential, TransferGeometry, TransferOptions, WarmStart};
use crate::error::{Error, Result};
use crate::measures::LocallyConstantPotential;
use crate::par;
use crate::report::{csv_row, fmt12};
use crate::symbolic::{CylinderSpace, IntervalMapSystem};

/// A pressure value with a bracket that contains the true pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Evaluation {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A pressure engine over a finite-dimensional family of potentials.
///
/// Potentials are coordinate vectors; the engine knows how to translate them
/// by constants, compare them pointwise and measure their sup distance.
pub trait PressureEngine: Sync {
    fn name(&self) -> String;
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation>;
    /// Coordinates of `x + c`.
    fn translate(&self, x: &[f64], c: f64) -> Vec<f64>;
    fn sup_distance(&self, x: &[f64], y: &[f64]) -> f64;
    fn random_potential(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// A random potential that is pointwise at least `x`.
    fn random_dominating(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// Whether the engine is exact up to solver tolerance.
    fn exact(&self) -> bool;
}

fn random_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn sup_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Exact Perron-root pressure on depth-`k` potentials.
#[derive(Debug, Clone)]
pub struct MatrixEngine {
    pub space: Arc<CylinderSpace>,
}

impl PressureEngine for MatrixEngine {
    fn name(&self) -> String {
        format!("matrix[{}]", self.space.base().label())
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let phi = LocallyConstantPotential::new(&self.space, x.to_vec())?;
        let pd = matrix_pressure(&phi)?;
        Ok(Evaluation {
            value: pd.log_lambda,
            lower: pd.bracket.0.min(pd.log_lambda),
            upper: pd.bracket.1.max(pd.log_lambda),
        })
    }

    fn translate(&self, x: &[f64], c: f64) -> Vec<f64> {
        x.iter().map(|v| v + c).collect()
    }

    fn sup_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        sup_diff(x, y)
    }

    fn random_potential(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        random_values(self.space.len(), rng)
    }

    fn random_dominating(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        x.iter().map(|v| v + rng.random_range(0.0..1.0)).collect()
    }

    fn exact(&self) -> bool {
        true
    }
}

/// Separated-set sums at a fixed word length.
#[derive(Debug, Clone)]
pub struct SeparatedEngine {
    pub space: Arc<CylinderSpace>,
    pub n_max: usize,
}

impl PressureEngine for SeparatedEngine {
    fn name(&self) -> String {
        format!("separated[{}, n={}]", self.space.base().label(), self.n_max)
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let phi = LocallyConstantPotential::new(&self.space, x.to_vec())?;
        let est = separated_set_pressure(&phi, self.n_max)?;
        Ok(Evaluation {
            value: est.value,
            lower: est.bracket.0,
            upper: est.bracket.1,
        })
    }

    fn translate(&self, x: &[f64], c: f64) -> Vec<f64> {
        x.iter().map(|v| v + c).collect()
    }

    fn sup_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        sup_diff(x, y)
    }

    fn random_potential(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        random_values(self.space.len(), rng)
    }

    fn random_dominating(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        x.iter().map(|v| v + rng.random_range(0.0..1.0)).collect()
    }

    fn exact(&self) -> bool {
        false
    }
}

/// Transfer-operator brackets on potentials `-t log|f'| + offset_branch`.
///
/// Coordinates are `[t, offset_0, ..., offset_{b-1}]`.
#[derive(Debug, Clone)]
pub struct TransferEngine {
    geometries: Vec<TransferGeometry>,
    log_deriv_range: Vec<(f64, f64)>,
    opts: TransferOptions,
    label: String,
}

impl TransferEngine {
    pub fn new(map: &IntervalMapSystem, depth: usize, opts: TransferOptions) -> Result<Self> {
        let geometries = build_geometries(map, depth, &opts)?;
        let log_deriv_range = map
            .branches()
            .iter()
            .map(|br| {
                let a = br.map.derivative(br.domain.0).abs().ln();
                let b = br.map.derivative(br.domain.1).abs().ln();
                (a.min(b), a.max(b))
            })
            .collect();
        Ok(TransferEngine {
            geometries,
            log_deriv_range,
            opts,
            label: format!("transfer[{}, n={depth}]", map.label()),
        })
    }

    fn split(x: &[f64]) -> BranchPotential {
        BranchPotential {
            t: x[0],
            offsets: x[1..].to_vec(),
        }
    }
}

impl PressureEngine for TransferEngine {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.log_deriv_range.len() + 1 {
            return Err(Error::param("potential", "expected [t, offsets...]"));
        }
        let mut warm = vec![WarmStart::default(); self.geometries.len()];
        let est = nested_brackets(&self.geometries, &Self::split(x), &mut warm, &self.opts)?;
        Ok(Evaluation {
            value: est.value,
            lower: est.bracket.0,
            upper: est.bracket.1,
        })
    }

    fn translate(&self, x: &[f64], c: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        y[1..].iter_mut().for_each(|o| *o += c);
        y
    }

    fn sup_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let dt = x[0] - y[0];
        self.log_deriv_range
            .iter()
            .enumerate()
            .map(|(s, &(lo, hi))| {
                let d_o = x[s + 1] - y[s + 1];
                (d_o - dt * lo).abs().max((d_o - dt * hi).abs())
            })
            .fold(0.0, f64::max)
    }

    fn random_potential(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = vec![rng.random_range(-0.5..2.0)];
        x.extend((0..self.log_deriv_range.len()).map(|_| rng.random_range(-1.0..1.0)));
        x
    }

    fn random_dominating(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let dt: f64 = rng.random_range(-0.2..0.2);
        let mut y = vec![x[0] + dt];
        for (s, &(lo, hi)) in self.log_deriv_range.iter().enumerate() {
            // -(t+dt) l + o' >= -t l + o  iff  o' - o >= dt l on the whole range
            let need = (dt * lo).max(dt * hi);
            y.push(x[s + 1] + need + rng.random_range(0.0..0.5));
        }
        y
    }

    fn exact(&self) -> bool {
        false
    }
}

/// Worst observed violation of one axiom.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomStat {
    /// Largest violation computed from point values.
    pub worst_violation: f64,
    /// Largest violation after subtracting the allowed bracket widths.
    pub worst_excess: f64,
}

impl AxiomStat {
    fn record(&mut self, violation: f64, allowance: f64) {
        self.worst_violation = self.worst_violation.max(violation);
        self.worst_excess = self.worst_excess.max(violation - allowance);
    }

    fn merge(&mut self, other: &AxiomStat) {
        self.worst_violation = self.worst_violation.max(other.worst_violation);
        self.worst_excess = self.worst_excess.max(other.worst_excess);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub engine: String,
    pub samples: usize,
    pub seed: u64,
    pub monotonicity: AxiomStat,
    pub translation: AxiomStat,
    pub convexity: AxiomStat,
    pub lipschitz: AxiomStat,
    pub tolerance: f64,
    pub pass: bool,
}

impl AxiomReport {
    pub fn rows(&self) -> [(&'static str, AxiomStat); 4] {
        [
            ("monotonicity", self.monotonicity),
            ("translation", self.translation),
            ("convexity", self.convexity),
            ("lipschitz", self.lipschitz),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axiom,worst_violation,worst_excess,pass\n");
        for (name, stat) in self.rows() {
            let ok = stat.worst_excess <= self.tolerance;
            out.push_str(&csv_row([
                name.to_string(),
                fmt12(stat.worst_violation),
                fmt12(stat.worst_excess),
                ok.to_string(),
            ]));
        }
        out
    }
}

#[derive(Default)]
struct SampleStats {
    monotonicity: AxiomStat,
    translation: AxiomStat,
    convexity: AxiomStat,
    lipschitz: AxiomStat,
}

const FIXED_SHIFTS: [f64; 3] = [-2.0, 0.5, 3.0];

fn one_sample(engine: &dyn PressureEngine, seed: u64, i: usize, exact: bool) -> Result<SampleStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let mut st = SampleStats::default();
    let allow = |es: &[Evaluation]| -> f64 {
        if exact {
            0.0
        } else {
            es.iter().map(Evaluation::width).sum()
        }
    };

    let phi = engine.random_potential(&mut rng);
    let psi = engine.random_dominating(&phi, &mut rng);
    let (ep, eq) = (engine.evaluate(&phi)?, engine.evaluate(&psi)?);
    st.monotonicity.record(ep.value - eq.value, allow(&[ep, eq]));

    let c = if i < FIXED_SHIFTS.len() {
        FIXED_SHIFTS[i]
    } else {
        rng.random_range(-3.0..3.0)
    };
    let ec = engine.evaluate(&engine.translate(&phi, c))?;
    st.translation.record((ec.value - ep.value - c).abs(), allow(&[ep, ec]));

    let chi = engine.random_potential(&mut rng);
    let ex = engine.evaluate(&chi)?;
    let lam: f64 = rng.random_range(0.0..1.0);
    let mix: Vec<f64> = phi.iter().zip(&chi).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
    let em = engine.evaluate(&mix)?;
    st.convexity.record(
        em.value - (lam * ep.value + (1.0 - lam) * ex.value),
        allow(&[em]) + lam * allow(&[ep]) + (1.0 - lam) * allow(&[ex]),
    );

    let dist = engine.sup_distance(&phi, &chi);
    st.lipschitz.record((ep.value - ex.value).abs() - dist, allow(&[ep, ex]));
    Ok(st)
}

/// Randomized check of monotonicity, translation invariance, convexity and
/// the sup-norm Lipschitz bound.
///
/// Exact engines pass when every violation is at most `1e-8`; bracketing
/// engines may violate by the sum of the bracket widths involved.
pub fn axiom_suite(engine: &dyn PressureEngine, samples: usize, seed: u64) -> Result<AxiomReport> {
    let exact = engine.exact();
    let results = par::map_indices(samples, |i| one_sample(engine, seed, i, exact));
    let mut total = SampleStats::default();
    for r in results {
        let r = r?;
        total.monotonicity.merge(&r.monotonicity);
        total.translation.merge(&r.translation);
        total.convexity.merge(&r.convexity);
        total.lipschitz.merge(&r.lipschitz);
    }
    let tolerance = if exact { 1e-8 } else { 1e-9 };
    let pass = [total.monotonicity, total.translation, total.convexity, total.lipschitz]
        .iter()
        .all(|s| s.worst_excess <= tolerance);
    Ok(AxiomReport {
        engine: engine.name(),
        samples,
        seed,
        monotonicity: total.monotonicity,
        translation: total.translation,
        convexity: total.convexity,
        lipschitz: total.lipschitz,
        tolerance,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoboundaryReport {
    pub pressure: f64,
    pub shifted_pressure: f64,
    pub difference: f64,
    pub pass: bool,
}

/// Compares `P(phi)` with `P(phi + psi o sigma - psi)`.
pub fn coboundary_invariance_check(
    phi: &LocallyConstantPotential,
    psi: &LocallyConstantPotential,
) -> Result<CoboundaryReport> {
    let shifted = phi.add(&psi.coboundary()?)?;
    let p = matrix_pressure(phi)?.log_lambda;
    let q = matrix_pressure(&shifted)?.log_lambda;
    let difference = q - p;
    Ok(CoboundaryReport {
        pressure: p,
        shifted_pressure: q,
        difference,
        pass: difference.abs() <= 1e-9,
    })
}
