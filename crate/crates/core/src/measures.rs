//! Locally constant potentials, Markov measures and cylinder marginals.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::pressure::perron;
use crate::report::{csv_row, fmt12};
use crate::symbolic::{CylinderSpace, SftSystem, DEFAULT_WORD_CAP};

const ZERO: f64 = 1e-300;

/// A potential constant on depth-`k` cylinders.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantPotential {
    space: Arc<CylinderSpace>,
    values: Vec<f64>,
}

impl LocallyConstantPotential {
    pub fn new(space: &Arc<CylinderSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::param(
                "values",
                format!("expected {} entries, got {}", space.len(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "all values must be finite"));
        }
        Ok(LocallyConstantPotential {
            space: Arc::clone(space),
            values,
        })
    }

    /// Convenience constructor building the cylinder space on the fly.
    pub fn on(sys: &Arc<SftSystem>, depth: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(&CylinderSpace::new(sys, depth)?, values)
    }

    pub fn from_fn(space: &Arc<CylinderSpace>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let values = space.table().words().iter().map(|w| f(w)).collect();
        Self::new(space, values)
    }

    pub fn constant(space: &Arc<CylinderSpace>, c: f64) -> Result<Self> {
        Self::new(space, vec![c; space.len()])
    }

    /// Same cylinders, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(&self.space, values)
    }

    pub fn space(&self) -> &Arc<CylinderSpace> {
        &self.space
    }

    pub fn system(&self) -> &Arc<SftSystem> {
        self.space.base()
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Value on the cylinder of a `k`-word.
    pub fn value_of(&self, word: &[usize]) -> Option<f64> {
        self.space.index_of(word).map(|i| self.values[i])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The same function viewed as a depth-`depth` potential.
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.depth() {
            return Err(Error::DepthMismatch {
                left: self.depth(),
                right: depth,
            });
        }
        if depth == self.depth() {
            return Ok(self.clone());
        }
        let k = self.depth();
        let space = CylinderSpace::new(self.system(), depth)?;
        Self::from_fn(&space, |w| self.value_of(&w[..k]).expect("prefix admissible"))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LocallyConstantPotential {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// Pointwise `a * self + b * other`, lifting to the larger depth.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if !self.space.same_base(&other.space) {
            return Err(Error::SystemMismatch);
        }
        let depth = self.depth().max(other.depth());
        let (x, y) = (self.lift(depth)?, other.lift(depth)?);
        let values = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        x.with_values(values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    /// The coboundary `psi o sigma - psi` as a depth-`(k+1)` potential.
    pub fn coboundary(&self) -> Result<Self> {
        let k = self.depth();
        let space = CylinderSpace::new(self.system(), k + 1)?;
        Self::from_fn(&space, |w| {
            self.value_of(&w[1..]).expect("suffix admissible")
                - self.value_of(&w[..k]).expect("prefix admissible")
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,value\n");
        for (w, v) in self.space.table().words().iter().zip(&self.values) {
            out.push_str(&csv_row([w.to_string(), fmt12(*v)]));
        }
        out
    }
}

/// `S_n phi` on the cylinder `[w]`; `n` defaults to `|w| - k + 1`.
pub fn birkhoff_sum(phi: &LocallyConstantPotential, w: &[usize], n: Option<usize>) -> Result<f64> {
    let k = phi.depth();
    let n = match n {
        Some(n) => n,
        None if w.len() >= k => w.len() + 1 - k,
        None => return Err(Error::WordTooShort { len: w.len(), needed: k }),
    };
    if w.len() < n + k - 1 {
        return Err(Error::WordTooShort {
            len: w.len(),
            needed: n + k - 1,
        });
    }
    if let Some(p) = w.windows(2).position(|p| !phi.system().allows(p[0], p[1])) {
        return Err(Error::InadmissibleWord { position: p + 1 });
    }
    let mut total = 0.0;
    for i in 0..n {
        total += phi
            .value_of(&w[i..i + k])
            .ok_or(Error::InadmissibleWord { position: i })?;
    }
    Ok(total)
}

/// Shift-invariant Markov measure of order `r`, with states the admissible `r`-words.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    space: Arc<CylinderSpace>,
    stochastic: DMatrix<f64>,
    stationary: Vec<f64>,
}

impl MarkovMeasure {
    pub fn new(space: &Arc<CylinderSpace>, stochastic: DMatrix<f64>, stationary: Vec<f64>) -> Result<Self> {
        let n = space.len();
        if stochastic.nrows() != n || stochastic.ncols() != n || stationary.len() != n {
            return Err(Error::InvalidMeasure(format!("dimensions must be {n}")));
        }
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let p = stochastic[(i, j)];
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidMeasure(format!("entry ({i},{j}) = {p}")));
                }
                if p > 0.0 && !space.allows(i, j) {
                    return Err(Error::InvalidMeasure(format!(
                        "positive weight on forbidden transition ({i},{j})"
                    )));
                }
                row += p;
            }
            if (row - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMeasure(format!("row {i} sums to {row}")));
            }
        }
        if stationary.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidMeasure("stationary entries must be nonnegative".into()));
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("stationary sums to {total}")));
        }
        let pi = DVector::from_column_slice(&stationary);
        let moved = stochastic.transpose() * &pi;
        if (moved - pi).amax() > 1e-10 {
            return Err(Error::InvalidMeasure("stationary vector is not invariant".into()));
        }
        Ok(MarkovMeasure {
            space: Arc::clone(space),
            stochastic,
            stationary,
        })
    }

    /// Solves for the stationary vector of an irreducible chain.
    pub fn from_stochastic(space: &Arc<CylinderSpace>, stochastic: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if stochastic.nrows() != n || stochastic.ncols() != n {
            return Err(Error::InvalidMeasure(format!("dimensions must be {n}")));
        }
        let stationary = stationary_of(&stochastic)?;
        Self::new(space, stochastic, stationary)
    }

    /// Product measure with the given symbol probabilities on a full shift.
    pub fn bernoulli(sys: &Arc<SftSystem>, probs: &[f64]) -> Result<Self> {
        let m = sys.alphabet_size();
        if probs.len() != m {
            return Err(Error::InvalidMeasure(format!("need {m} probabilities")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidMeasure("probabilities must form a distribution".into()));
        }
        let space = CylinderSpace::new(sys, 1)?;
        let p = DMatrix::from_fn(m, m, |_, j| probs[j]);
        Self::new(&space, p, probs.to_vec())
    }

    /// The measure of maximal entropy of an irreducible SFT.
    pub fn parry(sys: &Arc<SftSystem>) -> Result<Self> {
        let m = sys.alphabet_size();
        let a = DMatrix::from_fn(m, m, |i, j| f64::from(u8::from(sys.allows(i, j))));
        let pd = perron(&a)?;
        let lambda = pd.lambda();
        let r = &pd.right_vec;
        let p = DMatrix::from_fn(m, m, |i, j| a[(i, j)] * r[j] / (lambda * r[i]));
        let p = normalize_rows(p);
        let pi: Vec<f64> = pd.left_vec.iter().zip(r).map(|(l, r)| l * r).collect();
        let s: f64 = pi.iter().sum();
        let space = CylinderSpace::new(sys, 1)?;
        Self::new(&space, p, pi.into_iter().map(|x| x / s).collect())
    }

    /// Uniform measure on the periodic orbit of a cyclically admissible word.
    ///
    /// The order is the smallest `r` for which the cyclic `r`-blocks of the
    /// orbit are distinct, so the chain is deterministic on the orbit.
    pub fn periodic_orbit(sys: &Arc<SftSystem>, cycle: &[usize]) -> Result<Self> {
        let p = cycle.len();
        if p == 0 {
            return Err(Error::param("cycle", "must be nonempty"));
        }
        let cyclic_ok = (0..p).all(|i| {
            cycle[i] < sys.alphabet_size() && sys.allows(cycle[i], cycle[(i + 1) % p])
        });
        if !cyclic_ok {
            return Err(Error::InadmissibleWord { position: 0 });
        }
        let block = |i: usize, r: usize| -> Vec<usize> { (0..r).map(|t| cycle[(i + t) % p]).collect() };
        let distinct = |r: usize| {
            let mut blocks: Vec<Vec<usize>> = (0..p).map(|i| block(i, r)).collect();
            blocks.sort();
            blocks.dedup();
            blocks.len() == p
        };
        let r = (1..=p)
            .find(|&r| distinct(r))
            .ok_or_else(|| Error::param("cycle", "must be a primitive period"))?;
        let space = CylinderSpace::new(sys, r)?;
        let n = space.len();
        let mut pmat = DMatrix::zeros(n, n);
        let mut pi = vec![0.0; n];
        let mut on_orbit = vec![false; n];
        for i in 0..p {
            let a = space.index_of(&block(i, r)).expect("cyclic block admissible");
            let b = space.index_of(&block(i + 1, r)).expect("cyclic block admissible");
            pmat[(a, b)] = 1.0;
            pi[a] += 1.0 / p as f64;
            on_orbit[a] = true;
        }
        for i in (0..n).filter(|&i| !on_orbit[i]) {
            let succ = space.successors(i);
            for &j in succ {
                pmat[(i, j)] = 1.0 / succ.len() as f64;
            }
        }
        Self::new(&space, pmat, pi)
    }

    /// The order-`(d-1)` measure determined by a shift-consistent depth-`d` marginal.
    pub fn from_marginal(marginal: &CylinderMarginal) -> Result<Self> {
        let d = marginal.depth();
        if d < 2 {
            return Err(Error::param("marginal", "depth must be at least 2"));
        }
        let coarse = marginal.coarsen()?;
        let space = Arc::clone(&coarse.space);
        let fine = &marginal.space;
        let n = space.len();
        let mut p = DMatrix::zeros(n, n);
        for (wi, w) in fine.table().words().iter().enumerate() {
            let u = space.index_of(&w[..d - 1]).expect("prefix admissible");
            let v = space.index_of(&w[1..]).expect("suffix admissible");
            let mass = coarse.weights[u];
            if mass > ZERO {
                p[(u, v)] = marginal.weights[wi] / mass;
            }
        }
        for u in 0..n {
            if coarse.weights[u] <= ZERO {
                let succ = space.successors(u);
                for &v in succ {
                    p[(u, v)] = 1.0 / succ.len() as f64;
                }
            }
        }
        let p = normalize_rows(p);
        let mut pi = coarse.weights.clone();
        let first: Vec<f64> = {
            let moved = p.transpose() * DVector::from_column_slice(&pi);
            moved.iter().copied().collect()
        };
        if first.iter().zip(&pi).any(|(a, b)| (a - b).abs() > 1e-10) {
            return Err(Error::InvalidMeasure("marginal is not shift-invariant".into()));
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= s);
        Self::new(&space, p, pi)
    }

    /// Random full-support chain on the admissible transitions of `space`.
    pub fn random(space: &Arc<CylinderSpace>, rng: &mut impl Rng) -> Result<Self> {
        let n = space.len();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for &j in space.successors(i) {
                p[(i, j)] = rng.random_range(0.05..1.0);
            }
        }
        Self::from_stochastic(space, normalize_rows(p))
    }

    pub fn space(&self) -> &Arc<CylinderSpace> {
        &self.space
    }

    pub fn system(&self) -> &Arc<SftSystem> {
        self.space.base()
    }

    /// Markov order: the length of the words used as states.
    pub fn order(&self) -> usize {
        self.space.depth()
    }

    pub fn stochastic(&self) -> &DMatrix<f64> {
        &self.stochastic
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Strong connectivity of the positive-transition graph.
    pub fn is_irreducible(&self) -> bool {
        perron::is_irreducible(&self.stochastic)
    }

    /// `mu([w])` for an admissible word of length at least the order.
    pub fn cylinder_weight(&self, w: &[usize]) -> Result<f64> {
        let r = self.order();
        if w.len() < r {
            return Err(Error::WordTooShort { len: w.len(), needed: r });
        }
        let idx = |i: usize| {
            self.space
                .index_of(&w[i..i + r])
                .ok_or(Error::InadmissibleWord { position: i })
        };
        let mut state = idx(0)?;
        let mut weight = self.stationary[state];
        for i in 1..=w.len() - r {
            let next = idx(i)?;
            if !self.space.allows(state, next) {
                return Err(Error::InadmissibleWord { position: i + r - 1 });
            }
            weight *= self.stochastic[(state, next)];
            state = next;
        }
        Ok(weight)
    }

    pub fn marginal(&self, depth: usize) -> Result<CylinderMarginal> {
        self.marginal_capped(depth, DEFAULT_WORD_CAP)
    }

    pub fn marginal_capped(&self, depth: usize, cap: u64) -> Result<CylinderMarginal> {
        if depth == 0 {
            return Err(Error::param("depth", "must be at least 1"));
        }
        let r = self.order();
        if depth < r {
            let mut m = self.marginal_capped(r, cap)?;
            while m.depth() > depth {
                m = m.coarsen()?;
            }
            return Ok(m);
        }
        let space = CylinderSpace::with_cap(self.system(), depth, cap)?;
        let mut weights = self.stationary.clone();
        let mut states: Vec<usize> = (0..self.space.len()).collect();
        for _ in r..depth {
            let mut w2 = Vec::with_capacity(weights.len() * 2);
            let mut s2 = Vec::with_capacity(weights.len() * 2);
            for (&x, &i) in weights.iter().zip(&states) {
                for &j in self.space.successors(i) {
                    w2.push(x * self.stochastic[(i, j)]);
                    s2.push(j);
                }
            }
            weights = w2;
            states = s2;
        }
        debug_assert_eq!(weights.len(), space.len());
        Ok(CylinderMarginal { space, weights })
    }

    /// `sum_w mu([w]) phi(w)` over cylinders of depth `max(k, order)`.
    pub fn integrate(&self, phi: &LocallyConstantPotential) -> Result<f64> {
        if !self.space.same_base(phi.space()) {
            return Err(Error::SystemMismatch);
        }
        let depth = phi.depth().max(self.order());
        let m = self.marginal(depth)?;
        let phi = phi.lift(depth)?;
        Ok(m.weights.iter().zip(phi.values()).map(|(w, v)| w * v).sum())
    }

    /// Entropy rate `-sum_i pi_i sum_j P_ij log P_ij`.
    pub fn ks_entropy(&self) -> f64 {
        let n = self.space.len();
        let mut h = 0.0;
        for i in 0..n {
            if self.stationary[i] <= ZERO {
                continue;
            }
            let mut row = 0.0;
            for &j in self.space.successors(i) {
                let p = self.stochastic[(i, j)];
                if p > ZERO {
                    row -= p * p.ln();
                }
            }
            h += self.stationary[i] * row;
        }
        h.max(0.0)
    }
}

fn normalize_rows(mut p: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in p.row_iter_mut() {
        let s: f64 = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    p
}

fn stationary_of(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if !perron::is_irreducible(p) {
        return Err(Error::NonIrreducibleMeasure);
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or(Error::NonIrreducibleMeasure)?;
    let mut pi: Vec<f64> = pi.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    Ok(pi)
}

pub fn integrate(mu: &MarkovMeasure, phi: &LocallyConstantPotential) -> Result<f64> {
    mu.integrate(phi)
}

pub fn ks_entropy(mu: &MarkovMeasure) -> f64 {
    mu.ks_entropy()
}

pub fn marginal(mu: &MarkovMeasure, depth: usize) -> Result<CylinderMarginal> {
    mu.marginal(depth)
}

/// Weights of the depth-`k` cylinders, in lexicographic word order.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMarginal {
    space: Arc<CylinderSpace>,
    weights: Vec<f64>,
}

impl CylinderMarginal {
    pub fn new(space: &Arc<CylinderSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::InvalidMeasure(format!("expected {} weights", space.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(CylinderMarginal {
            space: Arc::clone(space),
            weights,
        })
    }

    pub fn space(&self) -> &Arc<CylinderSpace> {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, w: &[usize]) -> Option<f64> {
        self.space.index_of(w).map(|i| self.weights[i])
    }

    /// Sums over the last symbol to get the depth-`(k-1)` marginal.
    pub fn coarsen(&self) -> Result<CylinderMarginal> {
        let k = self.depth();
        if k < 2 {
            return Err(Error::param("depth", "cannot coarsen below 1"));
        }
        let space = CylinderSpace::new(self.space.base(), k - 1)?;
        let mut weights = vec![0.0; space.len()];
        for (w, x) in self.space.table().words().iter().zip(&self.weights) {
            weights[space.index_of(&w[..k - 1]).expect("prefix admissible")] += x;
        }
        Ok(CylinderMarginal { space, weights })
    }

    /// `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &CylinderMarginal, t: f64) -> Result<CylinderMarginal> {
        if self.depth() != other.depth() {
            return Err(Error::DepthMismatch {
                left: self.depth(),
                right: other.depth(),
            });
        }
        if !self.space.same_base(&other.space) {
            return Err(Error::SystemMismatch);
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        Ok(CylinderMarginal {
            space: Arc::clone(&self.space),
            weights,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,weight\n");
        for (w, x) in self.space.table().words().iter().zip(&self.weights) {
            out.push_str(&csv_row([w.to_string(), fmt12(*x)]));
        }
        out
    }
}

/// Total variation `sum_w |a_w - b_w|` between equal-depth marginals.
pub fn marginal_distance(a: &CylinderMarginal, b: &CylinderMarginal) -> Result<f64> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    if !a.space.same_base(&b.space) {
        return Err(Error::SystemMismatch);
    }
    Ok(a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).abs()).sum())
}
