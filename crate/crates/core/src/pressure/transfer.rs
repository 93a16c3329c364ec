use super::PressureEstimate;
use crate::error::{Error, Result};
use crate::par;
use crate::symbolic::{IntervalMapSystem, Trend};

pub const MAX_TRANSFER_DEPTH: usize = 24;

/// Weight `e^{offset_s} |f_s'|^{-t}` on branch `s`, i.e. the potential
/// `-t log|f'| + offset_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPotential {
    pub t: f64,
    pub offsets: Vec<f64>,
}

impl BranchPotential {
    pub fn geometric(t: f64, branches: usize) -> Self {
        BranchPotential {
            t,
            offsets: vec![0.0; branches],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOptions {
    /// Number of refinement levels along the neutral fixed point.
    pub chain_length: usize,
    pub max_sweeps: usize,
    /// Relative Collatz-Wielandt width at which a sweep sequence stops.
    pub tol: f64,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            chain_length: 1024,
            max_sweeps: 20_000,
            tol: 1e-6,
        }
    }
}

/// Cell partition of `[0, 1]` compatible with the inverse branches, plus the
/// derivative data needed to bound the transfer operator on each cell.
///
/// Cell `c` under branch `s` lands inside cell `target[c*b + s]`, and
/// `log_deriv[c*b + s]` holds `log|f_s'|` at the two ends of `g_s(c)`.
#[derive(Debug, Clone)]
pub struct TransferGeometry {
    branches: usize,
    depth: usize,
    target: Vec<u32>,
    log_deriv: Vec<[f64; 2]>,
    /// Cell of the depth-`(n-1)` geometry containing each cell; empty at depth 1.
    parent: Vec<u32>,
}

/// Eigenvector guesses carried between calls with nearby potentials.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    upper: Vec<f64>,
    lower: Vec<f64>,
}

fn check_map(map: &IntervalMapSystem) -> Result<()> {
    for (i, br) in map.branches().iter().enumerate() {
        if !br.is_full() {
            return Err(Error::NonFullBranch { branch: i });
        }
        let (a, b) = br.domain;
        let d: Vec<f64> = (0..=64)
            .map(|k| br.map.derivative(a + (b - a) * k as f64 / 64.0).abs())
            .collect();
        let ok = match br.map.abs_derivative_trend() {
            Trend::Increasing => d.windows(2).all(|w| w[1] >= w[0]),
            Trend::Decreasing => d.windows(2).all(|w| w[1] <= w[0]),
            Trend::Constant => d.windows(2).all(|w| w[1] == w[0]),
        };
        if !ok {
            return Err(Error::NonMonotoneDerivative { branch: i });
        }
    }
    Ok(())
}

fn image(map: &IntervalMapSystem, s: usize, (a, b): (f64, f64)) -> (f64, f64) {
    let (x, y) = (map.inverse_branch(s, a), map.inverse_branch(s, b));
    (x.min(y), x.max(y))
}

fn hull(cells: &[(f64, f64)]) -> (f64, f64) {
    cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |h, c| (h.0.min(c.0), h.1.max(c.1)))
}

/// Intervals of all depth-`d` cylinders for `d = 1..=n`, first symbol most significant.
fn cylinder_levels(map: &IntervalMapSystem, n: usize) -> Vec<Vec<(f64, f64)>> {
    let b = map.branch_count();
    let mut levels: Vec<Vec<(f64, f64)>> = vec![map.branches().iter().map(|br| br.domain).collect()];
    for _ in 1..n {
        let prev = levels.last().expect("nonempty");
        let next: Vec<(f64, f64)> = par::map_indices(b * prev.len(), |idx| {
            image(map, idx / prev.len(), prev[idx % prev.len()])
        });
        levels.push(next);
    }
    levels
}

fn encode(symbols: impl Iterator<Item = usize>, b: usize) -> usize {
    symbols.fold(0, |acc, s| acc * b + s)
}

impl TransferGeometry {
    pub fn new(map: &IntervalMapSystem, depth: usize, opts: &TransferOptions) -> Result<Self> {
        check_map(map)?;
        if depth == 0 || depth > MAX_TRANSFER_DEPTH {
            return Err(Error::DepthOverflow {
                depth,
                max: MAX_TRANSFER_DEPTH,
            });
        }
        let b = map.branch_count();
        let levels = cylinder_levels(map, depth);
        let (cells, target, parent) = match map.neutral_branch() {
            None => uniform_cells(&levels, b, depth),
            Some((nu, _)) => {
                if opts.chain_length < depth {
                    return Err(Error::param("chain_length", "must be at least the depth"));
                }
                neutral_cells(map, &levels, b, depth, nu, opts.chain_length)
            }
        };
        let log_deriv = par::map_indices(cells.len() * b, |idx| {
            let (c, s) = (idx / b, idx % b);
            let (ya, yb) = image(map, s, cells[c]);
            let f = &map.branches()[s].map;
            [f.derivative(ya).abs().ln(), f.derivative(yb).abs().ln()]
        });
        Ok(TransferGeometry {
            branches: b,
            depth,
            target,
            log_deriv,
            parent,
        })
    }

    /// Lifts a cell vector of the depth-`(n-1)` geometry to this one.
    pub fn prolong(&self, coarse: &[f64]) -> Vec<f64> {
        self.parent.iter().map(|&p| coarse[p as usize]).collect()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cells(&self) -> usize {
        self.target.len() / self.branches
    }

    /// Rigorous bracket `(lower, upper)` on the log spectral radius.
    pub fn bracket(&self, pot: &BranchPotential, warm: &mut WarmStart, opts: &TransferOptions) -> Result<(f64, f64)> {
        let b = self.branches;
        if pot.offsets.len() != b {
            return Err(Error::param("offsets", format!("need one offset per branch ({b})")));
        }
        if !pot.t.is_finite() || pot.offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::param("potential", "must be finite"));
        }
        let n = self.cells();
        let mut hi_w = vec![0.0; n * b];
        let mut lo_w = vec![0.0; n * b];
        par::fill(&mut hi_w, |i| {
            let [a, c] = self.log_deriv[i];
            let o = pot.offsets[i % b];
            (o - (pot.t * a).min(pot.t * c)).exp()
        });
        par::fill(&mut lo_w, |i| {
            let [a, c] = self.log_deriv[i];
            let o = pot.offsets[i % b];
            (o - (pot.t * a).max(pot.t * c)).exp()
        });
        let upper = self.collatz(&hi_w, true, &mut warm.upper, opts);
        let lower = self.collatz(&lo_w, false, &mut warm.lower, opts);
        Ok((lower.ln(), upper.ln()))
    }

    /// Power sweeps on a cell matrix, returning the best Collatz-Wielandt bound.
    fn collatz(&self, w: &[f64], upper: bool, g: &mut Vec<f64>, opts: &TransferOptions) -> f64 {
        let b = self.branches;
        let n = self.cells();
        if g.len() != n || g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            *g = vec![1.0; n];
        }
        let mut h = vec![0.0; n];
        let mut best = if upper { f64::INFINITY } else { 0.0 };
        let mut since_best = 0usize;
        let diag = (0..n)
            .flat_map(|c| (0..b).filter(move |&s| self.target[c * b + s] as usize == c).map(move |s| c * b + s))
            .map(|i| w[i])
            .fold(0.0f64, f64::max);
        if !upper {
            best = diag;
        }
        for _ in 0..opts.max_sweeps.max(1) {
            par::fill(&mut h, |c| {
                let base = c * b;
                (0..b).map(|s| w[base + s] * g[self.target[base + s] as usize]).sum()
            });
            let (mut rmin, mut rmax, mut hmax) = (f64::INFINITY, 0.0f64, 0.0f64);
            for (x, y) in h.iter().zip(g.iter()) {
                let r = x / y;
                rmin = rmin.min(r);
                rmax = rmax.max(r);
                hmax = hmax.max(*x);
            }
            let bound = if upper { rmax } else { rmin };
            let improved = if upper { bound < best } else { bound > best };
            if improved {
                let gain = (bound - best).abs() / bound;
                best = bound;
                since_best = if gain > opts.tol { 0 } else { since_best + 1 };
            } else {
                since_best += 1;
            }
            if rmax - rmin <= opts.tol * rmax || since_best >= 50 {
                break;
            }
            for (gi, hi) in g.iter_mut().zip(&h) {
                *gi = (hi / hmax).max(f64::MIN_POSITIVE);
            }
            self.gauss_seidel(w, g, 0.5 * (rmin.max(diag) + rmax));
        }
        best
    }
}

impl TransferGeometry {
    /// One in-place sweep of `g = W g / lambda` from the last cell down, so
    /// values travel the whole neutral chain in a single pass.
    fn gauss_seidel(&self, w: &[f64], g: &mut [f64], lambda: f64) {
        let b = self.branches;
        let mut top = 0.0f64;
        for c in (0..g.len()).rev() {
            let base = c * b;
            let (mut acc, mut own) = (0.0, 0.0);
            for s in 0..b {
                let t = self.target[base + s] as usize;
                if t == c {
                    own += w[base + s];
                } else {
                    acc += w[base + s] * g[t];
                }
            }
            let denom = lambda - own;
            let v = if denom > 1e-3 * lambda {
                acc / denom
            } else {
                (acc + own * g[c]) / lambda
            };
            g[c] = v.max(f64::MIN_POSITIVE);
            top = top.max(g[c]);
        }
        for x in g.iter_mut() {
            *x = (*x / top).max(f64::MIN_POSITIVE);
        }
    }
}

type Layout = (Vec<(f64, f64)>, Vec<u32>, Vec<u32>);

fn uniform_cells(levels: &[Vec<(f64, f64)>], b: usize, depth: usize) -> Layout {
    let cells = levels[depth - 1].clone();
    let n = cells.len();
    let tail = n / b;
    let target = (0..n * b)
        .map(|idx| {
            let (c, s) = (idx / b, idx % b);
            (s * tail + c / b) as u32
        })
        .collect();
    let parent = if depth > 1 {
        (0..n).map(|c| (c / b) as u32).collect()
    } else {
        Vec::new()
    };
    (cells, target, parent)
}

/// Partition refined along the neutral fixed point of branch `nu`.
///
/// Level `j < K` holds the cylinders `nu^j r u` with `r != nu` and `|u| = m_j`,
/// where `m_0 = n - 1` and `m_j = max(n - 2 - j, 0)`; the last cell is `nu^K`.
fn neutral_cells(
    map: &IntervalMapSystem,
    levels: &[Vec<(f64, f64)>],
    b: usize,
    depth: usize,
    nu: usize,
    chain: usize,
) -> Layout {
    let m0 = depth - 1;
    let m = |j: usize| chain_digits(depth, j);
    let others: Vec<usize> = (0..b).filter(|&s| s != nu).collect();
    let rank = |s: usize| others.iter().position(|&r| r == s).expect("not neutral");
    let pow = |e: usize| b.pow(e as u32);

    let (offsets, sink) = chain_offsets(depth, chain, others.len(), b);
    let count = sink + 1;

    let mut cells = vec![(0.0, 0.0); count];
    let top = &levels[depth - 1];
    for (ri, &r) in others.iter().enumerate() {
        for u in 0..pow(m0) {
            cells[ri * pow(m0) + u] = top[r * pow(m0) + u];
        }
    }
    for j in 1..chain {
        let group = pow(m(j - 1) - m(j));
        let prev: Vec<(f64, f64)> = cells[offsets[j - 1]..offsets[j - 1] + others.len() * pow(m(j - 1))].to_vec();
        let next: Vec<(f64, f64)> = par::map_indices(others.len() * pow(m(j)), |idx| {
            image(map, nu, hull(&prev[idx * group..(idx + 1) * group]))
        });
        cells[offsets[j]..offsets[j] + next.len()].copy_from_slice(&next);
    }
    let mut sink_cell = (0.0, 1.0);
    for _ in 0..chain {
        sink_cell = image(map, nu, sink_cell);
    }
    cells[sink] = sink_cell;

    let mut target = vec![0u32; count * b];
    let into_top = |s: usize, word: &[usize]| -> u32 {
        (rank(s) * pow(m0) + encode(word[..m0].iter().copied(), b)) as u32
    };
    for j in 0..chain {
        let mj = m(j);
        for ri in 0..others.len() {
            for u in 0..pow(mj) {
                let c = offsets[j] + ri * pow(mj) + u;
                let digits: Vec<usize> = (0..mj).rev().map(|p| (u / pow(p)) % b).collect();
                let mut word = vec![nu; j];
                word.push(others[ri]);
                word.extend_from_slice(&digits);
                for s in 0..b {
                    target[c * b + s] = if s == nu {
                        if j + 1 < chain {
                            (offsets[j + 1] + ri * pow(m(j + 1)) + u / pow(mj - m(j + 1))) as u32
                        } else {
                            sink as u32
                        }
                    } else {
                        into_top(s, &word)
                    };
                }
            }
        }
    }
    let sink_word = vec![nu; m0.max(1)];
    for s in 0..b {
        target[sink * b + s] = if s == nu {
            sink as u32
        } else {
            into_top(s, &sink_word)
        };
    }
    let mut parent = Vec::new();
    if depth > 1 {
        let (coarse_offsets, coarse_sink) = chain_offsets(depth - 1, chain, others.len(), b);
        parent.reserve(count);
        for j in 0..chain {
            let (mj, mc) = (m(j), chain_digits(depth - 1, j));
            for ri in 0..others.len() {
                for u in 0..pow(mj) {
                    parent.push((coarse_offsets[j] + ri * pow(mc) + u / pow(mj - mc)) as u32);
                }
            }
        }
        parent.push(coarse_sink as u32);
    }
    (cells, target, parent)
}

/// Free digits after `nu^j r` at chain level `j`.
fn chain_digits(depth: usize, j: usize) -> usize {
    let m0 = depth - 1;
    if j == 0 {
        m0
    } else {
        m0.saturating_sub(j + 1)
    }
}

/// Start index of each chain level and the index of the sink cell.
fn chain_offsets(depth: usize, chain: usize, others: usize, b: usize) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(chain);
    let mut total = 0usize;
    for j in 0..chain {
        offsets.push(total);
        total += others * b.pow(chain_digits(depth, j) as u32);
    }
    (offsets, total)
}

/// Bracket on `P(-t log|f'| + offsets)` at a single cell depth.
pub fn transfer_bracket(
    map: &IntervalMapSystem,
    pot: &BranchPotential,
    depth: usize,
    opts: &TransferOptions,
) -> Result<(f64, f64)> {
    let geo = TransferGeometry::new(map, depth, opts)?;
    geo.bracket(pot, &mut WarmStart::default(), opts)
}

/// Brackets at depths `1..=n`, intersected so that they are nested.
pub fn nested_brackets(
    geometries: &[TransferGeometry],
    pot: &BranchPotential,
    warm: &mut [WarmStart],
    opts: &TransferOptions,
) -> Result<PressureEstimate> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut depth_sequence = Vec::with_capacity(geometries.len());
    let mut depth_brackets = Vec::with_capacity(geometries.len());
    for i in 0..geometries.len() {
        let geo = &geometries[i];
        if i > 0 && geo.parent.len() == geo.cells() {
            let (done, rest) = warm.split_at_mut(i);
            let (coarse, w) = (&done[i - 1], &mut rest[0]);
            if w.upper.len() != geo.cells() && coarse.upper.len() == geometries[i - 1].cells() {
                w.upper = geo.prolong(&coarse.upper);
            }
            if w.lower.len() != geo.cells() && coarse.lower.len() == geometries[i - 1].cells() {
                w.lower = geo.prolong(&coarse.lower);
            }
        }
        let (l, u) = geo.bracket(pot, &mut warm[i], opts)?;
        lo = lo.max(l);
        hi = hi.min(u);
        if lo > hi {
            let mid = 0.5 * (lo + hi);
            lo = mid;
            hi = mid;
        }
        depth_sequence.push((geo.depth(), 0.5 * (lo + hi)));
        depth_brackets.push((lo, hi));
    }
    Ok(PressureEstimate {
        value: 0.5 * (lo + hi),
        depth_sequence,
        depth_brackets,
        bracket: (lo, hi),
    })
}

pub fn build_geometries(map: &IntervalMapSystem, depth: usize, opts: &TransferOptions) -> Result<Vec<TransferGeometry>> {
    if depth == 0 || depth > MAX_TRANSFER_DEPTH {
        return Err(Error::DepthOverflow {
            depth,
            max: MAX_TRANSFER_DEPTH,
        });
    }
    (1..=depth).map(|d| TransferGeometry::new(map, d, opts)).collect()
}

/// Pressure of `-t log|f'|` from transfer-operator brackets at depths `1..=grid_n`.
pub fn transfer_operator_pressure(map: &IntervalMapSystem, t: f64, grid_n: usize) -> Result<PressureEstimate> {
    transfer_operator_pressure_with(map, &BranchPotential::geometric(t, map.branch_count()), grid_n, &TransferOptions::default())
}

pub fn transfer_operator_pressure_with(
    map: &IntervalMapSystem,
    pot: &BranchPotential,
    grid_n: usize,
    opts: &TransferOptions,
) -> Result<PressureEstimate> {
    let geos = build_geometries(map, grid_n, opts)?;
    let mut warm = vec![WarmStart::default(); geos.len()];
    nested_brackets(&geos, pot, &mut warm, opts)
}
