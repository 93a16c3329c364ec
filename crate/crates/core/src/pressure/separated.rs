use super::PressureEstimate;
use crate::error::{Error, Result};
use crate::measures::LocallyConstantPotential;
use crate::par::{self, LogSumExp};
use crate::symbolic::{CylinderSpace, DEFAULT_WORD_CAP};

/// Word sums at each length: `Z_n` over all paths and the trace sum over closed paths.
struct Sums {
    all: Vec<LogSumExp>,
    closed: Vec<LogSumExp>,
}

impl Sums {
    fn new(n_max: usize) -> Self {
        Sums {
            all: vec![LogSumExp::new(); n_max + 1],
            closed: vec![LogSumExp::new(); n_max + 1],
        }
    }

    fn merge(&mut self, other: &Sums) {
        for (a, b) in self.all.iter_mut().zip(&other.all) {
            a.merge(b);
        }
        for (a, b) in self.closed.iter_mut().zip(&other.closed) {
            a.merge(b);
        }
    }
}

struct Walker<'a> {
    space: &'a CylinderSpace,
    values: &'a [f64],
    n_max: usize,
}

impl Walker<'_> {
    fn record(&self, sums: &mut Sums, first: usize, state: usize, n: usize, s: f64) {
        sums.all[n].push(s);
        if self.space.allows(state, first) {
            sums.closed[n].push(s);
        }
    }

    fn descend(&self, sums: &mut Sums, first: usize, state: usize, n: usize, s: f64) {
        self.record(sums, first, state, n, s);
        if n == self.n_max {
            return;
        }
        for &j in self.space.successors(state) {
            self.descend(sums, first, j, n + 1, s + self.values[j]);
        }
    }
}

/// Prefix paths `(first, last, length, sum)` of a fixed length, in lexicographic order.
fn prefixes(w: &Walker<'_>, len: usize, sums: &mut Sums) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> =
        (0..w.space.len()).map(|i| (i, i, w.values[i])).collect();
    for n in 1..len {
        for &(first, last, s) in &out {
            w.record(sums, first, last, n, s);
        }
        out = out
            .iter()
            .flat_map(|&(first, last, s)| {
                w.space
                    .successors(last)
                    .iter()
                    .map(move |&j| (first, j, s + w.values[j]))
            })
            .collect();
    }
    out
}

/// Weighted word sums `Z_n = sum exp(S_n phi)` over `(n+k-1)`-words for `n <= n_max`.
///
/// Under the cylinder metric a maximal separated set has one point per
/// cylinder, so the sum is exact. The upper bound is `value_{n_max}`, valid
/// by subadditivity of `log Z_n`; the lower bound at each `n` is
/// `(log trace L^n - log N) / n` with `N` the number of `k`-words.
pub fn separated_set_pressure(phi: &LocallyConstantPotential, n_max: usize) -> Result<PressureEstimate> {
    separated_set_pressure_capped(phi, n_max, DEFAULT_WORD_CAP)
}

pub fn separated_set_pressure_capped(
    phi: &LocallyConstantPotential,
    n_max: usize,
    cap: u64,
) -> Result<PressureEstimate> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let k = phi.depth();
    let count = phi.system().count_words(n_max + k - 1);
    if count > cap as u128 {
        return Err(Error::CombinatorialOverflow { count, cap });
    }
    let space = phi.space();
    let walker = Walker {
        space,
        values: phi.values(),
        n_max,
    };
    let mut sums = Sums::new(n_max);
    let split = (1..=n_max)
        .find(|&p| space.base().count_words(p + k - 1) >= 256)
        .unwrap_or(n_max);
    let starts = prefixes(&walker, split, &mut sums);
    let parts = par::map_slice(&starts, |&(first, last, s)| {
        let mut local = Sums::new(n_max);
        walker.descend(&mut local, first, last, split, s);
        local
    });
    for p in &parts {
        sums.merge(p);
    }

    let log_states = (space.len() as f64).ln();
    let mut depth_sequence = Vec::with_capacity(n_max);
    let mut depth_brackets = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        let value = sums.all[n].value() / nf;
        let lower = (sums.closed[n].value() - log_states) / nf;
        depth_sequence.push((n, value));
        depth_brackets.push((lower.min(value), value));
    }
    let value = depth_sequence[n_max - 1].1;
    let lower = depth_brackets
        .iter()
        .map(|b| b.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .min(value);
    Ok(PressureEstimate {
        value,
        depth_sequence,
        depth_brackets,
        bracket: (lower, value),
    })
}
