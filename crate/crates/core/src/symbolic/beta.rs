use super::sft::SftSystem;
use crate::error::{Error, Result};

pub const MAX_BETA_DEPTH: usize = 64;

const DIGIT_SLACK: f64 = 1e-12;

/// Greedy expansion of 1 in base `beta`, truncated at `truncation_depth` digits.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaShiftSpec {
    pub beta: f64,
    /// Digits `a_1, ..., a_N`; a terminating expansion is padded with zeros.
    pub expansion: Vec<u32>,
    pub truncation_depth: usize,
    /// Position of the last nonzero digit when the expansion terminates within the depth.
    pub terminates_at: Option<usize>,
}

impl BetaShiftSpec {
    pub fn is_integer(&self) -> bool {
        (self.beta - self.beta.round()).abs() < DIGIT_SLACK
    }

    /// Checks the digit range and the greedy recursion, with the recursion
    /// evaluated in floating point to relative tolerance `1e-9`.
    pub fn validate(&self) -> bool {
        let b = self.beta;
        if self.expansion.is_empty() || self.expansion[0] != b.floor() as u32 {
            return false;
        }
        let top = if self.is_integer() {
            b.round() as u32
        } else {
            b.ceil() as u32 - 1
        };
        if self.expansion.iter().any(|&a| a > top) {
            return false;
        }
        let mut r = 1.0f64;
        for &a in &self.expansion {
            let x = b * r;
            let digit = (x + DIGIT_SLACK).floor().max(0.0);
            if digit as u32 != a && (x - x.round()).abs() > 1e-9 {
                return false;
            }
            r = (x - a as f64).max(0.0);
        }
        true
    }

    /// The nonzero prefix used by the automaton (trailing zeros removed).
    pub fn automaton_digits(&self) -> &[u32] {
        let end = self
            .expansion
            .iter()
            .rposition(|&a| a != 0)
            .map_or(0, |p| p + 1);
        &self.expansion[..end]
    }
}

/// Greedy digits of 1 in base `beta`.
fn greedy_expansion(beta: f64, depth: usize) -> (Vec<u32>, Option<usize>) {
    let mut digits = Vec::with_capacity(depth);
    let mut r = 1.0f64;
    let mut terminates = None;
    for n in 0..depth {
        if terminates.is_some() {
            digits.push(0);
            continue;
        }
        let x = beta * r;
        let a = (x + DIGIT_SLACK).floor().max(0.0);
        let mut rem = x - a;
        if rem.abs() <= DIGIT_SLACK * beta.max(1.0) {
            rem = 0.0;
        }
        digits.push(a as u32);
        r = rem.max(0.0);
        if r == 0.0 {
            terminates = Some(n + 1);
        }
    }
    (digits, terminates)
}

/// Builds the greedy expansion and the follower-set SFT of the truncated expansion.
///
/// The automaton has one state per proper prefix of the digit string `d_1..d_p`.
/// From state `k` a digit below `d_{k+1}` returns to the start and the digit
/// `d_{k+1}` advances, except from the last state. Digits label edges between
/// states, so the SFT returned is the edge shift of that automaton.
pub fn build_beta_shift(beta: f64, depth: usize) -> Result<(BetaShiftSpec, SftSystem)> {
    if !beta.is_finite() || beta <= 1.0 || beta > 10.0 {
        return Err(Error::DegenerateBeta(beta));
    }
    if depth == 0 || depth > MAX_BETA_DEPTH {
        return Err(Error::param("depth", format!("must lie in 1..={MAX_BETA_DEPTH}")));
    }
    let (expansion, terminates_at) = greedy_expansion(beta, depth);
    let spec = BetaShiftSpec {
        beta,
        expansion,
        truncation_depth: depth,
        terminates_at,
    };
    if spec.is_integer() {
        let m = beta.round() as usize;
        let sys = SftSystem::full_shift(m).with_label(format!("beta-{m}"));
        return Ok((spec, sys));
    }
    let sys = follower_edge_shift(spec.automaton_digits(), beta)?;
    Ok((spec, sys))
}

fn follower_edge_shift(digits: &[u32], beta: f64) -> Result<SftSystem> {
    let p = digits.len();
    // (source state, target state) per edge, ordered by source then digit.
    let mut edges = Vec::new();
    for (k, &d) in digits.iter().enumerate() {
        for digit in 0..=d {
            if digit < d {
                edges.push((k, 0usize));
            } else if k + 1 < p {
                edges.push((k, k + 1));
            }
        }
    }
    let rows = edges
        .iter()
        .map(|&(_, tgt)| {
            edges
                .iter()
                .map(|&(src, _)| u8::from(src == tgt))
                .collect()
        })
        .collect();
    SftSystem::new(format!("beta-{beta}"), rows)
}
