use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Perron root and eigenvectors of a nonnegative irreducible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub log_lambda: f64,
    /// Right eigenvector, entries positive and summing to 1.
    pub right_vec: Vec<f64>,
    /// Left eigenvector, normalized so that `left . right = 1`.
    pub left_vec: Vec<f64>,
    pub iterations: usize,
    /// `max |L r - lambda r|` with `L` rescaled by its largest entry.
    pub residual: f64,
    /// Collatz-Wielandt bracket on `log lambda`.
    pub bracket: (f64, f64),
}

impl PerronData {
    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }
}

const NODA_STEPS: usize = 200;
const POWER_STEPS: usize = 100_000;
const TARGET_WIDTH: f64 = 1e-14;
const ACCEPT_WIDTH: f64 = 1e-11;

/// True when the positive pattern of `m` is strongly connected.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for u in 0..n {
                let w = if forward { m[(v, u)] } else { m[(u, v)] };
                if w > 0.0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    n > 0 && reach(true) && reach(false)
}

struct Eigen {
    vec: DVector<f64>,
    lo: f64,
    hi: f64,
    iterations: usize,
}

fn cw_bounds(a: &DMatrix<f64>, v: &DVector<f64>) -> (DVector<f64>, f64, f64) {
    let av = a * v;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (x, y) in av.iter().zip(v.iter()) {
        let r = x / y;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (av, lo, hi)
}

/// Shifted inverse iteration with the Collatz-Wielandt upper bound as shift.
fn noda(a: &DMatrix<f64>) -> Option<Eigen> {
    let n = a.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut best: Option<Eigen> = None;
    let mut stall = 0;
    for it in 0..NODA_STEPS {
        let (_, lo, hi) = cw_bounds(a, &v);
        if !(lo.is_finite() && hi.is_finite()) || hi <= 0.0 {
            return best;
        }
        let improved = best.as_ref().is_none_or(|b| hi - lo < b.hi - b.lo);
        if improved {
            best = Some(Eigen {
                vec: v.clone(),
                lo,
                hi,
                iterations: it + 1,
            });
            stall = 0;
        } else {
            stall += 1;
        }
        if hi - lo <= TARGET_WIDTH * hi || stall >= 5 {
            break;
        }
        let shift = hi * (1.0 + 4.0 * f64::EPSILON);
        let m = DMatrix::from_diagonal_element(n, n, shift) - a;
        let w = m.lu().solve(&v)?;
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            break;
        }
        v = &w / w.sum();
    }
    best
}

/// Power iteration on `A + cI`, which is primitive when `A` is irreducible.
/// `c` should be of the order of the spectral radius.
fn power(a: &DMatrix<f64>, c: f64, start: DVector<f64>) -> Eigen {
    let n = a.nrows();
    let shifted = a + DMatrix::from_diagonal_element(n, n, c);
    let mut v = start;
    let mut out = Eigen {
        vec: v.clone(),
        lo: 0.0,
        hi: f64::INFINITY,
        iterations: 0,
    };
    for it in 0..POWER_STEPS {
        let (av, lo, hi) = cw_bounds(&shifted, &v);
        if hi - lo < out.hi - out.lo {
            out = Eigen {
                vec: v.clone(),
                lo: lo - c,
                hi: hi - c,
                iterations: it + 1,
            };
        }
        if hi - lo <= TARGET_WIDTH * hi {
            break;
        }
        v = &av / av.sum();
    }
    out
}

fn dominant(a: &DMatrix<f64>) -> Result<Eigen> {
    let n = a.nrows();
    let (c, start) = match noda(a) {
        Some(e) if e.hi - e.lo <= ACCEPT_WIDTH * e.hi => return Ok(e),
        Some(e) => (e.hi, e.vec),
        None => (1.0, DVector::from_element(n, 1.0 / n as f64)),
    };
    let e = power(a, c, start);
    if e.hi - e.lo <= ACCEPT_WIDTH * e.hi.max(f64::MIN_POSITIVE) {
        Ok(e)
    } else {
        Err(Error::ConvergenceFailure {
            iterations: NODA_STEPS + POWER_STEPS,
        })
    }
}

/// Perron data of a nonnegative irreducible matrix.
///
/// The matrix is rescaled by its largest entry before solving, so weights
/// as large as `e^700` are handled.
pub fn perron(matrix: &DMatrix<f64>) -> Result<PerronData> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::param("matrix", "must be square and nonempty"));
    }
    if matrix.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::param("matrix", "entries must be finite and nonnegative"));
    }
    if !is_irreducible(matrix) {
        return Err(Error::NotIrreducible);
    }
    let scale = matrix.max();
    let a = matrix / scale;
    let right = dominant(&a)?;
    let left = dominant(&a.transpose())?;

    let lo = right.lo.max(left.lo);
    let hi = right.hi.min(left.hi);
    let rho = 0.5 * (lo + hi);

    let r = &right.vec / right.vec.sum();
    let l0 = &left.vec;
    let l = l0 / l0.dot(&r);
    let residual = (&a * &r - &r * rho).amax();
    Ok(PerronData {
        log_lambda: scale.ln() + rho.ln(),
        right_vec: r.iter().copied().collect(),
        left_vec: l.iter().copied().collect(),
        iterations: right.iterations + left.iterations,
        residual,
        bracket: (scale.ln() + lo.ln(), scale.ln() + hi.ln()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn golden_mean_root() {
        let p = perron(&m(&[&[1.0, 1.0], &[1.0, 0.0]])).unwrap();
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.log_lambda - g.ln()).abs() < 1e-14);
        assert!(p.residual < 1e-13);
        assert!(p.right_vec.iter().all(|&x| x > 0.0));
        let dot: f64 = p.left_vec.iter().zip(&p.right_vec).map(|(a, b)| a * b).sum();
        assert!((dot - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_weights() {
        let p = perron(&m(&[&[1.0, 1.0], &[3.0, 3.0]])).unwrap();
        assert!((p.log_lambda - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn periodic_matrix() {
        let p = perron(&m(&[&[0.0, 2.0], &[8.0, 0.0]])).unwrap();
        assert!((p.log_lambda - 4f64.ln()).abs() < 1e-13);
        assert!(p.residual < 1e-12);
    }

    #[test]
    fn near_periodic_large_weights() {
        let e = (-50f64).exp();
        let p = perron(&m(&[&[e, e], &[1.0, 0.0]])).unwrap();
        let exact = ((e + (e * e + 4.0 * e).sqrt()) / 2.0).ln();
        assert!((p.log_lambda - exact).abs() < 1e-12, "{} vs {exact}", p.log_lambda);
        assert!(p.bracket.0 <= p.log_lambda && p.log_lambda <= p.bracket.1);
    }

    #[test]
    fn reducible_rejected() {
        assert_eq!(
            perron(&m(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap_err(),
            Error::NotIrreducible
        );
    }
}
