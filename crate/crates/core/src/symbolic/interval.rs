use crate::error::{Error, Result};

const ENDPOINT_TOL: f64 = 1e-12;

/// Named analytic families for interval-map branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchMap {
    /// `x -> slope * x + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `x -> x (1 + 2^alpha x^alpha)`, the left branch of the Manneville-Pomeau map.
    MannevillePomeauLeft { alpha: f64 },
}

/// How `|f'|` varies along the branch domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
}

impl BranchMap {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, intercept } => slope * x + intercept,
            BranchMap::MannevillePomeauLeft { alpha } => {
                x * (1.0 + 2f64.powf(alpha) * x.powf(alpha))
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, .. } => slope,
            BranchMap::MannevillePomeauLeft { alpha } => {
                1.0 + 2f64.powf(alpha) * (1.0 + alpha) * x.powf(alpha)
            }
        }
    }

    pub fn abs_derivative_trend(&self) -> Trend {
        match self {
            BranchMap::Affine { .. } => Trend::Constant,
            BranchMap::MannevillePomeauLeft { .. } => Trend::Increasing,
        }
    }

    /// Solves `f(x) = y` on the branch.
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, intercept } => (y - intercept) / slope,
            BranchMap::MannevillePomeauLeft { alpha } => mp_left_inverse(alpha, y),
        }
    }
}

/// Newton on the convex increasing map from a point right of the root, so the
/// iterates decrease monotonically to it.
fn mp_left_inverse(alpha: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let c = 2f64.powf(alpha);
    let mut x = y.min(0.5);
    for _ in 0..200 {
        let xa = x.powf(alpha);
        let g = x * (1.0 + c * xa) - y;
        let dg = 1.0 + c * (1.0 + alpha) * xa;
        let next = x - g / dg;
        if !(next < x) || next <= 0.0 {
            break;
        }
        x = next;
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub domain: (f64, f64),
    pub map: BranchMap,
}

impl Branch {
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = self.domain;
        let (fa, fb) = (self.map.eval(a), self.map.eval(b));
        (fa.min(fb), fa.max(fb))
    }

    /// True when the branch maps its domain onto `[0, 1]` up to `1e-12`.
    pub fn is_full(&self) -> bool {
        let (lo, hi) = self.image();
        lo.abs() <= ENDPOINT_TOL && (hi - 1.0).abs() <= ENDPOINT_TOL
    }

    pub fn is_increasing(&self) -> bool {
        self.map.derivative(0.5 * (self.domain.0 + self.domain.1)) > 0.0
    }

    fn sample_points(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        let (a, b) = self.domain;
        (0..count).map(move |i| a + (i as f64 + 0.5) / count as f64 * (b - a))
    }
}

/// Piecewise-monotone map of `[0, 1]` given by analytic branches.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMapSystem {
    label: String,
    branches: Vec<Branch>,
}

impl IntervalMapSystem {
    /// Validates the partition, branch injectivity and the derivative formulas.
    pub fn new(label: impl Into<String>, branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidIntervalMap("no branches".into()));
        }
        let mut edge = 0.0;
        for (i, br) in branches.iter().enumerate() {
            let (a, b) = br.domain;
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidIntervalMap(format!("branch {i} has an empty domain")));
            }
            if (a - edge).abs() > ENDPOINT_TOL {
                return Err(Error::InvalidIntervalMap(format!(
                    "branch {i} starts at {a}, expected {edge}"
                )));
            }
            edge = b;
        }
        if (edge - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::InvalidIntervalMap(format!("domains end at {edge}, not 1")));
        }
        for (i, br) in branches.iter().enumerate() {
            check_branch(i, br)?;
        }
        Ok(IntervalMapSystem {
            label: label.into(),
            branches,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn full_branches(&self) -> Vec<bool> {
        self.branches.iter().map(Branch::is_full).collect()
    }

    /// Index of the branch containing `x`; the right endpoint of `[0,1]` goes to the last one.
    pub fn branch_of(&self, x: f64) -> usize {
        self.branches
            .iter()
            .position(|b| x < b.domain.1)
            .unwrap_or(self.branches.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.branches[self.branch_of(x)].map.eval(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.branches[self.branch_of(x)].map.derivative(x)
    }

    /// Preimage of `y` under branch `i`, clamped into its domain.
    pub fn inverse_branch(&self, i: usize, y: f64) -> f64 {
        let br = &self.branches[i];
        br.map.inverse(y).clamp(br.domain.0, br.domain.1)
    }

    /// A branch with a fixed point at a domain endpoint where `|f'| = 1`.
    pub fn neutral_branch(&self) -> Option<(usize, f64)> {
        self.branches.iter().enumerate().find_map(|(i, br)| {
            [br.domain.0, br.domain.1].into_iter().find_map(|p| {
                let fixed = (br.map.eval(p) - p).abs() <= ENDPOINT_TOL;
                let neutral = (br.map.derivative(p).abs() - 1.0).abs() <= ENDPOINT_TOL;
                (fixed && neutral).then_some((i, p))
            })
        })
    }
}

fn check_branch(i: usize, br: &Branch) -> Result<()> {
    let pts: Vec<f64> = br.sample_points(16).collect();
    let ds: Vec<f64> = pts.iter().map(|&x| br.map.derivative(x)).collect();
    if ds.iter().any(|d| !d.is_finite() || *d == 0.0)
        || !(ds.iter().all(|&d| d > 0.0) || ds.iter().all(|&d| d < 0.0))
    {
        return Err(Error::InvalidIntervalMap(format!("branch {i} is not injective")));
    }
    let h = 1e-5 * (br.domain.1 - br.domain.0);
    for (&x, &d) in pts.iter().zip(&ds) {
        let fd = (br.map.eval(x + h) - br.map.eval(x - h)) / (2.0 * h);
        if (fd - d).abs() > 1e-6 * d.abs() {
            return Err(Error::InvalidIntervalMap(format!(
                "branch {i}: derivative {d} disagrees with difference quotient {fd} at {x}"
            )));
        }
    }
    let abs: Vec<f64> = ds.iter().map(|d| d.abs()).collect();
    let ok = match br.map.abs_derivative_trend() {
        Trend::Increasing => abs.windows(2).all(|w| w[1] >= w[0]),
        Trend::Decreasing => abs.windows(2).all(|w| w[1] <= w[0]),
        Trend::Constant => abs.windows(2).all(|w| w[1] == w[0]),
    };
    if !ok {
        return Err(Error::NonMonotoneDerivative { branch: i });
    }
    Ok(())
}

/// The Manneville-Pomeau map with a neutral fixed point at 0.
pub fn build_manneville_pomeau(alpha: f64) -> Result<IntervalMapSystem> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", "must be positive and finite"));
    }
    IntervalMapSystem::new(
        format!("manneville-pomeau-{alpha}"),
        vec![
            Branch {
                domain: (0.0, 0.5),
                map: BranchMap::MannevillePomeauLeft { alpha },
            },
            Branch {
                domain: (0.5, 1.0),
                map: BranchMap::Affine {
                    slope: 2.0,
                    intercept: -1.0,
                },
            },
        ],
    )
}

pub fn doubling_map() -> IntervalMapSystem {
    IntervalMapSystem::new(
        "doubling",
        vec![
            Branch {
                domain: (0.0, 0.5),
                map: BranchMap::Affine {
                    slope: 2.0,
                    intercept: 0.0,
                },
            },
            Branch {
                domain: (0.5, 1.0),
                map: BranchMap::Affine {
                    slope: 2.0,
                    intercept: -1.0,
                },
            },
        ],
    )
    .expect("doubling map is valid")
}
