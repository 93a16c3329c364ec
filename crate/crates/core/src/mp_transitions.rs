//! Pressure curves `t -> P(-t log|f'|)` of Manneville-Pomeau maps and a kink detector.

use crate::error::{Error, Result};
use crate::pressure::{build_geometries, nested_brackets, BranchPotential, TransferGeometry, TransferOptions, WarmStart, MAX_TRANSFER_DEPTH};
use crate::report::{csv_row, fmt12};
use crate::symbolic::build_manneville_pomeau;

pub const T_RANGE: (f64, f64) = (-2.0, 4.0);

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && (T_RANGE.0..=T_RANGE.1).contains(&t)) {
        return Err(Error::param("t", format!("must lie in [{}, {}]", T_RANGE.0, T_RANGE.1)));
    }
    Ok(())
}

fn geometries(alpha: f64, depth_n: usize, opts: &TransferOptions) -> Result<Vec<TransferGeometry>> {
    if depth_n == 0 || depth_n > MAX_TRANSFER_DEPTH {
        return Err(Error::DepthOverflow {
            depth: depth_n,
            max: MAX_TRANSFER_DEPTH,
        });
    }
    let map = build_manneville_pomeau(alpha)?;
    build_geometries(&map, depth_n, opts)
}

/// Rigorous bracket on `P(-t log|f_alpha'|)` from cell partitions of depth `1..=depth_n`.
pub fn mp_pressure_bracket(alpha: f64, t: f64, depth_n: usize) -> Result<(f64, f64)> {
    check_t(t)?;
    let opts = TransferOptions::default();
    let geos = geometries(alpha, depth_n, &opts)?;
    let mut warm = vec![WarmStart::default(); geos.len()];
    let est = nested_brackets(&geos, &BranchPotential::geometric(t, 2), &mut warm, &opts)?;
    Ok(est.bracket)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub depth_used: usize,
}

impl ScanRow {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    pub alpha: f64,
    pub t_grid: Vec<f64>,
    pub rows: Vec<ScanRow>,
    /// Secant slopes `(left, right)` at interior grid points, `None` at the ends.
    pub derivative_estimates: Vec<Option<(f64, f64)>>,
}

/// `[0.5, 1.5]` with step `0.02` on `[0.9, 1.1]` and coarser steps outside.
pub fn default_scan_grid() -> Vec<f64> {
    let mut grid = vec![0.5, 0.6, 0.7, 0.8, 0.85];
    grid.extend((0..=10).map(|i| 0.9 + 0.02 * i as f64));
    grid.extend([1.15, 1.2, 1.3, 1.4, 1.5]);
    grid
}

/// Brackets over an increasing grid, reusing geometries and warm starts.
pub fn phase_scan(alpha: f64, t_grid: &[f64], depth_n: usize) -> Result<PhaseScan> {
    phase_scan_with(alpha, t_grid, depth_n, &TransferOptions::default())
}

pub fn phase_scan_with(alpha: f64, t_grid: &[f64], depth_n: usize, opts: &TransferOptions) -> Result<PhaseScan> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("t_grid", "needs at least two increasing points"));
    }
    for &t in t_grid {
        check_t(t)?;
    }
    let geos = geometries(alpha, depth_n, opts)?;
    let mut warm = vec![WarmStart::default(); geos.len()];
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let est = nested_brackets(&geos, &BranchPotential::geometric(t, 2), &mut warm, opts)?;
        let (lower, upper) = est.bracket;
        rows.push(ScanRow {
            t,
            lower,
            upper,
            midpoint: 0.5 * (lower + upper),
            depth_used: depth_n,
        });
    }
    Ok(scan_from_rows(alpha, rows))
}

/// Assembles a scan, with secant slopes, from precomputed rows.
pub fn scan_from_rows(alpha: f64, rows: Vec<ScanRow>) -> PhaseScan {
    let n = rows.len();
    let slope = |a: &ScanRow, b: &ScanRow| (b.midpoint - a.midpoint) / (b.t - a.t);
    let derivative_estimates = (0..n)
        .map(|i| (i > 0 && i + 1 < n).then(|| (slope(&rows[i - 1], &rows[i]), slope(&rows[i], &rows[i + 1]))))
        .collect();
    PhaseScan {
        alpha,
        t_grid: rows.iter().map(|r| r.t).collect(),
        rows,
        derivative_estimates,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Kink,
    Smooth,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Kink => "kink",
            Verdict::Smooth => "smooth",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkVerdict {
    pub t: f64,
    pub verdict: Verdict,
    /// `|right - left|` slope gap.
    pub gap: f64,
    /// Sum of the three bracket widths over the smaller grid step.
    pub noise: f64,
    /// Largest slope gap at the neighbouring grid points.
    pub curvature: f64,
    /// Distance of the gap from the nearer decision threshold.
    pub margin: f64,
}

/// Verdict per interior grid point.
///
/// A kink needs `gap - 3 noise > 2 curvature`; smoothness needs
/// `gap + 3 noise <= 2 curvature`; anything else is inconclusive.
pub fn kink_detector(scan: &PhaseScan) -> Vec<Option<KinkVerdict>> {
    let rows = &scan.rows;
    let n = rows.len();
    let gap_at = |i: usize| scan.derivative_estimates.get(i).copied().flatten().map(|(l, r)| (r - l).abs());
    (0..n)
        .map(|i| {
            let gap = gap_at(i)?;
            let step = (rows[i].t - rows[i - 1].t).min(rows[i + 1].t - rows[i].t);
            let noise = (rows[i - 1].width() + rows[i].width() + rows[i + 1].width()) / step;
            let curvature = [i.checked_sub(1), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter_map(gap_at)
                .fold(0.0, f64::max);
            let kink_margin = gap - 3.0 * noise - 2.0 * curvature;
            let smooth_margin = 2.0 * curvature - gap - 3.0 * noise;
            let verdict = if kink_margin > 0.0 {
                Verdict::Kink
            } else if smooth_margin >= 0.0 {
                Verdict::Smooth
            } else {
                Verdict::Inconclusive
            };
            Some(KinkVerdict {
                t: rows[i].t,
                verdict,
                gap,
                noise,
                curvature,
                margin: kink_margin.abs().min(smooth_margin.abs()),
            })
        })
        .collect()
}

/// Scan CSV with one verdict column; end points have empty slope and verdict fields.
pub fn scan_csv(scan: &PhaseScan, verdicts: &[Option<KinkVerdict>]) -> String {
    let mut out = String::from("t,lower,upper,midpoint,left_slope,right_slope,verdict\n");
    for (i, r) in scan.rows.iter().enumerate() {
        let (l, rt) = match scan.derivative_estimates[i] {
            Some((l, r)) => (fmt12(l), fmt12(r)),
            None => (String::new(), String::new()),
        };
        let v = verdicts.get(i).copied().flatten().map(|v| v.verdict.as_str().to_string()).unwrap_or_default();
        out.push_str(&csv_row([fmt12(r.t), fmt12(r.lower), fmt12(r.upper), fmt12(r.midpoint), l, rt, v]));
    }
    out
}

/// Verdict at the grid point closest to `t`.
pub fn verdict_at(verdicts: &[Option<KinkVerdict>], t: f64) -> Option<KinkVerdict> {
    verdicts
        .iter()
        .flatten()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
        .copied()
}
