use std::sync::Arc;

use nalgebra::DMatrix;

use super::perron::{perron, PerronData};
use crate::error::Result;
use crate::measures::LocallyConstantPotential;
use crate::symbolic::{CylinderSpace, SftSystem};

/// `L[i][j] = e^{phi(i) - max phi}` on allowed overlaps of the depth-`k` cylinders.
pub fn weighted_matrix(phi: &LocallyConstantPotential) -> DMatrix<f64> {
    let space = phi.space();
    let n = space.len();
    let top = phi.max_value();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = (phi.value(i) - top).exp();
        for &j in space.successors(i) {
            l[(i, j)] = w;
        }
    }
    l
}

/// Exact topological pressure of a locally constant potential.
///
/// Depth-`k` potentials are read on the `k`-block recoding; the eigenvectors
/// are indexed by the admissible `k`-words in lexicographic order.
pub fn matrix_pressure(phi: &LocallyConstantPotential) -> Result<PerronData> {
    let mut pd = perron(&weighted_matrix(phi))?;
    let top = phi.max_value();
    pd.log_lambda += top;
    pd.bracket = (pd.bracket.0 + top, pd.bracket.1 + top);
    Ok(pd)
}

/// `log` of the Perron root of the 0/1 transition matrix.
pub fn topological_entropy(sys: &Arc<SftSystem>) -> Result<f64> {
    let space = CylinderSpace::new(sys, 1)?;
    let zero = LocallyConstantPotential::constant(&space, 0.0)?;
    Ok(matrix_pressure(&zero)?.log_lambda)
}
