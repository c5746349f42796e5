use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::grid::AngularGrid;
use super::propagator::PotentialSamples;
use super::state::RotorState;
use crate::error::{Result, RotorError};

/// Largest grid accepted by the dense eigensolver.
pub const MAX_DENSE_POINTS: usize = 2048;

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    pub state: RotorState,
}

/// Dense grid-basis Hamiltonian `L²/2 + V`. The kinetic block is the
/// circulant spectral second-derivative matrix, which is real and
/// symmetric.
pub fn dense_hamiltonian(grid: &AngularGrid, potential: &PotentialSamples) -> DMatrix<f64> {
    let n = grid.n_points();
    let mut col: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|k| Complex64::new(0.5 * k * k, 0.0))
        .collect();
    grid.ifft(&mut col);
    let mut h = DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n].re);
    for (i, v) in potential.values().iter().enumerate() {
        h[(i, i)] += v;
    }
    h
}

/// The `k` lowest eigenpairs of the discretised Hamiltonian in ascending
/// order.
pub fn stationary_states(
    grid: &Arc<AngularGrid>,
    potential: &PotentialSamples,
    k: usize,
) -> Result<Vec<Eigenpair>> {
    let n = grid.n_points();
    if n > MAX_DENSE_POINTS {
        return Err(RotorError::InvalidParameter(format!(
            "dense eigensolver limited to {MAX_DENSE_POINTS} points, grid has {n}"
        )));
    }
    if k == 0 || k > n / 4 {
        return Err(RotorError::InvalidParameter(format!(
            "requested {k} eigenpairs, accuracy guard allows 1..={}",
            n / 4
        )));
    }
    let h = dense_hamiltonian(grid, potential);
    let eig = nalgebra::linalg::SymmetricEigen::try_new(h, 1e-14, 100_000)
        .ok_or_else(|| RotorError::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(k)
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            let amps = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            Ok(Eigenpair {
                energy: eig.eigenvalues[i],
                state: RotorState::new(grid.clone(), amps, 0.0)?,
            })
        })
        .collect()
}
