use rayon::prelude::*;

use super::modes::ModeBasis;
use crate::error::{Error, Result};
use crate::field::Grid2D;
use crate::functionals::{interaction_potential, InteractionProfile};

/// Real two-body matrix elements `W[i,j,k,l] = ∬ φ_i(x)φ_j(y) w(x−y) φ_k(x)φ_l(y)`.
///
/// For real modes `W` is invariant under `i ↔ k`, under `j ↔ l` and under
/// swapping the two particles, so only one value per pair of unordered
/// index pairs `{i,k}`, `{j,l}` is stored.
#[derive(Clone, Debug)]
pub struct TwoBodyTensor {
    modes: usize,
    /// Symmetric `P × P` table over unordered pairs, `P = M(M+1)/2`.
    values: Vec<f64>,
}

fn pair_index(a: usize, b: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    hi * (hi + 1) / 2 + lo
}

impl TwoBodyTensor {
    pub fn zeros(modes: usize) -> Self {
        let p = modes * (modes + 1) / 2;
        Self { modes, values: vec![0.0; p * p] }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let p = self.modes * (self.modes + 1) / 2;
        self.values[pair_index(i, k) * p + pair_index(j, l)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { modes: self.modes, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Dense `M² × M²` matrix `W[(i,j),(k,l)]` with pair index `i·M + j`.
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        let m = self.modes;
        nalgebra::DMatrix::from_fn(m * m, m * m, |p, q| self.get(p / m, p % m, q / m, q % m))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Assembles the table from a convolution routine `f ↦ w ∗ f`.
    fn assemble(
        basis: &ModeBasis,
        convolve: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    ) -> Result<Self> {
        let m = basis.len();
        let p = m * (m + 1) / 2;
        let area = basis.grid().cell_area();
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|hi| (0..=hi).map(move |lo| (lo, hi))).collect();
        let products: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(a, b)| basis.mode(a).iter().zip(basis.mode(b)).map(|(x, y)| x * y).collect())
            .collect();
        // one convolution per (j, l) pair
        let rows: Vec<Vec<f64>> = products
            .par_iter()
            .map(|rho| {
                let conv = convolve(rho)?;
                Ok(products
                    .iter()
                    .map(|other| area * other.iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>())
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; p * p];
        for q in 0..p {
            for r in 0..p {
                // exact symmetry under particle exchange
                values[q * p + r] = 0.5 * (rows[q][r] + rows[r][q]);
            }
        }
        Ok(Self { modes: m, values })
    }
}

/// Two-body tensor of `λ²w(λ·)` in the given basis.
pub fn two_body_tensor(
    basis: &ModeBasis,
    w: &InteractionProfile,
    lambda: f64,
) -> Result<TwoBodyTensor> {
    if w.is_zero() {
        return Ok(TwoBodyTensor::zeros(basis.len()));
    }
    let grid = *basis.grid();
    TwoBodyTensor::assemble(basis, |rho| interaction_potential(&grid, rho, w, lambda))
}

/// Two-body tensor of a kernel sampled on the basis grid.
pub fn two_body_tensor_sampled(basis: &ModeBasis, kernel: &[f64]) -> Result<TwoBodyTensor> {
    let grid: Grid2D = *basis.grid();
    if kernel.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "kernel has {} samples, grid has {}",
            kernel.len(),
            grid.len()
        )));
    }
    TwoBodyTensor::assemble(basis, |rho| grid.convolve(rho, kernel))
}
