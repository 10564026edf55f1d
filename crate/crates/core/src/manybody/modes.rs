//! Lowest eigenpairs of the one-body operator `h = −Δ + V` by LOBPCG.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field2D, Grid2D};
use crate::functionals::ModelParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Target for `‖hφ − εφ‖` of every returned mode.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest number of modes a caller may request.
    pub max_modes: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 2000, max_modes: 64, seed: 0 }
    }
}

/// Residual above which a mode is rejected outright.
const ACCEPTABLE_RESIDUAL: f64 = 1e-6;

/// Real one-body eigenmodes, `L²`-normalized on the grid.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    grid: Grid2D,
    modes: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
}

impl ModeBasis {
    /// Builds a basis from explicit modes; used for synthetic tests.
    pub fn from_parts(grid: Grid2D, modes: Vec<Vec<f64>>, eigenvalues: Vec<f64>) -> Result<Self> {
        if modes.len() != eigenvalues.len() || modes.is_empty() {
            return Err(Error::InvalidArgument("need one eigenvalue per mode".into()));
        }
        if modes.iter().any(|m| m.len() != grid.len()) {
            return Err(Error::GridMismatch("mode length differs from grid size".into()));
        }
        let residuals = vec![0.0; modes.len()];
        Ok(Self { grid, modes, eigenvalues, residuals })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        &self.modes[j]
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn field(&self, j: usize) -> Field2D {
        Field2D::from_real(self.grid, &self.modes[j]).expect("finite mode")
    }

    /// `∫ φ_i φ_j`.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.len();
        let area = self.grid.cell_area();
        DMatrix::from_fn(m, m, |i, j| {
            area * self.modes[i].iter().zip(&self.modes[j]).map(|(a, b)| a * b).sum::<f64>()
        })
    }

    /// Keeps the first `m` modes.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.len());
        Self {
            grid: self.grid,
            modes: self.modes[..m].to_vec(),
            eigenvalues: self.eigenvalues[..m].to_vec(),
            residuals: self.residuals[..m].to_vec(),
        }
    }
}

/// `h v` for a real grid vector, with the unshifted potential.
pub(crate) fn apply_h(grid: &Grid2D, potential: &[f64], v: &[f64]) -> Vec<f64> {
    let vc: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.neg_laplacian(&vc)
        .iter()
        .zip(v)
        .zip(potential)
        .map(|((l, x), p)| l.re + p * x)
        .collect()
}

fn apply_block(grid: &Grid2D, potential: &[f64], block: &DMatrix<f64>) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..block.ncols())
        .into_par_iter()
        .map(|j| apply_h(grid, potential, block.column(j).as_slice()))
        .collect();
    DMatrix::from_fn(block.nrows(), block.ncols(), |i, j| cols[j][i])
}

fn precondition_block(grid: &Grid2D, block: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..block.ncols())
        .into_par_iter()
        .map(|j| {
            let vc: Vec<Complex64> =
                block.column(j).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            grid.apply_symbol(&vc, |ix, iy| 1.0 / (shift + grid.laplacian_symbol(ix, iy)))
                .into_iter()
                .map(|z| z.re)
                .collect()
        })
        .collect();
    DMatrix::from_fn(block.nrows(), block.ncols(), |i, j| cols[j][i])
}

/// `T` with `(S T)ᵀ (S T) ≈ I`, dropping numerically dependent directions.
fn svqb(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let n = gram.nrows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / gram[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * gram[(i, j)] * d[j]);
    let eig = SymmetricEigen::new(0.5 * (&scaled + scaled.transpose()));
    let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 1e-10 * top).collect();
    DMatrix::from_fn(n, keep.len(), |i, c| {
        let k = keep[c];
        d[i] * eig.eigenvectors[(i, k)] / eig.eigenvalues[k].sqrt()
    })
}

/// Ritz pairs of `span S` sorted ascending, as `(S C, H S C, values)`.
fn rayleigh_ritz(s: &DMatrix<f64>, hs: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    // two orthonormalization passes keep the basis orthonormal to roundoff
    let t1 = svqb(&(s.transpose() * s));
    let q1 = s * &t1;
    let t2 = svqb(&(q1.transpose() * &q1));
    let t = t1 * t2;
    let q = s * &t;
    let hq = hs * &t;
    let a = q.transpose() * &hq;
    let eig = SymmetricEigen::new(0.5 * (&a + a.transpose()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, c| {
        eig.eigenvectors[(i, order[c])]
    });
    (q * &vectors, hq * &vectors, order.iter().map(|&k| eig.eigenvalues[k]).collect())
}

fn normalize_columns(block: &mut DMatrix<f64>) {
    for mut col in block.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// The `m` lowest eigenpairs of `h = −Δ + V` (no vector potential).
pub fn one_body_modes(params: &ModelParams, m: usize) -> Result<ModeBasis> {
    one_body_modes_with(params, m, &EigenOptions::default())
}

pub fn one_body_modes_with(
    params: &ModelParams,
    m: usize,
    options: &EigenOptions,
) -> Result<ModeBasis> {
    if params.vector_potential().is_some() {
        return Err(Error::InvalidArgument(
            "many-body modes are only available without a vector potential".into(),
        ));
    }
    if m == 0 || m > options.max_modes {
        return Err(Error::InvalidArgument(format!(
            "number of modes must lie in 1..={}, got {m}",
            options.max_modes
        )));
    }
    let grid = *params.grid();
    let n = grid.len();
    let block = (m + (m / 4).max(4)).min(n / 3);
    if block < m {
        return Err(Error::InvalidArgument(format!("grid too small for {m} modes")));
    }
    let potential = params.potential_values();
    let shift = 1.0 + params.potential_shift();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let start = DMatrix::from_fn(n, block, |i, _| {
        let (px, py) = grid.position(i);
        rng.random_range(-1.0..1.0) * (-(px * px + py * py) / 8.0).exp()
    });
    let h_start = apply_block(&grid, &potential, &start);
    let (mut x, mut hx, mut theta) = rayleigh_ritz(&start, &h_start);
    x = x.columns(0, block).into_owned();
    hx = hx.columns(0, block).into_owned();
    theta.truncate(block);

    let mut p: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    for iteration in 0..options.max_iterations {
        let r = &hx - &x * DMatrix::from_diagonal(&DVector::from_vec(theta.clone()));
        let residuals: Vec<f64> = (0..block).map(|j| r.column(j).norm()).collect();
        if residuals[..m].iter().all(|&v| v <= options.tolerance) {
            log::debug!("modes converged after {iteration} iterations");
            break;
        }
        // soft locking: converged columns stop contributing search directions
        let active: Vec<usize> = (0..block).filter(|&j| residuals[j] > 0.1 * options.tolerance).collect();
        let mut r_active = r.select_columns(active.iter());
        normalize_columns(&mut r_active);
        let mut w = precondition_block(&grid, &r_active, shift);
        normalize_columns(&mut w);
        let hw = apply_block(&grid, &potential, &w);

        let (s, hs) = match &p {
            Some((pp, hp)) => (concat(&[&x, &w, pp]), concat(&[&hx, &hw, hp])),
            None => (concat(&[&x, &w]), concat(&[&hx, &hw])),
        };
        let (q, _, values) = rayleigh_ritz(&s, &hs);
        if q.ncols() < block {
            return Err(Error::NotConverged(format!(
                "eigensolver search space collapsed to {} directions",
                q.ncols()
            )));
        }
        let x_new = q.columns(0, block).into_owned();
        // recomputing H X keeps it from drifting away from X
        let hx_new = apply_block(&grid, &potential, &x_new);
        // P: the new iterate minus its component along the old X
        let overlap = x.transpose() * &x_new;
        let mut pp = &x_new - &x * &overlap;
        let keep: Vec<usize> = active.iter().copied().filter(|&j| pp.column(j).norm() > 1e-14).collect();
        pp = pp.select_columns(keep.iter());
        normalize_columns(&mut pp);
        let hp = apply_block(&grid, &potential, &pp);
        p = if pp.ncols() > 0 { Some((pp, hp)) } else { None };
        x = x_new;
        hx = hx_new;
        theta = values[..block].to_vec();
    }

    // Final Rayleigh–Ritz on the converged block.
    let (x, hx, values) = rayleigh_ritz(&x, &hx);
    let x = x.columns(0, m).into_owned();
    let hx = hx.columns(0, m).into_owned();
    let h = grid.spacing();
    let mut modes = Vec::with_capacity(m);
    let mut final_residuals = Vec::with_capacity(m);
    for j in 0..m {
        let col = x.column(j);
        let res = (hx.column(j) - col * values[j]).norm() / col.norm();
        final_residuals.push(res);
        let mut mode: Vec<f64> = col.iter().map(|v| v / (col.norm() * h)).collect();
        let sign = if j == 0 {
            mode.iter().sum::<f64>()
        } else {
            *mode.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(&1.0)
        };
        if sign < 0.0 {
            mode.iter_mut().for_each(|v| *v = -*v);
        }
        modes.push(mode);
    }
    let worst = final_residuals.iter().copied().fold(0.0f64, f64::max);
    if worst > ACCEPTABLE_RESIDUAL {
        return Err(Error::NotConverged(format!(
            "one-body eigensolver residual {worst:.3e} exceeds {ACCEPTABLE_RESIDUAL:.0e}"
        )));
    }
    if worst > options.tolerance {
        log::warn!("one-body eigensolver stopped at residual {worst:.3e}");
    }
    Ok(ModeBasis { grid, modes, eigenvalues: values[..m].to_vec(), residuals: final_residuals })
}

fn concat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(*b);
        offset += b.ncols();
    }
    out
}
