//! Second-quantized Hamiltonian on the occupation basis and its ground state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fock::{FockBasis, SymmetricState};
use super::tensor::TwoBodyTensor;
use crate::error::{Error, Result};

/// Default cap on the symmetric-space dimension.
pub const DIMENSION_CAP: usize = 200_000;

/// Real symmetric sparse matrix in CSR form.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    basis: FockBasis,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn dimension(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let range = self.row_start[r]..self.row_start[r + 1];
            *out = self.cols[range.clone()].iter().zip(&self.vals[range]).map(|(&c, v)| v * x[c]).sum();
        });
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let range = self.row_start[r]..self.row_start[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut out = DMatrix::zeros(n, n);
        for r in 0..n {
            for idx in self.row_start[r]..self.row_start[r + 1] {
                out[(r, self.cols[idx])] = self.vals[idx];
            }
        }
        out
    }

    /// `max |H[r,c] − H[c,r]|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dimension() {
            for idx in self.row_start[r]..self.row_start[r + 1] {
                let c = self.cols[idx];
                worst = worst.max((self.vals[idx] - self.entry(c, r)).abs());
            }
        }
        worst
    }
}

/// `Σ (1−ε) ε_j n_j + (1/(2(N−1))) Σ W[i,j,k,l] a†_i a†_j a_l a_k`.
pub fn assemble_hamiltonian(
    eigenvalues: &[f64],
    tensor: &TwoBodyTensor,
    particles: usize,
    epsilon: f64,
    cap: usize,
) -> Result<SparseHamiltonian> {
    let m = tensor.modes();
    if eigenvalues.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} one-body energies for a tensor over {m} modes",
            eigenvalues.len()
        )));
    }
    if particles < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2 particles, got {particles}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let basis = FockBasis::new(m, particles, cap)?;
    let dim = basis.len();
    let coupling = 1.0 / (2.0 * (particles as f64 - 1.0));
    let interacting = !tensor.is_zero();

    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .map(|row| {
            let occ = basis.occupation(row);
            let mut entries: Vec<(usize, f64)> = Vec::new();
            let diag: f64 = occ.iter().zip(eigenvalues).map(|(&n, e)| (1.0 - epsilon) * e * n as f64).sum();
            entries.push((row, diag));
            if interacting {
                let mut work = occ.to_vec();
                for k in 0..m {
                    if work[k] == 0 {
                        continue;
                    }
                    let ak = (work[k] as f64).sqrt();
                    work[k] -= 1;
                    for l in 0..m {
                        if work[l] == 0 {
                            continue;
                        }
                        let al = (work[l] as f64).sqrt();
                        work[l] -= 1;
                        for j in 0..m {
                            let cj = ((work[j] + 1) as f64).sqrt();
                            work[j] += 1;
                            for i in 0..m {
                                let w = tensor.get(i, j, k, l);
                                if w != 0.0 {
                                    let ci = ((work[i] + 1) as f64).sqrt();
                                    work[i] += 1;
                                    let col = basis.index_of(&work);
                                    work[i] -= 1;
                                    entries.push((col, coupling * w * ak * al * cj * ci));
                                }
                            }
                            work[j] -= 1;
                        }
                        work[l] += 1;
                    }
                    work[k] += 1;
                }
            }
            // `entries` holds ⟨col|H|row⟩; keep the upper triangle only
            entries.retain(|&(col, _)| col >= row);
            entries.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged
        })
        .collect();

    // mirror the upper triangle for exact symmetry
    let mut full: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            full[r].push((c, v));
            if c != r {
                full[c].push((r, v));
            }
        }
    }
    let mut row_start = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_start.push(0);
    for mut row in full {
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_start.push(cols.len());
    }
    Ok(SparseHamiltonian { basis, row_start, cols, vals })
}

/// Lowest eigenpair of a many-body Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    /// Ground energy per particle.
    pub energy_per_particle: f64,
    pub eigenvalue: f64,
    pub state: SymmetricState,
    pub residual: f64,
}

const GROUND_TOLERANCE: f64 = 1e-9;
const DENSE_LIMIT: usize = 600;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_of(h: &SparseHamiltonian, x: &[f64], theta: f64) -> f64 {
    let mut hx = vec![0.0; x.len()];
    h.apply(x, &mut hx);
    hx.iter().zip(x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization, restarted from the Ritz vector.
fn lanczos(h: &SparseHamiltonian, seed: u64) -> Result<(f64, Vec<f64>, f64)> {
    let n = h.dimension();
    let krylov = n.min(120);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    start[0] += 1.0;
    let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
    for _restart in 0..200 {
        let norm = dot(&start, &start).sqrt();
        let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / norm).collect()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        for j in 0..krylov {
            h.apply(&basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == krylov || b < 1e-14 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        let mut x = vec![0.0; n];
        for (c, v) in basis.iter().enumerate() {
            let coef = eig.eigenvectors[(c, idx)];
            x.iter_mut().zip(v).for_each(|(a, b)| *a += coef * b);
        }
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let residual = residual_of(h, &x, theta);
        if residual < best.2 {
            best = (theta, x.clone(), residual);
        }
        if residual <= GROUND_TOLERANCE {
            break;
        }
        start = x;
    }
    Ok(best)
}

/// Ground state of `H`; `e_N` is the eigenvalue divided by `N`.
pub fn ground_state(h: &SparseHamiltonian) -> Result<GroundState> {
    let n = h.dimension();
    let (theta, mut x, residual) = if n <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(h.to_dense());
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty space");
        let x: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let residual = residual_of(h, &x, theta);
        (theta, x, residual)
    } else {
        lanczos(h, 0)?
    };
    if residual > GROUND_TOLERANCE {
        return Err(Error::NotConverged(format!(
            "many-body ground state residual {residual:.3e} exceeds {GROUND_TOLERANCE:.0e}"
        )));
    }
    // fix the global sign by the largest component
    let pivot = x.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
    if pivot < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let amplitudes = x.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let state = SymmetricState::new(h.basis(), amplitudes)?;
    let particles = h.basis().particles() as f64;
    Ok(GroundState { energy_per_particle: theta / particles, eigenvalue: theta, state, residual })
}

/// `e_{N,ε}`: ground energy per particle of `H_N − ε Σ h_j`.
pub fn perturbed_ground_energy(
    eigenvalues: &[f64],
    tensor: &TwoBodyTensor,
    particles: usize,
    epsilon: f64,
    cap: usize,
) -> Result<f64> {
    let h = assemble_hamiltonian(eigenvalues, tensor, particles, epsilon, cap)?;
    Ok(ground_state(&h)?.energy_per_particle)
}
