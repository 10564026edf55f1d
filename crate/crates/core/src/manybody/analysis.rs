//! Observables of many-body states in a truncated mode basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fock::{one_body_density, two_body_density, FockBasis, SymmetricState};
use super::modes::ModeBasis;
use super::tensor::{two_body_tensor, two_body_tensor_sampled, TwoBodyTensor};
use crate::error::{Error, Result};
use crate::functionals::{sample_scaled, InteractionProfile};

/// `(Tr hγ^(1), Tr (h⊗h)γ^(2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
}

pub fn moments(basis: &FockBasis, psi: &SymmetricState, eigenvalues: &[f64]) -> Result<Moments> {
    let m = basis.modes();
    if eigenvalues.len() != m {
        return Err(Error::InvalidArgument("one eigenvalue per mode required".into()));
    }
    let g1 = one_body_density(basis, psi)?;
    let m1 = (0..m).map(|i| eigenvalues[i] * g1[(i, i)].re).sum();
    let m2 = if basis.particles() >= 2 {
        let g2 = two_body_density(basis, psi)?;
        (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| eigenvalues[i] * eigenvalues[j] * g2[(i * m + j, i * m + j)].re)
            .sum()
    } else {
        0.0
    };
    Ok(Moments { m1, m2 })
}

/// `Tr(K₂ γ^(2))` with `K₂ = ½(h_x + h_y + W)`, the energy per particle of
/// any state with two-body density `γ^(2)`.
pub fn two_body_energy(
    gamma2: &DMatrix<Complex64>,
    eigenvalues: &[f64],
    tensor: &TwoBodyTensor,
) -> f64 {
    let m = tensor.modes();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = i * m + j;
            total += 0.5 * (eigenvalues[i] + eigenvalues[j]) * gamma2[(p, p)].re;
            for k in 0..m {
                for l in 0..m {
                    let w = tensor.get(i, j, k, l);
                    if w != 0.0 {
                        total += 0.5 * w * gamma2[(k * m + l, p)].re;
                    }
                }
            }
        }
    }
    total
}

/// Error terms of the second ground-state lower bound with unit constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundTerms {
    /// `L^{1+δ} d / N`
    pub term_dim: f64,
    /// `L^{−1/4+δ/2} m1^{1/4−δ/2} m2^{1/2+δ}`
    pub term_moment: f64,
    pub d: usize,
}

pub fn gse2_error_terms(
    moments: Moments,
    cutoff: f64,
    delta: f64,
    particles: usize,
    d: usize,
) -> Result<LowerBoundTerms> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    if !(cutoff >= 1.0) {
        return Err(Error::InvalidArgument(format!("cutoff L must be >= 1, got {cutoff}")));
    }
    if particles == 0 {
        return Err(Error::InvalidArgument("particle number must be positive".into()));
    }
    let term_dim = cutoff.powf(1.0 + delta) * d as f64 / particles as f64;
    let term_moment = cutoff.powf(-0.25 + delta / 2.0)
        * moments.m1.max(0.0).powf(0.25 - delta / 2.0)
        * moments.m2.max(0.0).powf(0.5 + delta);
    Ok(LowerBoundTerms { term_dim, term_moment, d })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorForm {
    /// `|W(x−y)| ≤ C ‖W‖₂ h_x`
    OneBody,
    /// `|W(x−y)| ≤ C ‖W‖₁ (h_x h_y)^{1/2+δ}`
    TwoBody,
    /// `±(h_x W + W h_x) ≤ C ‖W‖₂ h_x h_y`
    Commutator,
}

/// Best constant of an operator inequality on the truncated two-body space
/// `span{φ_i ⊗ φ_j}`, normalized by the relevant norm of `λ²w(λ·)`.
pub fn operator_constant(
    basis: &ModeBasis,
    w: &InteractionProfile,
    lambda: f64,
    form: OperatorForm,
    delta: Option<f64>,
) -> Result<f64> {
    let exponent = match form {
        OperatorForm::TwoBody => {
            let delta = delta.ok_or_else(|| {
                Error::InvalidArgument("the two-body form needs delta in (0, 1/2)".into())
            })?;
            if !(delta > 0.0 && delta < 0.5) {
                return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2), got {delta}")));
            }
            0.5 + delta
        }
        _ => 0.0,
    };
    if w.is_zero() {
        return Ok(0.0);
    }
    let grid = basis.grid();
    let samples = sample_scaled(w, lambda, grid)?;
    let l1 = grid.cell_area() * samples.iter().map(|v| v.abs()).sum::<f64>();
    let l2 = (grid.cell_area() * samples.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if l2 == 0.0 {
        return Ok(0.0);
    }
    let eps = basis.eigenvalues();
    if eps.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument(
            "operator constants need a positive one-body operator".into(),
        ));
    }
    let m = basis.len();
    let tensor = match form {
        OperatorForm::Commutator => two_body_tensor(basis, w, lambda)?,
        _ => match w.absolute() {
            Some(abs) => two_body_tensor(basis, &abs, lambda)?,
            None => {
                let abs: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
                two_body_tensor_sampled(basis, &abs)?
            }
        },
    };
    let wm = tensor.matrix();
    let hx = |p: usize| eps[p / m];
    let hy = |p: usize| eps[p % m];
    let n = m * m;
    let (matrix, norm) = match form {
        OperatorForm::OneBody => {
            (DMatrix::from_fn(n, n, |p, q| wm[(p, q)] / (hx(p) * hx(q)).sqrt()), l2)
        }
        OperatorForm::TwoBody => {
            let s = |p: usize| (hx(p) * hy(p)).powf(exponent / 2.0);
            (DMatrix::from_fn(n, n, |p, q| wm[(p, q)] / (s(p) * s(q))), l1)
        }
        OperatorForm::Commutator => {
            let s = |p: usize| (hx(p) * hy(p)).sqrt();
            (DMatrix::from_fn(n, n, |p, q| (hx(p) + hx(q)) * wm[(p, q)] / (s(p) * s(q))), l2)
        }
    };
    let eig = SymmetricEigen::new(0.5 * (&matrix + matrix.transpose()));
    let top = match form {
        OperatorForm::Commutator => eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        _ => eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(top / norm)
}

/// Result of minimizing the Hartree energy over unit vectors of the span.
#[derive(Clone, Debug)]
pub struct SpanHartree {
    pub energy: f64,
    pub coefficients: Vec<Complex64>,
}

fn span_energy(c: &[Complex64], eps: &[f64], tensor: &TwoBodyTensor) -> (f64, Vec<Complex64>) {
    let m = c.len();
    // pair amplitudes c_k c_l
    let mut grad: Vec<Complex64> = c.iter().zip(eps).map(|(z, e)| z * e).collect();
    let mut energy: f64 = c.iter().zip(eps).map(|(z, e)| e * z.norm_sqr()).sum();
    let mut quartic = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let cij = c[i].conj() * c[j].conj();
            let mut inner = Complex64::new(0.0, 0.0);
            for k in 0..m {
                for l in 0..m {
                    let w = tensor.get(i, j, k, l);
                    if w != 0.0 {
                        inner += c[k] * c[l] * w;
                    }
                }
            }
            quartic += cij * inner;
            // ∂/∂c̄_i of ½ Σ W c̄_i c̄_j c_k c_l = Σ W c̄_j c_k c_l
            grad[i] += c[j].conj() * inner;
        }
    }
    energy += 0.5 * quartic.re;
    (energy, grad)
}

fn descend_span(
    mut c: Vec<Complex64>,
    eps: &[f64],
    tensor: &TwoBodyTensor,
) -> (f64, Vec<Complex64>) {
    let normalize = |v: &mut Vec<Complex64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
    };
    normalize(&mut c);
    let scale = eps.iter().copied().fold(1.0f64, f64::max);
    let mut step = 0.5 / scale;
    let (mut e, mut g) = span_energy(&c, eps, tensor);
    for _ in 0..20_000 {
        let mu: Complex64 = c.iter().zip(&g).map(|(a, b)| a.conj() * b).sum();
        let r: Vec<Complex64> = g.iter().zip(&c).map(|(a, b)| a - b * mu.re).collect();
        let rn2: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        if rn2.sqrt() < 1e-13 {
            break;
        }
        let mut accepted = false;
        while step > 1e-16 {
            let mut trial: Vec<Complex64> = c.iter().zip(&r).map(|(a, b)| a - b * step).collect();
            normalize(&mut trial);
            let (et, gt) = span_energy(&trial, eps, tensor);
            if et <= e - 1e-4 * step * rn2 || (et <= e && rn2 < 1e-20) {
                c = trial;
                e = et;
                g = gt;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (e, c)
}

/// `min_{‖c‖=1} Σ ε_i|c_i|² + ½ Σ W[i,j,k,l] c̄_i c̄_j c_k c_l`, the Hartree
/// energy restricted to the span of the basis, from several starting points.
pub fn hartree_in_span(eigenvalues: &[f64], tensor: &TwoBodyTensor, seed: u64) -> Result<SpanHartree> {
    let m = tensor.modes();
    if eigenvalues.len() != m {
        return Err(Error::InvalidArgument("one eigenvalue per mode required".into()));
    }
    let mut starts: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..m.min(4) {
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        c[j] = Complex64::new(1.0, 0.0);
        c.iter_mut().enumerate().for_each(|(i, z)| *z += 1e-3 * (i as f64 + 1.0));
        starts.push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..12 {
        starts.push(
            (0..m)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect(),
        );
    }
    let best = starts
        .into_iter()
        .map(|c| descend_span(c, eigenvalues, tensor))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    Ok(SpanHartree { energy: best.0, coefficients: best.1 })
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(matrix: &DMatrix<Complex64>) -> DVector<f64> {
    let sym = (matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    DVector::from_vec(values)
}
