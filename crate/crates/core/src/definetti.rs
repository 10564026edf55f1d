//! De Finetti measures of symmetric states on the unit sphere of a finite
//! mode span, built from the coherent-state lower symbol.
//!
//! The span `P` is the first `d` modes of the state's basis. The state is
//! first localized in Fock space: each occupation splits into `k` particles
//! inside `P` and `N − k` outside, giving `k`-particle states `φ_q` over `P`.
//! The density against the normalized uniform measure on the sphere is
//!
//! `ρ(u) = Σ_k k(k−1)/(N(N−1)) · C(k+d−1, d−1) · Σ_q |⟨u^{⊗k}, φ_q⟩|²`.
//!
//! When the state lives entirely in `P` only `k = N` survives and
//! `ρ(u) = C(N+d−1, d−1) |⟨u^{⊗N}, Ψ⟩|²`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manybody::{
    binomial, hermitian_eigenvalues, one_body_density, two_body_density, FockBasis, SymmetricState,
};

pub const MAX_SPAN: usize = 4;
pub const MAX_PARTICLES: usize = 32;

/// Sphere integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereIntegration {
    /// Gauss–Legendre nodes in `|u₀|²` and trapezoid nodes in the relative
    /// phase, used for `d = 2`.
    pub nodes: usize,
    /// Monte Carlo samples for `d ≥ 3`.
    pub samples: usize,
    pub shards: usize,
    pub seed: u64,
}

impl Default for SphereIntegration {
    fn default() -> Self {
        Self { nodes: 256, samples: 1_000_000, shards: 64, seed: 0 }
    }
}

impl SphereIntegration {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.samples < 2 || self.shards == 0 || self.shards > self.samples {
            return Err(Error::InvalidArgument(format!(
                "sphere integration needs nodes >= 2, samples >= 2 and 1 <= shards <= samples, \
                 got nodes = {}, samples = {}, shards = {}",
                self.nodes, self.samples, self.shards
            )));
        }
        Ok(())
    }
}

/// A value with its estimator standard error (zero for exact quadrature).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Localized `k`-particle component.
#[derive(Clone, Debug)]
struct Sector {
    /// `k(k−1)/(N(N−1)) · C(k+d−1, d−1) / ‖Ψ‖²`.
    weight: f64,
    occupations: Vec<Vec<u16>>,
    /// `√(k!/Π n_i!)` per occupation.
    coefficients: Vec<f64>,
    /// One amplitude vector per outside configuration.
    vectors: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug)]
pub struct DeFinettiMeasure {
    span: usize,
    particles: usize,
    modes: usize,
    sectors: Vec<Sector>,
    mass: Estimate,
    second_moment: DMatrix<Complex64>,
    second_moment_stderr: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

impl DeFinettiMeasure {
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// `∫ dμ`.
    pub fn mass(&self) -> Estimate {
        self.mass
    }

    /// `∫ |u^{⊗2}⟩⟨u^{⊗2}| dμ` on pairs `i·d + j`.
    pub fn second_moment(&self) -> &DMatrix<Complex64> {
        &self.second_moment
    }

    /// Bound on the trace-norm error of [`Self::second_moment`].
    pub fn second_moment_stderr(&self) -> f64 {
        self.second_moment_stderr
    }

    /// Density at a unit vector `u ∈ ℂ^d`.
    pub fn density(&self, u: &[Complex64]) -> Result<f64> {
        if u.len() != self.span {
            return Err(Error::InvalidArgument(format!(
                "density needs a vector of length {}, got {}",
                self.span,
                u.len()
            )));
        }
        let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density needs a unit vector, |u|² = {norm}")));
        }
        Ok(self.density_unchecked(u))
    }

    fn density_unchecked(&self, u: &[Complex64]) -> f64 {
        let top = self.particles;
        let powers: Vec<Vec<Complex64>> = u
            .iter()
            .map(|z| {
                let c = z.conj();
                std::iter::successors(Some(Complex64::new(1.0, 0.0)), |p| Some(p * c))
                    .take(top + 1)
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        for sector in &self.sectors {
            let monomials: Vec<Complex64> = sector
                .occupations
                .iter()
                .zip(&sector.coefficients)
                .map(|(occ, &c)| {
                    occ.iter().enumerate().fold(Complex64::new(c, 0.0), |acc, (i, &n)| acc * powers[i][n as usize])
                })
                .collect();
            let sum: f64 = sector
                .vectors
                .iter()
                .map(|phi| monomials.iter().zip(phi).map(|(m, a)| m * a).sum::<Complex64>().norm_sqr())
                .sum();
            total += sector.weight * sum;
        }
        total
    }
}

/// Measure of `psi` on the sphere of its full mode span.
pub fn lower_symbol_measure(psi: &SymmetricState, options: &SphereIntegration) -> Result<DeFinettiMeasure> {
    lower_symbol_measure_on(psi, psi.modes(), options)
}

/// Measure of `psi` on the sphere of its first `span` modes.
pub fn lower_symbol_measure_on(
    psi: &SymmetricState,
    span: usize,
    options: &SphereIntegration,
) -> Result<DeFinettiMeasure> {
    options.validate()?;
    let n = psi.particles();
    let m = psi.modes();
    if span == 0 || span > MAX_SPAN || span > m {
        return Err(Error::InvalidArgument(format!(
            "span must lie in 1..={}, got d = {span} for a state over {m} modes",
            MAX_SPAN.min(m)
        )));
    }
    if !(2..=MAX_PARTICLES).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "particle number must lie in 2..={MAX_PARTICLES}, got N = {n}"
        )));
    }
    let basis = FockBasis::new(m, n, usize::MAX)?;
    let norm2 = psi.norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("zero state has no de Finetti measure".into()));
    }

    let mut sectors = Vec::new();
    for k in 2..=n {
        let inner = FockBasis::new(span, k, usize::MAX)?;
        let mut outside: HashMap<Vec<u16>, usize> = HashMap::new();
        let mut vectors: Vec<Vec<Complex64>> = Vec::new();
        for (index, amp) in psi.amplitudes().iter().enumerate() {
            let occ = basis.occupation(index);
            let inside = &occ[..span];
            if inside.iter().map(|&v| v as usize).sum::<usize>() != k || amp.norm_sqr() == 0.0 {
                continue;
            }
            let slot = *outside.entry(occ[span..].to_vec()).or_insert_with(|| {
                vectors.push(vec![Complex64::new(0.0, 0.0); inner.len()]);
                vectors.len() - 1
            });
            vectors[slot][inner.index_of(inside)] = *amp;
        }
        if vectors.is_empty() {
            continue;
        }
        let occupations: Vec<Vec<u16>> = (0..inner.len()).map(|i| inner.occupation(i).to_vec()).collect();
        let coefficients = occupations
            .iter()
            .map(|occ| (factorial(k) / occ.iter().map(|&v| factorial(v as usize)).product::<f64>()).sqrt())
            .collect();
        let dimension = binomial((k + span - 1) as u64, (span - 1) as u64) as f64;
        let localization = (k * (k - 1)) as f64 / (n * (n - 1)) as f64;
        sectors.push(Sector {
            weight: localization * dimension / norm2,
            occupations,
            coefficients,
            vectors,
        });
    }

    let mut measure = DeFinettiMeasure {
        span,
        particles: n,
        modes: m,
        sectors,
        mass: Estimate { value: 0.0, stderr: 0.0 },
        second_moment: DMatrix::zeros(span * span, span * span),
        second_moment_stderr: 0.0,
    };
    let moments = integrate(&measure, options);
    measure.mass = moments.mass;
    measure.second_moment = moments.second;
    measure.second_moment_stderr = moments.second_stderr;
    Ok(measure)
}

struct SphereMoments {
    mass: Estimate,
    second: DMatrix<Complex64>,
    second_stderr: f64,
}

/// Running sums of `ρ`, `ρ (u⊗u)(u⊗u)*` and their squares.
#[derive(Clone)]
struct Accumulator {
    weight: f64,
    mass: f64,
    mass_sq: f64,
    second: Vec<Complex64>,
    second_sq: Vec<f64>,
}

impl Accumulator {
    fn new(d: usize) -> Self {
        let size = d * d * d * d;
        Self { weight: 0.0, mass: 0.0, mass_sq: 0.0, second: vec![Complex64::new(0.0, 0.0); size], second_sq: vec![0.0; size] }
    }

    fn add(&mut self, measure: &DeFinettiMeasure, u: &[Complex64], weight: f64) {
        let rho = measure.density_unchecked(u);
        let d = u.len();
        let pair: Vec<Complex64> = (0..d * d).map(|p| u[p / d] * u[p % d]).collect();
        self.weight += weight;
        self.mass += weight * rho;
        self.mass_sq += weight * rho * rho;
        let dd = d * d;
        for p in 0..dd {
            for q in 0..dd {
                let value = pair[p] * pair[q].conj() * rho;
                self.second[p * dd + q] += value * weight;
                self.second_sq[p * dd + q] += weight * value.norm_sqr();
            }
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.weight += other.weight;
        self.mass += other.mass;
        self.mass_sq += other.mass_sq;
        self.second.iter_mut().zip(&other.second).for_each(|(a, b)| *a += b);
        self.second_sq.iter_mut().zip(&other.second_sq).for_each(|(a, b)| *a += b);
        self
    }
}

fn integrate(measure: &DeFinettiMeasure, options: &SphereIntegration) -> SphereMoments {
    let d = measure.span;
    let (acc, samples) = match d {
        1 => {
            let mut acc = Accumulator::new(1);
            acc.add(measure, &[Complex64::new(1.0, 0.0)], 1.0);
            (acc, None)
        }
        2 => (product_quadrature(measure, options.nodes), None),
        _ => (monte_carlo(measure, options), Some(options.samples as f64)),
    };
    let dd = d * d;
    let mean_mass = acc.mass / acc.weight;
    let second = DMatrix::from_fn(dd, dd, |p, q| acc.second[p * dd + q] / acc.weight);
    let second = (&second + second.adjoint()) * Complex64::new(0.5, 0.0);
    let (mass_stderr, second_stderr) = match samples {
        None => (0.0, 0.0),
        Some(n) => {
            let var_mass = (acc.mass_sq / acc.weight - mean_mass * mean_mass).max(0.0);
            let frobenius: f64 = (0..dd * dd)
                .map(|e| {
                    let mean = acc.second[e] / acc.weight;
                    (acc.second_sq[e] / acc.weight - mean.norm_sqr()).max(0.0) / n
                })
                .sum::<f64>()
                .sqrt();
            // ‖X‖₁ ≤ √rank ‖X‖_F with rank ≤ d²
            ((var_mass / n).sqrt(), d as f64 * frobenius)
        }
    };
    SphereMoments { mass: Estimate { value: mean_mass, stderr: mass_stderr }, second, second_stderr }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` by Golub–Welsch.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = eig.eigenvalues[k];
            let w = 2.0 * eig.eigenvectors[(0, k)].powi(2);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes
}

/// `u = (√t, e^{iφ}√(1−t))`: `t` is uniform on `[0, 1]` and the global
/// phase drops out of every integrand.
fn product_quadrature(measure: &DeFinettiMeasure, nodes: usize) -> Accumulator {
    let legendre = gauss_legendre_unit(nodes);
    let rows: Vec<Accumulator> = legendre
        .par_iter()
        .map(|&(t, wt)| {
            let mut acc = Accumulator::new(2);
            for j in 0..nodes {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
                let u = [Complex64::new(t.sqrt(), 0.0), Complex64::from_polar((1.0 - t).sqrt(), phi)];
                acc.add(measure, &u, wt / nodes as f64);
            }
            acc
        })
        .collect();
    rows.iter().fold(Accumulator::new(2), |a, b| a.merge(b))
}

/// Normalized complex Gaussians are uniform on the sphere. Each shard owns
/// a ChaCha stream, so the result depends only on the seed and shard count.
fn monte_carlo(measure: &DeFinettiMeasure, options: &SphereIntegration) -> Accumulator {
    let d = measure.span;
    let shards = options.shards;
    let partials: Vec<Accumulator> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(shard as u64);
            let count = options.samples / shards + usize::from(shard < options.samples % shards);
            let mut acc = Accumulator::new(d);
            let mut u = vec![Complex64::new(0.0, 0.0); d];
            for _ in 0..count {
                for z in u.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *z = Complex64::new(re, im);
                }
                let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                u.iter_mut().for_each(|z| *z /= norm);
                acc.add(measure, &u, 1.0);
            }
            acc
        })
        .collect();
    partials.iter().fold(Accumulator::new(d), |a, b| a.merge(b))
}

fn check_pair(psi: &SymmetricState, measure: &DeFinettiMeasure) -> Result<FockBasis> {
    if psi.particles() != measure.particles || psi.modes() != measure.modes {
        return Err(Error::InvalidArgument(format!(
            "measure built for (M, N) = ({}, {}) used with a state over ({}, {})",
            measure.modes,
            measure.particles,
            psi.modes(),
            psi.particles()
        )));
    }
    FockBasis::new(psi.modes(), psi.particles(), usize::MAX)
}

/// Trace-norm distance between the measure's second moment and the
/// projected two-body density, with the `8d/N` reference bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeFinettiError {
    pub error: f64,
    pub stderr: f64,
    pub bound: f64,
    /// The error bar exceeds a tenth of the bound.
    pub inconclusive: bool,
}

pub fn definetti_error(psi: &SymmetricState, measure: &DeFinettiMeasure) -> Result<DeFinettiError> {
    let basis = check_pair(psi, measure)?;
    let m = psi.modes();
    let d = measure.span;
    let gamma2 = two_body_density(&basis, psi)?;
    let projected = DMatrix::from_fn(d * d, d * d, |p, q| {
        gamma2[((p / d) * m + p % d, (q / d) * m + q % d)]
    });
    let diff = &measure.second_moment - projected;
    let error = hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum();
    let bound = 8.0 * d as f64 / measure.particles as f64;
    let stderr = measure.second_moment_stderr;
    Ok(DeFinettiError { error, stderr, bound, inconclusive: stderr > 0.1 * bound })
}

/// The measure's mass against `(Tr Pγ^(1))²` and the weaker
/// `1 − 2 Tr Qγ^(1)`, with `Q = 1 − P`.
///
/// For the localized construction the mass equals `Tr(P⊗P γ^(2))`, which is
/// at least `1 − 2 Tr Qγ^(1)` but can fall short of the squared form by up to
/// `(Tr Qγ^(1))²` when excitations leave `P` one at a time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassBound {
    pub mass: Estimate,
    pub lower_bound: f64,
    pub linear_bound: f64,
}

pub fn measure_mass_bound(psi: &SymmetricState, measure: &DeFinettiMeasure) -> Result<MassBound> {
    let basis = check_pair(psi, measure)?;
    let gamma1 = one_body_density(&basis, psi)?;
    let inside: f64 = (0..measure.span).map(|i| gamma1[(i, i)].re).sum();
    let inside = inside.clamp(0.0, 1.0);
    Ok(MassBound { mass: measure.mass, lower_bound: inside * inside, linear_bound: 2.0 * inside - 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre_unit(16);
        let integral: f64 = rule.iter().map(|(t, w)| w * t.powi(9)).sum();
        assert!((integral - 0.1).abs() < 1e-14);
    }

    #[test]
    fn product_state_density() {
        let basis = FockBasis::new(2, 5, usize::MAX).unwrap();
        let psi = SymmetricState::product(&basis, 0).unwrap();
        let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
        let u = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let expected = 6.0 * 0.6f64.powi(10);
        assert!((measure.density(&u).unwrap() - expected).abs() < 1e-12);
        assert!((measure.mass().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn caps_are_enforced() {
        let basis = FockBasis::new(5, 2, usize::MAX).unwrap();
        let psi = SymmetricState::product(&basis, 0).unwrap();
        assert!(lower_symbol_measure(&psi, &SphereIntegration::default()).is_err());
        let basis = FockBasis::new(2, 33, usize::MAX).unwrap();
        let psi = SymmetricState::product(&basis, 0).unwrap();
        assert!(lower_symbol_measure(&psi, &SphereIntegration::default()).is_err());
    }
}
