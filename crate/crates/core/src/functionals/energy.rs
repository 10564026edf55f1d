use std::collections::BTreeSet;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::{InteractionProfile, ModelParams};
use crate::error::{Error, Result};
use crate::field::{kinetic_energy, magnetic_laplacian, Field2D, Grid2D};

/// Energy split into its three contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
    pub mass: f64,
}

impl EnergyReport {
    fn new(kinetic: f64, potential: f64, interaction: f64, mass: f64) -> Self {
        Self { total: kinetic + potential + interaction, kinetic, potential, interaction, mass }
    }
}

/// Grid samples of `w_N(x) = N^{2β} w(N^β x)`.
///
/// Warns when fewer than three grid points span the scaled core and fails
/// below two.
pub fn scaled_potential(
    w: &InteractionProfile,
    particles: usize,
    beta: f64,
    grid: &Grid2D,
) -> Result<Vec<f64>> {
    if particles < 1 || !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scaled potential needs N >= 1 and beta >= 0, got N = {particles}, beta = {beta}"
        )));
    }
    let lambda = (particles as f64).powf(beta);
    sample_scaled(w, lambda, grid)
}

/// Grid samples of `λ² w(λ x)`.
pub fn sample_scaled(w: &InteractionProfile, lambda: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    check_resolution(w, lambda, grid)?;
    let l2 = lambda * lambda;
    Ok(grid.sample(|x, y| l2 * w.evaluate(lambda * x, lambda * y)))
}

fn check_resolution(w: &InteractionProfile, lambda: f64, grid: &Grid2D) -> Result<()> {
    if w.is_zero() {
        return Ok(());
    }
    let core = 2.0 * w.core_radius() / lambda;
    let across = core / grid.spacing();
    if across < 2.0 {
        let needed = (3.0 * 2.0 * grid.half_extent() / core).ceil() as usize;
        return Err(Error::UnderResolved(format!(
            "scaled interaction core spans {across:.2} grid points at lambda = {lambda}; \
             need at least {} points per side",
            needed.next_power_of_two()
        )));
    }
    if across < 3.0 && first_warning(core, grid) {
        let needed = (3.0 * 2.0 * grid.half_extent() / core).ceil() as usize;
        log::warn!(
            "scaled interaction core spans only {across:.2} grid points at lambda = {lambda}; \
             {} points per side recommended",
            needed.next_power_of_two()
        );
    }
    Ok(())
}

/// Minimizers evaluate the same kernel thousands of times; warn once.
fn first_warning(core: f64, grid: &Grid2D) -> bool {
    static SEEN: Mutex<BTreeSet<(u64, u64)>> = Mutex::new(BTreeSet::new());
    let key = (core.to_bits(), grid.spacing().to_bits());
    SEEN.lock().map(|mut seen| seen.insert(key)).unwrap_or(true)
}

/// `(λ² w(λ·) ∗ ρ)` on the grid.
///
/// Profiles with a closed-form Fourier transform are applied as an exact
/// multiplier, which needs no real-space resolution of the kernel.
pub fn interaction_potential(
    grid: &Grid2D,
    rho: &[f64],
    w: &InteractionProfile,
    lambda: f64,
) -> Result<Vec<f64>> {
    if w.is_zero() {
        return Ok(vec![0.0; rho.len()]);
    }
    if w.has_fourier() {
        grid.convolve_spectral(rho, |kx, ky| {
            w.fourier(kx / lambda, ky / lambda).expect("closed-form transform")
        })
    } else {
        let kernel = sample_scaled(w, lambda, grid)?;
        grid.convolve(rho, &kernel)
    }
}

/// `∬ ρ(x) λ²w(λ(x−y)) ρ(y) dx dy`.
pub fn pair_integral(
    grid: &Grid2D,
    rho: &[f64],
    w: &InteractionProfile,
    lambda: f64,
) -> Result<f64> {
    let conv = interaction_potential(grid, rho, w, lambda)?;
    Ok(grid.cell_area() * rho.iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>())
}

fn ensure_normalized(u: &Field2D) -> Result<()> {
    if (u.mass() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "expected a unit-mass field, got mass {}",
            u.mass()
        )));
    }
    Ok(())
}

fn one_body_parts(u: &Field2D, params: &ModelParams) -> Result<(f64, f64)> {
    params.grid().ensure_same(u.grid())?;
    let kinetic = kinetic_energy(u, params.vector_potential())?;
    let shifted: f64 = u
        .values()
        .iter()
        .zip(params.shifted_potential())
        .map(|(z, v)| z.norm_sqr() * v)
        .sum::<f64>()
        * u.grid().cell_area();
    Ok((kinetic, shifted - params.potential_shift() * u.mass()))
}

/// NLS energy `∫ |(i∇+A)u|² + V|u|² + (a/2)|u|⁴` of a unit-mass field.
pub fn nls_energy(u: &Field2D, params: &ModelParams) -> Result<EnergyReport> {
    ensure_normalized(u)?;
    nls_energy_raw(u, params)
}

/// As [`nls_energy`] without the unit-mass precondition.
pub fn nls_energy_raw(u: &Field2D, params: &ModelParams) -> Result<EnergyReport> {
    let (kinetic, potential) = one_body_parts(u, params)?;
    let interaction = 0.5 * params.coupling() * u.quartic();
    Ok(EnergyReport::new(kinetic, potential, interaction, u.mass()))
}

/// `h u = ((i∇+A)² + V) u` with the unshifted potential.
pub fn apply_one_body(u: &Field2D, params: &ModelParams) -> Result<Vec<Complex64>> {
    params.grid().ensure_same(u.grid())?;
    let mut out = magnetic_laplacian(u, params.vector_potential())?;
    let shift = params.potential_shift();
    for ((o, z), v) in out.iter_mut().zip(u.values()).zip(params.shifted_potential()) {
        *o += z * (v - shift);
    }
    Ok(out)
}

/// `L²` gradient `((i∇+A)² + V + a|u|²) u` of the NLS energy.
///
/// Convention: `E(u + εv) = E(u) + 2ε Re⟨G, v⟩ + O(ε²)`.
pub fn nls_gradient(u: &Field2D, params: &ModelParams) -> Result<Field2D> {
    let mut out = apply_one_body(u, params)?;
    let a = params.coupling();
    for (o, z) in out.iter_mut().zip(u.values()) {
        *o += z * (a * z.norm_sqr());
    }
    Field2D::new(*u.grid(), out)
}

/// Hartree energy with `w_N`, interaction `(1/2)∫ |u|² (w_N ∗ |u|²)`.
pub fn hartree_energy(u: &Field2D, params: &ModelParams) -> Result<EnergyReport> {
    ensure_normalized(u)?;
    hartree_energy_raw(u, params)
}

pub fn hartree_energy_raw(u: &Field2D, params: &ModelParams) -> Result<EnergyReport> {
    let (kinetic, potential) = one_body_parts(u, params)?;
    let rho = u.density();
    let interaction =
        0.5 * pair_integral(u.grid(), &rho, params.interaction(), params.lambda())?;
    Ok(EnergyReport::new(kinetic, potential, interaction, u.mass()))
}

/// `((i∇+A)² + V + w_N ∗ |u|²) u`, same convention as [`nls_gradient`].
pub fn hartree_gradient(u: &Field2D, params: &ModelParams) -> Result<Field2D> {
    let mut out = apply_one_body(u, params)?;
    let conv =
        interaction_potential(u.grid(), &u.density(), params.interaction(), params.lambda())?;
    for ((o, z), c) in out.iter_mut().zip(u.values()).zip(&conv) {
        *o += z * c;
    }
    Field2D::new(*u.grid(), out)
}
