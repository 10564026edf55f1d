//! Uniform periodic grids on `[-R, R)²` and the spectral calculus built on them.
//!
//! Points are stored row-major with the `y` index outermost: the value at
//! `(x_i, y_j)` lives at `j * n + i`, where `x_i = -R + i·h` and `h = 2R/n`.
//! Derivatives are spectral; the Nyquist frequency is dropped from first
//! derivatives so that `i∂` stays a Hermitian operator on the grid.

mod fft;
pub mod io;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use fft::Fft2D;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A square periodic box `[-R, R)²` sampled with `n × n` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    half_extent: f64,
    points_per_side: usize,
}

impl Default for Grid2D {
    fn default() -> Self {
        Self { half_extent: 8.0, points_per_side: 256 }
    }
}

impl Grid2D {
    pub fn new(half_extent: f64, points_per_side: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half extent must be positive and finite, got {half_extent}"
            )));
        }
        if points_per_side < 4 || !points_per_side.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "points per side must be a power of two >= 4, got {points_per_side}"
            )));
        }
        Ok(Self { half_extent, points_per_side })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.points_per_side as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Total number of grid points, `n²`.
    pub fn len(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    /// Physical position of the flat index `idx`.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let n = self.points_per_side;
        (self.coordinate(idx % n), self.coordinate(idx / n))
    }

    /// Signed angular wavenumber of spectral index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.points_per_side as isize;
        let j = i as isize;
        let j = if j < n / 2 { j } else { j - n };
        std::f64::consts::PI * j as f64 / self.half_extent
    }

    /// Wavenumber used for first derivatives (Nyquist mode removed).
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.points_per_side / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Symbol of `-Δ` consistent with the first-derivative convention.
    pub fn laplacian_symbol(&self, ix: usize, iy: usize) -> f64 {
        let kx = self.derivative_wavenumber(ix);
        let ky = self.derivative_wavenumber(iy);
        kx * kx + ky * ky
    }

    pub fn sample<T>(&self, f: impl Fn(f64, f64) -> T) -> Vec<T> {
        (0..self.len())
            .map(|idx| {
                let (x, y) = self.position(idx);
                f(x, y)
            })
            .collect()
    }

    pub fn ensure_same(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[-{}, {})² with {} points vs [-{}, {})² with {} points",
                self.half_extent,
                self.half_extent,
                self.points_per_side,
                other.half_extent,
                other.half_extent,
                other.points_per_side
            )))
        }
    }

    fn ensure_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "array of length {len} on a grid with {} points",
                self.len()
            )))
        }
    }

    pub fn fft(&self) -> Fft2D {
        Fft2D::new(self.points_per_side)
    }

    /// Forward transform of `values`.
    pub fn to_spectral(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.fft().forward(&mut data);
        data
    }

    /// Inverse transform including the `1/n²` normalization.
    pub fn from_spectral(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.fft().inverse(&mut spectrum);
        let scale = 1.0 / self.len() as f64;
        spectrum.iter_mut().for_each(|z| *z *= scale);
        spectrum
    }

    /// Applies the real Fourier multiplier `symbol(ix, iy)` to `values`.
    pub fn apply_symbol(
        &self,
        values: &[Complex64],
        symbol: impl Fn(usize, usize) -> f64,
    ) -> Vec<Complex64> {
        let n = self.points_per_side;
        let mut spectrum = self.to_spectral(values);
        for iy in 0..n {
            for ix in 0..n {
                spectrum[iy * n + ix] *= symbol(ix, iy);
            }
        }
        self.from_spectral(spectrum)
    }

    /// `-Δ` applied spectrally.
    pub fn neg_laplacian(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.apply_symbol(values, |ix, iy| self.laplacian_symbol(ix, iy))
    }

    /// `∫ f` for a real array on this grid.
    pub fn integrate_real(&self, values: &[f64]) -> Result<f64> {
        self.ensure_len(values.len())?;
        check_finite_real(values)?;
        Ok(self.cell_area() * values.iter().sum::<f64>())
    }

    /// `∫ f` for a complex array on this grid.
    pub fn integrate_complex(&self, values: &[Complex64]) -> Result<Complex64> {
        self.ensure_len(values.len())?;
        check_finite(values)?;
        Ok(values.iter().sum::<Complex64>() * self.cell_area())
    }

    /// Continuum-scaled periodic convolution `(f ∗ g)(x) = ∫ f(y) g(x − y) dy`.
    ///
    /// Arrays are interpreted as samples at the grid positions, so the
    /// kernel argument `x − y` is re-centred onto the grid by a half-period
    /// shift.
    pub fn convolve(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.ensure_len(f.len())?;
        self.ensure_len(g.len())?;
        check_finite_real(f)?;
        check_finite_real(g)?;
        let n = self.points_per_side;
        let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let gc: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut fs = self.to_spectral(&fc);
        let gs = self.to_spectral(&gc);
        let area = self.cell_area();
        for iy in 0..n {
            for ix in 0..n {
                let idx = iy * n + ix;
                let sign = if (ix + iy) % 2 == 0 { area } else { -area };
                fs[idx] *= gs[idx] * sign;
            }
        }
        Ok(self.from_spectral(fs).into_iter().map(|z| z.re).collect())
    }

    /// Convolution of `rho` with a kernel given by its continuum Fourier
    /// transform `kernel_hat(kx, ky) = ∫ w(x) e^{-ik·x} dx`.
    pub fn convolve_spectral(
        &self,
        rho: &[f64],
        kernel_hat: impl Fn(f64, f64) -> f64,
    ) -> Result<Vec<f64>> {
        self.ensure_len(rho.len())?;
        let rc: Vec<Complex64> = rho.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let out = self.apply_symbol(&rc, |ix, iy| {
            kernel_hat(self.wavenumber(ix), self.wavenumber(iy))
        });
        Ok(out.into_iter().map(|z| z.re).collect())
    }
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_finite_real(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A complex field on a [`Grid2D`] with its cached `L²` mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<Complex64>,
    mass: f64,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        grid.ensure_len(values.len())?;
        check_finite(&values)?;
        let mass = grid.cell_area() * values.iter().map(|z| z.norm_sqr()).sum::<f64>();
        Ok(Self { grid, values, mass })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn from_real(grid: Grid2D, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![ZERO; grid.len()], mass: 0.0 }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `∫ |u|²`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn norm(&self) -> f64 {
        self.mass.sqrt()
    }

    /// `⟨self, other⟩ = ∫ conj(self)·other`.
    pub fn inner(&self, other: &Field2D) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_area())
    }

    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|z| z * factor).collect())
    }

    /// Pointwise `|u|²`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `∫ |u|⁴`.
    pub fn quartic(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()
    }

    /// Mass computed from the Fourier coefficients (Parseval).
    pub fn spectral_mass(&self) -> f64 {
        let spectrum = self.grid.to_spectral(&self.values);
        let n2 = self.grid.len() as f64;
        self.grid.cell_area() * spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() / n2
    }

    /// Cyclic shift by whole grid cells.
    pub fn translated(&self, dx: isize, dy: isize) -> Self {
        let n = self.grid.points_per_side() as isize;
        let mut out = vec![ZERO; self.values.len()];
        for iy in 0..n {
            for ix in 0..n {
                let tx = (ix + dx).rem_euclid(n);
                let ty = (iy + dy).rem_euclid(n);
                out[(ty * n + tx) as usize] = self.values[(iy * n + ix) as usize];
            }
        }
        Self { grid: self.grid, values: out, mass: self.mass }
    }
}

/// A real vector potential `(A₁, A₂)` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2D {
    grid: Grid2D,
    components: [Vec<f64>; 2],
}

impl VectorField2D {
    pub fn new(grid: Grid2D, a1: Vec<f64>, a2: Vec<f64>) -> Result<Self> {
        grid.ensure_len(a1.len())?;
        grid.ensure_len(a2.len())?;
        check_finite_real(&a1)?;
        check_finite_real(&a2)?;
        Ok(Self { grid, components: [a1, a2] })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let pairs = grid.sample(f);
        let (a1, a2) = pairs.into_iter().unzip();
        Self::new(grid, a1, a2)
    }

    pub fn constant(grid: Grid2D, c1: f64, c2: f64) -> Result<Self> {
        Self::new(grid, vec![c1; grid.len()], vec![c2; grid.len()])
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    /// `Σ_j |A_j|²` pointwise.
    pub fn magnitude_squared(&self) -> Vec<f64> {
        self.components[0]
            .iter()
            .zip(&self.components[1])
            .map(|(a, b)| a * a + b * b)
            .collect()
    }
}

/// `∫ f` on the grid of `f`.
pub fn integrate(f: &Field2D) -> Complex64 {
    f.values.iter().sum::<Complex64>() * f.grid.cell_area()
}

/// Covariant derivatives `D_j u = i∂_j u + A_j u`, `j = 1, 2`.
fn covariant_derivatives(u: &Field2D, potential: Option<&VectorField2D>) -> [Vec<Complex64>; 2] {
    let grid = &u.grid;
    let spectrum = grid.to_spectral(&u.values);
    let n = grid.points_per_side();
    let mut out = [Vec::new(), Vec::new()];
    for (axis, slot) in out.iter_mut().enumerate() {
        let mut s = spectrum.clone();
        for iy in 0..n {
            for ix in 0..n {
                let k = if axis == 0 {
                    grid.derivative_wavenumber(ix)
                } else {
                    grid.derivative_wavenumber(iy)
                };
                // i · (ik) = −k
                s[iy * n + ix] *= -k;
            }
        }
        let mut d = grid.from_spectral(s);
        if let Some(a) = potential {
            for (dv, (uv, av)) in d.iter_mut().zip(u.values.iter().zip(a.component(axis))) {
                *dv += uv * av;
            }
        }
        *slot = d;
    }
    out
}

/// `∫ |(i∇ + A)u|²`, reducing to `∫ |∇u|²` without a vector potential.
pub fn kinetic_energy(u: &Field2D, potential: Option<&VectorField2D>) -> Result<f64> {
    let grid = &u.grid;
    match potential {
        None => {
            let spectrum = grid.to_spectral(&u.values);
            let n = grid.points_per_side();
            let mut sum = 0.0;
            for iy in 0..n {
                for ix in 0..n {
                    sum += grid.laplacian_symbol(ix, iy) * spectrum[iy * n + ix].norm_sqr();
                }
            }
            Ok(grid.cell_area() * sum / grid.len() as f64)
        }
        Some(a) => {
            grid.ensure_same(a.grid())?;
            let d = covariant_derivatives(u, Some(a));
            let sum: f64 = d.iter().flat_map(|c| c.iter().map(|z| z.norm_sqr())).sum();
            Ok(grid.cell_area() * sum)
        }
    }
}

/// The magnetic Laplacian `(i∇ + A)² u`, assembled as `Σ_j D_j D_j u` so that
/// it is exactly the operator whose quadratic form is [`kinetic_energy`].
pub fn magnetic_laplacian(u: &Field2D, potential: Option<&VectorField2D>) -> Result<Vec<Complex64>> {
    match potential {
        None => Ok(u.grid.neg_laplacian(&u.values)),
        Some(a) => {
            u.grid.ensure_same(a.grid())?;
            let d = covariant_derivatives(u, Some(a));
            let mut total = vec![ZERO; u.values.len()];
            for (axis, component) in d.into_iter().enumerate() {
                let field = Field2D { grid: u.grid, values: component, mass: 0.0 };
                let dd = covariant_derivatives(&field, Some(a));
                total.iter_mut().zip(&dd[axis]).for_each(|(t, v)| *t += v);
            }
            Ok(total)
        }
    }
}

/// Rescales `u` to unit mass.
pub fn normalize(u: &Field2D) -> Result<Field2D> {
    if u.mass <= 0.0 {
        return Err(Error::InvalidArgument("cannot normalize a zero field".into()));
    }
    let scale = 1.0 / u.mass.sqrt();
    let values: Vec<Complex64> = u.values.iter().map(|z| z * scale).collect();
    Field2D::new(u.grid, values)
}

/// Five-point finite-difference `-Δ` on the periodic grid.
pub fn finite_difference_neg_laplacian(grid: &Grid2D, values: &[Complex64]) -> Vec<Complex64> {
    let n = grid.points_per_side();
    let h2 = grid.cell_area();
    let at = |ix: usize, iy: usize| values[(iy % n) * n + (ix % n)];
    let mut out = vec![ZERO; values.len()];
    for iy in 0..n {
        for ix in 0..n {
            let c = at(ix, iy);
            let s = at(ix + 1, iy) + at(ix + n - 1, iy) + at(ix, iy + 1) + at(ix, iy + n - 1);
            out[iy * n + ix] = (c * 4.0 - s) / h2;
        }
    }
    out
}
