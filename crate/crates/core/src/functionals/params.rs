use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{Grid2D, VectorField2D};

/// External trapping potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `V(x) = |x|^s` with the model's trap exponent.
    Power,
    /// `V ≡ 0`; only meaningful for tests of the kinetic term.
    Zero,
    /// User samples on the model grid.
    Table(Vec<f64>),
}

/// Even two-body interaction profile `w` with integral `a = ∫ w`.
#[derive(Clone, Debug, PartialEq)]
pub enum InteractionProfile {
    /// `(a / πσ²) e^{-|x|²/σ²}`.
    Gaussian { integral: f64, width: f64 },
    /// `(3a / πρ²)(1 − |x|²/ρ²)²` on `|x| < ρ`.
    Bump { integral: f64, radius: f64 },
    /// Samples on a grid, symmetrized on construction; bilinear in between.
    Table { grid: Grid2D, values: Vec<f64> },
    Sum(Vec<InteractionProfile>),
}

impl InteractionProfile {
    pub fn zero() -> Self {
        InteractionProfile::Sum(Vec::new())
    }

    pub fn gaussian(integral: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && integral.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian profile needs finite integral and positive width, got ({integral}, {width})"
            )));
        }
        Ok(InteractionProfile::Gaussian { integral, width })
    }

    pub fn bump(integral: f64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && integral.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bump profile needs finite integral and positive radius, got ({integral}, {radius})"
            )));
        }
        Ok(InteractionProfile::Bump { integral, radius })
    }

    /// Builds a tabulated profile, enforcing `w(x) = w(−x)` by averaging.
    pub fn table(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "interaction table has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let n = grid.points_per_side();
        let mirror = |i: usize| (n - i) % n;
        let symmetric = (0..grid.len())
            .map(|idx| {
                let (ix, iy) = (idx % n, idx / n);
                0.5 * (values[idx] + values[mirror(iy) * n + mirror(ix)])
            })
            .collect();
        Ok(InteractionProfile::Table { grid, values: symmetric })
    }

    /// `a = ∫ w`.
    pub fn integral(&self) -> f64 {
        match self {
            InteractionProfile::Gaussian { integral, .. } => *integral,
            InteractionProfile::Bump { integral, .. } => *integral,
            InteractionProfile::Table { grid, values } => {
                grid.cell_area() * values.iter().sum::<f64>()
            }
            InteractionProfile::Sum(parts) => parts.iter().map(|p| p.integral()).sum(),
        }
    }

    /// `w(x, y)` for the unscaled profile.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        match self {
            InteractionProfile::Gaussian { integral, width } => {
                let s2 = width * width;
                integral / (PI * s2) * (-r2 / s2).exp()
            }
            InteractionProfile::Bump { integral, radius } => {
                let t = r2 / (radius * radius);
                if t >= 1.0 {
                    0.0
                } else {
                    3.0 * integral / (PI * radius * radius) * (1.0 - t) * (1.0 - t)
                }
            }
            InteractionProfile::Table { grid, values } => bilinear(grid, values, x, y),
            InteractionProfile::Sum(parts) => parts.iter().map(|p| p.evaluate(x, y)).sum(),
        }
    }

    /// Closed-form Fourier transform `ŵ(k) = ∫ w(x) e^{-ik·x} dx`, when known.
    pub fn fourier(&self, kx: f64, ky: f64) -> Option<f64> {
        match self {
            InteractionProfile::Gaussian { integral, width } => {
                Some(integral * (-width * width * (kx * kx + ky * ky) / 4.0).exp())
            }
            InteractionProfile::Sum(parts) => {
                parts.iter().map(|p| p.fourier(kx, ky)).sum::<Option<f64>>()
            }
            _ => None,
        }
    }

    pub fn has_fourier(&self) -> bool {
        self.fourier(0.0, 0.0).is_some()
    }

    /// Characteristic radius of the profile's core.
    pub fn core_radius(&self) -> f64 {
        match self {
            InteractionProfile::Gaussian { width, .. } => *width,
            InteractionProfile::Bump { radius, .. } => *radius,
            InteractionProfile::Table { grid, values } => {
                let mut weight = 0.0;
                let mut second = 0.0;
                for (idx, v) in values.iter().enumerate() {
                    let (x, y) = grid.position(idx);
                    weight += v.abs();
                    second += v.abs() * (x * x + y * y);
                }
                if weight > 0.0 {
                    (second / weight).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            InteractionProfile::Sum(parts) => {
                parts.iter().map(|p| p.core_radius()).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InteractionProfile::Gaussian { integral, .. } => *integral == 0.0,
            InteractionProfile::Bump { integral, .. } => *integral == 0.0,
            InteractionProfile::Table { values, .. } => values.iter().all(|v| *v == 0.0),
            InteractionProfile::Sum(parts) => parts.iter().all(|p| p.is_zero()),
        }
    }

    /// True if `w` takes negative values somewhere.
    pub fn has_negative_part(&self) -> bool {
        match self {
            InteractionProfile::Gaussian { integral, .. } => *integral < 0.0,
            InteractionProfile::Bump { integral, .. } => *integral < 0.0,
            InteractionProfile::Table { values, .. } => values.iter().any(|v| *v < 0.0),
            InteractionProfile::Sum(parts) => {
                if parts.iter().all(|p| !p.has_negative_part()) {
                    false
                } else {
                    // mixed signs: decide on a sample of the combined profile
                    let r = 4.0 * parts.iter().map(|p| p.core_radius()).fold(0.0, f64::max);
                    let steps = 64;
                    (0..=steps).any(|i| {
                        let x = r * i as f64 / steps as f64;
                        self.evaluate(x, 0.0) < 0.0
                    })
                }
            }
        }
    }

    /// Multiplies the profile by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            InteractionProfile::Gaussian { integral, width } => {
                InteractionProfile::Gaussian { integral: integral * factor, width: *width }
            }
            InteractionProfile::Bump { integral, radius } => {
                InteractionProfile::Bump { integral: integral * factor, radius: *radius }
            }
            InteractionProfile::Table { grid, values } => InteractionProfile::Table {
                grid: *grid,
                values: values.iter().map(|v| v * factor).collect(),
            },
            InteractionProfile::Sum(parts) => {
                InteractionProfile::Sum(parts.iter().map(|p| p.scaled(factor)).collect())
            }
        }
    }

    /// `|w|` in closed form when the profile has a single sign.
    pub fn absolute(&self) -> Option<Self> {
        match self {
            InteractionProfile::Gaussian { integral, width } => {
                Some(InteractionProfile::Gaussian { integral: integral.abs(), width: *width })
            }
            InteractionProfile::Bump { integral, radius } => {
                Some(InteractionProfile::Bump { integral: integral.abs(), radius: *radius })
            }
            InteractionProfile::Table { grid, values } => Some(InteractionProfile::Table {
                grid: *grid,
                values: values.iter().map(|v| v.abs()).collect(),
            }),
            InteractionProfile::Sum(parts) => {
                let all_pos = parts.iter().all(|p| p.integral() >= 0.0 && !p.has_negative_part());
                let all_neg = parts.iter().all(|p| p.integral() <= 0.0);
                if all_pos {
                    Some(self.clone())
                } else if all_neg && parts.iter().all(|p| !matches!(p, InteractionProfile::Table { .. })) {
                    Some(self.scaled(-1.0))
                } else {
                    None
                }
            }
        }
    }
}

fn bilinear(grid: &Grid2D, values: &[f64], x: f64, y: f64) -> f64 {
    let n = grid.points_per_side();
    let h = grid.spacing();
    let fx = (x + grid.half_extent()) / h;
    let fy = (y + grid.half_extent()) / h;
    if fx < 0.0 || fy < 0.0 || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
        return 0.0;
    }
    let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let (jx, jy) = ((ix + 1).min(n - 1), (iy + 1).min(n - 1));
    let v = |i: usize, j: usize| values[j * n + i];
    (1.0 - tx) * (1.0 - ty) * v(ix, iy)
        + tx * (1.0 - ty) * v(jx, iy)
        + (1.0 - tx) * ty * v(ix, jy)
        + tx * ty * v(jx, jy)
}

/// Physical configuration of a trapped 2D Bose gas and its one-body limits.
///
/// The trapping potential is stored shifted so that the sampled values are
/// at least one; energies are always reported for the unshifted model.
#[derive(Clone, Debug)]
pub struct ModelParams {
    grid: Grid2D,
    trap_exponent: f64,
    potential: Potential,
    vector_potential: Option<VectorField2D>,
    interaction: InteractionProfile,
    beta: f64,
    particles: usize,
    shifted_potential: Vec<f64>,
    shift: f64,
}

impl ModelParams {
    /// `V = |x|^s`, no magnetic field, no interaction, `β = 0`, `N = 2`.
    pub fn trapped(grid: Grid2D, trap_exponent: f64) -> Result<Self> {
        if !(trap_exponent.is_finite() && trap_exponent > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trap exponent s must be positive, got {trap_exponent}"
            )));
        }
        let mut params = Self {
            grid,
            trap_exponent,
            potential: Potential::Power,
            vector_potential: None,
            interaction: InteractionProfile::zero(),
            beta: 0.0,
            particles: 2,
            shifted_potential: Vec::new(),
            shift: 0.0,
        };
        params.resample_potential()?;
        Ok(params)
    }

    /// The 2D harmonic trap `V = |x|²`.
    pub fn harmonic(grid: Grid2D) -> Result<Self> {
        Self::trapped(grid, 2.0)
    }

    pub fn with_potential(mut self, potential: Potential) -> Result<Self> {
        self.potential = potential;
        self.resample_potential()?;
        Ok(self)
    }

    pub fn with_vector_potential(mut self, a: Option<VectorField2D>) -> Result<Self> {
        if let Some(field) = &a {
            self.grid.ensure_same(field.grid())?;
        }
        self.vector_potential = a;
        Ok(self)
    }

    pub fn with_interaction(mut self, w: InteractionProfile) -> Self {
        self.interaction = w;
        self
    }

    /// Unit-width Gaussian interaction with integral `a`; for the NLS
    /// functional only `a` matters.
    pub fn with_coupling(self, a: f64) -> Result<Self> {
        Ok(self.with_interaction(InteractionProfile::gaussian(a, 1.0)?))
    }

    pub fn with_scaling(mut self, beta: f64, particles: usize) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
        }
        if particles < 1 {
            return Err(Error::InvalidArgument("particle number must be >= 1".into()));
        }
        self.beta = beta;
        self.particles = particles;
        Ok(self)
    }

    fn resample_potential(&mut self) -> Result<()> {
        let raw: Vec<f64> = match &self.potential {
            Potential::Power => {
                let s = self.trap_exponent;
                self.grid.sample(|x, y| (x * x + y * y).sqrt().powf(s))
            }
            Potential::Zero => vec![0.0; self.grid.len()],
            Potential::Table(values) => {
                if values.len() != self.grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "potential table has {} samples, grid has {}",
                        values.len(),
                        self.grid.len()
                    )));
                }
                if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
                values.clone()
            }
        };
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        self.shift = (1.0 - min).max(0.0);
        self.shifted_potential = raw.into_iter().map(|v| v + self.shift).collect();
        Ok(())
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn trap_exponent(&self) -> f64 {
        self.trap_exponent
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn vector_potential(&self) -> Option<&VectorField2D> {
        self.vector_potential.as_ref()
    }

    pub fn interaction(&self) -> &InteractionProfile {
        &self.interaction
    }

    /// `a = ∫ w`.
    pub fn coupling(&self) -> f64 {
        self.interaction.integral()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Length scaling `λ = N^β` of `w_N`.
    pub fn lambda(&self) -> f64 {
        (self.particles as f64).powf(self.beta)
    }

    /// Constant added to `V` so that the stored samples are `>= 1`.
    pub fn potential_shift(&self) -> f64 {
        self.shift
    }

    /// Samples of `V + shift`.
    pub fn shifted_potential(&self) -> &[f64] {
        &self.shifted_potential
    }

    /// Samples of the user-facing (unshifted) `V`.
    pub fn potential_values(&self) -> Vec<f64> {
        self.shifted_potential.iter().map(|v| v - self.shift).collect()
    }

    /// True for the builtin `|x|^s` trap, whose spectrum splits into
    /// angular-momentum channels.
    pub fn is_radial(&self) -> bool {
        matches!(self.potential, Potential::Power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_makes_potential_at_least_one() {
        let grid = Grid2D::new(4.0, 32).unwrap();
        let p = ModelParams::harmonic(grid).unwrap();
        assert_eq!(p.potential_shift(), 1.0);
        assert!(p.shifted_potential().iter().all(|v| *v >= 1.0));
        let table = grid.sample(|x, _| 3.0 + x);
        let q = p.with_potential(Potential::Table(table)).unwrap();
        assert_eq!(q.potential_shift(), 2.0);
        assert!(q.shifted_potential().iter().all(|v| *v >= 1.0 - 1e-15));
    }

    #[test]
    fn builtin_integrals_match_quadrature() {
        let grid = Grid2D::new(8.0, 256).unwrap();
        for w in [
            InteractionProfile::gaussian(-2.5, 0.7).unwrap(),
            InteractionProfile::gaussian(1.0, 1.0).unwrap(),
        ] {
            let q = grid.integrate_real(&grid.sample(|x, y| w.evaluate(x, y))).unwrap();
            assert!((q - w.integral()).abs() < 1e-10, "{q} vs {}", w.integral());
        }
        // the bump is only C¹ at its edge, so quadrature converges algebraically
        let bump = InteractionProfile::bump(3.0, 1.5).unwrap();
        let q = grid.integrate_real(&grid.sample(|x, y| bump.evaluate(x, y))).unwrap();
        assert!((q - 3.0).abs() < 3e-5, "{q}");
    }

    #[test]
    fn table_is_symmetrized() {
        let grid = Grid2D::new(4.0, 16).unwrap();
        let raw = grid.sample(|x, y| (-(x - 0.5).powi(2) - y * y).exp() + 0.1 * x);
        let w = InteractionProfile::table(grid, raw).unwrap();
        let n = 16;
        if let InteractionProfile::Table { values, .. } = &w {
            for iy in 0..n {
                for ix in 0..n {
                    let m = ((n - iy) % n) * n + (n - ix) % n;
                    assert_eq!(values[iy * n + ix], values[m]);
                }
            }
        }
        assert!((w.evaluate(0.75, -0.25) - w.evaluate(-0.75, 0.25)).abs() < 1e-14);
    }

    #[test]
    fn fourier_transform_of_gaussian_matches_quadrature() {
        let grid = Grid2D::new(8.0, 128).unwrap();
        let w = InteractionProfile::gaussian(1.7, 0.8).unwrap();
        let (kx, ky) = (1.3, -0.4);
        let re: f64 = grid
            .sample(|x, y| w.evaluate(x, y) * (kx * x + ky * y).cos())
            .iter()
            .sum::<f64>()
            * grid.cell_area();
        assert!((re - w.fourier(kx, ky).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn signs_and_absolute_values() {
        let g = InteractionProfile::gaussian(-1.0, 1.0).unwrap();
        assert!(g.has_negative_part());
        assert_eq!(g.absolute().unwrap().integral(), 1.0);
        let dog = InteractionProfile::Sum(vec![
            InteractionProfile::gaussian(1.0, 0.5).unwrap(),
            InteractionProfile::gaussian(-1.0, 1.0).unwrap(),
        ]);
        assert!(dog.has_negative_part());
        assert!(dog.absolute().is_none());
        assert!(dog.integral().abs() < 1e-15);
        assert!(!InteractionProfile::zero().has_negative_part());
    }
}
