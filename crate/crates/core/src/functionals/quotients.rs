use num_complex::Complex64;
use serde::Serialize;

use super::energy::{interaction_potential, pair_integral};
use super::params::InteractionProfile;
use crate::error::{Error, Result};
use crate::field::{kinetic_energy, normalize, Field2D, Grid2D};
use crate::minimize::{descend, townes_profile, MinimizeOptions, Objective};

/// `2 ‖∇u‖² ‖u‖² / ‖u‖⁴_{L⁴}`; any vector potential is ignored.
pub fn gn_quotient(u: &Field2D) -> Result<f64> {
    let quartic = u.quartic();
    if quartic <= 0.0 {
        return Err(Error::InvalidArgument("quartic norm vanishes".into()));
    }
    Ok(2.0 * kinetic_energy(u, None)? * u.mass() / quartic)
}

/// Quotient and its gradient in the `E(u+εv) = E(u) + 2ε Re⟨G,v⟩` convention.
pub(crate) fn gn_value_and_gradient(u: &Field2D) -> Result<(f64, Field2D)> {
    let quartic = u.quartic();
    if quartic <= 0.0 {
        return Err(Error::InvalidArgument("quartic norm vanishes".into()));
    }
    let kinetic = kinetic_energy(u, None)?;
    let mass = u.mass();
    let q = 2.0 * kinetic * mass / quartic;
    let lap = u.grid().neg_laplacian(u.values());
    let g = lap
        .iter()
        .zip(u.values())
        .map(|(l, z)| {
            (l * (2.0 * mass) + z * (2.0 * kinetic) - z * (2.0 * q * z.norm_sqr())) / quartic
        })
        .collect();
    Ok((q, Field2D::new(*u.grid(), g)?))
}

/// `∬ |u(x)|² |u(y)|² w(x−y) / (2 ‖u‖² ‖∇u‖²)`.
pub fn stability_ratio(u: &Field2D, w: &InteractionProfile) -> Result<f64> {
    let kinetic = kinetic_energy(u, None)?;
    if kinetic <= 0.0 {
        return Err(Error::InvalidArgument("stability ratio needs nonzero kinetic energy".into()));
    }
    let pair = pair_integral(u.grid(), &u.density(), w, 1.0)?;
    Ok(pair / (2.0 * u.mass() * kinetic))
}

fn stability_value_and_gradient(u: &Field2D, w: &InteractionProfile) -> Result<(f64, Field2D)> {
    let grid = u.grid();
    let kinetic = kinetic_energy(u, None)?;
    if kinetic <= 0.0 {
        return Err(Error::InvalidArgument("stability ratio needs nonzero kinetic energy".into()));
    }
    let mass = u.mass();
    let rho = u.density();
    let conv = interaction_potential(grid, &rho, w, 1.0)?;
    let pair = grid.cell_area() * rho.iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>();
    let ratio = pair / (2.0 * mass * kinetic);
    let lap = grid.neg_laplacian(u.values());
    let g = u
        .values()
        .iter()
        .zip(&conv)
        .zip(&lap)
        .map(|((z, c), l)| z * (c / (mass * kinetic)) - l * (ratio / kinetic) - z * (ratio / mass))
        .collect();
    Ok((ratio, Field2D::new(*grid, g)?))
}

/// Smooth cutoff, 1 on `|t| ≤ 0.5 L` and 0 beyond `0.75 L`.
fn taper(t: f64, half_extent: f64) -> f64 {
    let s = (t.abs() / half_extent - 0.5) / 0.25;
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let bump = |z: f64| if z > 0.0 { (-1.0 / z).exp() } else { 0.0 };
    bump(1.0 - s) / (bump(1.0 - s) + bump(s))
}

/// The ratio of `χu` for a window `χ` supported well inside the box. On the
/// torus a near-constant state has almost no kinetic energy and drives the
/// ratio to `−∞`; windowed states are genuine compactly supported trials.
struct StabilityObjective<'a> {
    w: &'a InteractionProfile,
    window: Vec<f64>,
}

impl<'a> StabilityObjective<'a> {
    fn new(w: &'a InteractionProfile, grid: Grid2D) -> Self {
        let l = grid.half_extent();
        Self { w, window: grid.sample(|x, y| taper(x, l) * taper(y, l)) }
    }

    fn apply(&self, u: &Field2D) -> Result<Field2D> {
        let vals = u.values().iter().zip(&self.window).map(|(z, c)| z * c).collect();
        Field2D::new(*u.grid(), vals)
    }
}

impl Objective for StabilityObjective<'_> {
    fn value(&self, u: &Field2D) -> Result<f64> {
        stability_ratio(&self.apply(u)?, self.w)
    }

    fn value_and_gradient(&self, u: &Field2D) -> Result<(f64, Field2D)> {
        let (value, g) = stability_value_and_gradient(&self.apply(u)?, self.w)?;
        Ok((value, self.apply(&g)?))
    }
}

/// Budget for [`stability_quotient`].
#[derive(Clone, Debug)]
pub struct StabilitySearch {
    pub grid: Grid2D,
    /// Number of trial widths per parametric family.
    pub widths: usize,
    /// Gradient iterations spent polishing the best trial state.
    pub polish_iterations: usize,
}

impl Default for StabilitySearch {
    fn default() -> Self {
        Self { grid: Grid2D::new(12.0, 128).expect("valid grid"), widths: 24, polish_iterations: 300 }
    }
}

impl StabilitySearch {
    /// Family scan only, used as a precondition check.
    pub fn quick(grid: Grid2D) -> Self {
        Self { grid, widths: 16, polish_iterations: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityOutcome {
    /// Smallest ratio found, an upper bound on the infimum.
    pub value: f64,
    #[serde(skip)]
    pub witness: Field2D,
    /// Whether a state with ratio below `−1` was found.
    pub unstable: bool,
}

/// Searches for the infimum of [`stability_ratio`] over Gaussians and
/// rescaled ground-state profiles of all widths, then descends from the
/// best of them on the full grid.
pub fn stability_quotient(w: &InteractionProfile, search: &StabilitySearch) -> Result<StabilityOutcome> {
    if search.widths < 2 {
        return Err(Error::InvalidArgument("stability search needs at least two widths".into()));
    }
    let grid = search.grid;
    let (lo, hi) = (3.0 * grid.spacing(), grid.half_extent() / 5.0);
    let profile = townes_profile()?;
    let objective = StabilityObjective::new(w, grid);
    let mut best: Option<(f64, Field2D)> = None;
    for i in 0..search.widths {
        let width = lo * (hi / lo).powf(i as f64 / (search.widths - 1) as f64);
        let gaussian = Field2D::from_fn(grid, |x, y| {
            Complex64::new((-(x * x + y * y) / (2.0 * width * width)).exp(), 0.0)
        })?;
        for trial in [gaussian, profile.to_field(grid, width)?] {
            let value = objective.value(&trial)?;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, trial));
            }
        }
    }
    let (mut value, witness) = best.expect("at least one trial");
    let mut witness = normalize(&witness)?;
    if search.polish_iterations > 0 {
        let options = MinimizeOptions {
            max_iterations: search.polish_iterations,
            tolerance: 1e-10,
            ..MinimizeOptions::default()
        };
        let polished = descend(&objective, &witness, &options, |_, _| Ok(()))?;
        if polished.value < value {
            value = polished.value;
            witness = polished.field;
        }
    }
    let witness = normalize(&objective.apply(&witness)?)?;
    Ok(StabilityOutcome { value, witness, unstable: value < -1.0 })
}

/// `|∬ |u(x)|² λ²w(λ(x−y)) |u(y)|² − a ∫|u|⁴|` with `a = ∫w`.
pub fn interaction_error_raw(u: &Field2D, w: &InteractionProfile, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let pair = pair_integral(u.grid(), &u.density(), w, lambda)?;
    Ok((pair - w.integral() * u.quartic()).abs())
}

/// [`interaction_error_raw`] divided by `‖u‖⁴_{H¹}`.
pub fn interaction_error(u: &Field2D, w: &InteractionProfile, lambda: f64) -> Result<f64> {
    let h1 = kinetic_energy(u, None)? + u.mass();
    Ok(interaction_error_raw(u, w, lambda)? / (h1 * h1))
}
