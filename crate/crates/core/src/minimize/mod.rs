//! Ground states of the one-body functionals and the critical coupling.

mod descent;
mod townes;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub(crate) use descent::{descend, Objective};
pub use townes::{shoot_townes, townes_profile, RadialProfile, PROFILE_STEP, SHOOTING_RADIUS};

use crate::error::{Error, Result};
use crate::field::{kinetic_energy, Field2D, Grid2D};
use crate::functionals::{
    gn_quotient, gn_value_and_gradient, hartree_energy_raw, hartree_gradient, nls_energy_raw,
    nls_gradient, stability_quotient, EnergyReport, ModelParams, StabilitySearch,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Initial trial step along the search direction.
    pub step: f64,
    /// Target for `‖G − ⟨u, G⟩u‖`.
    pub tolerance: f64,
    pub backtracking: f64,
    /// Relative distance from the critical coupling required before a
    /// focusing problem is attempted.
    pub focusing_margin: f64,
    /// Collapse is flagged once the kinetic energy exceeds this multiple of
    /// its initial value while the energy keeps dropping.
    pub collapse_ratio: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            step: 1.0,
            tolerance: 1e-8,
            backtracking: 0.5,
            focusing_margin: 0.02,
            collapse_ratio: 50.0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return bad(format!("backtracking factor must lie in (0, 1), got {}", self.backtracking));
        }
        if !(self.focusing_margin >= 0.0 && self.focusing_margin < 1.0) {
            return bad(format!("focusing margin must lie in [0, 1), got {}", self.focusing_margin));
        }
        if !(self.collapse_ratio > 1.0) {
            return bad(format!("collapse ratio must exceed 1, got {}", self.collapse_ratio));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Nls,
    Hartree,
}

#[derive(Clone, Debug)]
pub struct Minimized {
    pub field: Field2D,
    pub energy: EnergyReport,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

struct EnergyObjective<'a> {
    functional: Functional,
    params: &'a ModelParams,
}

impl Objective for EnergyObjective<'_> {
    fn value(&self, u: &Field2D) -> Result<f64> {
        Ok(self.report(u)?.total)
    }

    fn value_and_gradient(&self, u: &Field2D) -> Result<(f64, Field2D)> {
        let g = match self.functional {
            Functional::Nls => nls_gradient(u, self.params)?,
            Functional::Hartree => hartree_gradient(u, self.params)?,
        };
        Ok((self.value(u)?, g))
    }
}

impl EnergyObjective<'_> {
    fn report(&self, u: &Field2D) -> Result<EnergyReport> {
        match self.functional {
            Functional::Nls => nls_energy_raw(u, self.params),
            Functional::Hartree => hartree_energy_raw(u, self.params),
        }
    }
}

/// `e^{-|x|²/2}/√π`, the default starting point.
pub fn gaussian_seed(grid: Grid2D) -> Result<Field2D> {
    let c = 1.0 / std::f64::consts::PI.sqrt();
    Field2D::from_fn(grid, |x, y| Complex64::new(c * (-(x * x + y * y) / 2.0).exp(), 0.0))
}

/// Minimizes the NLS or Hartree energy over unit-mass fields.
///
/// Exhausting the iteration budget is not an error: the best iterate is
/// returned with `converged = false`.
pub fn minimize_energy(
    functional: Functional,
    params: &ModelParams,
    options: &MinimizeOptions,
    initial: Option<&Field2D>,
) -> Result<Minimized> {
    options.validate()?;
    precheck(functional, params, options)?;
    let grid = *params.grid();
    let seed = match initial {
        Some(u) => {
            grid.ensure_same(u.grid())?;
            u.clone()
        }
        None => gaussian_seed(grid)?,
    };
    let objective = EnergyObjective { functional, params };
    let initial_kinetic = kinetic_energy(&seed, params.vector_potential())? / seed.mass();
    let mut last = f64::INFINITY;
    let outcome = descend(&objective, &seed, options, |u, e| {
        let kinetic = kinetic_energy(u, params.vector_potential())?;
        if kinetic > options.collapse_ratio * initial_kinetic.max(1e-12) && e < last {
            return Err(Error::Collapse(format!(
                "kinetic energy grew from {initial_kinetic:.3e} to {kinetic:.3e} while the energy \
                 kept decreasing (coupling a = {}, trap exponent s = {}, lambda = {})",
                params.coupling(),
                params.trap_exponent(),
                params.lambda()
            )));
        }
        last = e;
        Ok(())
    })?;
    if !outcome.converged {
        log::warn!(
            "minimization stopped after {} iterations with residual {:.3e}",
            outcome.iterations,
            outcome.residual
        );
    }
    let energy = objective.report(&outcome.field)?;
    Ok(Minimized {
        field: outcome.field,
        energy,
        converged: outcome.converged,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

fn precheck(functional: Functional, params: &ModelParams, options: &MinimizeOptions) -> Result<()> {
    match functional {
        Functional::Nls => {
            let a = params.coupling();
            if a < 0.0 {
                let critical = townes_profile()?.mass;
                if -a >= critical * (1.0 - options.focusing_margin) {
                    return Err(Error::InvalidArgument(format!(
                        "focusing coupling a = {a} is not safely above -a* = {:.6} \
                         (margin {}); no minimizer exists at or below -a*",
                        -critical, options.focusing_margin
                    )));
                }
            }
        }
        Functional::Hartree => {
            if params.interaction().has_negative_part() {
                let search = StabilitySearch::quick(*params.grid());
                let outcome = stability_quotient(params.interaction(), &search)?;
                if outcome.value <= -1.0 + options.focusing_margin {
                    return Err(Error::InvalidArgument(format!(
                        "interaction is not stable: a trial state has stability ratio {:.6} \
                         <= -1 + {}",
                        outcome.value, options.focusing_margin
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalMethod {
    Shooting,
    GridMinimization,
}

struct GnObjective;

impl Objective for GnObjective {
    fn value(&self, u: &Field2D) -> Result<f64> {
        gn_quotient(u)
    }

    fn value_and_gradient(&self, u: &Field2D) -> Result<(f64, Field2D)> {
        gn_value_and_gradient(u)
    }
}

/// Grid used by the Gagliardo–Nirenberg minimization.
pub fn critical_grid() -> Grid2D {
    Grid2D::new(16.0, 256).expect("valid grid")
}

/// The critical coupling `a* = ‖Q‖²`.
///
/// The grid method minimizes the Gagliardo–Nirenberg quotient directly and
/// cross-checks the result against the shooting value.
pub fn critical_constant(method: CriticalMethod) -> Result<f64> {
    let shooting = townes_profile()?.mass;
    match method {
        CriticalMethod::Shooting => Ok(shooting),
        CriticalMethod::GridMinimization => {
            let grid = critical_grid();
            let seed = Field2D::from_fn(grid, |x, y| {
                Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
            })?;
            let options = MinimizeOptions { tolerance: 1e-7, ..MinimizeOptions::default() };
            let outcome = descend(&GnObjective, &seed, &options, |_, _| Ok(()))?;
            let value = outcome.value;
            if ((value - shooting) / shooting).abs() > 1e-2 {
                return Err(Error::SelfCheck(format!(
                    "grid minimization gives a* = {value}, shooting gives {shooting}"
                )));
            }
            Ok(value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_validation() {
        assert!(MinimizeOptions::default().validate().is_ok());
        let bad = MinimizeOptions { tolerance: 0.0, ..MinimizeOptions::default() };
        assert!(bad.validate().is_err());
        let bad = MinimizeOptions { backtracking: 1.0, ..MinimizeOptions::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn supercritical_focusing_rejected() {
        let params = ModelParams::harmonic(Grid2D::new(8.0, 64).unwrap())
            .unwrap()
            .with_coupling(-12.0)
            .unwrap();
        let err = minimize_energy(Functional::Nls, &params, &MinimizeOptions::default(), None);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
