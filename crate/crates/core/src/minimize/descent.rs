//! Preconditioned nonlinear conjugate gradients on the unit `L²` sphere.

use num_complex::Complex64;

use super::MinimizeOptions;
use crate::error::Result;
use crate::field::{normalize, Field2D, Grid2D};

/// A smooth functional restricted to unit-mass fields.
pub(crate) trait Objective {
    fn value(&self, u: &Field2D) -> Result<f64>;

    /// Value and gradient `G`, with `E(u + εv) = E(u) + 2ε Re⟨G, v⟩ + O(ε²)`.
    fn value_and_gradient(&self, u: &Field2D) -> Result<(f64, Field2D)>;
}

#[derive(Clone, Debug)]
pub(crate) struct Descent {
    pub field: Field2D,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const PRECONDITIONER_SHIFT: f64 = 1.0;

fn inner(grid: &Grid2D, a: &[Complex64], b: &[Complex64]) -> f64 {
    grid.cell_area() * a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<f64>()
}

/// Removes the component of `v` along the unit field `u`.
fn project(u: &Field2D, v: &mut [Complex64]) {
    let c = u.values().iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>()
        * u.grid().cell_area();
    for (x, a) in v.iter_mut().zip(u.values()) {
        *x -= a * c;
    }
}

/// Tangential part `G − Re⟨u, G⟩u` of a gradient.
///
/// Only the real part is removed: the imaginary direction `iu` is a gauge
/// mode along which every objective here is constant.
fn tangent(u: &Field2D, g: &Field2D) -> Vec<Complex64> {
    let mu = inner(u.grid(), u.values(), g.values());
    g.values().iter().zip(u.values()).map(|(a, b)| a - b * mu).collect()
}

fn precondition(u: &Field2D, r: &[Complex64]) -> Vec<Complex64> {
    let grid = u.grid();
    let mut z = grid.apply_symbol(r, |ix, iy| {
        1.0 / (PRECONDITIONER_SHIFT + grid.laplacian_symbol(ix, iy))
    });
    project(u, &mut z);
    z
}

fn retract(u: &Field2D, d: &[Complex64], t: f64) -> Result<Field2D> {
    let moved: Vec<Complex64> = u.values().iter().zip(d).map(|(a, b)| a + b * t).collect();
    normalize(&Field2D::new(*u.grid(), moved)?)
}

fn roundoff_slack(e: f64) -> f64 {
    (1e-13 * e.abs().max(1.0)).min(1e-12)
}

/// Minimizes `objective` over unit-mass fields starting from `initial`.
///
/// `on_accept` sees every accepted iterate with its value and may abort.
pub(crate) fn descend<O: Objective>(
    objective: &O,
    initial: &Field2D,
    options: &MinimizeOptions,
    mut on_accept: impl FnMut(&Field2D, f64) -> Result<()>,
) -> Result<Descent> {
    let grid = *initial.grid();
    let mut u = normalize(initial)?;
    let (mut e, g) = objective.value_and_gradient(&u)?;
    let mut r = tangent(&u, &g);
    let mut residual = inner(&grid, &r, &r).sqrt();
    // (r, z, d) of the previous step, for the Polak–Ribière update
    let mut previous: Option<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = None;
    let mut step = options.step;
    let mut restarted = false;

    for iteration in 0..options.max_iterations {
        if residual <= options.tolerance {
            return Ok(Descent { field: u, value: e, residual, iterations: iteration, converged: true });
        }
        let z = precondition(&u, &r);
        let mut d: Vec<Complex64> = z.iter().map(|v| -v).collect();
        if let Some((r_prev, z_prev, d_prev)) = &previous {
            let num: f64 = inner(&grid, &z, &r) - inner(&grid, &z, r_prev);
            let den = inner(&grid, z_prev, r_prev);
            let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
            if beta > 0.0 {
                let mut transported = d_prev.clone();
                project(&u, &mut transported);
                d.iter_mut().zip(&transported).for_each(|(a, b)| *a += b * beta);
            }
        }
        let mut slope = 2.0 * inner(&grid, &r, &d);
        if slope >= 0.0 {
            d = z.iter().map(|v| -v).collect();
            slope = 2.0 * inner(&grid, &r, &d);
        }

        let slack = roundoff_slack(e);
        let mut t = step;
        let mut accepted = None;
        while t > 1e-14 * options.step.max(1.0) {
            let candidate = retract(&u, &d, t)?;
            let e_try = objective.value(&candidate)?;
            if e_try <= e + ARMIJO * t * slope {
                accepted = Some((candidate, t));
                break;
            }
            if e_try <= e + slack {
                // Energy differences are below roundoff; accept only if the
                // stationarity residual improves.
                let (_, g_try) = objective.value_and_gradient(&candidate)?;
                let r_try = tangent(&candidate, &g_try);
                if inner(&grid, &r_try, &r_try).sqrt() < residual {
                    accepted = Some((candidate, t));
                    break;
                }
            }
            t *= options.backtracking;
        }

        let Some((next, t)) = accepted else {
            if restarted || previous.is_none() {
                log::debug!("line search failed at iteration {iteration}, residual {residual:.3e}");
                return Ok(Descent { field: u, value: e, residual, iterations: iteration, converged: false });
            }
            restarted = true;
            previous = None;
            step = options.step;
            continue;
        };
        restarted = false;

        let (e_next, g_next) = objective.value_and_gradient(&next)?;
        let r_next = tangent(&next, &g_next);
        previous = Some((r, z, d));
        r = r_next;
        residual = inner(&grid, &r, &r).sqrt();
        u = next;
        e = e_next;
        step = t * 1.2;
        on_accept(&u, e)?;
    }
    let converged = residual <= options.tolerance;
    Ok(Descent { field: u, value: e, residual, iterations: options.max_iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::kinetic_energy;

    /// `E(u) = ∫ |∇u|² + |x|²|u|²`, minimized by the Gaussian with value 2.
    struct Oscillator(Vec<f64>);

    impl Objective for Oscillator {
        fn value(&self, u: &Field2D) -> Result<f64> {
            let pot: f64 = u.density().iter().zip(&self.0).map(|(a, b)| a * b).sum();
            Ok(kinetic_energy(u, None)? + pot * u.grid().cell_area())
        }

        fn value_and_gradient(&self, u: &Field2D) -> Result<(f64, Field2D)> {
            let mut g = u.grid().neg_laplacian(u.values());
            g.iter_mut().zip(u.values()).zip(&self.0).for_each(|((o, z), v)| *o += z * v);
            Ok((self.value(u)?, Field2D::new(*u.grid(), g)?))
        }
    }

    #[test]
    fn oscillator_ground_state() {
        let grid = Grid2D::new(8.0, 64).unwrap();
        let objective = Oscillator(grid.sample(|x, y| x * x + y * y));
        let start =
            Field2D::from_fn(grid, |x, y| Complex64::new((-(x - 1.0).powi(2) - y * y / 3.0).exp(), 0.3 * x))
                .unwrap();
        let mut last = f64::INFINITY;
        let out = descend(&objective, &start, &MinimizeOptions::default(), |u, e| {
            assert!((u.mass() - 1.0).abs() < 1e-12);
            assert!(e <= last + 1e-12);
            last = e;
            Ok(())
        })
        .unwrap();
        assert!(out.converged, "residual {}", out.residual);
        assert!((out.value - 2.0).abs() < 1e-10);
    }
}
