//! Eigenvalue counting for `h = −Δ + V` below a cutoff.
//!
//! Radial traps split into angular-momentum channels. Each channel is a
//! symmetric tridiagonal matrix (cell-centred flux-form differences,
//! symmetrized by `√r`), whose eigenvalues are located by Sturm counts at two
//! resolutions and Richardson-extrapolated.

use super::modes::{one_body_modes_with, EigenOptions};
use crate::error::{Error, Result};
use crate::functionals::{ModelParams, Potential};

/// Cells per channel at the coarse resolution.
const CELLS: usize = 2000;

struct Channel {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Channel {
    fn new(m: u32, s: f64, r_max: f64, cells: usize) -> Self {
        let dr = r_max / cells as f64;
        let r = |i: f64| (i + 0.5) * dr;
        let m2 = (m as f64).powi(2);
        let diag = (0..cells)
            .map(|i| {
                let ri = r(i as f64);
                let outer = ri + 0.5 * dr;
                let inner = ri - 0.5 * dr;
                (outer + inner) / (ri * dr * dr) + m2 / (ri * ri) + ri.powf(s)
            })
            .collect();
        let off = (0..cells - 1)
            .map(|i| {
                let (ri, rj) = (r(i as f64), r(i as f64 + 1.0));
                -(ri + 0.5 * dr) / (dr * dr * (ri * rj).sqrt())
            })
            .collect();
        Self { diag, off }
    }

    /// Number of eigenvalues strictly below `x`.
    fn sturm(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues below `cap`, by bisection.
    fn eigenvalues_below(&self, cap: f64) -> Vec<f64> {
        let count = self.sturm(cap);
        (0..count)
            .map(|k| {
                let (mut lo, mut hi) = (0.0, cap);
                while hi - lo > 1e-13 * hi.max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if self.sturm(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

/// Channel eigenvalues below `cap`, extrapolated from spacings `Δ` and `Δ/2`.
fn channel_levels(m: u32, s: f64, r_max: f64, cap: f64) -> Vec<f64> {
    let coarse = Channel::new(m, s, r_max, CELLS).eigenvalues_below(cap * 1.05 + 1.0);
    let fine = Channel::new(m, s, r_max, 2 * CELLS).eigenvalues_below(cap * 1.05 + 1.0);
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .filter(|&e| e <= cap)
        .collect()
}

/// Sorted eigenvalues of `−Δ + |x|^s` on `ℝ²` that do not exceed `cutoff`,
/// with multiplicity.
pub fn radial_levels(s: f64, cutoff: f64) -> Vec<f64> {
    // Beyond r_max the potential exceeds the cutoff by a wide margin.
    let r_max = (cutoff + 30.0).powf(1.0 / s) + 6.0;
    let mut levels = Vec::new();
    for m in 0u32.. {
        let mf = m as f64;
        // min over r of m²/r² + r^s
        let floor = if m == 0 {
            0.0
        } else {
            let r = (2.0 * mf * mf / s).powf(1.0 / (s + 2.0));
            mf * mf / (r * r) + r.powf(s)
        };
        if floor > cutoff {
            break;
        }
        let channel = channel_levels(m, s, r_max, cutoff);
        let copies = if m == 0 { 1 } else { 2 };
        for e in channel {
            levels.extend(std::iter::repeat_n(e, copies));
        }
    }
    levels.sort_by(f64::total_cmp);
    levels
}

/// Number of eigenvalues of `h` at most `cutoff`.
///
/// The builtin `|x|^s` trap is counted in the continuum by angular-momentum
/// channels; tabulated potentials fall back to the grid eigensolver.
pub fn count_modes_below(params: &ModelParams, cutoff: f64) -> Result<usize> {
    if !cutoff.is_finite() {
        return Err(Error::InvalidArgument(format!("cutoff must be finite, got {cutoff}")));
    }
    if params.vector_potential().is_some() {
        return Err(Error::InvalidArgument(
            "mode counting is only available without a vector potential".into(),
        ));
    }
    match params.potential() {
        Potential::Power => Ok(radial_levels(params.trap_exponent(), cutoff).len()),
        _ => {
            let options = EigenOptions { max_modes: 512, ..EigenOptions::default() };
            let mut m = 8;
            loop {
                let basis = one_body_modes_with(params, m, &options)?;
                let below = basis.eigenvalues().iter().filter(|&&e| e <= cutoff).count();
                if below < m {
                    return Ok(below);
                }
                if m >= options.max_modes {
                    return Err(Error::CapExceeded(format!(
                        "more than {m} modes lie below {cutoff}"
                    )));
                }
                m = (2 * m).min(options.max_modes);
            }
        }
    }
}
