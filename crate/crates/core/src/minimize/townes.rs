//! Radial shooting for the positive ground state `Q` of `−ΔQ + Q − Q³ = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use once_cell::sync::OnceCell;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field2D, Grid2D};

/// Spacing of the stored profile.
pub const PROFILE_STEP: f64 = 0.01;
/// Far boundary of the shooting interval.
pub const SHOOTING_RADIUS: f64 = 12.0;
const BRACKET: (f64, f64) = (0.1, 10.0);

/// Samples of `Q` and `Q'` on a uniform radial grid starting at `r = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub derivative_at_zero: f64,
    /// `2π ∫ Q² r dr`
    pub mass: f64,
    /// Final width of the bisection bracket on `Q(0)`.
    pub bracket_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    /// `Q(0)` too large: the solution crosses zero.
    Overshoot,
    /// `Q(0)` too small: the solution turns back up.
    Undershoot,
}

type State = [f64; 3];

/// `(Q, Q', m)` with `m' = 2π Q² r`.
fn rhs(r: f64, y: &State) -> State {
    let (q, p) = (y[0], y[1]);
    [p, -p / r + q - q * q * q, 2.0 * PI * q * q * r]
}

/// Taylor start `Q = q₀ + c r² + d r⁴` away from the coordinate singularity.
fn series_start(q0: f64, r: f64) -> State {
    let c = (q0 - q0 * q0 * q0) / 4.0;
    let d = (1.0 - 3.0 * q0 * q0) * c / 16.0;
    let r2 = r * r;
    [
        q0 + c * r2 + d * r2 * r2,
        2.0 * c * r + 4.0 * d * r2 * r,
        PI * q0 * q0 * r2 + PI * q0 * c * r2 * r2,
    ]
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(r: f64, y: &State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 3]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for c in 0..3 {
                ys[c] += h * A[s][j] * kj[c];
            }
        }
        k[s] = rhs(r + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for c in 0..3 {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][c];
            lo += B4[s] * k[s][c];
        }
        y5[c] += h * hi;
        let scale = 1e-14 + 1e-12 * y[c].abs().max(y5[c].abs());
        err = err.max((h * (hi - lo)).abs() / scale);
    }
    (y5, err)
}

/// Integrates from `r0` to `r1` adaptively; `h` carries the step size over.
fn advance(r0: f64, r1: f64, y: &mut State, h: &mut f64) {
    let mut r = r0;
    while r < r1 {
        let trial = h.min(r1 - r);
        let (next, err) = dp_step(r, y, trial);
        if err <= 1.0 {
            r += trial;
            *y = next;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            *h = (trial * grow).max(1e-8);
        } else {
            *h = trial * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
        }
    }
}

/// Samples the solution with `Q(0) = q0` at multiples of [`PROFILE_STEP`]
/// until an overshoot/undershoot event or the far boundary.
fn shoot(q0: f64) -> (Outcome, Vec<State>) {
    let steps = (SHOOTING_RADIUS / PROFILE_STEP).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push([q0, 0.0, 0.0]);
    let mut y = series_start(q0, PROFILE_STEP);
    samples.push(y);
    let mut h = PROFILE_STEP / 4.0;
    for i in 1..steps {
        let r = i as f64 * PROFILE_STEP;
        advance(r, r + PROFILE_STEP, &mut y, &mut h);
        if y[0] < 0.0 {
            return (Outcome::Overshoot, samples);
        }
        if y[1] > 0.0 {
            return (Outcome::Undershoot, samples);
        }
        samples.push(y);
    }
    // Compare against the decaying Bessel-type tail Q'/Q ≈ −(1 + 1/2r − 1/8r²).
    let r = SHOOTING_RADIUS;
    let decay = 1.0 + 1.0 / (2.0 * r) - 1.0 / (8.0 * r * r);
    let outcome = if y[1] + decay * y[0] > 0.0 { Outcome::Undershoot } else { Outcome::Overshoot };
    (outcome, samples)
}

/// Bisection on `Q(0)` until the bracket is narrower than `tolerance`.
pub fn shoot_townes(tolerance: f64) -> Result<RadialProfile> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    let (mut lo, mut hi) = BRACKET;
    if shoot(lo).0 != Outcome::Undershoot || shoot(hi).0 != Outcome::Overshoot {
        return Err(Error::NotConverged(format!(
            "no shooting bracket in [{lo}, {hi}]; the ODE integrator is misbehaving"
        )));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid).0 {
            Outcome::Undershoot => lo = mid,
            Outcome::Overshoot => hi = mid,
        }
    }
    let q0 = 0.5 * (lo + hi);
    let (_, samples) = shoot(q0);
    let last = samples.last().expect("at least the origin sample");
    let r_end = (samples.len() - 1) as f64 * PROFILE_STEP;
    // ∫_{r_end}^∞ Q² r dr for an e^{-r}/√r tail
    let tail = PI * last[0] * last[0] * r_end;
    Ok(RadialProfile {
        radii: (0..samples.len()).map(|i| i as f64 * PROFILE_STEP).collect(),
        values: samples.iter().map(|s| s[0]).collect(),
        derivatives: samples.iter().map(|s| s[1]).collect(),
        derivative_at_zero: 0.0,
        mass: last[2] + tail,
        bracket_width: hi - lo,
    })
}

static PROFILE: OnceCell<RadialProfile> = OnceCell::new();

/// Process-wide profile shot to a bracket of `1e-12`.
pub fn townes_profile() -> Result<&'static RadialProfile> {
    PROFILE.get_or_try_init(|| shoot_townes(1e-12))
}

impl RadialProfile {
    pub fn central_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().expect("non-empty profile")
    }

    /// Cubic Hermite interpolation inside the stored range and an
    /// `e^{-r}/√r` continuation beyond it.
    pub fn evaluate(&self, r: f64) -> f64 {
        let r = r.abs();
        let last = self.radii.len() - 1;
        let r_end = self.radii[last];
        if r >= r_end {
            return self.values[last] * (r_end / r).sqrt() * (r_end - r).exp();
        }
        let i = ((r / PROFILE_STEP) as usize).min(last - 1);
        let h = PROFILE_STEP;
        let t = (r - self.radii[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * self.derivatives[i]
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * self.derivatives[i + 1]
    }

    /// `x ↦ Q(|x| / width)` on a grid.
    pub fn to_field(&self, grid: Grid2D, width: f64) -> Result<Field2D> {
        Field2D::from_fn(grid, |x, y| {
            Complex64::new(self.evaluate((x * x + y * y).sqrt() / width), 0.0)
        })
    }

    /// Pointwise `−Q'' − Q'/r + Q − Q³` from fourth-order differences of the
    /// stored values, at every radius up to `r_max`.
    pub fn ode_residual(&self, r_max: f64) -> Vec<f64> {
        let h = PROFILE_STEP;
        let n = self.values.len();
        let q = |i: isize| self.values[i.unsigned_abs()];
        let mut out = Vec::new();
        for i in 0..n.saturating_sub(2) {
            if self.radii[i] > r_max + 1e-12 {
                break;
            }
            let j = i as isize;
            let d2 = (-q(j + 2) + 16.0 * q(j + 1) - 30.0 * q(j) + 16.0 * q(j - 1) - q(j - 2))
                / (12.0 * h * h);
            let d1 = (-q(j + 2) + 8.0 * q(j + 1) - 8.0 * q(j - 1) + q(j - 2)) / (12.0 * h);
            let radial = if i == 0 { d2 } else { d1 / self.radii[i] };
            let v = q(j);
            out.push(-d2 - radial + v - v * v * v);
        }
        out
    }
}
