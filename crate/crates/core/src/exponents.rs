//! The exponent bootstrap for the uniform energy bound `|e_{N,ε}| ≲ N^η`:
//! thresholds in β, the admissible step `c`, the balancing cutoff exponent
//! `τ`, and the schedule `η₀ = 2β − 1, η₀ − c, …` down to zero.
//!
//! Everything is generic over [`Scalar`], so the same code runs in `f64` and
//! in exact big-integer fractions.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered field used by the bootstrap arithmetic.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed {
    fn from_int(v: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn int<T: Scalar>(v: i64) -> T {
    T::from_int(v)
}

/// Parses `"7/10"`, `"0.7"`, `"3"` or `"1.5e-2"` into an exact fraction.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut value = BigRational::from_integer(BigInt::from_str(&joined).map_err(|_| bad())?);
    let shift = exponent - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    value = if shift >= 0 { value * scale } else { value / scale };
    Ok(if negative { -value } else { value })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds<T> {
    /// `s/(4(s+1))`.
    pub beta0: T,
    /// `(s+1)/(s+2)`.
    pub beta1: T,
}

pub fn thresholds<T: Scalar>(s: &T) -> Result<Thresholds<T>> {
    if *s <= T::zero() {
        return Err(Error::InvalidArgument(format!("trap exponent s must be positive, got {s:?}")));
    }
    let beta0 = s.clone() / (int::<T>(4) * (s.clone() + T::one()));
    let beta1 = (s.clone() + T::one()) / (s.clone() + int(2));
    Ok(Thresholds { beta0, beta1 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepBound<T> {
    /// `(s − (2β−1)(s+2))/(9s+8)`.
    pub c_max: T,
    /// `c_max > 0`.
    pub admissible: bool,
}

pub fn step_bound<T: Scalar>(s: &T, beta: &T) -> StepBound<T> {
    let eta0 = int::<T>(2) * beta.clone() - T::one();
    let c_max = (s.clone() - eta0 * (s.clone() + int(2))) / (int::<T>(9) * s.clone() + int(8));
    let admissible = c_max > T::zero();
    StepBound { c_max, admissible }
}

/// `s(5η+4)/(9s+8)`, which equalizes `τ(2+2/s) − 1` and `(5η−τ)/4`.
pub fn optimal_tau<T: Scalar>(s: &T, eta: &T) -> T {
    s.clone() * (int::<T>(5) * eta.clone() + int(4)) / (int::<T>(9) * s.clone() + int(8))
}

/// `s/(9s+8)`: supremum of the convergence rate exponents.
pub fn alpha_sup<T: Scalar>(s: &T) -> T {
    s.clone() / (int::<T>(9) * s.clone() + int(8))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentSchedule<T> {
    pub s: T,
    pub beta: T,
    pub beta0: T,
    pub beta1: T,
    pub eta0: T,
    /// Step used, absent when no admissible step exists.
    pub c: Option<T>,
    pub c_max: T,
    /// `τ` at every `η` from which a step was taken.
    pub taus: Vec<T>,
    /// `η₀, η₀ − c, …`, ending at or below zero on convergence.
    pub etas: Vec<T>,
    pub verdict: Verdict,
    pub alpha_sup: T,
}

impl<T: Scalar> ExponentSchedule<T> {
    pub fn steps(&self) -> usize {
        self.etas.len() - 1
    }

    pub fn to_f64(&self) -> ExponentSchedule<f64> {
        let f = |v: &T| v.to_f64();
        ExponentSchedule {
            s: f(&self.s),
            beta: f(&self.beta),
            beta0: f(&self.beta0),
            beta1: f(&self.beta1),
            eta0: f(&self.eta0),
            c: self.c.as_ref().map(f),
            c_max: f(&self.c_max),
            taus: self.taus.iter().map(f).collect(),
            etas: self.etas.iter().map(f).collect(),
            verdict: self.verdict,
            alpha_sup: f(&self.alpha_sup),
        }
    }
}

/// Runs `η ← η − c` from `η₀ = 2β − 1` until `η ≤ 0`. The default step is
/// `c_max/2`. An inadmissible pair `(s, β)` yields a diverged schedule.
pub fn run_schedule<T: Scalar>(
    s: &T,
    beta: &T,
    c: Option<T>,
    max_steps: usize,
) -> Result<ExponentSchedule<T>> {
    let Thresholds { beta0, beta1 } = thresholds(s)?;
    if *beta <= T::zero() {
        return Err(Error::InvalidArgument(format!("β must be positive, got {beta:?}")));
    }
    let eta0 = int::<T>(2) * beta.clone() - T::one();
    let StepBound { c_max, admissible } = step_bound(s, beta);
    let mut schedule = ExponentSchedule {
        s: s.clone(),
        beta: beta.clone(),
        beta0,
        beta1,
        eta0: eta0.clone(),
        c: None,
        c_max: c_max.clone(),
        taus: Vec::new(),
        etas: vec![eta0.clone()],
        verdict: Verdict::Converged,
        alpha_sup: alpha_sup(s),
    };
    if eta0 <= T::zero() {
        return Ok(schedule);
    }
    if !admissible {
        schedule.verdict = Verdict::Diverged;
        return Ok(schedule);
    }
    let step = match c {
        Some(c) if c <= T::zero() || c >= c_max => {
            return Err(Error::InvalidArgument(format!(
                "step c must lie strictly between 0 and c_max = {:.6e}, got {:.6e}",
                c_max.to_f64(),
                c.to_f64()
            )));
        }
        Some(c) => c,
        None => c_max / int(2),
    };
    let mut eta = eta0.clone();
    let mut k: i64 = 0;
    while eta > T::zero() {
        if schedule.taus.len() >= max_steps {
            return Err(Error::SelfCheck(format!(
                "schedule exceeded {max_steps} steps with an admissible step"
            )));
        }
        schedule.taus.push(optimal_tau(s, &eta));
        k += 1;
        // η₀ − k c rather than repeated subtraction keeps float drift bounded
        eta = eta0.clone() - step.clone() * int(k);
        schedule.etas.push(eta.clone());
    }
    schedule.c = Some(step);
    Ok(schedule)
}
