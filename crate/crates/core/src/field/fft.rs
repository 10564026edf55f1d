//! Cached two-dimensional FFT plans for square grids.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<Mutex<HashMap<usize, PlanPair>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Unnormalized forward/inverse 2D transforms on an `n × n` row-major array.
#[derive(Clone)]
pub struct Fft2D {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2D {
    pub fn new(n: usize) -> Self {
        let (forward, inverse) = {
            let mut plans = PLANS.lock().expect("fft plan cache poisoned");
            plans
                .entry(n)
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
                })
                .clone()
        };
        Self { n, forward, inverse }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&*self.forward, data);
    }

    /// Inverse transform without the `1/n²` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&*self.inverse, data);
    }

    fn run(&self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
