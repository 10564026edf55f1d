use bosenls::definetti::*;
use bosenls::manybody::{two_body_density, FockBasis, SymmetricState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// `∫ |u^{⊗2}⟩⟨u^{⊗2}| D |⟨u^{⊗N}, Ψ⟩|² du` from the sphere moments
/// `∫ |u^m|² du = (d−1)! m! / (d−1+|m|)!`.
fn exact_second_moment(basis: &FockBasis, psi: &SymmetricState) -> DMatrix<Complex64> {
    let d = basis.modes();
    let n = basis.particles();
    let dimension = factorial(n + d - 1) / (factorial(n) * factorial(d - 1));
    let coef = |occ: &[u16]| {
        (factorial(n) / occ.iter().map(|&v| factorial(v as usize)).product::<f64>()).sqrt()
    };
    let sphere = |m: &[u16]| {
        let total: usize = m.iter().map(|&v| v as usize).sum();
        factorial(d - 1) * m.iter().map(|&v| factorial(v as usize)).product::<f64>()
            / factorial(d - 1 + total)
    };
    let amps = psi.amplitudes();
    DMatrix::from_fn(d * d, d * d, |p, q| {
        let (a, b, c, e) = (p / d, p % d, q / d, q % d);
        let mut sum = Complex64::new(0.0, 0.0);
        for x in 0..basis.len() {
            // ū exponents: n + e_c + e_e
            let mut bar: Vec<u16> = basis.occupation(x).to_vec();
            bar[c] += 1;
            bar[e] += 1;
            for y in 0..basis.len() {
                let mut plain: Vec<u16> = basis.occupation(y).to_vec();
                plain[a] += 1;
                plain[b] += 1;
                if plain == bar {
                    sum += amps[x] * amps[y].conj()
                        * (coef(basis.occupation(x)) * coef(basis.occupation(y)) * sphere(&bar));
                }
            }
        }
        sum * dimension
    })
}

fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    bosenls::manybody::hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

fn random_state(d: usize, n: usize, seed: u64) -> SymmetricState {
    let basis = FockBasis::new(d, n, usize::MAX).unwrap();
    SymmetricState::random(&basis, seed).unwrap()
}

fn quick() -> SphereIntegration {
    SphereIntegration { samples: 200_000, ..SphereIntegration::default() }
}

#[test]
fn product_state_has_unit_mass_and_power_density() {
    for n in [3, 16] {
        let basis = FockBasis::new(2, n, usize::MAX).unwrap();
        let psi = SymmetricState::product(&basis, 0).unwrap();
        let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
        assert!((measure.mass().value - 1.0).abs() < 1e-12);
        let t: f64 = 0.3;
        let u = [Complex64::new(t.sqrt(), 0.0), Complex64::from_polar((1.0 - t).sqrt(), 1.1)];
        let expected = (n + 1) as f64 * t.powi(n as i32);
        assert!((measure.density(&u).unwrap() - expected).abs() < 1e-12 * expected.max(1.0));
    }
}

#[test]
fn quadrature_matches_exact_moments() {
    for seed in 0..4 {
        let psi = random_state(2, 7, seed);
        let basis = FockBasis::new(2, 7, usize::MAX).unwrap();
        let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
        let exact = exact_second_moment(&basis, &psi);
        assert!(trace_norm(&(measure.second_moment() - &exact)) < 1e-11);
        assert!((measure.mass().value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_matches_exact_moments_within_error_bars() {
    for (d, n) in [(3, 5), (4, 3)] {
        let psi = random_state(d, n, 11);
        let basis = FockBasis::new(d, n, usize::MAX).unwrap();
        let measure = lower_symbol_measure(&psi, &quick()).unwrap();
        let exact = exact_second_moment(&basis, &psi);
        let gap = trace_norm(&(measure.second_moment() - &exact));
        assert!(gap < 3.0 * measure.second_moment_stderr(), "{gap} vs {}", measure.second_moment_stderr());
        let mass = measure.mass();
        assert!((mass.value - 1.0).abs() < 4.0 * mass.stderr);
    }
}

#[test]
fn monte_carlo_is_deterministic_per_seed() {
    let psi = random_state(3, 4, 2);
    let a = lower_symbol_measure(&psi, &quick()).unwrap();
    let b = lower_symbol_measure(&psi, &quick()).unwrap();
    assert_eq!(a.second_moment(), b.second_moment());
    let c = lower_symbol_measure(&psi, &SphereIntegration { seed: 1, ..quick() }).unwrap();
    assert_ne!(a.second_moment(), c.second_moment());
}

#[test]
fn second_moment_is_hermitian_psd_with_mass_trace() {
    let psi = random_state(3, 6, 5);
    let measure = lower_symbol_measure(&psi, &quick()).unwrap();
    let m2 = measure.second_moment();
    assert!((m2 - m2.adjoint()).camax() < 1e-14);
    let eig = bosenls::manybody::hermitian_eigenvalues(m2);
    assert!(eig.iter().all(|&v| v > -1e-12));
    let trace: f64 = (0..9).map(|i| m2[(i, i)].re).sum();
    assert!((trace - measure.mass().value).abs() < 1e-12);
}

#[test]
fn uniform_superposition_is_swap_symmetric() {
    let basis = FockBasis::new(2, 2, usize::MAX).unwrap();
    let amplitudes = vec![Complex64::new(1.0 / 3f64.sqrt(), 0.0); 3];
    let psi = SymmetricState::new(&basis, amplitudes).unwrap();
    let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
    let u = [Complex64::new(0.8, 0.1), Complex64::new(-0.2, 0.55)];
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u = [u[0] / norm, u[1] / norm];
    let swapped = [u[1], u[0]];
    assert!((measure.density(&u).unwrap() - measure.density(&swapped).unwrap()).abs() < 1e-10);
}

#[test]
fn product_state_error_is_far_below_bound() {
    let basis = FockBasis::new(2, 16, usize::MAX).unwrap();
    let psi = SymmetricState::product(&basis, 0).unwrap();
    let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
    let report = definetti_error(&psi, &measure).unwrap();
    assert!((report.bound - 1.0).abs() < 1e-15);
    assert!(report.error < 0.3, "{}", report.error);
    assert!(!report.inconclusive);
}

#[test]
fn random_states_respect_bound() {
    for (d, n, count) in [(2, 8, 10), (2, 16, 10), (3, 12, 3)] {
        for seed in 0..count {
            let psi = random_state(d, n, seed);
            let measure = lower_symbol_measure(&psi, &quick()).unwrap();
            let report = definetti_error(&psi, &measure).unwrap();
            assert!(!report.inconclusive);
            assert!(report.error <= report.bound + report.stderr, "{report:?}");
        }
    }
}

#[test]
fn error_decreases_with_particle_number() {
    let mean = |n: usize| {
        (0..20)
            .map(|seed| {
                let psi = random_state(2, n, 100 + seed);
                let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
                definetti_error(&psi, &measure).unwrap().error
            })
            .sum::<f64>()
            / 20.0
    };
    assert!(mean(16) < mean(4));
}

#[test]
fn full_span_mass_bound() {
    let psi = random_state(3, 5, 9);
    let measure = lower_symbol_measure(&psi, &quick()).unwrap();
    let bound = measure_mass_bound(&psi, &measure).unwrap();
    assert!((bound.lower_bound - 1.0).abs() < 1e-12);
    assert!(bound.mass.value >= 1.0 - 4.0 * bound.mass.stderr);
}

/// `√(1−λ)|N,0,0⟩ + √λ|occupied⟩` over three modes, localized to the first two.
fn excited_state(n: usize, lambda: f64, excited: &[u16]) -> (FockBasis, SymmetricState) {
    let basis = FockBasis::new(3, n, usize::MAX).unwrap();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
    amplitudes[basis.index_of(&[n as u16, 0, 0])] = Complex64::new((1.0 - lambda).sqrt(), 0.0);
    amplitudes[basis.index_of(excited)] = Complex64::new(lambda.sqrt(), 0.0);
    let psi = SymmetricState::new(&basis, amplitudes).unwrap();
    (basis, psi)
}

/// `Tr(P⊗P γ^(2))` for `P` the first `d` modes.
fn projected_pair_trace(basis: &FockBasis, psi: &SymmetricState, d: usize) -> f64 {
    let m = basis.modes();
    let g2 = two_body_density(basis, psi).unwrap();
    (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| g2[(i * m + j, i * m + j)].re).sum()
}

#[test]
fn paired_excitations_satisfy_squared_mass_bound() {
    let n = 8;
    for lambda in [0.1, 0.3] {
        let (basis, psi) = excited_state(n, lambda, &[n as u16 - 2, 0, 2]);
        let measure = lower_symbol_measure_on(&psi, 2, &SphereIntegration::default()).unwrap();
        let bound = measure_mass_bound(&psi, &measure).unwrap();
        assert!((bound.mass.value - projected_pair_trace(&basis, &psi, 2)).abs() < 1e-12);
        assert!(bound.mass.value > bound.lower_bound + 1e-4, "{bound:?}");
        assert!((0.0..=1.0).contains(&bound.lower_bound));
    }
}

#[test]
fn single_excitations_sit_between_linear_and_squared_bounds() {
    let n = 8;
    let lambda = 0.4;
    let (basis, psi) = excited_state(n, lambda, &[n as u16 - 1, 0, 1]);
    let measure = lower_symbol_measure_on(&psi, 2, &SphereIntegration::default()).unwrap();
    let bound = measure_mass_bound(&psi, &measure).unwrap();
    let nf = n as f64;
    assert!((bound.mass.value - (1.0 - 2.0 * lambda / nf)).abs() < 1e-12);
    assert!((bound.mass.value - projected_pair_trace(&basis, &psi, 2)).abs() < 1e-12);
    assert!((bound.linear_bound - bound.mass.value).abs() < 1e-12);
    assert!((bound.lower_bound - bound.mass.value - (lambda / nf).powi(2)).abs() < 1e-12);
}

/// `U^{⊗N}` for `U` a mode swap followed by diagonal phases.
fn rotate(basis: &FockBasis, psi: &SymmetricState, phases: &[f64]) -> SymmetricState {
    let mut out = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (x, amp) in psi.amplitudes().iter().enumerate() {
        let occ = basis.occupation(x);
        let swapped = [occ[1], occ[0]];
        let angle: f64 = swapped.iter().zip(phases).map(|(&n, p)| n as f64 * p).sum();
        out[basis.index_of(&swapped)] = amp * Complex64::from_polar(1.0, angle);
    }
    SymmetricState::new(basis, out).unwrap()
}

#[test]
fn unitary_covariance() {
    let n = 6;
    let basis = FockBasis::new(2, n, usize::MAX).unwrap();
    let psi = random_state(2, n, 3);
    let phases = [0.4, -1.3];
    let rotated = rotate(&basis, &psi, &phases);
    let options = SphereIntegration::default();
    let m0 = lower_symbol_measure(&psi, &options).unwrap();
    let m1 = lower_symbol_measure(&rotated, &options).unwrap();
    let e0 = definetti_error(&psi, &m0).unwrap().error;
    let e1 = definetti_error(&rotated, &m1).unwrap().error;
    assert!((e0 - e1).abs() < 1e-10);
    // ρ'(u) = ρ(U* u) with U φ_0 = e^{iθ_1} φ_1 and U φ_1 = e^{iθ_0} φ_0
    let u = [Complex64::from_polar(0.6, 0.3), Complex64::from_polar(0.8, -0.9)];
    let back = [u[1] * Complex64::from_polar(1.0, -phases[1]), u[0] * Complex64::from_polar(1.0, -phases[0])];
    assert!((m1.density(&u).unwrap() - m0.density(&back).unwrap()).abs() < 1e-12);
}

#[test]
fn rejects_mismatched_state() {
    let psi = random_state(2, 4, 0);
    let other = random_state(2, 5, 0);
    let measure = lower_symbol_measure(&psi, &SphereIntegration::default()).unwrap();
    assert!(definetti_error(&other, &measure).is_err());
    assert!(measure.density(&[Complex64::new(1.0, 0.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn density_is_phase_invariant_and_nonnegative(
        seed in 0u64..1000,
        t in 0.0f64..1.0,
        phi in 0.0f64..6.3,
        theta in 0.0f64..6.3,
    ) {
        let psi = random_state(2, 5, seed);
        let measure = lower_symbol_measure(&psi, &SphereIntegration { nodes: 8, ..SphereIntegration::default() }).unwrap();
        let u = [Complex64::new(t.sqrt(), 0.0), Complex64::from_polar((1.0 - t).sqrt(), phi)];
        let rotated = [u[0] * Complex64::from_polar(1.0, theta), u[1] * Complex64::from_polar(1.0, theta)];
        let a = measure.density(&u).unwrap();
        let b = measure.density(&rotated).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn mass_never_exceeds_one(seed in 0u64..1000, span in 1usize..3) {
        let psi = random_state(3, 4, seed);
        let measure = lower_symbol_measure_on(&psi, span, &SphereIntegration::default()).unwrap();
        prop_assert!(measure.mass().value <= 1.0 + 1e-12);
    }
}
