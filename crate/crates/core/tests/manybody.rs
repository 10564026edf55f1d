use std::f64::consts::PI;

use bosenls::field::Grid2D;
use bosenls::functionals::{InteractionProfile, ModelParams, Potential};
use bosenls::manybody::*;
use bosenls::minimize::{minimize_energy, Functional, MinimizeOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn small_grid() -> Grid2D {
    Grid2D::new(8.0, 64).unwrap()
}

fn oscillator_basis(m: usize) -> ModeBasis {
    one_body_modes(&ModelParams::harmonic(small_grid()).unwrap(), m).unwrap()
}

const LADDER: [f64; 10] = [2.0, 4.0, 4.0, 6.0, 6.0, 6.0, 8.0, 8.0, 8.0, 8.0];

#[test]
fn oscillator_modes_on_default_grid() {
    let params = ModelParams::harmonic(Grid2D::default()).unwrap();
    let basis = one_body_modes(&params, 6).unwrap();
    for (e, exact) in basis.eigenvalues().iter().zip(LADDER) {
        assert!((e - exact).abs() < 1e-4, "{e} vs {exact}");
    }
}

#[test]
fn modes_are_orthonormal_eigenfunctions() {
    let basis = oscillator_basis(10);
    for (e, exact) in basis.eigenvalues().iter().zip(LADDER) {
        assert!((e - exact).abs() < 1e-8, "{e} vs {exact}");
    }
    let gram = basis.gram();
    assert!((gram - DMatrix::identity(10, 10)).amax() < 1e-8);
    assert!(basis.residuals().iter().all(|&r| r <= 1e-6));

    let grid = small_grid();
    let phi0 = basis.mode(0);
    assert!(phi0.iter().all(|&v| v > -1e-10));
    // radial symmetry: invariant under x ↔ y and x → −x
    let n = grid.points_per_side();
    for iy in 1..n {
        for ix in 1..n {
            let a = phi0[iy * n + ix];
            assert!((a - phi0[ix * n + iy]).abs() < 1e-8);
            assert!((a - phi0[iy * n + (n - ix)]).abs() < 1e-8);
        }
    }
}

#[test]
fn modes_for_other_traps() {
    let grid = small_grid();
    let quartic = ModelParams::trapped(grid, 4.0).unwrap();
    let basis = one_body_modes(&quartic, 4).unwrap();
    let levels = radial_levels(4.0, basis.eigenvalues()[3] + 0.5);
    for (e, r) in basis.eigenvalues().iter().zip(&levels) {
        assert!((e - r).abs() < 1e-5, "{e} vs {r}");
    }
    let table = grid.sample(|x, y| x * x + y * y);
    let tabled = ModelParams::harmonic(grid).unwrap().with_potential(Potential::Table(table)).unwrap();
    let b = one_body_modes(&tabled, 3).unwrap();
    assert!((b.eigenvalues()[0] - 2.0).abs() < 1e-8);
}

#[test]
fn mode_requests_are_validated() {
    let params = ModelParams::harmonic(small_grid()).unwrap();
    assert!(one_body_modes(&params, 0).is_err());
    assert!(one_body_modes(&params, 65).is_err());
}

#[test]
fn counting_oscillator_levels() {
    let params = ModelParams::harmonic(small_grid()).unwrap();
    assert_eq!(count_modes_below(&params, 6.0 + 1e-6).unwrap(), 6);
    assert_eq!(count_modes_below(&params, 6.0 - 1e-6).unwrap(), 3);
    assert_eq!(count_modes_below(&params, 1.0).unwrap(), 0);

    let cutoffs: Vec<f64> = (0..8).map(|k| 10.0 * 6f64.powf(k as f64 / 7.0)).collect();
    let counts: Vec<usize> =
        cutoffs.iter().map(|&l| count_modes_below(&params, l).unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    let slope = fit_slope(&cutoffs, &counts);
    assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
}

fn fit_slope(xs: &[f64], ys: &[usize]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| (y as f64).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

#[test]
fn counting_table_potential_falls_back_to_grid_modes() {
    let grid = small_grid();
    let table = grid.sample(|x, y| x * x + y * y);
    let params = ModelParams::harmonic(grid).unwrap().with_potential(Potential::Table(table)).unwrap();
    assert_eq!(count_modes_below(&params, 6.5).unwrap(), 6);
    assert_eq!(count_modes_below(&params, 8.5).unwrap(), 10);
}

#[test]
fn tensor_values_and_symmetries() {
    let basis = oscillator_basis(4);
    let narrow = InteractionProfile::gaussian(1.0, 0.1).unwrap();
    let t = two_body_tensor(&basis, &narrow, 1.0).unwrap();
    let w0 = t.get(0, 0, 0, 0);
    assert!((w0 - 1.0 / (2.0 * PI)).abs() < 0.02 / (2.0 * PI), "{w0}");

    let w = InteractionProfile::gaussian(1.3, 1.0).unwrap();
    let t = two_body_tensor(&basis, &w, 1.0).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    assert!((t.get(i, j, k, l) - t.get(j, i, l, k)).abs() < 1e-12);
                    assert!((t.get(i, j, k, l) - t.get(k, l, i, j)).abs() < 1e-12);
                }
            }
        }
    }
    assert!(two_body_tensor(&basis, &InteractionProfile::zero(), 1.0).unwrap().is_zero());
    // analytic: ⟨φ₀φ₀|w|φ₀φ₀⟩ = a/(2π(1+1/2)) for the unit Gaussian
    assert!((t.get(0, 0, 0, 0) - 1.3 / (3.0 * PI)).abs() < 1e-10);

    let grid = small_grid();
    let kernel = grid.sample(|x, y| w.evaluate(x, y));
    let sampled = two_body_tensor_sampled(&basis, &kernel).unwrap();
    assert!((sampled.get(0, 1, 0, 1) - t.get(0, 1, 0, 1)).abs() < 1e-8);
}

#[test]
fn hamiltonian_small_cases() {
    let basis = oscillator_basis(3);
    let w = InteractionProfile::gaussian(2.0, 1.0).unwrap();
    let t = two_body_tensor(&basis, &w, 1.0).unwrap();

    let one = t_restricted(&basis, &w, 1);
    let h = assemble_hamiltonian(&basis.eigenvalues()[..1], &one, 2, 0.0, DIMENSION_CAP).unwrap();
    assert_eq!(h.dimension(), 1);
    let expected = 2.0 * basis.eigenvalues()[0] + one.get(0, 0, 0, 0);
    assert!((h.entry(0, 0) - expected).abs() < 1e-12);

    let h = assemble_hamiltonian(basis.eigenvalues(), &t, 4, 0.0, DIMENSION_CAP).unwrap();
    assert_eq!(h.asymmetry(), 0.0);

    let free = TwoBodyTensor::zeros(3);
    let h = assemble_hamiltonian(basis.eigenvalues(), &free, 3, 0.0, DIMENSION_CAP).unwrap();
    for r in 0..h.dimension() {
        let occ = h.basis().occupation(r);
        let diag: f64 = occ.iter().zip(basis.eigenvalues()).map(|(&n, e)| n as f64 * e).sum();
        assert!((h.entry(r, r) - diag).abs() < 1e-12);
        for c in 0..h.dimension() {
            if c != r {
                assert_eq!(h.entry(r, c), 0.0);
            }
        }
    }
    let gs = ground_state(&h).unwrap();
    assert!((gs.eigenvalue - 3.0 * basis.eigenvalues()[0]).abs() < 1e-9);
    assert!(matches!(
        assemble_hamiltonian(basis.eigenvalues(), &free, 3, 0.0, 5),
        Err(bosenls::Error::CapExceeded(_))
    ));
}

fn t_restricted(basis: &ModeBasis, w: &InteractionProfile, m: usize) -> TwoBodyTensor {
    two_body_tensor(&basis.truncated(m), w, 1.0).unwrap()
}

#[test]
fn free_ground_energy_is_lowest_mode() {
    let basis = oscillator_basis(4);
    let free = TwoBodyTensor::zeros(4);
    for n in [2, 3, 4] {
        let h = assemble_hamiltonian(basis.eigenvalues(), &free, n, 0.0, DIMENSION_CAP).unwrap();
        let gs = ground_state(&h).unwrap();
        assert!((gs.energy_per_particle - 2.0).abs() < 1e-6);
        let m = moments(h.basis(), &gs.state, basis.eigenvalues()).unwrap();
        assert!((m.m1 - basis.eigenvalues()[0]).abs() < 1e-9);
        assert!((m.m2 - basis.eigenvalues()[0].powi(2)).abs() < 1e-9);
        for eps in [0.1, 0.3] {
            let e = perturbed_ground_energy(basis.eigenvalues(), &free, n, eps, DIMENSION_CAP).unwrap();
            assert!((e - (1.0 - eps) * basis.eigenvalues()[0]).abs() < 1e-9);
        }
    }
}

#[test]
fn variational_ordering_and_monotonicity() {
    let basis = oscillator_basis(6);
    let w = InteractionProfile::gaussian(3.0, 1.0).unwrap();
    let t = two_body_tensor(&basis, &w, 1.0).unwrap();
    let span = hartree_in_span(basis.eigenvalues(), &t, 1).unwrap();
    let mut previous = f64::NEG_INFINITY;
    for g in [0.0, 0.5, 1.0] {
        let tg = t.scaled(g);
        let h = assemble_hamiltonian(basis.eigenvalues(), &tg, 3, 0.0, DIMENSION_CAP).unwrap();
        let e = ground_state(&h).unwrap().energy_per_particle;
        assert!(e >= previous - 1e-12);
        previous = e;
    }
    for n in [2, 3, 4] {
        let h = assemble_hamiltonian(basis.eigenvalues(), &t, n, 0.0, DIMENSION_CAP).unwrap();
        let e = ground_state(&h).unwrap().energy_per_particle;
        assert!(e <= span.energy + 1e-8, "N = {n}: {e} > {}", span.energy);
        let e0 = perturbed_ground_energy(basis.eigenvalues(), &t, n, 0.0, DIMENSION_CAP).unwrap();
        assert_eq!(e0, e);
        let e1 = perturbed_ground_energy(basis.eigenvalues(), &t, n, 0.1, DIMENSION_CAP).unwrap();
        let e2 = perturbed_ground_energy(basis.eigenvalues(), &t, n, 0.2, DIMENSION_CAP).unwrap();
        assert!(e >= e1 && e1 >= e2);
    }
}

#[test]
fn span_hartree_matches_grid_minimizer_without_interaction() {
    let params = ModelParams::harmonic(small_grid()).unwrap();
    let basis = one_body_modes(&params, 3).unwrap();
    let span = hartree_in_span(basis.eigenvalues(), &TwoBodyTensor::zeros(3), 0).unwrap();
    let grid = minimize_energy(Functional::Hartree, &params, &MinimizeOptions::default(), None).unwrap();
    assert!((span.energy - grid.energy.total).abs() < 1e-6);
    assert!((basis.eigenvalues()[0] - grid.energy.total).abs() < 1e-6);
}

fn check_densities(basis: &FockBasis, psi: &SymmetricState) {
    let g1 = one_body_density(basis, psi).unwrap();
    let g2 = two_body_density(basis, psi).unwrap();
    for g in [&g1, &g2] {
        assert!((g - g.adjoint()).camax() < 1e-12);
        let trace: Complex64 = g.diagonal().iter().sum();
        assert!((trace.re - 1.0).abs() < 1e-10 && trace.im.abs() < 1e-10);
        assert!(hermitian_eigenvalues(g).iter().all(|&v| v >= -1e-10));
    }
    let pt = partial_trace(&g2, basis.modes());
    assert!((pt - &g1).camax() < 1e-10);
}

#[test]
fn density_matrices_of_random_states() {
    for (m, n, seed) in [(2, 2, 1), (3, 4, 2), (4, 5, 3), (5, 3, 4)] {
        let basis = FockBasis::new(m, n, DIMENSION_CAP).unwrap();
        let psi = SymmetricState::random(&basis, seed).unwrap();
        check_densities(&basis, &psi);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ground_state_consistency() {
    let basis = oscillator_basis(6);
    let w = InteractionProfile::gaussian(4.0, 1.0).unwrap();
    let t = two_body_tensor(&basis, &w, 1.0).unwrap();
    for n in [2, 3, 5] {
        let h = assemble_hamiltonian(basis.eigenvalues(), &t, n, 0.0, DIMENSION_CAP).unwrap();
        let gs = ground_state(&h).unwrap();
        assert!(gs.residual <= 1e-9);
        check_densities(h.basis(), &gs.state);
        let g2 = two_body_density(h.basis(), &gs.state).unwrap();
        let e = two_body_energy(&g2, basis.eigenvalues(), &t);
        assert!((e - gs.energy_per_particle).abs() < 1e-8);
        let m = moments(h.basis(), &gs.state, basis.eigenvalues()).unwrap();
        assert!(m.m2 >= 0.0 && m.m1 >= basis.eigenvalues()[0] - 1e-12);
    }
}

#[test]
fn lanczos_path_matches_dense_path() {
    let basis = oscillator_basis(8);
    let w = InteractionProfile::gaussian(-2.0, 1.0).unwrap();
    let t = two_body_tensor(&basis, &w, 1.0).unwrap();
    // C(11, 4) = 330 uses dense; C(13, 6) = 1716 uses Lanczos
    let h = assemble_hamiltonian(basis.eigenvalues(), &t, 6, 0.0, DIMENSION_CAP).unwrap();
    assert_eq!(h.dimension(), 1716);
    let gs = ground_state(&h).unwrap();
    let dense = nalgebra::SymmetricEigen::new(h.to_dense());
    let lowest = dense.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((gs.eigenvalue - lowest).abs() < 1e-9 * lowest.abs().max(1.0));
}

#[test]
fn operator_constants() {
    let grid = small_grid();
    let params = ModelParams::harmonic(grid).unwrap();
    let basis = one_body_modes(&params, 8).unwrap();
    let w = InteractionProfile::gaussian(1.5, 1.0).unwrap();
    for form in [OperatorForm::OneBody, OperatorForm::TwoBody, OperatorForm::Commutator] {
        let c = operator_constant(&basis, &w, 1.0, form, Some(0.2)).unwrap();
        let c2 = operator_constant(&basis, &w.scaled(2.0), 1.0, form, Some(0.2)).unwrap();
        assert!(c > 0.0);
        assert!((c - c2).abs() < 1e-10 * c, "{form:?}");
        let zero = operator_constant(&basis, &InteractionProfile::zero(), 1.0, form, Some(0.2));
        assert_eq!(zero.unwrap(), 0.0);
    }
    assert!(operator_constant(&basis, &w, 1.0, OperatorForm::TwoBody, Some(0.5)).is_err());
    assert!(operator_constant(&basis, &w, 1.0, OperatorForm::TwoBody, None).is_err());

    let constants: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&m| {
            let b = if m == 8 { basis.clone() } else { one_body_modes(&params, m).unwrap() };
            operator_constant(&b, &w, 1.0, OperatorForm::OneBody, None).unwrap()
        })
        .collect();
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi <= 1.25 * lo, "{constants:?}");
}

#[test]
fn lower_bound_terms() {
    let m = Moments { m1: 2.0, m2: 4.0 };
    let t = gse2_error_terms(m, 10.0, 0.1, 4, 20).unwrap();
    let expected = 10f64.powf(-0.2) * 2f64.powf(0.2) * 4f64.powf(0.6);
    assert!((t.term_moment - expected).abs() < 1e-12);
    assert!((t.term_dim - 10f64.powf(1.1) * 20.0 / 4.0).abs() < 1e-12);
    let far = gse2_error_terms(m, 10.0, 0.1, 4000, 20).unwrap();
    assert!(far.term_dim < t.term_dim / 100.0);
    assert!(t.term_dim >= 0.0 && t.term_moment >= 0.0);
    assert!(gse2_error_terms(m, 10.0, 0.6, 4, 20).is_err());
}
