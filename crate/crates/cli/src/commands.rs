//! One pipeline per subcommand. Jobs fan out on the ambient rayon pool and
//! their results come back in input order, so outputs do not depend on the
//! number of workers.

use std::fs;
use std::path::Path;

use bosenls::definetti::{definetti_error, lower_symbol_measure_on, measure_mass_bound};
use bosenls::exponents::{parse_rational, run_schedule, Verdict};
use bosenls::field::{io::write_csv, Field2D, Grid2D};
use bosenls::functionals::{
    gn_quotient, interaction_error, stability_quotient, EnergyReport, InteractionProfile, ModelParams,
    StabilitySearch,
};
use bosenls::manybody::{
    assemble_hamiltonian, ground_state, hartree_in_span, moments, one_body_modes_with, two_body_tensor,
    FockBasis, SymmetricState,
};
use bosenls::minimize::{
    critical_grid, gaussian_seed, minimize_energy, shoot_townes, townes_profile, Functional,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Command, InteractionKind, RunConfig};
use crate::output::Artifacts;
use crate::Failure;

/// How a successful pipeline ended.
pub enum Status {
    Done,
    Inconclusive(String),
}

pub fn run(config: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    match config.command {
        Command::Townes => townes(config, out),
        Command::Nls => nls(config, out),
        Command::Hartree => hartree(config, out),
        Command::SweepLambda => sweep_lambda(config, out),
        Command::Stability => stability(config, out),
        Command::Manybody => manybody(config, out),
        Command::Definetti => definetti(config, out),
        Command::Exponents => exponents(config, out),
    }
}

fn grid(c: &RunConfig) -> Result<Grid2D, Failure> {
    Ok(Grid2D::new(c.numerics.half_extent, c.numerics.grid_points)?)
}

fn interaction(c: &RunConfig) -> Result<InteractionProfile, Failure> {
    let w = &c.model.interaction;
    Ok(match w.kind {
        InteractionKind::Gaussian => InteractionProfile::gaussian(w.integral, w.width)?,
        InteractionKind::Bump => InteractionProfile::bump(w.integral, w.width)?,
        InteractionKind::Zero => InteractionProfile::zero(),
    })
}

fn field_csv(field: &Field2D) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_csv(field, &mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct TownesRecord {
    a_star: f64,
    central_value: f64,
    derivative_at_zero: f64,
    bracket_width: f64,
    max_radius: f64,
    /// Quotient of the sampled profile on the reference grid.
    gn_quotient: f64,
}

fn townes(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let profile = shoot_townes(c.numerics.townes_tolerance)?;
    let sampled = profile.to_field(critical_grid(), 1.0)?;
    let record = TownesRecord {
        a_star: profile.mass,
        central_value: profile.central_value(),
        derivative_at_zero: profile.derivative_at_zero,
        bracket_width: profile.bracket_width,
        max_radius: profile.max_radius(),
        gn_quotient: gn_quotient(&sampled)?,
    };
    let rows: Vec<Vec<f64>> = profile
        .radii
        .iter()
        .zip(&profile.values)
        .zip(&profile.derivatives)
        .map(|((&r, &q), &dq)| vec![r, q, dq])
        .collect();
    out.write_csv("profile.csv", &["r", "q", "dq"], &rows)?;
    out.write_json("townes.json", &record)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct MinimizeRecord {
    functional: Functional,
    particles: Option<usize>,
    /// Interaction length scale `N^β`.
    lambda: Option<f64>,
    coupling: f64,
    critical_coupling: f64,
    energy: EnergyReport,
    converged: bool,
    iterations: usize,
    residual: f64,
}

fn nls(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let params = ModelParams::trapped(grid(c)?, c.model.s.value())?.with_coupling(c.model.coupling)?;
    let result = minimize_energy(Functional::Nls, &params, &c.numerics.minimizer, None)?;
    let record = MinimizeRecord {
        functional: Functional::Nls,
        particles: None,
        lambda: None,
        coupling: c.model.coupling,
        critical_coupling: townes_profile()?.mass,
        energy: result.energy,
        converged: result.converged,
        iterations: result.iterations,
        residual: result.residual,
    };
    out.write_bytes("field.csv", &field_csv(&result.field)?)?;
    out.write_json("nls.json", &record)?;
    Ok(Status::Done)
}

fn hartree(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let w = interaction(c)?;
    let base = ModelParams::trapped(grid(c)?, c.model.s.value())?.with_interaction(w.clone());
    let beta = c.model.beta.value();
    let a_star = townes_profile()?.mass;
    let runs: Vec<_> = c
        .model
        .particles
        .par_iter()
        .map(|&n| -> Result<_, Failure> {
            let params = base.clone().with_scaling(beta, n)?;
            let result = minimize_energy(Functional::Hartree, &params, &c.numerics.minimizer, None)?;
            let record = MinimizeRecord {
                functional: Functional::Hartree,
                particles: Some(n),
                lambda: Some(params.lambda()),
                coupling: w.integral(),
                critical_coupling: a_star,
                energy: result.energy,
                converged: result.converged,
                iterations: result.iterations,
                residual: result.residual,
            };
            Ok((record, field_csv(&result.field)?))
        })
        .collect::<Result<_, _>>()?;
    let mut records = Vec::new();
    for (record, csv) in runs {
        out.write_bytes(&format!("field_n{}.csv", record.particles.unwrap_or(0)), &csv)?;
        records.push(record);
    }
    out.write_json("hartree.json", &records)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct SweepRecord {
    lambdas: Vec<f64>,
    errors: Vec<f64>,
    strictly_decreasing: bool,
}

fn sweep_lambda(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let w = interaction(c)?;
    let u = gaussian_seed(grid(c)?)?;
    let errors: Vec<f64> = c
        .numerics
        .lambdas
        .par_iter()
        .map(|&lambda| interaction_error(&u, &w, lambda))
        .collect::<bosenls::Result<_>>()?;
    let rows: Vec<Vec<f64>> = c.numerics.lambdas.iter().zip(&errors).map(|(&l, &e)| vec![l, e]).collect();
    let record = SweepRecord {
        lambdas: c.numerics.lambdas.clone(),
        strictly_decreasing: errors.windows(2).all(|p| p[1] < p[0]),
        errors,
    };
    out.write_csv("sweep.csv", &["lambda", "error"], &rows)?;
    out.write_json("sweep.json", &record)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct StabilityRecord {
    integral: f64,
    critical_coupling: f64,
    /// Smallest ratio found, an upper bound on the infimum.
    value: f64,
    unstable: bool,
}

fn stability(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let w = interaction(c)?;
    let search = StabilitySearch {
        grid: grid(c)?,
        widths: c.numerics.stability_widths,
        polish_iterations: c.numerics.polish_iterations,
    };
    let outcome = stability_quotient(&w, &search)?;
    let record = StabilityRecord {
        integral: w.integral(),
        critical_coupling: townes_profile()?.mass,
        value: outcome.value,
        unstable: outcome.unstable,
    };
    out.write_bytes("witness.csv", &field_csv(&outcome.witness)?)?;
    out.write_json("stability.json", &record)?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct ManybodyRecord {
    particles: usize,
    lambda: f64,
    dimension: usize,
    ground_energy: f64,
    hartree_energy: f64,
    /// `hartree_energy − ground_energy`.
    gap: f64,
    m1: f64,
    m2: f64,
    residual: f64,
}

#[derive(Serialize)]
struct ManybodySummary {
    modes: usize,
    eigenvalues: Vec<f64>,
    records: Vec<ManybodyRecord>,
}

fn manybody(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let w = interaction(c)?;
    let params = ModelParams::trapped(grid(c)?, c.model.s.value())?.with_interaction(w.clone());
    let basis = one_body_modes_with(&params, c.numerics.modes, &c.numerics.eigensolver)?;
    let eps = basis.eigenvalues().to_vec();
    let beta = c.model.beta.value();
    let records: Vec<ManybodyRecord> = c
        .model
        .particles
        .par_iter()
        .map(|&n| -> Result<_, Failure> {
            let lambda = (n as f64).powf(beta);
            let tensor = two_body_tensor(&basis, &w, lambda)?;
            let h = assemble_hamiltonian(&eps, &tensor, n, c.model.epsilon, c.numerics.dimension_cap)?;
            let ground = ground_state(&h)?;
            let span = hartree_in_span(&eps, &tensor, c.seed)?;
            let m = moments(h.basis(), &ground.state, &eps)?;
            Ok(ManybodyRecord {
                particles: n,
                lambda,
                dimension: h.dimension(),
                ground_energy: ground.energy_per_particle,
                hartree_energy: span.energy,
                gap: span.energy - ground.energy_per_particle,
                m1: m.m1,
                m2: m.m2,
                residual: ground.residual,
            })
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![r.particles as f64, r.lambda, r.ground_energy, r.hartree_energy, r.gap, r.m1, r.m2])
        .collect();
    out.write_csv(
        "manybody.csv",
        &["particles", "lambda", "ground_energy", "hartree_energy", "gap", "m1", "m2"],
        &rows,
    )?;
    out.write_json("manybody.json", &ManybodySummary { modes: basis.len(), eigenvalues: eps, records })?;
    Ok(Status::Done)
}

/// A symmetric state stored as `[re, im]` amplitudes in basis order.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    modes: usize,
    particles: usize,
    amplitudes: Vec<[f64; 2]>,
}

fn load_state(path: &Path) -> Result<SymmetricState, Failure> {
    let text = fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let basis = FockBasis::new(file.modes, file.particles, usize::MAX)?;
    let amplitudes = file.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    Ok(SymmetricState::new(&basis, amplitudes)?.normalized()?)
}

#[derive(Serialize)]
struct DefinettiRecord {
    particles: usize,
    span: usize,
    seed: Option<u64>,
    error: f64,
    bound_8d_over_n: f64,
    mass: f64,
    mass_lower_bound: f64,
    estimator_stderr: f64,
    inconclusive: bool,
}

#[derive(Serialize)]
struct DefinettiSummary {
    particles: usize,
    mean_error: f64,
    max_error: f64,
    bound_8d_over_n: f64,
}

#[derive(Serialize)]
struct DefinettiReport {
    records: Vec<DefinettiRecord>,
    summary: Vec<DefinettiSummary>,
}

fn definetti(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let jobs: Vec<(SymmetricState, Option<u64>)> = match &c.model.state_file {
        Some(path) => vec![(load_state(path)?, None)],
        None => {
            let mut jobs = Vec::new();
            for &n in &c.model.particles {
                let basis = FockBasis::new(c.model.span, n, usize::MAX)?;
                for k in 0..c.numerics.states as u64 {
                    let seed = c.seed.wrapping_add(k);
                    jobs.push((SymmetricState::random(&basis, seed)?, Some(seed)));
                }
            }
            jobs
        }
    };
    let span = c.model.span;
    let records: Vec<DefinettiRecord> = jobs
        .par_iter()
        .map(|(psi, seed)| -> Result<_, Failure> {
            let measure = lower_symbol_measure_on(psi, span, &c.numerics.sphere)?;
            let report = definetti_error(psi, &measure)?;
            let mass = measure_mass_bound(psi, &measure)?;
            Ok(DefinettiRecord {
                particles: psi.particles(),
                span,
                seed: *seed,
                error: report.error,
                bound_8d_over_n: report.bound,
                mass: mass.mass.value,
                mass_lower_bound: mass.lower_bound,
                estimator_stderr: report.stderr,
                inconclusive: report.inconclusive,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut summary: Vec<DefinettiSummary> = Vec::new();
    for r in &records {
        match summary.iter_mut().find(|s| s.particles == r.particles) {
            Some(s) => {
                s.mean_error += r.error;
                s.max_error = s.max_error.max(r.error);
            }
            None => summary.push(DefinettiSummary {
                particles: r.particles,
                mean_error: r.error,
                max_error: r.error,
                bound_8d_over_n: r.bound_8d_over_n,
            }),
        }
    }
    for s in &mut summary {
        let count = records.iter().filter(|r| r.particles == s.particles).count();
        s.mean_error /= count as f64;
    }
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            vec![
                r.particles as f64,
                r.seed.map_or(f64::NAN, |s| s as f64),
                r.error,
                r.bound_8d_over_n,
                r.mass,
                r.mass_lower_bound,
                r.estimator_stderr,
            ]
        })
        .collect();
    out.write_csv(
        "definetti.csv",
        &["particles", "seed", "error", "bound", "mass", "mass_lower_bound", "stderr"],
        &rows,
    )?;
    let inconclusive = records.iter().filter(|r| r.inconclusive).count();
    out.write_json("definetti.json", &DefinettiReport { records, summary })?;
    if inconclusive > 0 {
        return Ok(Status::Inconclusive(format!(
            "{inconclusive} state(s) have estimator error bars above a tenth of the bound"
        )));
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
struct ExactValues {
    s: String,
    beta: String,
    beta0: String,
    beta1: String,
    eta0: String,
    c: Option<String>,
    c_max: String,
    alpha_sup: String,
}

#[derive(Serialize)]
struct ExponentsRecord {
    s: f64,
    beta: f64,
    beta0: f64,
    beta1: f64,
    eta0: f64,
    c: Option<f64>,
    c_max: f64,
    steps: usize,
    taus: Vec<f64>,
    etas: Vec<f64>,
    verdict: Verdict,
    alpha_sup: f64,
    exact: ExactValues,
}

fn exponents(c: &RunConfig, out: &mut Artifacts) -> Result<Status, Failure> {
    let s = parse_rational(c.model.s.text())?;
    let beta = parse_rational(c.model.beta.text())?;
    let step = c.numerics.step.as_ref().map(|e| parse_rational(e.text())).transpose()?;
    let exact = run_schedule(&s, &beta, step, c.numerics.max_steps)?;
    let f = exact.to_f64();
    let record = ExponentsRecord {
        s: f.s,
        beta: f.beta,
        beta0: f.beta0,
        beta1: f.beta1,
        eta0: f.eta0,
        c: f.c,
        c_max: f.c_max,
        steps: exact.steps(),
        taus: f.taus.clone(),
        etas: f.etas.clone(),
        verdict: f.verdict,
        alpha_sup: f.alpha_sup,
        exact: ExactValues {
            s: exact.s.to_string(),
            beta: exact.beta.to_string(),
            beta0: exact.beta0.to_string(),
            beta1: exact.beta1.to_string(),
            eta0: exact.eta0.to_string(),
            c: exact.c.as_ref().map(|v| v.to_string()),
            c_max: exact.c_max.to_string(),
            alpha_sup: exact.alpha_sup.to_string(),
        },
    };
    if c.numerics.trajectory_csv {
        let rows: Vec<Vec<f64>> = f
            .etas
            .iter()
            .enumerate()
            .map(|(k, &eta)| vec![k as f64, eta, f.taus.get(k).copied().unwrap_or(f64::NAN)])
            .collect();
        out.write_csv("trajectory.csv", &["step", "eta", "tau"], &rows)?;
    }
    out.write_json("exponents.json", &record)?;
    Ok(Status::Done)
}
