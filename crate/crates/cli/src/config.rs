//! Strict TOML configuration. Every key is consumed explicitly; whatever is
//! left over is reported as unknown, and all problems are gathered before
//! anything runs.

use std::cell::RefCell;
use std::fmt;
use std::path::PathBuf;

use bosenls::definetti::{SphereIntegration, MAX_PARTICLES, MAX_SPAN};
use bosenls::exponents::{parse_rational, step_bound};
use bosenls::manybody::{symmetric_dimension, EigenOptions, DIMENSION_CAP};
use bosenls::minimize::MinimizeOptions;
use clap::ValueEnum;
use num_traits::ToPrimitive;
use serde::Serialize;
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Townes,
    Nls,
    Hartree,
    SweepLambda,
    Stability,
    Manybody,
    Definetti,
    Exponents,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Townes => "townes",
            Command::Nls => "nls",
            Command::Hartree => "hartree",
            Command::SweepLambda => "sweep-lambda",
            Command::Stability => "stability",
            Command::Manybody => "manybody",
            Command::Definetti => "definetti",
            Command::Exponents => "exponents",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|c| c.name() == name)
    }
}

/// A number kept as written, so decimal inputs stay exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Exact(String);

impl Exact {
    pub fn text(&self) -> &str {
        &self.0
    }

    pub fn value(&self) -> f64 {
        parse_rational(&self.0).ok().and_then(|q| q.to_f64()).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Gaussian,
    Bump,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionConfig {
    pub kind: InteractionKind,
    /// `∫ w`.
    pub integral: f64,
    /// Gaussian width or bump radius.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    /// Trap exponent in `V = |x|^s`.
    pub s: Exact,
    /// NLS coupling `a`.
    pub coupling: f64,
    pub beta: Exact,
    pub particles: Vec<usize>,
    pub epsilon: f64,
    pub interaction: InteractionConfig,
    /// Number of leading modes spanning the de Finetti projector.
    pub span: usize,
    pub state_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericsConfig {
    pub grid_points: usize,
    pub half_extent: f64,
    pub modes: usize,
    pub dimension_cap: usize,
    pub lambdas: Vec<f64>,
    pub stability_widths: usize,
    pub polish_iterations: usize,
    /// Random states per particle number for `definetti`.
    pub states: usize,
    pub step: Option<Exact>,
    pub max_steps: usize,
    pub townes_tolerance: f64,
    pub trajectory_csv: bool,
    pub minimizer: MinimizeOptions,
    pub eigensolver: EigenOptions,
    pub sphere: SphereIntegration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output: PathBuf,
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
}

/// One problem, with the dotted path of the offending key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

type Issues = RefCell<Vec<Issue>>;

struct Reader<'a> {
    path: String,
    table: Table,
    issues: &'a Issues,
}

impl<'a> Reader<'a> {
    fn new(path: &str, table: Table, issues: &'a Issues) -> Self {
        Self { path: path.to_string(), table, issues }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn complain(&self, key: &str, message: impl Into<String>) {
        self.issues.borrow_mut().push(Issue { path: self.key_path(key), message: message.into() });
    }

    fn typed<T>(&mut self, key: &str, default: T, what: &str, f: impl Fn(&Value) -> Option<T>) -> T {
        match self.table.remove(key) {
            None => default,
            Some(value) => f(&value).unwrap_or_else(|| {
                self.complain(key, format!("expected {what}, got {value}"));
                default
            }),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.typed(key, default, "a number", |v| match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        })
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.typed(key, default, "a non-negative integer", |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok())
        })
    }

    fn u64(&mut self, key: &str, default: u64) -> u64 {
        self.typed(key, default, "a non-negative integer", |v| v.as_integer().and_then(|i| u64::try_from(i).ok()))
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        self.typed(key, default, "a boolean", Value::as_bool)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.typed(key, None, "a string", |v| v.as_str().map(|s| Some(s.to_string())))
    }

    fn f64_list(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        self.typed(key, default, "an array of numbers", |v| {
            v.as_array()?
                .iter()
                .map(|x| match x {
                    Value::Float(f) => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect()
        })
    }

    fn usize_list(&mut self, key: &str, default: Vec<usize>) -> Vec<usize> {
        self.typed(key, default, "an array of non-negative integers", |v| {
            v.as_array()?.iter().map(|x| x.as_integer().and_then(|i| usize::try_from(i).ok())).collect()
        })
    }

    /// Integer, float or rational string such as `"3/4"`.
    fn exact(&mut self, key: &str) -> Option<Exact> {
        let value = self.table.remove(key)?;
        let text = match &value {
            Value::Integer(i) => i.to_string(),
            // shortest round-trip decimal: 0.7 stays 7/10
            Value::Float(f) if f.is_finite() => format!("{f}"),
            Value::String(s) => s.trim().to_string(),
            _ => {
                self.complain(key, format!("expected a number or a rational string, got {value}"));
                return None;
            }
        };
        if parse_rational(&text).is_err() {
            self.complain(key, format!("cannot read {text:?} as an exact number"));
            return None;
        }
        Some(Exact(text))
    }

    fn section(&mut self, key: &str) -> Reader<'a> {
        let table = match self.table.remove(key) {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(other) => {
                self.complain(key, format!("expected a table, got {other}"));
                Table::new()
            }
        };
        Reader { path: self.key_path(key), table, issues: self.issues }
    }

    fn finish(self) {
        for key in self.table.keys() {
            self.complain(key, "unknown key");
        }
    }
}

fn default_grid(command: Command) -> (usize, f64) {
    match command {
        Command::Stability => (128, 12.0),
        _ => (64, 8.0),
    }
}

/// Output directory: the explicit setting, else `$BOSENLS_OUTPUT/<command>`,
/// else `bosenls-output/<command>`.
pub fn default_output(command: Command) -> PathBuf {
    let root = std::env::var_os("BOSENLS_OUTPUT").map(PathBuf::from).unwrap_or_else(|| "bosenls-output".into());
    root.join(command.name())
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// Parses and resolves a configuration. `command` comes from the command
/// line when given and must agree with a `command` key in the file.
pub fn resolve(text: &str, command: Option<Command>, overrides: &Overrides) -> Result<RunConfig, Vec<Issue>> {
    let table: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![Issue { path: "<config>".into(), message: e.to_string().trim().to_string() }]);
        }
    };
    let issues: Issues = RefCell::new(Vec::new());
    let mut root = Reader::new("", table, &issues);

    let named = root.string("command");
    let command = match (command, named.as_deref()) {
        (Some(c), None) => Some(c),
        (c, Some(name)) => match Command::parse(name) {
            None => {
                root.complain("command", format!("unknown command {name:?}"));
                c
            }
            Some(parsed) if c.is_some_and(|c| c != parsed) => {
                root.complain("command", format!("file says {name:?} but {:?} was requested", c.unwrap().name()));
                c
            }
            Some(parsed) => Some(parsed),
        },
        (None, None) => {
            root.complain("command", "no command given on the command line or in the file");
            None
        }
    };
    let command_or_default = command.unwrap_or(Command::Exponents);

    let seed = root.u64("seed", 0);
    let seed = overrides.seed.unwrap_or(seed);
    let output = root.string("output").map(PathBuf::from);
    let output = overrides.output.clone().or(output).unwrap_or_else(|| default_output(command_or_default));

    let mut m = root.section("model");
    let s = m.exact("s").unwrap_or_else(|| Exact("2".into()));
    let coupling = m.f64("coupling", 0.0);
    let beta = m.exact("beta").unwrap_or_else(|| Exact("0".into()));
    let particles = m.usize_list("particles", vec![2, 3, 4, 5]);
    let epsilon = m.f64("epsilon", 0.0);
    let mut w = m.section("interaction");
    let kind = match w.string("kind").as_deref() {
        None | Some("gaussian") => InteractionKind::Gaussian,
        Some("bump") => InteractionKind::Bump,
        Some("zero") => InteractionKind::Zero,
        Some(other) => {
            w.complain("kind", format!("expected \"gaussian\", \"bump\" or \"zero\", got {other:?}"));
            InteractionKind::Gaussian
        }
    };
    let interaction = InteractionConfig { kind, integral: w.f64("integral", 1.0), width: w.f64("width", 1.0) };
    w.finish();
    let span = m.usize("span", 2);
    let state_file = m.string("state_file").map(PathBuf::from);
    m.finish();
    let model = ModelConfig { s, coupling, beta, particles, epsilon, interaction, span, state_file };

    let (points, extent) = default_grid(command_or_default);
    let mut n = root.section("numerics");
    let grid_points = n.usize("grid_points", points);
    let half_extent = n.f64("half_extent", extent);
    let modes = n.usize("modes", 6);
    let dimension_cap = n.usize("dimension_cap", DIMENSION_CAP);
    let lambdas = n.f64_list("lambdas", vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    let stability_widths = n.usize("stability_widths", 24);
    let polish_iterations = n.usize("polish_iterations", 300);
    let states = n.usize("states", 50);
    let step = n.exact("step");
    let max_steps = n.usize("max_steps", 1_000_000);
    let townes_tolerance = n.f64("townes_tolerance", 1e-12);
    let trajectory_csv = n.bool("trajectory_csv", true);

    let d = MinimizeOptions::default();
    let mut r = n.section("minimizer");
    let minimizer = MinimizeOptions {
        max_iterations: r.usize("max_iterations", d.max_iterations),
        step: r.f64("step", d.step),
        tolerance: r.f64("tolerance", d.tolerance),
        backtracking: r.f64("backtracking", d.backtracking),
        focusing_margin: r.f64("focusing_margin", d.focusing_margin),
        collapse_ratio: r.f64("collapse_ratio", d.collapse_ratio),
    };
    r.finish();
    let d = EigenOptions::default();
    let mut r = n.section("eigensolver");
    let eigensolver = EigenOptions {
        tolerance: r.f64("tolerance", d.tolerance),
        max_iterations: r.usize("max_iterations", d.max_iterations),
        max_modes: r.usize("max_modes", d.max_modes),
        seed: r.u64("seed", seed),
    };
    r.finish();
    let d = SphereIntegration::default();
    let mut r = n.section("sphere");
    let sphere = SphereIntegration {
        nodes: r.usize("nodes", d.nodes),
        samples: r.usize("samples", d.samples),
        shards: r.usize("shards", d.shards),
        seed: r.u64("seed", seed),
    };
    r.finish();
    n.finish();
    root.finish();

    let numerics = NumericsConfig {
        grid_points,
        half_extent,
        modes,
        dimension_cap,
        lambdas,
        stability_widths,
        polish_iterations,
        states,
        step,
        max_steps,
        townes_tolerance,
        trajectory_csv,
        minimizer,
        eigensolver,
        sphere,
    };
    let config = RunConfig { command: command_or_default, seed, output, model, numerics };
    check(&config, &issues);
    let issues = issues.into_inner();
    if issues.is_empty() && command.is_some() {
        Ok(config)
    } else {
        Err(issues)
    }
}

/// Range and cross-field checks.
fn check(c: &RunConfig, issues: &Issues) {
    let push = |path: &str, message: String| issues.borrow_mut().push(Issue { path: path.into(), message });
    let m = &c.model;
    let n = &c.numerics;
    let s = m.s.value();
    if !(s.is_finite() && s > 0.0) {
        push("model.s", format!("trap exponent must be positive, got {}", m.s.text()));
    }
    let beta = m.beta.value();
    if !(beta.is_finite() && beta >= 0.0) {
        push("model.beta", format!("must be non-negative, got {}", m.beta.text()));
    } else if c.command == Command::Exponents && beta <= 0.0 {
        push("model.beta", format!("must be positive for the exponent schedule, got {}", m.beta.text()));
    }
    if !m.coupling.is_finite() {
        push("model.coupling", format!("must be finite, got {}", m.coupling));
    }
    if !(0.0..1.0).contains(&m.epsilon) {
        push("model.epsilon", format!("must lie in [0, 1), got {}", m.epsilon));
    }
    if m.particles.is_empty() {
        push("model.particles", "must list at least one particle number".into());
    }
    let (low, high) = if c.command == Command::Definetti { (2, MAX_PARTICLES) } else { (2, 10_000) };
    for (i, &p) in m.particles.iter().enumerate() {
        if !(low..=high).contains(&p) {
            push(&format!("model.particles[{i}]"), format!("must lie in {low}..={high}, got {p}"));
        }
    }
    let w = &m.interaction;
    if !w.integral.is_finite() {
        push("model.interaction.integral", format!("must be finite, got {}", w.integral));
    }
    if !(w.width.is_finite() && w.width > 0.0) {
        push("model.interaction.width", format!("must be positive, got {}", w.width));
    }
    if c.command == Command::Definetti && m.state_file.is_none() && !(1..=MAX_SPAN).contains(&m.span) {
        push("model.span", format!("must lie in 1..={MAX_SPAN}, got {}", m.span));
    }

    if !(n.grid_points >= 8 && n.grid_points.is_power_of_two()) {
        push("numerics.grid_points", format!("must be a power of two >= 8, got {}", n.grid_points));
    }
    if !(n.half_extent.is_finite() && n.half_extent > 0.0) {
        push("numerics.half_extent", format!("must be positive, got {}", n.half_extent));
    }
    if n.modes == 0 || n.modes > n.eigensolver.max_modes {
        push("numerics.modes", format!("must lie in 1..={}, got {}", n.eigensolver.max_modes, n.modes));
    }
    if c.command == Command::Manybody && n.modes > 0 {
        if let Some(&top) = m.particles.iter().max() {
            let dim = symmetric_dimension(n.modes, top);
            if dim > n.dimension_cap as u128 {
                push(
                    "numerics.modes",
                    format!(
                        "symmetric space dimension C(M+N-1, N) = C({}, {top}) = {dim} for M = {}, N = {top} \
                         exceeds numerics.dimension_cap = {}",
                        n.modes + top - 1,
                        n.modes,
                        n.dimension_cap
                    ),
                );
            }
        }
    }
    if n.lambdas.is_empty() || n.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        push("numerics.lambdas", "must be a non-empty list of positive numbers".into());
    }
    if n.stability_widths < 2 {
        push("numerics.stability_widths", format!("must be at least 2, got {}", n.stability_widths));
    }
    if n.states == 0 {
        push("numerics.states", "must be at least 1".into());
    }
    if let Some(step) = &n.step {
        if !(step.value() > 0.0) {
            push("numerics.step", format!("must be positive, got {}", step.text()));
        } else if let (Ok(s), Ok(beta), Ok(c)) =
            (parse_rational(m.s.text()), parse_rational(m.beta.text()), parse_rational(step.text()))
        {
            let bound = step_bound(&s, &beta);
            if bound.admissible && c >= bound.c_max {
                push("numerics.step", format!("must be below c_max = {} for this s and beta, got {}", bound.c_max, step.text()));
            }
        }
    }
    if n.max_steps == 0 {
        push("numerics.max_steps", "must be at least 1".into());
    }
    if !(n.townes_tolerance > 0.0 && n.townes_tolerance < 1e-3) {
        push("numerics.townes_tolerance", format!("must lie in (0, 1e-3), got {}", n.townes_tolerance));
    }
    if let Err(e) = n.minimizer.validate() {
        push("numerics.minimizer", strip(e));
    }
    if !(n.eigensolver.tolerance > 0.0) {
        push("numerics.eigensolver.tolerance", format!("must be positive, got {}", n.eigensolver.tolerance));
    }
    if n.eigensolver.max_iterations == 0 {
        push("numerics.eigensolver.max_iterations", "must be at least 1".into());
    }
    if let Err(e) = n.sphere.validate() {
        push("numerics.sphere", strip(e));
    }
}

fn strip(e: bosenls::Error) -> String {
    let text = e.to_string();
    text.strip_prefix("invalid argument: ").unwrap_or(&text).to_string()
}
