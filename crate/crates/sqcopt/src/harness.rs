//! Configuration, run orchestration, trace/summary emission, rate fitting and
//! parameter sweeps.
//!
//! A run is described by a TOML document:
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//!
//! [problem]
//! objective = "power_norm"
//! params = { n = 2 }
//! # set = { kind = "box", lo = [-1, -1], hi = [1, 1] }   (default: the objective's domain)
//! # bifunction = "value_gap"                              (required by solve-ep)
//!
//! [start]
//! x0 = [0.7, -0.4]                                        # default: drawn from the set with `seed`
//!
//! [minimize]
//! variant = "ppa"
//! step = { kind = "constant", value = 0.5 }
//! ```
//!
//! The sections `[minimize]`, `[equilibrium]`, `[dynamics]`, `[verify]` and
//! `[sweep]` configure the subcommand of the same name; `sweep` also uses
//! `[minimize]` or `[equilibrium]` as its base run.
//!
//! Trace CSV columns are `k,value,residual,step_norm,cum_prox_evals,wall_ms`,
//! then `residual_ep,line_search_m` for equilibrium runs, then the iterate
//! coordinates `x1..xn`. Dynamics traces use `t,u1..un,value,speed`. Empty
//! cells are absent values.
//!
//! Exit codes: 0 converged (or all checks passed), 1 configuration error,
//! 2 iteration limit reached (or a check failed), 3 guard or solver abort.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{fit_exponential_rate, fit_log_linear, integrate_ds1, integrate_ds2, integrate_ds2_undamped_descent, RateFit, Trajectory};
use crate::equilibrium::{self, ep_residual, EpParams, EpProblem, EpTrace, EpVariant};
use crate::error::{Error, Result};
use crate::functions::{bifunction_catalog, catalog, Bifunction, Objective, Params};
use crate::geometry::{FeasibleSet, Point};
use crate::minimize::{self, IterationTrace, MinParams, Schedule, Termination, Variant};
use crate::verify::{self, CheckReport, VerifyOpts};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Minimize,
    SolveEp,
    Dynamics,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Minimize => "minimize",
            Command::SolveEp => "solve-ep",
            Command::Dynamics => "dynamics",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub start: StartSpec,
    /// Abort with exit code 3 when the validator flags the parameters.
    #[serde(default)]
    pub require_guarded: bool,
    pub minimize: Option<MinParams>,
    pub equilibrium: Option<EpParams>,
    pub dynamics: Option<DynamicsSpec>,
    pub verify: Option<VerifySpec>,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Catalog objective name.
    pub objective: Option<String>,
    #[serde(default)]
    pub params: Params,
    /// Feasible set; defaults to the objective's domain.
    pub set: Option<FeasibleSet>,
    /// `value_gap` or `glt_example`.
    pub bifunction: Option<String>,
    #[serde(default)]
    pub bifunction_params: Params,
    pub known_solution: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub x0: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsSystem {
    /// `u̇ = −∇h(u)`.
    Ds1,
    /// `ü + γu̇ + ∇h(u) = 0`.
    Ds2,
    /// `ü = −∇h(u)`.
    Ds2Undamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub system: DynamicsSystem,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub damping: f64,
    pub v0: Option<Vec<f64>>,
    /// Tail fraction used for the exponential-rate fit.
    #[serde(default = "half")]
    pub rate_window: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub samples: usize,
    /// Modulus to certify; defaults to the declared one.
    pub gamma: Option<f64>,
    /// Sampling radius for unbounded sets.
    pub radius: Option<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { samples: 10_000, gamma: None, radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub rhos: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: String,
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { trace: "trace.csv".into(), summary: "summary.json".into() }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document. Parse errors carry line and
    /// column information.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Schema checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("schema_version must be {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let p = &self.problem;
        if p.objective.is_none() && p.bifunction.is_none() {
            return Err(Error::Config("problem: need `objective` or `bifunction`".into()));
        }
        if let Some(s) = &self.sweep {
            if s.alphas.is_empty() || s.rhos.is_empty() {
                return Err(Error::Config("sweep: `alphas` and `rhos` must be nonempty".into()));
            }
        }
        if let Some(d) = &self.dynamics {
            if !(d.dt > 0.0 && d.t_end >= d.dt) {
                return Err(Error::Config(format!("dynamics: need 0 < dt ≤ t_end, got dt = {}, t_end = {}", d.dt, d.t_end)));
            }
        }
        Ok(())
    }

    /// Validation specific to `cmd`: builds the problem and runs the
    /// parameter validator without iterating.
    pub fn validate_for(&self, cmd: Command) -> Result<()> {
        let built = Built::new(self)?;
        match cmd {
            Command::Verify => Ok(()),
            Command::Minimize => {
                let p = self.min_params()?;
                built.guard_min(p).map(|_| ())
            }
            Command::SolveEp => {
                let p = self.ep_params()?;
                equilibrium::validate(built.ep()?, p).map(|_| ())
            }
            Command::Dynamics => {
                built.objective()?;
                self.dynamics.as_ref().map(|_| ()).ok_or_else(|| Error::Config("missing [dynamics] section".into()))
            }
            Command::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
                for (a, r) in sweep_cells(s) {
                    match (&self.minimize, &self.equilibrium) {
                        (Some(p), _) => built.guard_min(&rippa_cell(p, a, r)).map(|_| ())?,
                        (None, Some(p)) => equilibrium::validate(built.ep()?, &rippa_ep_cell(p, a, r)).map(|_| ())?,
                        (None, None) => return Err(Error::Config("sweep needs a [minimize] or [equilibrium] base".into())),
                    }
                }
                Ok(())
            }
        }
    }

    fn min_params(&self) -> Result<&MinParams> {
        self.minimize.as_ref().ok_or_else(|| Error::Config("missing [minimize] section".into()))
    }

    fn ep_params(&self) -> Result<&EpParams> {
        self.equilibrium.as_ref().ok_or_else(|| Error::Config("missing [equilibrium] section".into()))
    }
}

/// Problem objects built from a config.
struct Built {
    objective: Option<Objective>,
    set: FeasibleSet,
    ep: Option<EpProblem>,
    known: Option<Point>,
}

impl Built {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let p = &cfg.problem;
        let objective = p.objective.as_deref().map(|name| catalog(name, &p.params)).transpose()?;
        let bif: Option<Bifunction> =
            p.bifunction.as_deref().map(|name| bifunction_catalog(name, &p.bifunction_params, objective.as_ref())).transpose()?;
        let set = match (&p.set, &objective, &bif) {
            (Some(s), _, _) => s.clone(),
            (None, Some(h), _) => h.domain().clone(),
            (None, None, Some(f)) => f.domain().clone(),
            (None, None, None) => unreachable!("validated"),
        };
        let known = match &p.known_solution {
            Some(v) => Some(Point::new(v.clone())?),
            None => objective.as_ref().and_then(|h| h.known_min()).map(|(x, _)| x.clone()),
        };
        if let Some(x) = &known {
            if x.dim() != set.dim() {
                return Err(Error::DimensionMismatch { expected: set.dim(), got: x.dim() });
            }
        }
        let ep = bif.map(|f| EpProblem::with_opts(f, set.clone(), known.clone(), &VerifyOpts::new(2000, cfg.seed ^ 0xE9))).transpose()?;
        Ok(Built { objective, set, ep, known })
    }

    fn objective(&self) -> Result<&Objective> {
        self.objective.as_ref().ok_or_else(|| Error::Config("problem: this command needs `objective`".into()))
    }

    fn ep(&self) -> Result<&EpProblem> {
        self.ep.as_ref().ok_or_else(|| Error::Config("problem: this command needs `bifunction`".into()))
    }

    fn guard_min(&self, p: &MinParams) -> Result<minimize::Guard> {
        let h = self.objective()?;
        match p.variant {
            Variant::Ppa => minimize::validate_rippa(&self.set, &MinParams { inertia: Schedule::constant(0.0), inertia_bound: 0.0, relax: Schedule::constant(1.0), relax_bounds: None, ..p.clone() }),
            Variant::Rippa => minimize::validate_rippa(&self.set, p),
            Variant::Bppa => minimize::validate_bppa(&self.set, p),
            Variant::Subgrad => minimize::validate_subgradient(h, p),
            Variant::Grad => minimize::validate_gradient(h, p),
            Variant::HeavyBall => minimize::validate_heavy_ball(h, p),
            Variant::InertialGm => minimize::validate_inertial_gm(h, p),
        }
    }

    fn start(&self, cfg: &RunConfig) -> Result<Point> {
        match &cfg.start.x0 {
            Some(v) => {
                let x = Point::new(v.clone())?;
                if x.dim() != self.set.dim() {
                    return Err(Error::DimensionMismatch { expected: self.set.dim(), got: x.dim() });
                }
                Ok(x)
            }
            None => {
                let r = if self.set.is_bounded() { None } else { Some(1.0) };
                Ok(self.set.sample(cfg.seed, 1, r)?.remove(0))
            }
        }
    }
}

/// Per-iteration linear rate estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LinearRate {
    /// `q = exp(slope)` of `log‖x^k − target‖` against `k`; `low_fit` marks
    /// `R² < 0.9`.
    Fit { q: f64, slope: f64, r2: f64, points: usize, low_fit: bool },
    BelowFloor { points: usize },
}

impl LinearRate {
    pub fn q(&self) -> Option<f64> {
        match self {
            LinearRate::Fit { q, .. } => Some(*q),
            LinearRate::BelowFloor { .. } => None,
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match self {
            LinearRate::Fit { r2, .. } => Some(*r2),
            LinearRate::BelowFloor { .. } => None,
        }
    }
}

/// Fits `‖x^k − target‖ ≈ C q^k` over the whole sequence.
pub fn fit_linear_rate(iterates: &[Point], target: &Point) -> Result<LinearRate> {
    let ks: Vec<f64> = (0..iterates.len()).map(|k| k as f64).collect();
    Ok(match fit_log_linear(&ks, iterates, target, 1.0)? {
        RateFit::Fit { rate, r2, points } => LinearRate::Fit { q: rate.exp(), slope: rate, r2, points, low_fit: r2 < 0.9 },
        RateFit::BelowFloor { points } => LinearRate::BelowFloor { points },
    })
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub problem: String,
    pub algorithm: String,
    pub guarded: bool,
    pub guard_notes: Vec<String>,
    pub iterations: usize,
    pub prox_or_grad_evals: usize,
    pub final_value: f64,
    pub final_residual: f64,
    pub stop_tol: f64,
    pub terminated_by: String,
    pub solution: Vec<f64>,
    pub distance_to_known_solution: Option<f64>,
    pub rate_estimate: Option<Value>,
    pub wall_ms: f64,
    pub exit_code: i32,
    pub seed: u64,
    /// Command-specific details (check reports, EP diagnostics).
    pub details: BTreeMap<String, Value>,
}

impl RunSummary {
    /// JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("summary serializes");
        serde_json::to_string_pretty(&v).expect("json value serializes")
    }
}

/// Exit code for an error (1 configuration, 3 abort).
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::GuardAbort(_) | Error::Solver(_) | Error::NonFinite(_) | Error::OutsideDomain(_) => 3,
        _ => 1,
    }
}

fn exit_code_for_termination(t: Termination) -> i32 {
    match t {
        Termination::Residual | Termination::ExactFixedPoint | Termination::Stationary => 0,
        Termination::MaxIters | Termination::Diverged => 2,
    }
}

fn term_name(t: Termination) -> String {
    serde_json::to_value(t).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a minimization trace.
pub fn write_min_trace(path: &Path, tr: &IterationTrace) -> Result<()> {
    let n = tr.iterates.first().map_or(0, |x| x.dim());
    let mut w = csv_writer(path)?;
    let mut head: Vec<String> = ["k", "value", "residual", "step_norm", "cum_prox_evals", "wall_ms"].iter().map(|s| s.to_string()).collect();
    head.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&head).map_err(csv_err)?;
    for k in 0..tr.len() {
        let mut row = vec![
            k.to_string(),
            tr.values[k].to_string(),
            tr.residuals[k].to_string(),
            tr.step_norms[k].to_string(),
            tr.oracle_calls[k].to_string(),
            opt(tr.wall_ms[k]),
        ];
        row.extend(tr.iterates[k].coords().iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an equilibrium trace.
pub fn write_ep_trace(path: &Path, ep: &EpTrace) -> Result<()> {
    let tr = &ep.trace;
    let n = tr.iterates.first().map_or(0, |x| x.dim());
    let mut w = csv_writer(path)?;
    let mut head: Vec<String> = ["k", "value", "residual", "step_norm", "cum_prox_evals", "wall_ms", "residual_ep", "line_search_m"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&head).map_err(csv_err)?;
    for k in 0..tr.len() {
        let mut row = vec![
            k.to_string(),
            tr.values[k].to_string(),
            tr.residuals[k].to_string(),
            tr.step_norms[k].to_string(),
            tr.oracle_calls[k].to_string(),
            opt(tr.wall_ms[k]),
            opt(ep.residual_ep[k]),
            ep.line_search_m[k].map(|m| m.to_string()).unwrap_or_default(),
        ];
        row.extend(tr.iterates[k].coords().iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a trajectory as `t,u1..un,value,speed`.
pub fn write_trajectory(path: &Path, traj: &Trajectory, h: &Objective) -> Result<()> {
    let n = traj.states.first().map_or(0, |x| x.dim());
    let mut w = csv_writer(path)?;
    let mut head = vec!["t".to_string()];
    head.extend((1..=n).map(|i| format!("u{i}")));
    head.extend(["value".to_string(), "speed".to_string()]);
    w.write_record(&head).map_err(csv_err)?;
    for (i, t) in traj.times.iter().enumerate() {
        let u = &traj.states[i];
        let speed = match &traj.velocities {
            Some(v) => v[i].norm(),
            None => h.gradient(u).map_or(f64::NAN, |g| g.norm()),
        };
        let mut row = vec![t.to_string()];
        row.extend(u.coords().iter().map(|c| c.to_string()));
        row.extend([traj.values[i].to_string(), speed.to_string()]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d)?;
    }
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Output of [`run_from_config`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace_path: Option<PathBuf>,
    pub summary_path: PathBuf,
    pub sweep: Option<SweepTable>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

/// Runs `cmd` and writes its trace and summary into `out_dir`.
pub fn run_from_config(cfg: &RunConfig, cmd: Command, out_dir: &Path, workers: usize) -> Result<RunOutcome> {
    cfg.validate()?;
    cfg.validate_for(cmd)?;
    fs::create_dir_all(out_dir)?;
    let built = Built::new(cfg)?;
    let trace_path = out_dir.join(&cfg.output.trace);
    let summary_path = out_dir.join(&cfg.output.summary);
    let (summary, trace_written, sweep) = match cmd {
        Command::Minimize => {
            let (s, tr) = minimize_run(cfg, &built, cfg.min_params()?)?;
            write_min_trace(&trace_path, &tr)?;
            (s, true, None)
        }
        Command::SolveEp => {
            let (s, tr) = ep_run(cfg, &built, cfg.ep_params()?)?;
            write_ep_trace(&trace_path, &tr)?;
            (s, true, None)
        }
        Command::Dynamics => {
            let (s, traj) = dynamics_run(cfg, &built)?;
            write_trajectory(&trace_path, &traj, built.objective()?)?;
            (s, true, None)
        }
        Command::Verify => (verify_run(cfg, &built)?, false, None),
        Command::Sweep => {
            let table = sweep_compare(cfg, out_dir, workers)?;
            let s = sweep_summary(cfg, &table);
            fs::write(out_dir.join("sweep.json"), table.to_json())?;
            table.write_csv(&out_dir.join("sweep.csv"))?;
            (s, false, Some(table))
        }
    };
    fs::write(&summary_path, summary.to_json())?;
    Ok(RunOutcome { summary, trace_path: trace_written.then_some(trace_path), summary_path, sweep })
}

fn problem_name(cfg: &RunConfig) -> String {
    let p = &cfg.problem;
    match (&p.objective, &p.bifunction) {
        (Some(o), Some(b)) if b == "value_gap" => format!("value_gap({o})"),
        (_, Some(b)) => b.clone(),
        (Some(o), None) => o.clone(),
        (None, None) => String::new(),
    }
}

fn base_summary(cfg: &RunConfig, cmd: Command, algorithm: &str) -> RunSummary {
    RunSummary {
        command: cmd.name().into(),
        problem: problem_name(cfg),
        algorithm: algorithm.into(),
        guarded: true,
        guard_notes: Vec::new(),
        iterations: 0,
        prox_or_grad_evals: 0,
        final_value: f64::NAN,
        final_residual: f64::NAN,
        stop_tol: f64::NAN,
        terminated_by: String::new(),
        solution: Vec::new(),
        distance_to_known_solution: None,
        rate_estimate: None,
        wall_ms: 0.0,
        exit_code: 0,
        seed: cfg.seed,
        details: BTreeMap::new(),
    }
}

fn abort_if_unguarded(cfg: &RunConfig, g: &minimize::Guard) -> Result<()> {
    if cfg.require_guarded && !g.guarded {
        return Err(Error::GuardAbort(g.notes.join("; ")));
    }
    Ok(())
}

fn minimize_run(cfg: &RunConfig, built: &Built, p: &MinParams) -> Result<(RunSummary, IterationTrace)> {
    let h = built.objective()?;
    abort_if_unguarded(cfg, &built.guard_min(p)?)?;
    let x0 = built.start(cfg)?;
    let tr = minimize::run(h, &built.set, &x0, p)?;
    let mut s = base_summary(cfg, Command::Minimize, p.variant.name());
    s.guarded = tr.guard.guarded;
    s.guard_notes = tr.guard.notes.clone();
    s.iterations = tr.iterations();
    s.prox_or_grad_evals = tr.oracle_calls.last().copied().unwrap_or(0);
    s.final_value = h.value(&tr.solution);
    s.final_residual = tr.last_residual();
    s.stop_tol = p.stop_tol;
    s.terminated_by = term_name(tr.terminated_by);
    s.solution = tr.solution.coords().to_vec();
    s.wall_ms = tr.total_wall_ms;
    s.exit_code = exit_code_for_termination(tr.terminated_by);
    if let Some(x) = &built.known {
        s.distance_to_known_solution = Some(tr.solution.dist(x));
    }
    let target = built.known.clone().unwrap_or_else(|| tr.solution.clone());
    s.rate_estimate = Some(serde_json::to_value(fit_linear_rate(&tr.iterates, &target)?).expect("rate serializes"));
    s.details.insert("objective_evals".into(), tr.objective_evals.into());
    s.details.insert("bounded".into(), tr.bounded.into());
    Ok((s, tr))
}

fn ep_run(cfg: &RunConfig, built: &Built, p: &EpParams) -> Result<(RunSummary, EpTrace)> {
    let prob = built.ep()?;
    let g = equilibrium::validate(prob, p)?;
    abort_if_unguarded(cfg, &g)?;
    let x0 = built.start(cfg)?;
    let p = EpParams { seed: p.seed ^ cfg.seed, ..p.clone() };
    let ep = equilibrium::solve(prob, &x0, &p)?;
    let tr = &ep.trace;
    let mut s = base_summary(cfg, Command::SolveEp, p.variant.name());
    s.guarded = tr.guard.guarded;
    s.guard_notes = tr.guard.notes.clone();
    s.iterations = tr.iterations();
    s.prox_or_grad_evals = tr.oracle_calls.last().copied().unwrap_or(0);
    s.final_value = tr.values.last().copied().unwrap_or(f64::NAN);
    s.final_residual = ep.final_residual;
    s.stop_tol = p.stop_tol;
    s.terminated_by = term_name(tr.terminated_by);
    s.solution = tr.solution.coords().to_vec();
    s.wall_ms = tr.total_wall_ms;
    s.exit_code = exit_code_for_termination(tr.terminated_by);
    if let Some(x) = &built.known {
        s.distance_to_known_solution = Some(tr.solution.dist(x));
    }
    let target = built.known.clone().unwrap_or_else(|| tr.solution.clone());
    s.rate_estimate = Some(serde_json::to_value(fit_linear_rate(&tr.iterates, &target)?).expect("rate serializes"));
    if prob.k.is_bounded() || p.solver.search_radius.is_some() {
        s.details.insert("ep_residual".into(), ep_residual(prob, &tr.solution, &p.solver)?.into());
    }
    s.details.insert("certified".into(), prob.certified().into());
    s.details.insert("max_subgradient_norm".into(), serde_json::to_value(ep.max_subgradient_norm).expect("serializes"));
    s.details.insert("subgradient_check_failures".into(), ep.subgradient_check_failures.into());
    let ms: Vec<usize> = ep.line_search_m.iter().flatten().copied().collect();
    if !ms.is_empty() {
        s.details.insert("line_search_m_max".into(), ms.iter().max().copied().into());
    }
    Ok((s, ep))
}

fn dynamics_run(cfg: &RunConfig, built: &Built) -> Result<(RunSummary, Trajectory)> {
    let h = built.objective()?;
    let d = cfg.dynamics.as_ref().ok_or_else(|| Error::Config("missing [dynamics] section".into()))?;
    let x0 = built.start(cfg)?;
    let v0 = match &d.v0 {
        Some(v) => Point::new(v.clone())?,
        None => Point::zeros(x0.dim()),
    };
    let start = std::time::Instant::now();
    let (traj, name) = match d.system {
        DynamicsSystem::Ds1 => (integrate_ds1(h, None, &x0, d.t_end, d.dt)?, "ds1"),
        DynamicsSystem::Ds2 => (integrate_ds2(h, d.damping, &x0, &v0, d.t_end, d.dt)?, "ds2"),
        DynamicsSystem::Ds2Undamped => (integrate_ds2_undamped_descent(h, &x0, &v0, d.t_end, d.dt)?, "ds2_undamped"),
    };
    let mut s = base_summary(cfg, Command::Dynamics, name);
    s.iterations = traj.times.len().saturating_sub(1);
    s.final_value = *traj.values.last().unwrap();
    s.solution = traj.terminal().coords().to_vec();
    s.terminated_by = "horizon".into();
    s.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(x) = &built.known {
        s.distance_to_known_solution = Some(traj.terminal().dist(x));
        s.rate_estimate = Some(serde_json::to_value(fit_exponential_rate(&traj, x, d.rate_window)?).expect("serializes"));
    }
    if let Some(e) = traj.energy() {
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max);
        s.details.insert("energy_drift".into(), drift.into());
    }
    Ok((s, traj))
}

fn verify_run(cfg: &RunConfig, built: &Built) -> Result<RunSummary> {
    let spec = cfg.verify.clone().unwrap_or_default();
    let mut opts = VerifyOpts::new(spec.samples, cfg.seed);
    opts.radius = spec.radius.or_else(|| (!built.set.is_bounded()).then_some(1.0));
    let mut reports: Vec<CheckReport> = Vec::new();
    let mut estimates: Vec<CheckReport> = Vec::new();
    if let Some(h) = &built.objective {
        let gamma = spec.gamma.unwrap_or(h.modulus());
        reports.push(verify::check_sqc_sampled(h, &built.set, gamma, &opts)?);
        estimates.push(verify::estimate_modulus(h, &built.set, &opts)?);
    }
    if let Some(ep) = &built.ep {
        reports.extend(ep.reports.iter().cloned());
    }
    let mut s = base_summary(cfg, Command::Verify, "verify");
    s.exit_code = if reports.iter().all(|r| r.passed) { 0 } else { 2 };
    s.terminated_by = if s.exit_code == 0 { "passed".into() } else { "failed".into() };
    s.details.insert("reports".into(), serde_json::to_value(&reports).expect("serializes"));
    s.details.insert("estimates".into(), serde_json::to_value(&estimates).expect("serializes"));
    Ok(s)
}

/// One cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub rho: f64,
    pub baseline: bool,
    pub guarded: bool,
    pub iterations: Option<usize>,
    pub subproblem_evals: Option<usize>,
    pub reached_tol: bool,
    pub terminated_by: Option<String>,
    pub error: Option<String>,
}

/// Rows in grid order (alphas outer, rhos inner); the baseline `(0, 1)` is
/// the first row and appears once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub algorithm: String,
    pub rows: Vec<SweepRow>,
    /// Index of the converged row with fewest iterations (first on ties).
    pub best: Option<usize>,
    /// Whether some non-baseline converged row needs strictly fewer
    /// iterations than the baseline.
    pub strictly_beats_baseline: bool,
}

impl SweepTable {
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("table serializes");
        serde_json::to_string_pretty(&v).expect("json value serializes")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["alpha", "rho", "baseline", "guarded", "iterations", "subproblem_evals", "reached_tol", "terminated_by", "error"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.alpha.to_string(),
                r.rho.to_string(),
                r.baseline.to_string(),
                r.guarded.to_string(),
                r.iterations.map(|v| v.to_string()).unwrap_or_default(),
                r.subproblem_evals.map(|v| v.to_string()).unwrap_or_default(),
                r.reached_tol.to_string(),
                r.terminated_by.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sweep_cells(s: &SweepSpec) -> Vec<(f64, f64)> {
    let mut cells = vec![(0.0, 1.0)];
    for &a in &s.alphas {
        for &r in &s.rhos {
            if (a, r) != (0.0, 1.0) {
                cells.push((a, r));
            }
        }
    }
    cells
}

fn rippa_cell(p: &MinParams, alpha: f64, rho: f64) -> MinParams {
    MinParams {
        variant: Variant::Rippa,
        inertia: Schedule::constant(alpha),
        inertia_bound: alpha,
        relax: Schedule::constant(rho),
        relax_bounds: None,
        ..p.clone()
    }
}

fn rippa_ep_cell(p: &EpParams, alpha: f64, rho: f64) -> EpParams {
    EpParams {
        variant: EpVariant::RippaEp,
        inertia: Schedule::constant(alpha),
        inertia_bound: alpha,
        relax: Schedule::constant(rho),
        ..p.clone()
    }
}

/// Runs RIPPA (or RIPPA-EP when the base config has `[equilibrium]` and no
/// `[minimize]`) over the `(α, ρ)` grid of `cfg.sweep`, with up to `workers`
/// cells in parallel. Each cell's trace is written to
/// `out_dir/cells/cell_<i>.csv`.
pub fn sweep_compare(cfg: &RunConfig, out_dir: &Path, workers: usize) -> Result<SweepTable> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let built = Built::new(cfg)?;
    let cells = sweep_cells(spec);
    let cell_dir = out_dir.join("cells");
    fs::create_dir_all(&cell_dir)?;
    let x0 = built.start(cfg)?;
    let run_cell = |i: usize, (a, r): (f64, f64)| -> SweepRow {
        let path = cell_dir.join(format!("cell_{i}.csv"));
        let mut row = SweepRow {
            alpha: a,
            rho: r,
            baseline: i == 0,
            guarded: false,
            iterations: None,
            subproblem_evals: None,
            reached_tol: false,
            terminated_by: None,
            error: None,
        };
        let res: Result<(bool, usize, usize, Termination)> = (|| match (&cfg.minimize, &cfg.equilibrium) {
            (Some(p), _) => {
                let q = rippa_cell(p, a, r);
                let tr = minimize::run_rippa(built.objective()?, &built.set, &x0, &q)?;
                write_min_trace(&path, &tr)?;
                Ok((tr.guard.guarded, tr.iterations(), tr.oracle_calls.last().copied().unwrap_or(0), tr.terminated_by))
            }
            (None, Some(p)) => {
                let q = rippa_ep_cell(p, a, r);
                let ep = equilibrium::run_rippa_ep(built.ep()?, &x0, &q)?;
                write_ep_trace(&path, &ep)?;
                let tr = &ep.trace;
                Ok((tr.guard.guarded, tr.iterations(), tr.oracle_calls.last().copied().unwrap_or(0), tr.terminated_by))
            }
            (None, None) => Err(Error::Config("sweep needs a [minimize] or [equilibrium] base".into())),
        })();
        match res {
            Ok((g, it, ev, t)) => {
                row.guarded = g;
                row.iterations = Some(it);
                row.subproblem_evals = Some(ev);
                row.reached_tol = exit_code_for_termination(t) == 0;
                row.terminated_by = Some(term_name(t));
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().enumerate().map(|(i, c)| run_cell(i, *c)).collect());
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.reached_tol)
        .min_by_key(|(i, r)| (r.iterations.unwrap_or(usize::MAX), *i))
        .map(|(i, _)| i);
    let base_iters = rows[0].reached_tol.then(|| rows[0].iterations.unwrap_or(usize::MAX));
    let strictly_beats_baseline =
        rows.iter().skip(1).any(|r| r.reached_tol && base_iters.is_none_or(|b| r.iterations.unwrap_or(usize::MAX) < b));
    let algorithm = if cfg.minimize.is_some() { "rippa" } else { "rippa_ep" };
    Ok(SweepTable { algorithm: algorithm.into(), rows, best, strictly_beats_baseline })
}

fn sweep_summary(cfg: &RunConfig, t: &SweepTable) -> RunSummary {
    let mut s = base_summary(cfg, Command::Sweep, &t.algorithm);
    s.guarded = t.rows.iter().all(|r| r.guarded);
    s.iterations = t.rows[0].iterations.unwrap_or(0);
    s.prox_or_grad_evals = t.rows.iter().filter_map(|r| r.subproblem_evals).sum();
    s.terminated_by = "sweep".into();
    s.details.insert("best_cell".into(), serde_json::to_value(t.best).expect("serializes"));
    s.details.insert("strictly_beats_baseline".into(), t.strictly_beats_baseline.into());
    s.details.insert("cells".into(), t.rows.len().into());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ppa_config() -> String {
        r#"
schema_version = 1
seed = 3

[problem]
objective = "power_norm"

[start]
x0 = [0.6, -0.3]

[minimize]
variant = "ppa"
step = { kind = "constant", value = 5.0 }
stop_tol = 1e-9
max_iters = 200
"#
        .to_string()
    }

    #[test]
    fn synthetic_geometric_rate() {
        let xs: Vec<Point> = (0..40).map(|k| Point::new(vec![0.5f64.powi(k)]).unwrap()).collect();
        let r = fit_linear_rate(&xs, &Point::zeros(1)).unwrap();
        assert!((r.q().unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn stalled_trace_is_flagged() {
        let xs: Vec<Point> = (0..40).map(|_| Point::new(vec![0.3]).unwrap()).collect();
        match fit_linear_rate(&xs, &Point::zeros(1)).unwrap() {
            LinearRate::Fit { low_fit, .. } => assert!(low_fit),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = ppa_config().replace("seed = 3", "seed = 3\ncolour = 1");
        let e = RunConfig::from_toml_str(&bad).unwrap_err();
        assert_eq!(exit_code_for(&e), 1);
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn ppa_config_runs() {
        let cfg = RunConfig::from_toml_str(&ppa_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_from_config(&cfg, Command::Minimize, dir.path(), 1).unwrap();
        assert_eq!(out.exit_code(), 0);
        assert!(out.summary.distance_to_known_solution.unwrap() <= 1e-5);
        let csv = fs::read_to_string(out.trace_path.unwrap()).unwrap();
        assert!(csv.starts_with("k,value,residual,step_norm,cum_prox_evals,wall_ms,x1,x2\n"));
    }

    #[test]
    fn over_relaxation_past_two_is_a_config_error() {
        let c = ppa_config().replace("variant = \"ppa\"", "variant = \"rippa\"\nrelax = { kind = \"constant\", value = 2.5 }");
        let cfg = RunConfig::from_toml_str(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let e = run_from_config(&cfg, Command::Minimize, dir.path(), 1).unwrap_err();
        assert_eq!(exit_code_for(&e), 1);
    }

    #[test]
    fn single_cell_sweep_is_the_baseline() {
        let c = ppa_config() + "\n[sweep]\nalphas = [0.0]\nrhos = [1.0]\n";
        let cfg = RunConfig::from_toml_str(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let t = sweep_compare(&cfg, dir.path(), 2).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].baseline && t.rows[0].reached_tol);
        assert!(!t.strictly_beats_baseline);
    }
}
