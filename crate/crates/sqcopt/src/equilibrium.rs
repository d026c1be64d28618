//! Solvers for equilibrium problems: find `x̄ ∈ K` with `f(x̄, y) ≥ 0` for
//! all `y ∈ K`, where `f(x, ·)` is strongly quasiconvex.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Bifunction, Objective};
use crate::geometry::{rng, FeasibleSet, Point, Sampler};
use crate::minimize::{Guard, IterationTrace, Schedule, Termination};
use crate::prox::{global_min, prox, GlobalSolveConfig, ProxResult};
use crate::verify::{
    check_a0, check_a5, check_bifunction_sqc, check_continuity_probe, check_pseudomonotone, CheckReport, VerifyOpts, Witness,
};

/// Backtracking steps allowed in the EG/PEG line search.
pub const MAX_LINE_SEARCH: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpVariant {
    PpaEp,
    RippaEp,
    RegEp,
    IeppaEp,
    TwoPpaEp,
    EgEp,
    PegEp,
}

impl EpVariant {
    pub fn name(self) -> &'static str {
        match self {
            EpVariant::PpaEp => "ppa_ep",
            EpVariant::RippaEp => "rippa_ep",
            EpVariant::RegEp => "reg_ep",
            EpVariant::IeppaEp => "ieppa_ep",
            EpVariant::TwoPpaEp => "two_ppa_ep",
            EpVariant::EgEp => "eg_ep",
            EpVariant::PegEp => "peg_ep",
        }
    }
}

/// Which β-range the RIPPA-EP validator accepts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimePolicy {
    /// `1/(γ − 8η) < β_k < ε ≤ 1/(4η)`, which needs `γ > 12η`.
    Strict,
    /// `β_k ∈ (0, min{1/(8η − γ), 1/(4η)})` when `γ < 8η`, and
    /// `β_k ∈ (1/(γ − 8η), 1/(4η))` when `γ > 12η`.
    #[default]
    CorrectedSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpParams {
    pub variant: EpVariant,
    /// Proximal parameters β_k.
    pub beta: Schedule,
    /// Inertial coefficients α_k (RIPPA-EP) or the constant α (IEPPA-EP).
    pub inertia: Schedule,
    /// Upper bound α on the inertial coefficients.
    pub inertia_bound: f64,
    /// Relaxation parameters ρ_k.
    pub relax: Schedule,
    /// Line-search sufficient-decrease factor.
    pub ls_alpha: f64,
    /// Line-search contraction factor.
    pub ls_rho: f64,
    /// Projection step sizes for EG/PEG.
    pub step: Schedule,
    /// Margin ε of the 2PPA-EP β-interval.
    pub epsilon: f64,
    /// Proximal parameter of the inner REG-EP solve; defaults to β_k.
    pub inner_beta: Option<f64>,
    pub inner_max_iters: usize,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub policy: RegimePolicy,
    /// `ep_residual` is recorded every this many rows (0 disables).
    pub residual_every: usize,
    /// Sampled points used to check each EG/PEG subgradient.
    pub subgrad_checks: usize,
    pub seed: u64,
    /// `x^{−1}` for RIPPA-EP (default `x^0`).
    pub x_prev: Option<Vec<f64>>,
    /// `y^0` for IEPPA-EP (default `x^0`).
    pub y0: Option<Vec<f64>>,
    pub record_timings: bool,
    pub solver: GlobalSolveConfig,
}

impl Default for EpParams {
    fn default() -> Self {
        EpParams {
            variant: EpVariant::PpaEp,
            beta: Schedule::constant(1.0),
            inertia: Schedule::constant(0.0),
            inertia_bound: 0.0,
            relax: Schedule::constant(1.0),
            ls_alpha: 0.5,
            ls_rho: 0.5,
            step: Schedule::harmonic(1.0),
            epsilon: 1e-3,
            inner_beta: None,
            inner_max_iters: 1000,
            max_iters: 10_000,
            stop_tol: 1e-8,
            policy: RegimePolicy::default(),
            residual_every: 0,
            subgrad_checks: 32,
            seed: 0,
            x_prev: None,
            y0: None,
            record_timings: false,
            solver: GlobalSolveConfig::default(),
        }
    }
}

impl EpParams {
    pub fn new(variant: EpVariant) -> Self {
        EpParams { variant, ..Default::default() }
    }

    pub fn beta(mut self, b: Schedule) -> Self {
        self.beta = b;
        self
    }

    pub fn inertia(mut self, a: f64) -> Self {
        self.inertia = Schedule::constant(a);
        self.inertia_bound = a.max(0.0);
        self
    }

    pub fn relax(mut self, r: f64) -> Self {
        self.relax = Schedule::constant(r);
        self
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn stop_tol(mut self, t: f64) -> Self {
        self.stop_tol = t;
        self
    }

    pub fn solver(mut self, cfg: GlobalSolveConfig) -> Self {
        self.solver = cfg;
        self
    }
}

/// A bifunction and a feasible set together with sampled reports on the
/// standing assumptions A0, A1/A3, A2, A4 and A5.
#[derive(Clone, Debug)]
pub struct EpProblem {
    pub f: Bifunction,
    pub k: FeasibleSet,
    pub known_solution: Option<Point>,
    pub reports: Vec<CheckReport>,
}

impl EpProblem {
    /// Certifies on 2000 samples per assumption with a fixed seed.
    pub fn new(f: Bifunction, k: FeasibleSet, known_solution: Option<Point>) -> Result<Self> {
        Self::with_opts(f, k, known_solution, &VerifyOpts::new(2000, 0xE9))
    }

    pub fn with_opts(f: Bifunction, k: FeasibleSet, known_solution: Option<Point>, opts: &VerifyOpts) -> Result<Self> {
        if f.dim() != k.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: k.dim() });
        }
        if let Some(x) = &known_solution {
            if x.dim() != k.dim() {
                return Err(Error::DimensionMismatch { expected: k.dim(), got: x.dim() });
            }
        }
        let reports = vec![
            check_a0(&f, &k, opts)?,
            check_continuity_probe(&f, &k, opts)?,
            check_pseudomonotone(&f, &k, opts)?,
            check_bifunction_sqc(&f, &k, opts)?,
            check_a5(&f, &k, opts)?,
        ];
        Ok(EpProblem { f, k, known_solution, reports })
    }

    /// All assumption reports passed.
    pub fn certified(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }
}

/// Trace of an equilibrium solver. Row `k` of `trace` holds `x^k`; its value
/// column is `h(x^k)` for value-gap problems and otherwise `f(x^k, ·)` at
/// the proximal point of that row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpTrace {
    pub trace: IterationTrace,
    /// `min_y f(x^k, y)` on rows where it was computed.
    pub residual_ep: Vec<Option<f64>>,
    /// Backtracking exponent m of EG/PEG.
    pub line_search_m: Vec<Option<usize>>,
    /// `‖x^{k+1} − y^k‖` of 2PPA-EP.
    pub corrector_gaps: Vec<f64>,
    /// Inner iterations of each REG-EP outer step.
    pub inner_iterations: Vec<usize>,
    /// Largest subgradient norm used by EG/PEG.
    pub max_subgradient_norm: Option<f64>,
    /// Sampled `y` violating the level-set inequality of a subgradient.
    pub subgradient_check_failures: usize,
    /// Quantity compared with `stop_tol` by the criterion that ended the
    /// run: the last residual, `‖x^{k+1} − x^k‖` after an EG/PEG projection
    /// stop, or 0 after a zero subgradient.
    pub final_residual: f64,
}

impl EpTrace {
    fn new(method: &str, guard: Guard) -> Self {
        EpTrace {
            trace: IterationTrace::new(method, guard),
            residual_ep: Vec::new(),
            line_search_m: Vec::new(),
            corrector_gaps: Vec::new(),
            inner_iterations: Vec::new(),
            max_subgradient_norm: None,
            subgradient_check_failures: 0,
            final_residual: f64::NAN,
        }
    }

    pub fn solution(&self) -> &Point {
        &self.trace.solution
    }

    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn terminated_by(&self) -> Termination {
        self.trace.terminated_by
    }

    /// Same path (see [`IterationTrace::same_path`]) and same EP columns.
    pub fn same_path(&self, other: &EpTrace) -> bool {
        self.trace.same_path(&other.trace)
            && self.residual_ep == other.residual_ep
            && self.line_search_m == other.line_search_m
            && self.corrector_gaps == other.corrector_gaps
            && self.inner_iterations == other.inner_iterations
    }
}

fn section_solvable(k: &FeasibleSet, cfg: &GlobalSolveConfig) -> bool {
    k.is_bounded() || cfg.search_radius.is_some()
}

/// `r(x) = min_{y ∈ K} f(x, y)`; `r(x) ≥ −tol` certifies `x` as an
/// approximate solution.
pub fn ep_residual(prob: &EpProblem, x: &Point, cfg: &GlobalSolveConfig) -> Result<f64> {
    if !section_solvable(&prob.k, cfg) {
        return Err(Error::Unbounded("ep_residual needs a bounded set or a search radius".into()));
    }
    let s = prob.f.section(x)?;
    Ok(global_min(&s, &prob.k, cfg)?.value)
}

/// Dual (Minty) inequality `f(y, x̄) ≤ tol` on sampled `y ∈ K`.
pub fn check_minty(prob: &EpProblem, xbar: &Point, tol: f64, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(&prob.k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut worst = f64::INFINITY;
    let mut witnesses = Vec::new();
    for _ in 0..opts.samples {
        let y = sampler.draw(&mut r);
        let v = prob.f.value(&y, xbar);
        if !v.is_finite() {
            return Err(Error::OutsideDomain(format!("f({y}, {xbar}) is not finite")));
        }
        let margin = -v;
        worst = worst.min(margin);
        if margin < -tol && witnesses.len() < 10 {
            witnesses.push(Witness { points: vec![y], t: None, margin });
        }
    }
    Ok(CheckReport {
        property: "Minty dual inequality".into(),
        passed: worst >= -tol,
        samples: opts.samples,
        tolerance: tol,
        worst_margin: worst,
        witnesses,
        estimate: None,
    })
}

fn common_checks(p: &EpParams) -> Result<()> {
    if !(p.stop_tol >= 0.0) {
        return Err(Error::InvalidParams(format!("stop_tol must be ≥ 0, got {}", p.stop_tol)));
    }
    for (name, s) in [("beta", &p.beta), ("inertia", &p.inertia), ("relax", &p.relax), ("step", &p.step)] {
        if !s.is_valid() {
            return Err(Error::InvalidParams(format!("{name} schedule is empty or non-finite")));
        }
    }
    positive_schedule("beta", &p.beta)
}

fn positive_schedule(name: &str, s: &Schedule) -> Result<()> {
    let bad = match s {
        Schedule::List { values } => values.iter().any(|v| *v <= 0.0),
        _ => s.at(0) <= 0.0,
    };
    if bad {
        return Err(Error::InvalidParams(format!("{name} schedule must be positive")));
    }
    Ok(())
}

fn start_guard(prob: &EpProblem) -> Guard {
    let mut g = Guard::new();
    for r in prob.reports.iter().filter(|r| !r.passed) {
        g.flag(format!("problem assumption not certified: {}", r.property));
    }
    g
}

fn upper_quarter(eta: f64) -> f64 {
    if eta > 0.0 {
        1.0 / (4.0 * eta)
    } else {
        f64::INFINITY
    }
}

/// Open β-interval of the RIPPA-EP regime, or `None` if `γ` and `η` admit no
/// guarded choice under `policy`.
pub fn rippa_ep_beta_interval(gamma: f64, eta: f64, policy: RegimePolicy) -> Option<(f64, f64)> {
    if !(gamma > 0.0) {
        return None;
    }
    if gamma > 12.0 * eta {
        return Some((1.0 / (gamma - 8.0 * eta), upper_quarter(eta)));
    }
    match policy {
        RegimePolicy::Strict => None,
        RegimePolicy::CorrectedSplit if gamma < 8.0 * eta => Some((0.0, (1.0 / (8.0 * eta - gamma)).min(upper_quarter(eta)))),
        RegimePolicy::CorrectedSplit => None,
    }
}

fn flag_beta_range(g: &mut Guard, beta: &Schedule, lo: f64, hi: f64, closed: bool) {
    let (inf, sup) = (beta.inf(), beta.sup());
    let inside = if closed { inf >= lo && sup <= hi } else { inf > lo && sup < hi };
    if !inside {
        let (l, r) = if closed { ('[', ']') } else { ('(', ')') };
        g.flag(format!("β_k range [{inf}, {sup}] is not inside {l}{lo}, {hi}{r}"));
    }
}

/// RIPPA-EP invariants (errors) and convergence regime (flags).
pub fn validate_rippa_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    common_checks(p)?;
    let alpha = p.inertia_bound.max(p.inertia.sup());
    if !(p.inertia.inf() >= 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("inertia must lie in [0, 1), got sup {alpha}")));
    }
    let (rlo, rhi) = (p.relax.inf(), p.relax.sup());
    if !(rlo > 0.0 && rhi < 2.0) {
        return Err(Error::InvalidParams(format!("relaxation must lie in (0, 2), got [{rlo}, {rhi}]")));
    }
    let (gamma, eta) = (prob.f.modulus(), prob.f.eta());
    let mut g = start_guard(prob);
    match rippa_ep_beta_interval(gamma, eta, p.policy) {
        Some((lo, hi)) => flag_beta_range(&mut g, &p.beta, lo, hi, false),
        None => g.flag(format!("no guarded β-range for γ = {gamma}, η = {eta} under {:?}", p.policy)),
    }
    let eps = p.beta.sup();
    let rho = (rhi - 1.0).max(1.0 - rlo);
    if rho > 1.0 - 4.0 * eta * eps {
        g.flag(format!("relaxation spread {rho} exceeds 1 − 4ηε = {}", 1.0 - 4.0 * eta * eps));
    }
    if (alpha > 0.0 || rhi > 1.0) && !prob.k.is_affine() {
        g.flag("inertia or over-relaxation on a set that is not an affine subspace");
    }
    if alpha > 0.0 {
        if !p.inertia.is_nondecreasing() {
            g.flag("inertial coefficients are not nondecreasing");
        }
        let xi = (1.0 - 4.0 * eta * eps - rho) / (1.0 + rho);
        if !(xi > 0.0 && alpha < xi / (2.0 + xi)) {
            g.flag(format!("α = {alpha} is not below ξ/(2 + ξ) with ξ = {xi}"));
        }
    }
    Ok(g)
}

/// IEPPA-EP: constant α ∈ (−1, 1) (error otherwise); the convergent
/// regimes for α ≥ 0 and α < 0 are flagged when violated.
pub fn validate_ieppa_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    common_checks(p)?;
    let Schedule::Constant { value: alpha } = p.inertia else {
        return Err(Error::InvalidParams("IEPPA-EP uses a constant inertial parameter".into()));
    };
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("α must lie in (−1, 1), got {alpha}")));
    }
    let (gamma, eta) = (prob.f.modulus(), prob.f.eta());
    let mut g = start_guard(prob);
    if !matches!(p.beta, Schedule::Constant { .. }) {
        g.flag("β is not constant");
    }
    if !(gamma > 12.0 * eta) {
        g.flag(format!("γ = {gamma} is not above 12η = {}", 12.0 * eta));
        return Ok(g);
    }
    let lo = 1.0 / (gamma - 8.0 * eta);
    if alpha >= 0.0 {
        if alpha >= 1.0 / 3.0 {
            g.flag(format!("α = {alpha} is not below 1/3"));
            return Ok(g);
        }
        let hi = if eta > 0.0 { (1.0 - 3.0 * alpha) / (4.0 * eta * (1.0 - alpha)) } else { f64::INFINITY };
        flag_beta_range(&mut g, &p.beta, lo, hi, false);
    } else {
        flag_beta_range(&mut g, &p.beta, lo, upper_quarter(eta), false);
    }
    Ok(g)
}

/// Closed β-interval `[1/(γ − 8η) + ε, 1/(4η) − ε]` of 2PPA-EP.
pub fn two_ppa_beta_interval(gamma: f64, eta: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("ε must be positive, got {epsilon}")));
    }
    if !(gamma > 8.0 * eta) {
        return Err(Error::InvalidParams(format!("empty β-interval: γ = {gamma} ≤ 8η = {}", 8.0 * eta)));
    }
    let lo = 1.0 / (gamma - 8.0 * eta) + epsilon;
    let hi = upper_quarter(eta) - epsilon;
    if lo > hi {
        return Err(Error::InvalidParams(format!("empty β-interval [{lo}, {hi}] for γ = {gamma}, η = {eta}")));
    }
    Ok((lo, hi))
}

pub fn validate_two_ppa_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    common_checks(p)?;
    let (gamma, eta) = (prob.f.modulus(), prob.f.eta());
    let (lo, hi) = two_ppa_beta_interval(gamma, eta, p.epsilon)?;
    let mut g = start_guard(prob);
    if !(gamma > 12.0 * eta) {
        g.flag(format!("γ = {gamma} is not above 12η = {}", 12.0 * eta));
    }
    flag_beta_range(&mut g, &p.beta, lo, hi, true);
    Ok(g)
}

pub fn validate_reg_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    common_checks(p)?;
    if p.inner_max_iters == 0 {
        return Err(Error::InvalidParams("inner_max_iters must be at least 1".into()));
    }
    if let Some(b) = p.inner_beta {
        if !(b > 0.0) {
            return Err(Error::InvalidParams(format!("inner β must be positive, got {b}")));
        }
    }
    let mut g = start_guard(prob);
    if !(p.beta.inf() > 0.0) {
        g.flag("β_k is not bounded below by a positive θ");
    }
    Ok(g)
}

fn validate_extragradient(prob: &EpProblem, p: &EpParams, projected: bool) -> Result<Guard> {
    common_checks(p)?;
    for (name, v) in [("ls_alpha", p.ls_alpha), ("ls_rho", p.ls_rho)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParams(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    positive_schedule("step", &p.step)?;
    let mut g = start_guard(prob);
    if !matches!(p.step, Schedule::Harmonic { .. }) {
        g.flag("step schedule does not satisfy Σα_k = ∞, Σα_k² < ∞");
    }
    if projected {
        if !(p.step.sup() < p.beta.inf()) {
            g.flag(format!("steps α_j (sup {}) are not below inf β_k = {}", p.step.sup(), p.beta.inf()));
        }
    } else {
        let limit_ok = match &p.beta {
            Schedule::Constant { .. } => true,
            Schedule::Harmonic { .. } => false,
            Schedule::List { values } => values.windows(2).all(|w| w[0] >= w[1]),
        };
        if !limit_ok {
            g.flag("β_k does not decrease to a positive limit");
        }
    }
    Ok(g)
}

pub fn validate_eg_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    validate_extragradient(prob, p, false)
}

pub fn validate_peg_ep(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    validate_extragradient(prob, p, true)
}

fn ppa_params(p: &EpParams) -> EpParams {
    EpParams { inertia: Schedule::constant(0.0), inertia_bound: 0.0, relax: Schedule::constant(1.0), ..p.clone() }
}

/// Validator for `p.variant`.
pub fn validate(prob: &EpProblem, p: &EpParams) -> Result<Guard> {
    match p.variant {
        EpVariant::PpaEp => validate_rippa_ep(prob, &ppa_params(p)),
        EpVariant::RippaEp => validate_rippa_ep(prob, p),
        EpVariant::RegEp => validate_reg_ep(prob, p),
        EpVariant::IeppaEp => validate_ieppa_ep(prob, p),
        EpVariant::TwoPpaEp => validate_two_ppa_ep(prob, p),
        EpVariant::EgEp => validate_eg_ep(prob, p),
        EpVariant::PegEp => validate_peg_ep(prob, p),
    }
}

/// Proximal step `argmin_{v ∈ K} f(anchor, v) + ‖center − v‖²/(2β)`. On
/// value-gap problems the subproblem is the prox of `h` itself.
fn ep_prox(prob: &EpProblem, anchor: &Point, center: &Point, beta: f64, cfg: &GlobalSolveConfig) -> Result<ProxResult> {
    match prob.f.value_gap_objective() {
        Some(h) => prox(h, &prob.k, beta, center, cfg),
        None => prox(&prob.f.section(anchor)?, &prob.k, beta, center, cfg),
    }
}

fn row_value(prob: &EpProblem, x: &Point, prox_point: &Point) -> f64 {
    match prob.f.value_gap_objective() {
        Some(h) => h.value(x),
        None => prob.f.value(x, prox_point),
    }
}

fn parse_point(v: &Option<Vec<f64>>, fallback: &Point) -> Result<Point> {
    match v {
        Some(c) if c.len() != fallback.dim() => Err(Error::DimensionMismatch { expected: fallback.dim(), got: c.len() }),
        Some(c) => Point::new(c.clone()),
        None => Ok(fallback.clone()),
    }
}

struct Recorder<'a> {
    prob: &'a EpProblem,
    p: &'a EpParams,
    out: EpTrace,
    calls: usize,
    start: Instant,
}

impl<'a> Recorder<'a> {
    fn new(prob: &'a EpProblem, x0: &Point, p: &'a EpParams, guard: Guard) -> Result<Self> {
        if x0.dim() != prob.dim() {
            return Err(Error::DimensionMismatch { expected: prob.dim(), got: x0.dim() });
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite(format!("starting point {x0}")));
        }
        Ok(Recorder { prob, p, out: EpTrace::new(p.variant.name(), guard), calls: 0, start: Instant::now() })
    }

    fn solve(&mut self, anchor: &Point, center: &Point, beta: f64) -> Result<Point> {
        let r = ep_prox(self.prob, anchor, center, beta, &self.p.solver)?;
        self.calls += 1;
        self.out.trace.objective_evals += r.evals;
        Ok(r.point)
    }

    fn push(&mut self, it: usize, x: &Point, prox_point: &Point, residual: f64) -> Result<()> {
        let clock = self.p.record_timings.then_some(&self.start);
        let value = row_value(self.prob, x, prox_point);
        self.out.trace.push(x, value, residual, self.calls, clock);
        self.out.trace.secondary.push(prox_point.clone());
        let every = self.p.residual_every;
        let r = if every > 0 && it.is_multiple_of(every) && section_solvable(&self.prob.k, &self.p.solver) {
            Some(ep_residual(self.prob, x, &self.p.solver)?)
        } else {
            None
        };
        self.out.residual_ep.push(r);
        self.out.line_search_m.push(None);
        Ok(())
    }

    fn finish(self, how: Termination, solution: Point) -> EpTrace {
        let r = self.out.trace.last_residual();
        self.finish_with(how, solution, r)
    }

    fn finish_with(mut self, how: Termination, solution: Point, final_residual: f64) -> EpTrace {
        self.out.trace = self.out.trace.finish(how, solution, self.start);
        self.out.final_residual = final_residual;
        self.out
    }
}

/// Relaxed inertial proximal point method for equilibrium problems.
pub fn run_rippa_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_rippa_ep(prob, p)?;
    rippa_core(prob, x0, p, guard)
}

/// Proximal point method: RIPPA-EP with `α = 0`, `ρ ≡ 1`.
pub fn run_ppa_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let q = EpParams { variant: EpVariant::PpaEp, ..ppa_params(p) };
    let guard = validate_rippa_ep(prob, &q)?;
    rippa_core(prob, x0, &q, guard)
}

fn rippa_core(prob: &EpProblem, x0: &Point, p: &EpParams, guard: Guard) -> Result<EpTrace> {
    let mut rec = Recorder::new(prob, x0, p, guard)?;
    let mut prev = parse_point(&p.x_prev, x0)?;
    let mut x = x0.clone();
    for it in 0..=p.max_iters {
        let y = x.axpy(p.inertia.at(it), &x.sub(&prev));
        let z = rec.solve(&y, &y, p.beta.at(it))?;
        let res = z.dist(&y);
        rec.push(it, &x, &z, res)?;
        if z == y {
            return Ok(rec.finish(Termination::ExactFixedPoint, y));
        }
        if res <= p.stop_tol {
            return Ok(rec.finish(Termination::Residual, z));
        }
        if it == p.max_iters {
            return Ok(rec.finish(Termination::MaxIters, z));
        }
        let r = p.relax.at(it);
        let next = Point::combine(1.0 - r, &y, r, &z);
        prev = std::mem::replace(&mut x, next);
    }
    unreachable!()
}

/// Inertial extrapolation proximal point method.
pub fn run_ieppa_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_ieppa_ep(prob, p)?;
    let alpha = p.inertia.at(0);
    let mut rec = Recorder::new(prob, x0, p, guard)?;
    let mut x = x0.clone();
    let mut y = parse_point(&p.y0, x0)?;
    for it in 0..=p.max_iters {
        let next = rec.solve(&y, &y, p.beta.at(it))?;
        let res = next.dist(&y);
        rec.push(it, &x, &next, res)?;
        if next == y {
            return Ok(rec.finish(Termination::ExactFixedPoint, y));
        }
        if res <= p.stop_tol {
            return Ok(rec.finish(Termination::Residual, next));
        }
        if it == p.max_iters {
            return Ok(rec.finish(Termination::MaxIters, next));
        }
        y = next.axpy(alpha, &next.sub(&x));
        x = next;
    }
    unreachable!()
}

/// Two-step predictor-corrector proximal point method.
pub fn run_two_ppa_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_two_ppa_ep(prob, p)?;
    let mut rec = Recorder::new(prob, x0, p, guard)?;
    let mut x = x0.clone();
    for it in 0..=p.max_iters {
        let b = p.beta.at(it);
        let y = rec.solve(&x, &x, b)?;
        let res = y.dist(&x);
        rec.push(it, &x, &y, res)?;
        if y == x {
            return Ok(rec.finish(Termination::ExactFixedPoint, y));
        }
        if res <= p.stop_tol {
            return Ok(rec.finish(Termination::Residual, y));
        }
        if it == p.max_iters {
            return Ok(rec.finish(Termination::MaxIters, y));
        }
        let next = rec.solve(&y, &x, b)?;
        rec.out.corrector_gaps.push(next.dist(&y));
        x = next;
    }
    unreachable!()
}

/// `v ↦ f(x, v) + (w − x)ᵀ(v − w)/β` for fixed `w`: the section of the
/// regularized bifunction `f_k` at `w` with anchor `x = x^k`.
fn regularized_section(f: &Bifunction, w: &Point, xk: &Point, beta: f64) -> Result<Objective> {
    let s = f.section(w)?;
    let dir = w.sub(xk).scale(1.0 / beta);
    let (wc, dc) = (w.coords().to_vec(), dir.coords().to_vec());
    let lin = move |v: &[f64]| v.iter().zip(&wc).zip(&dc).map(|((vi, wi), di)| di * (vi - wi)).sum::<f64>();
    let s2 = s.clone();
    let mut h = Objective::new(format!("{}+reg", s.name()), f.domain().clone(), f.modulus(), move |v| s2.value_at(v) + lin(v))?;
    if s.has_grad() {
        let s3 = s.clone();
        h = h.with_grad(move |v| {
            let mut g = s3.gradient_at(v).unwrap_or_default();
            for (gi, di) in g.iter_mut().zip(&dir.coords().to_vec()) {
                *gi += di;
            }
            g
        });
    }
    Ok(h)
}

/// Regularization method: `x^{k+1} ∈ S(K, f_k)` with
/// `f_k(x, y) = f(x, y) + (x − x^k)ᵀ(y − x)/β_k`, each inner problem solved
/// by a proximal point iteration on `f_k`.
pub fn run_reg_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_reg_ep(prob, p)?;
    let mut rec = Recorder::new(prob, x0, p, guard)?;
    let mut x = x0.clone();
    let mut last_res = f64::NAN;
    for it in 0..=p.max_iters {
        let b = p.beta.at(it);
        let inner_beta = p.inner_beta.unwrap_or(b);
        let inner_tol = if last_res.is_finite() { p.stop_tol.max(0.1 * last_res) } else { p.stop_tol };
        let mut w = x.clone();
        let mut done = None;
        let mut moved = f64::NAN;
        for j in 0..p.inner_max_iters {
            let sec = regularized_section(&prob.f, &w, &x, b)?;
            let r = prox(&sec, &prob.k, inner_beta, &w, &p.solver)?;
            rec.calls += 1;
            rec.out.trace.objective_evals += r.evals;
            moved = r.point.dist(&w);
            w = r.point;
            if moved <= inner_tol {
                done = Some(j + 1);
                break;
            }
        }
        let Some(inner) = done else {
            return Err(Error::Solver(format!(
                "REG-EP inner solve stalled at outer step {it}: last inner move {moved:e} > tolerance {inner_tol:e} after {} iterations",
                p.inner_max_iters
            )));
        };
        let res = w.dist(&x);
        rec.push(it, &x, &w, res)?;
        rec.out.inner_iterations.push(inner);
        if w == x {
            return Ok(rec.finish(Termination::ExactFixedPoint, w));
        }
        if res <= p.stop_tol {
            return Ok(rec.finish(Termination::Residual, w));
        }
        if it == p.max_iters {
            return Ok(rec.finish(Termination::MaxIters, w));
        }
        last_res = res;
        x = w;
    }
    unreachable!()
}

fn fd_partial(f: &Bifunction, z: &Point, x: &Point) -> Point {
    let h = 1e-6 * (1.0 + x.norm());
    let mut g = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let mut a = x.coords().to_vec();
        let mut b = a.clone();
        a[i] += h;
        b[i] -= h;
        g.push((f.value_at(z.coords(), &a) - f.value_at(z.coords(), &b)) / (2.0 * h));
    }
    Point::raw(g)
}

/// Extragradient method with normalized projection step.
pub fn run_eg_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_eg_ep(prob, p)?;
    extragradient(prob, x0, p, guard, true)
}

/// Projected extragradient method with unnormalized projection step.
pub fn run_peg_ep(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    let guard = validate_peg_ep(prob, p)?;
    extragradient(prob, x0, p, guard, false)
}

fn extragradient(prob: &EpProblem, x0: &Point, p: &EpParams, guard: Guard, normalized: bool) -> Result<EpTrace> {
    let mut rec = Recorder::new(prob, x0, p, guard)?;
    let f = &prob.f;
    let sampler = Sampler::new(&prob.k, p.solver.search_radius)?;
    let mut x = x0.clone();
    for it in 0..=p.max_iters {
        let b = p.beta.at(it);
        let y = rec.solve(&x, &x, b)?;
        let res = y.dist(&x);
        rec.push(it, &x, &y, res)?;
        if y == x {
            return Ok(rec.finish(Termination::ExactFixedPoint, y));
        }
        if res <= p.stop_tol {
            return Ok(rec.finish(Termination::Residual, y));
        }
        if it == p.max_iters {
            return Ok(rec.finish(Termination::MaxIters, y));
        }
        let need = p.ls_alpha / (2.0 * b) * x.dist_sq(&y);
        let mut found = None;
        for m in 0..=MAX_LINE_SEARCH {
            let t = p.ls_rho.powi(m as i32);
            let z = Point::combine(1.0 - t, &x, t, &y);
            if f.value(&z, &x) - f.value(&z, &y) >= need {
                found = Some((m, z));
                break;
            }
        }
        let Some((m, z)) = found else {
            return Err(Error::Solver(format!("line search exceeded {MAX_LINE_SEARCH} contractions at iteration {it}")));
        };
        *rec.out.line_search_m.last_mut().unwrap() = Some(m);
        let w = f.partial_grad(&z, &x).unwrap_or_else(|| fd_partial(f, &z, &x));
        let wn = w.norm();
        if !wn.is_finite() {
            return Err(Error::NonFinite(format!("subgradient at iteration {it}")));
        }
        rec.out.max_subgradient_norm = Some(rec.out.max_subgradient_norm.map_or(wn, |v| v.max(wn)));
        if wn == 0.0 {
            return Ok(rec.finish_with(Termination::Stationary, y, 0.0));
        }
        let mut r = rng(p.seed.wrapping_add(it as u64));
        let fzx = f.value(&z, &x);
        for _ in 0..p.subgrad_checks {
            let v = sampler.draw(&mut r);
            if f.value(&z, &v) < fzx && w.dot(&v.sub(&x)) >= 0.0 {
                rec.out.subgradient_check_failures += 1;
            }
        }
        let a = p.step.at(it);
        let s = if normalized { a / wn } else { a };
        let next = prob.k.project(&x.axpy(-s, &w))?;
        let moved = next.dist(&x);
        if moved <= p.stop_tol {
            return Ok(rec.finish_with(Termination::Residual, z, moved));
        }
        x = next;
    }
    unreachable!()
}

/// Dispatches on `p.variant`.
pub fn solve(prob: &EpProblem, x0: &Point, p: &EpParams) -> Result<EpTrace> {
    match p.variant {
        EpVariant::PpaEp => run_ppa_ep(prob, x0, p),
        EpVariant::RippaEp => run_rippa_ep(prob, x0, p),
        EpVariant::RegEp => run_reg_ep(prob, x0, p),
        EpVariant::IeppaEp => run_ieppa_ep(prob, x0, p),
        EpVariant::TwoPpaEp => run_two_ppa_ep(prob, x0, p),
        EpVariant::EgEp => run_eg_ep(prob, x0, p),
        EpVariant::PegEp => run_peg_ep(prob, x0, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{catalog, Params};
    use crate::minimize::{run_ppa, MinParams, Variant};

    fn power_norm_problem() -> EpProblem {
        let h = catalog("power_norm", &Params::new()).unwrap();
        let k = h.domain().clone();
        let f = Bifunction::value_gap(&h).unwrap();
        EpProblem::new(f, k, Some(Point::zeros(2))).unwrap()
    }

    fn glt_problem() -> EpProblem {
        let k = FeasibleSet::interval(0.0, 4.0).unwrap();
        let f = Bifunction::glt_example(2.0, 2.0, k.clone()).unwrap();
        EpProblem::new(f, k, None).unwrap()
    }

    fn glt_oracle() -> f64 {
        (3.0 - 5f64.sqrt()) / 2.0
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn glt_estimates_give_a_regime() {
        let prob = glt_problem();
        let (g, e) = (prob.f.modulus(), prob.f.eta());
        assert!(g > 12.0 * e || g < 8.0 * e, "γ = {g}, η = {e}");
        assert!(prob.certified(), "{:?}", prob.reports);
    }

    #[test]
    fn residual_on_value_gap() {
        let prob = power_norm_problem();
        let cfg = GlobalSolveConfig::default();
        assert!(ep_residual(&prob, &Point::zeros(2), &cfg).unwrap().abs() <= 1e-6);
        assert!(ep_residual(&prob, &pt(&[0.5, 0.1]), &cfg).unwrap() < -0.1);
    }

    #[test]
    fn residual_at_glt_solution() {
        let prob = glt_problem();
        let r = ep_residual(&prob, &pt(&[glt_oracle()]), &GlobalSolveConfig::default()).unwrap();
        assert!(r >= -1e-4, "{r}");
    }

    #[test]
    fn ppa_ep_reduces_to_ppa() {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let k = h.domain().clone();
        let prob = EpProblem::new(Bifunction::value_gap(&h).unwrap(), k.clone(), None).unwrap();
        let x0 = pt(&[0.9]);
        let ep = run_ppa_ep(&prob, &x0, &EpParams::new(EpVariant::PpaEp).beta(Schedule::constant(2.0)).stop_tol(1e-9)).unwrap();
        let pp = run_ppa(&h, &k, &x0, &MinParams::new(Variant::Ppa).step(Schedule::constant(2.0)).stop_tol(1e-9)).unwrap();
        assert_eq!(ep.trace.iterates, pp.iterates);
        assert!(ep.trace.same_path(&pp));
    }

    #[test]
    fn degeneracies_match_trace_for_trace() {
        let prob = glt_problem();
        let x0 = pt(&[3.0]);
        let base = EpParams::new(EpVariant::PpaEp).beta(Schedule::constant(0.2)).stop_tol(1e-8).max_iters(200);
        let ppa = run_ppa_ep(&prob, &x0, &base).unwrap();
        let ie = run_ieppa_ep(&prob, &x0, &EpParams { variant: EpVariant::IeppaEp, ..base.clone() }.inertia(0.0)).unwrap();
        let ri = run_rippa_ep(&prob, &x0, &EpParams { variant: EpVariant::RippaEp, ..base.clone() }.inertia(0.0).relax(1.0)).unwrap();
        assert!(ppa.same_path(&ie));
        assert!(ppa.same_path(&ri));
        assert!((ppa.solution().coords()[0] - glt_oracle()).abs() < 1e-3);
    }

    #[test]
    fn ieppa_flags_large_inertia() {
        let prob = power_norm_problem();
        let p = EpParams::new(EpVariant::IeppaEp).beta(Schedule::constant(5.0)).inertia(0.5);
        let g = validate_ieppa_ep(&prob, &p).unwrap();
        assert!(!g.guarded);
        let p = EpParams::new(EpVariant::IeppaEp).beta(Schedule::constant(5.0)).inertia(0.1);
        assert!(validate_ieppa_ep(&prob, &p).unwrap().guarded);
        let p = EpParams::new(EpVariant::IeppaEp).inertia(1.0);
        assert!(validate_ieppa_ep(&prob, &p).is_err());
    }

    #[test]
    fn corrected_split_intervals() {
        assert_eq!(rippa_ep_beta_interval(2.0, 1.0, RegimePolicy::CorrectedSplit), Some((0.0, 1.0 / 6.0)));
        assert_eq!(rippa_ep_beta_interval(2.0, 1.0, RegimePolicy::Strict), None);
        assert_eq!(rippa_ep_beta_interval(10.0, 1.0, RegimePolicy::CorrectedSplit), None);
        assert_eq!(rippa_ep_beta_interval(16.0, 1.0, RegimePolicy::Strict), Some((0.125, 0.25)));
        assert_eq!(rippa_ep_beta_interval(4.0, 0.0, RegimePolicy::Strict), Some((0.25, f64::INFINITY)));
    }

    #[test]
    fn two_ppa_interval() {
        assert!(two_ppa_beta_interval(10.0, 1.0, 0.01).is_err());
        let (lo, hi) = two_ppa_beta_interval(20.0, 1.0, 0.01).unwrap();
        assert!((lo - (1.0 / 12.0 + 0.01)).abs() < 1e-15 && (hi - 0.24).abs() < 1e-15);
        assert_eq!(two_ppa_beta_interval(2.0, 0.0, 0.1).unwrap(), (0.6, f64::INFINITY));
    }

    #[test]
    fn start_at_solution_stops_immediately() {
        let prob = power_norm_problem();
        let x0 = Point::zeros(2);
        let b = Schedule::constant(5.0);
        for v in [EpVariant::TwoPpaEp, EpVariant::EgEp, EpVariant::PegEp, EpVariant::RegEp] {
            let tr = solve(&prob, &x0, &EpParams::new(v).beta(b.clone()).stop_tol(1e-6)).unwrap();
            assert_eq!(tr.iterations(), 0, "{v:?}");
            assert!(tr.solution().norm() <= 1e-6);
        }
    }

    #[test]
    fn eg_and_peg_on_glt() {
        let prob = glt_problem();
        let x0 = pt(&[3.0]);
        for (v, scale) in [(EpVariant::EgEp, 1.0), (EpVariant::PegEp, 0.19)] {
            let p = EpParams::new(v).beta(Schedule::constant(0.2)).stop_tol(1e-7).max_iters(2000);
            let p = EpParams { step: Schedule::harmonic(scale), ..p };
            assert!(validate(&prob, &p).unwrap().guarded);
            let tr = solve(&prob, &x0, &p).unwrap();
            assert!((tr.solution().coords()[0] - glt_oracle()).abs() < 1e-3, "{v:?} {}", tr.solution());
            assert!(tr.line_search_m.iter().flatten().all(|m| *m <= MAX_LINE_SEARCH));
            assert_eq!(tr.subgradient_check_failures, 0);
            eprintln!("{v:?}: {} iterations, {:?}", tr.iterations(), tr.terminated_by());
        }
    }

    #[test]
    fn minty_holds_at_solution() {
        let prob = glt_problem();
        let rep = check_minty(&prob, &pt(&[glt_oracle()]), 1e-4, &VerifyOpts::new(1000, 3)).unwrap();
        assert!(rep.passed, "{rep:?}");
        let rep = check_minty(&prob, &pt(&[2.0]), 1e-4, &VerifyOpts::new(1000, 3)).unwrap();
        assert!(!rep.passed);
    }
}
