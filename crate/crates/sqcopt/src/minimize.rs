//! Proximal, subgradient and gradient-type minimization methods with
//! parameter validators for their convergence regimes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{bregman_catalog, BregmanFunction, Objective};
use crate::geometry::{FeasibleSet, Point};
use crate::prox::{bregman_prox, prox, GlobalSolveConfig};
use crate::verify::{sublevel_subdiff_member, subdiff_member, VerifyOpts};

/// Step, inertia or relaxation sequence indexed by `k = 0, 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant { value: f64 },
    /// `scale / (k + 1)`.
    Harmonic { scale: f64 },
    /// Explicit values; the last one repeats.
    List { values: Vec<f64> },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn harmonic(scale: f64) -> Self {
        Schedule::Harmonic { scale }
    }

    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Harmonic { scale } => scale / (k as f64 + 1.0),
            Schedule::List { values } => values.get(k).or(values.last()).copied().unwrap_or(f64::NAN),
        }
    }

    /// Supremum over all k.
    pub fn sup(&self) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Harmonic { scale } => *scale,
            Schedule::List { values } => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Infimum over all k (0 for harmonic schedules).
    pub fn inf(&self) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Harmonic { scale } => scale.min(0.0),
            Schedule::List { values } => values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            Schedule::Constant { .. } => true,
            Schedule::Harmonic { scale } => *scale <= 0.0,
            Schedule::List { values } => values.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    pub(crate) fn is_valid(&self) -> bool {
        match self {
            Schedule::List { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
            _ => self.at(0).is_finite(),
        }
    }
}

/// Geometric perturbation `ψ^k = scale · ratio^k · (1,…,1)/√n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub scale: f64,
    pub ratio: f64,
}

impl Perturbation {
    fn at(&self, k: usize, n: usize) -> Point {
        let v = self.scale * self.ratio.powi(k as i32) / (n as f64).sqrt();
        Point::raw(vec![v; n])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ppa,
    Rippa,
    Bppa,
    Subgrad,
    Grad,
    HeavyBall,
    InertialGm,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Ppa => "ppa",
            Variant::Rippa => "rippa",
            Variant::Bppa => "bppa",
            Variant::Subgrad => "subgrad",
            Variant::Grad => "grad",
            Variant::HeavyBall => "heavy_ball",
            Variant::InertialGm => "inertial_gm",
        }
    }
}

/// Parameters shared by all minimization methods. Fields a method does not
/// use are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinParams {
    pub variant: Variant,
    /// `c_k` for proximal methods, `α_k` for subgradient, gradient and
    /// inertial methods.
    pub step: Schedule,
    /// Inertial coefficients `α_k` of RIPPA.
    pub inertia: Schedule,
    /// Upper bound `α` on the inertial coefficients.
    pub inertia_bound: f64,
    /// Relaxation coefficients `ρ_k` of RIPPA.
    pub relax: Schedule,
    /// Declared interval `[ρ′, ρ″]`; defaults to the range of `relax`.
    pub relax_bounds: Option<(f64, f64)>,
    /// Bregman kernel name for BPPA.
    pub bregman: Option<String>,
    /// Shift `s` of the entropy kernel, whose zone is `x_i > −s`.
    pub bregman_shift: f64,
    pub perturbation: Option<Perturbation>,
    /// Heavy-ball inertia θ and step root η (the step is η²).
    pub theta: f64,
    pub eta: f64,
    /// β of the strong subdifferential used by the subgradient method.
    pub subgrad_beta: f64,
    /// Bound `M` on the subgradient norms. Without it, `M` is twice the
    /// largest oracle norm over 1000 seeded samples of `K`.
    pub subgrad_bound: Option<f64>,
    /// Overrides the objective's gradient Lipschitz constant.
    pub lip: Option<f64>,
    /// Second starting point `x¹` for two-step methods; defaults to `x⁰`.
    pub x1: Option<Point>,
    pub max_iters: usize,
    pub stop_tol: f64,
    /// Subgradient spot checks run every this many iterations (0 disables).
    pub spot_check_every: usize,
    /// Norm above which two-step methods report divergence.
    pub divergence_bound: f64,
    /// Record per-iteration wall time (breaks byte-reproducibility of traces).
    pub record_timings: bool,
    pub solver: GlobalSolveConfig,
}

impl Default for MinParams {
    fn default() -> Self {
        MinParams {
            variant: Variant::Ppa,
            step: Schedule::constant(1.0),
            inertia: Schedule::constant(0.0),
            inertia_bound: 0.0,
            relax: Schedule::constant(1.0),
            relax_bounds: None,
            bregman: None,
            bregman_shift: 0.0,
            perturbation: None,
            theta: 0.5,
            eta: 0.1,
            subgrad_beta: 1.0,
            subgrad_bound: None,
            lip: None,
            x1: None,
            max_iters: 100_000,
            stop_tol: 1e-8,
            spot_check_every: 100,
            divergence_bound: 1e6,
            record_timings: false,
            solver: GlobalSolveConfig::default(),
        }
    }
}

impl MinParams {
    pub fn new(variant: Variant) -> Self {
        MinParams { variant, ..Default::default() }
    }

    pub fn step(mut self, s: Schedule) -> Self {
        self.step = s;
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

    fn relax_interval(&self) -> (f64, f64) {
        self.relax_bounds.unwrap_or((self.relax.inf(), self.relax.sup()))
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Residual,
    MaxIters,
    ExactFixedPoint,
    Diverged,
    /// A zero subgradient was produced.
    Stationary,
}

/// Whether the parameters lie in a regime covered by a convergence theorem.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Guard {
    pub guarded: bool,
    pub notes: Vec<String>,
}

impl Guard {
    pub(crate) fn new() -> Self {
        Guard { guarded: true, notes: Vec::new() }
    }

    pub(crate) fn flag(&mut self, note: impl Into<String>) {
        self.guarded = false;
        self.notes.push(note.into());
    }
}

/// Row `k` holds the iterate `x^k`, `h(x^k)`, the residual computed at step
/// `k`, `‖x^k − x^{k−1}‖` and the cumulative oracle count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationTrace {
    pub method: String,
    pub iterates: Vec<Point>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// Cumulative prox (or gradient/subgradient oracle) calls.
    pub oracle_calls: Vec<usize>,
    /// Objective evaluations spent inside subproblem solves.
    pub objective_evals: usize,
    pub wall_ms: Vec<Option<f64>>,
    pub total_wall_ms: f64,
    pub terminated_by: Termination,
    /// Final solution estimate.
    pub solution: Point,
    pub guard: Guard,
    /// Method-specific companion sequence: `z^k` for proximal methods and
    /// `x^k − x^{k−1}` for two-step methods.
    pub secondary: Vec<Point>,
    /// Whether all iterates stayed below the divergence bound.
    pub bounded: bool,
}

impl IterationTrace {
    pub(crate) fn new(method: &str, guard: Guard) -> Self {
        IterationTrace {
            method: method.into(),
            iterates: Vec::new(),
            values: Vec::new(),
            residuals: Vec::new(),
            step_norms: Vec::new(),
            oracle_calls: Vec::new(),
            objective_evals: 0,
            wall_ms: Vec::new(),
            total_wall_ms: 0.0,
            terminated_by: Termination::MaxIters,
            solution: Point::zeros(0),
            guard,
            secondary: Vec::new(),
            bounded: true,
        }
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn last_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Same iterates, values, residuals, counts and outcome, ignoring the
    /// method label, timings and guard notes.
    pub fn same_path(&self, other: &IterationTrace) -> bool {
        self.iterates == other.iterates
            && self.values == other.values
            && self.residuals == other.residuals
            && self.step_norms == other.step_norms
            && self.oracle_calls == other.oracle_calls
            && self.terminated_by == other.terminated_by
            && self.solution == other.solution
    }

    pub(crate) fn push(&mut self, x: &Point, value: f64, residual: f64, calls: usize, clock: Option<&Instant>) {
        let step = self.iterates.last().map_or(0.0, |p| p.dist(x));
        self.iterates.push(x.clone());
        self.values.push(value);
        self.residuals.push(residual);
        self.step_norms.push(step);
        self.oracle_calls.push(calls);
        self.wall_ms.push(clock.map(|c| c.elapsed().as_secs_f64() * 1e3));
    }

    pub(crate) fn finish(mut self, how: Termination, solution: Point, start: Instant) -> Self {
        self.terminated_by = how;
        self.solution = solution;
        self.total_wall_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

fn check_start(h: &Objective, x0: &Point) -> Result<()> {
    if x0.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: x0.dim() });
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite(format!("starting point {x0}")));
    }
    Ok(())
}

fn common_checks(p: &MinParams) -> Result<()> {
    if !(p.stop_tol >= 0.0) {
        return Err(Error::InvalidParams(format!("stop_tol must be ≥ 0, got {}", p.stop_tol)));
    }
    for (name, s) in [("step", &p.step), ("inertia", &p.inertia), ("relax", &p.relax)] {
        if !s.is_valid() {
            return Err(Error::InvalidParams(format!("{name} schedule is empty or non-finite")));
        }
    }
    Ok(())
}

/// `ρ″(β̂, ρ′) = 2ρ′(β̂² − β̂ + 1) / (2ρ′β̂² + (2 − ρ′)β̂ + ρ′)`.
pub fn rho_upper(beta_hat: f64, rho_lo: f64) -> f64 {
    2.0 * rho_lo * (beta_hat * beta_hat - beta_hat + 1.0) / (2.0 * rho_lo * beta_hat * beta_hat + (2.0 - rho_lo) * beta_hat + rho_lo)
}

/// Checks the RIPPA invariants (errors) and convergence regime (flags).
pub fn validate_rippa(k: &FeasibleSet, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    let alpha = p.inertia_bound.max(p.inertia.sup());
    if !(p.inertia.inf() >= 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("inertia must lie in [0, 1), got sup {alpha}")));
    }
    let (lo, hi) = p.relax_interval();
    if !(lo > 0.0 && lo <= hi && hi < 2.0) {
        return Err(Error::InvalidParams(format!("need 0 < ρ′ ≤ ρ″ < 2, got [{lo}, {hi}]")));
    }
    if !(p.relax.inf() >= lo && p.relax.sup() <= hi) {
        return Err(Error::InvalidParams(format!("relaxation schedule leaves [{lo}, {hi}]")));
    }
    let step_inf = p.step.inf();
    if !(p.step.at(0) > 0.0 && step_inf >= 0.0) || matches!(&p.step, Schedule::List { values } if values.iter().any(|v| *v <= 0.0)) {
        return Err(Error::InvalidParams("proximal steps c_k must be positive".into()));
    }
    let mut g = Guard::new();
    if step_inf <= 0.0 {
        g.flag("c_k is not bounded away from 0");
    }
    let needs_affine = alpha > 0.0 || hi > 1.0;
    if needs_affine && !k.is_affine() {
        g.flag("inertia or over-relaxation on a set that is not an affine subspace");
    }
    if alpha > 0.0 {
        if !p.inertia.is_nondecreasing() {
            g.flag("inertial coefficients are not nondecreasing");
        }
        // Summability holds if some β̂ ∈ (α, 1) admits ρ″ ≤ ρ″(β̂, ρ′).
        let ok = (1..100).map(|i| alpha + (1.0 - alpha) * i as f64 / 100.0).any(|b| hi <= rho_upper(b, lo));
        if !ok {
            g.flag("no β̂ certifies the summability condition for this (α, ρ′, ρ″)");
        }
    }
    Ok(g)
}

/// Parameters under which the inertial terms are summable: constant inertia
/// `α_target`, `β̂ = (1 + α_target)/2`, `ρ″ = ρ″(β̂, ρ′)` and `ρ_k` at the
/// midpoint of `[ρ′, ρ″]`. The proximal steps default to `c_k ≡ 1`.
pub fn default_rippa_params(gamma: f64, alpha_target: f64, rho_lo: f64) -> Result<MinParams> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParams(format!("modulus must be positive, got {gamma}")));
    }
    if !(0.0..1.0).contains(&alpha_target) {
        return Err(Error::InvalidParams(format!("α_target must lie in [0, 1), got {alpha_target}")));
    }
    if !(rho_lo > 0.0 && rho_lo < 2.0) {
        return Err(Error::InvalidParams(format!("ρ′ must lie in (0, 2), got {rho_lo}")));
    }
    let beta_hat = 0.5 * (1.0 + alpha_target);
    let hi = rho_upper(beta_hat, rho_lo);
    if hi < rho_lo {
        return Err(Error::InvalidParams(format!("ρ″ = {hi} < ρ′ = {rho_lo}; lower α_target or ρ′")));
    }
    Ok(MinParams {
        variant: Variant::Rippa,
        inertia: Schedule::constant(alpha_target),
        inertia_bound: alpha_target,
        relax: Schedule::constant(0.5 * (rho_lo + hi)),
        relax_bounds: Some((rho_lo, hi)),
        ..Default::default()
    })
}

/// Relaxed inertial proximal point method.
pub fn run_rippa(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let guard = validate_rippa(k, p)?;
    run_rippa_guarded(h, k, x0, p, guard, "rippa")
}

fn run_rippa_guarded(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams, guard: Guard, name: &str) -> Result<IterationTrace> {
    check_start(h, x0)?;
    let start = Instant::now();
    let clock = p.record_timings.then_some(&start);
    let mut tr = IterationTrace::new(name, guard);
    let mut prev = x0.clone();
    let mut x = x0.clone();
    let mut calls = 0;
    for it in 0..=p.max_iters {
        let a = p.inertia.at(it);
        let y = x.axpy(a, &x.sub(&prev));
        let z = prox(h, k, p.step.at(it), &y, &p.solver)?;
        calls += 1;
        tr.objective_evals += z.evals;
        let z = z.point;
        let res = z.dist(&y);
        tr.push(&x, h.value(&x), res, calls, clock);
        tr.secondary.push(z.clone());
        if z == y {
            return Ok(tr.finish(Termination::ExactFixedPoint, y, start));
        }
        if res <= p.stop_tol {
            return Ok(tr.finish(Termination::Residual, z, start));
        }
        if it == p.max_iters {
            return Ok(tr.finish(Termination::MaxIters, z, start));
        }
        let r = p.relax.at(it);
        let next = Point::combine(1.0 - r, &y, r, &z);
        prev = std::mem::replace(&mut x, next);
    }
    unreachable!()
}

/// Proximal point method: RIPPA with `α = 0`, `ρ ≡ 1`.
pub fn run_ppa(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let q = MinParams {
        inertia: Schedule::constant(0.0),
        inertia_bound: 0.0,
        relax: Schedule::constant(1.0),
        relax_bounds: None,
        ..p.clone()
    };
    let guard = validate_rippa(k, &q)?;
    run_rippa_guarded(h, k, x0, &q, guard, "ppa")
}

/// Checks BPPA parameters.
pub fn validate_bppa(k: &FeasibleSet, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    if !(p.step.at(0) > 0.0) || matches!(&p.step, Schedule::List { values } if values.iter().any(|v| *v <= 0.0)) {
        return Err(Error::InvalidParams("proximal steps c_k must be positive".into()));
    }
    let mut g = Guard::new();
    if p.step.inf() <= 0.0 {
        g.flag("c_k is not bounded away from 0");
    }
    if k.is_affine() && k.dim() > 0 {
        if let crate::geometry::SetSpec::Affine { basis, .. } = k.spec() {
            if basis.len() < k.dim() {
                g.flag("feasible set has empty interior");
            }
        }
    }
    Ok(g)
}

/// Bregman proximal point method.
pub fn run_bppa(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let guard = validate_bppa(k, p)?;
    check_start(h, x0)?;
    let phi = match p.bregman.as_deref() {
        Some("neg_entropy") => BregmanFunction::neg_entropy_shifted(p.bregman_shift)?,
        name => bregman_catalog(name.unwrap_or("half_sq_norm"))?,
    };
    let start = Instant::now();
    let clock = p.record_timings.then_some(&start);
    let mut tr = IterationTrace::new("bppa", guard);
    let mut x = x0.clone();
    let mut calls = 0;
    for it in 0..=p.max_iters {
        if !phi.in_zone(x.coords()) {
            return Err(Error::GuardAbort(format!("iterate {x} left the zone of {} at k = {it}", phi.name())));
        }
        let r = bregman_prox(h, k, &phi, p.step.at(it), &x, &p.solver)?;
        calls += 1;
        tr.objective_evals += r.evals;
        let next = r.point;
        let res = next.dist(&x);
        tr.push(&x, h.value(&x), res, calls, clock);
        tr.secondary.push(next.clone());
        if next == x {
            return Ok(tr.finish(Termination::ExactFixedPoint, x, start));
        }
        if res <= p.stop_tol {
            return Ok(tr.finish(Termination::Residual, next, start));
        }
        if it == p.max_iters {
            return Ok(tr.finish(Termination::MaxIters, next, start));
        }
        x = next;
    }
    unreachable!()
}

/// Checks subgradient parameters against `α_k ∈ (0, 1/(γβ))`, `Σα_k = ∞`,
/// `Σα_k² < ∞`.
pub fn validate_subgradient(h: &Objective, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    if !(p.subgrad_beta > 0.0) {
        return Err(Error::InvalidParams(format!("β must be positive, got {}", p.subgrad_beta)));
    }
    if !(p.step.at(0) > 0.0) || p.step.inf() < 0.0 {
        return Err(Error::InvalidParams("subgradient steps must be positive".into()));
    }
    let mut g = Guard::new();
    let gamma = h.modulus();
    if !(gamma > 0.0) {
        g.flag("objective has no positive declared modulus");
    } else if p.step.sup() >= 1.0 / (gamma * p.subgrad_beta) {
        g.flag(format!("steps reach 1/(γβ) = {}", 1.0 / (gamma * p.subgrad_beta)));
    }
    match p.step {
        Schedule::Harmonic { .. } => {}
        Schedule::Constant { .. } => g.flag("constant steps are not square summable"),
        Schedule::List { .. } => g.flag("finite step lists cannot certify the divergent-series conditions"),
    }
    if !h.has_grad() {
        g.flag("no gradient: subgradient oracle must be supplied");
    }
    Ok(g)
}

/// Subgradient oracle type: `x ↦ ξ ∈ ∂^K_{β,γ} h(x)`.
pub type SubgradOracle<'a> = &'a (dyn Fn(&Point) -> Point + Sync);

/// Projected subgradient method. Without an oracle the gradient is used; it
/// lies in the sublevel strong subdifferential for β = 1, and the spot
/// checks test that weaker membership.
pub fn run_subgradient(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams, oracle: Option<SubgradOracle>) -> Result<IterationTrace> {
    let mut guard = validate_subgradient(h, p)?;
    check_start(h, x0)?;
    if oracle.is_none() && !h.has_grad() {
        return Err(Error::MissingGradient(h.name().to_string()));
    }
    if oracle.is_none() && p.subgrad_beta != 1.0 {
        guard.flag("gradient oracle is certified for β = 1 only");
    }
    let eval = |x: &Point| match oracle {
        Some(o) => o(x),
        None => h.gradient(x).unwrap(),
    };
    let bound = match p.subgrad_bound {
        Some(m) => m,
        None => {
            let pts = k.sample(0x5B, 1000, Some(1.0 + x0.norm()))?;
            2.0 * pts.iter().map(|y| eval(y).norm()).filter(|v| v.is_finite()).fold(0.0, f64::max)
        }
    };
    let start = Instant::now();
    let clock = p.record_timings.then_some(&start);
    let mut tr = IterationTrace::new("subgrad", guard);
    let mut x = k.project(x0)?;
    let mut calls = 0;
    let mut over_bound = false;
    for it in 0..=p.max_iters {
        let xi = eval(&x);
        calls += 1;
        if !xi.is_finite() {
            return Err(Error::NonFinite(format!("subgradient at {x}")));
        }
        if !over_bound && xi.norm() > bound {
            over_bound = true;
            tr.guard.flag(format!("subgradient norm {} exceeds the bound M = {bound}", xi.norm()));
        }
        if p.spot_check_every > 0 && it % p.spot_check_every == 0 && h.modulus() > 0.0 {
            let opts = VerifyOpts::new(20, it as u64).radius(1.0);
            let rep = match oracle {
                Some(_) => subdiff_member(h, k, &x, &xi, p.subgrad_beta, h.modulus(), &opts)?,
                None => sublevel_subdiff_member(h, k, &x, &xi, p.subgrad_beta, h.modulus(), &opts)?,
            };
            if !rep.passed {
                return Err(Error::GuardAbort(format!(
                    "oracle output {xi} at {x} failed the membership spot check (witness {:?})",
                    rep.witnesses.first().map(|w| &w.points)
                )));
            }
        }
        let res = xi.norm();
        tr.push(&x, h.value(&x), res, calls, clock);
        if res <= p.stop_tol {
            return Ok(tr.finish(Termination::Residual, x, start));
        }
        if it == p.max_iters {
            return Ok(tr.finish(Termination::MaxIters, x, start));
        }
        let next = k.project(&x.axpy(-p.step.at(it), &xi))?;
        if next == x {
            return Ok(tr.finish(Termination::ExactFixedPoint, x, start));
        }
        x = next;
    }
    unreachable!()
}

fn lipschitz(h: &Objective, p: &MinParams) -> Option<f64> {
    p.lip.or(h.lip_grad())
}

fn domain_note(h: &Objective, g: &mut Guard) {
    if !matches!(h.domain().spec(), crate::geometry::SetSpec::FullSpace { .. }) {
        g.notes.push(format!("objective declared on {}; iterates are checked against it", h.domain()));
    }
}

/// Checks gradient-method steps against `α ≤ α_k ≤ ᾱ < min{γ/L̄², 2/L̄}`.
pub fn validate_gradient(h: &Objective, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    if !h.has_grad() {
        return Err(Error::MissingGradient(h.name().to_string()));
    }
    if !(p.step.at(0) > 0.0) {
        return Err(Error::InvalidParams("gradient steps must be positive".into()));
    }
    let mut g = Guard::new();
    domain_note(h, &mut g);
    if p.step.inf() <= 0.0 {
        g.flag("steps are not bounded below by a positive constant");
    }
    match lipschitz(h, p) {
        None => g.flag("no gradient Lipschitz constant"),
        Some(l) => {
            let bound = (h.modulus() / (l * l)).min(2.0 / l);
            if !(p.step.sup() < bound) {
                g.flag(format!("steps reach min(γ/L², 2/L) = {bound}"));
            }
        }
    }
    if p.perturbation.is_some() {
        g.notes.push("perturbed run: step bound certified for ψ ≡ 0 only".into());
    }
    Ok(g)
}

fn out_of_domain(h: &Objective, x: &Point) -> bool {
    !h.domain().contains(x, 1e-9).unwrap_or(false)
}

/// Gradient method `x^{k+1} = x^k − α_k ∇h(x^k) + ψ^k` on ℝⁿ.
pub fn run_gradient(h: &Objective, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let guard = validate_gradient(h, p)?;
    check_start(h, x0)?;
    let start = Instant::now();
    let clock = p.record_timings.then_some(&start);
    let mut tr = IterationTrace::new("grad", guard);
    let mut x = x0.clone();
    let mut left = false;
    for it in 0..=p.max_iters {
        let g = h.gradient(&x).unwrap();
        let res = g.norm();
        left |= out_of_domain(h, &x);
        tr.push(&x, h.value(&x), res, it + 1, clock);
        if !res.is_finite() || x.norm() > p.divergence_bound {
            tr.bounded = false;
            return Ok(tr.finish(Termination::Diverged, x, start));
        }
        if res <= p.stop_tol {
            return Ok(tr.finish(Termination::Residual, x, start));
        }
        if it == p.max_iters {
            if left {
                tr.guard.flag("iterates left the objective's domain");
            }
            return Ok(tr.finish(Termination::MaxIters, x, start));
        }
        let mut next = x.axpy(-p.step.at(it), &g);
        if let Some(psi) = &p.perturbation {
            next = next.add(&psi.at(it, x.dim()));
        }
        x = next;
    }
    unreachable!()
}

/// Checks heavy-ball parameters: `θ ∈ (0, 1)`, `η² ∈ (0, (1 − θ²)/L)`.
pub fn validate_heavy_ball(h: &Objective, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    if !h.has_grad() {
        return Err(Error::MissingGradient(h.name().to_string()));
    }
    if !(0.0..1.0).contains(&p.theta) {
        return Err(Error::InvalidParams(format!("θ must lie in [0, 1), got {}", p.theta)));
    }
    if !(p.eta > 0.0) {
        return Err(Error::InvalidParams(format!("η must be positive, got {}", p.eta)));
    }
    let mut g = Guard::new();
    domain_note(h, &mut g);
    if p.theta == 0.0 {
        g.flag("θ = 0 reduces the method to plain gradient descent");
    }
    match lipschitz(h, p) {
        None => g.flag("no gradient Lipschitz constant"),
        Some(l) => {
            let bound = (1.0 - p.theta * p.theta) / l;
            if !(p.eta * p.eta < bound) {
                g.flag(format!("η² = {} reaches (1 − θ²)/L = {bound}", p.eta * p.eta));
            }
        }
    }
    Ok(g)
}

/// Heavy-ball method `x^{k+1} = x^k + θ(x^k − x^{k−1}) − η²∇h(x^k)`.
pub fn run_heavy_ball(h: &Objective, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let guard = validate_heavy_ball(h, p)?;
    two_step(h, x0, p, guard, "heavy_ball", |x, prev, g, _| x.axpy(p.theta, &x.sub(prev)).axpy(-p.eta * p.eta, g))
}

/// Checks inertial-method steps `α_k ≥ η > 0`.
pub fn validate_inertial_gm(h: &Objective, p: &MinParams) -> Result<Guard> {
    common_checks(p)?;
    if !h.has_grad() {
        return Err(Error::MissingGradient(h.name().to_string()));
    }
    if !(p.step.inf() > 0.0) {
        return Err(Error::InvalidParams("inertial steps must be bounded below by a positive η".into()));
    }
    let mut g = Guard::new();
    domain_note(h, &mut g);
    g.notes.push("convergence requires bounded iterates; monitored at run time".into());
    Ok(g)
}

/// Inertial method `x^{k+1} = 2x^k − x^{k−1} − α_k∇h(x^k)`.
pub fn run_inertial_gm(h: &Objective, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    let guard = validate_inertial_gm(h, p)?;
    two_step(h, x0, p, guard, "inertial_gm", |x, prev, g, k| {
        Point::combine(2.0, x, -1.0, prev).axpy(-p.step.at(k), g)
    })
}

fn two_step(
    h: &Objective,
    x0: &Point,
    p: &MinParams,
    guard: Guard,
    name: &str,
    update: impl Fn(&Point, &Point, &Point, usize) -> Point,
) -> Result<IterationTrace> {
    check_start(h, x0)?;
    let start = Instant::now();
    let clock = p.record_timings.then_some(&start);
    let mut tr = IterationTrace::new(name, guard);
    let mut prev = x0.clone();
    let mut x = x0.clone();
    let mut calls = 0;
    let mut first = 0;
    // Without an explicit x¹ the method starts from x^{−1} = x⁰.
    if let Some(x1) = &p.x1 {
        check_start(h, x1)?;
        let g0 = h.gradient(x0).unwrap();
        calls += 1;
        tr.push(x0, h.value(x0), g0.norm(), calls, clock);
        tr.secondary.push(Point::zeros(x0.dim()));
        x = x1.clone();
        first = 1;
    }
    for it in first..=p.max_iters.max(first) {
        let g = h.gradient(&x).unwrap();
        calls += 1;
        let res = g.norm();
        tr.push(&x, h.value(&x), res, calls, clock);
        tr.secondary.push(x.sub(&prev));
        if !res.is_finite() || !x.is_finite() || x.norm() > p.divergence_bound {
            tr.bounded = false;
            return Ok(tr.finish(Termination::Diverged, x, start));
        }
        if res <= p.stop_tol {
            return Ok(tr.finish(Termination::Residual, x, start));
        }
        if it >= p.max_iters {
            return Ok(tr.finish(Termination::MaxIters, x, start));
        }
        let next = update(&x, &prev, &g, it);
        prev = std::mem::replace(&mut x, next);
    }
    unreachable!()
}

/// Dispatches on `p.variant`. Gradient-type methods ignore `k`.
pub fn run(h: &Objective, k: &FeasibleSet, x0: &Point, p: &MinParams) -> Result<IterationTrace> {
    match p.variant {
        Variant::Ppa => run_ppa(h, k, x0, p),
        Variant::Rippa => run_rippa(h, k, x0, p),
        Variant::Bppa => run_bppa(h, k, x0, p),
        Variant::Subgrad => run_subgradient(h, k, x0, p, None),
        Variant::Grad => run_gradient(h, x0, p),
        Variant::HeavyBall => run_heavy_ball(h, x0, p),
        Variant::InertialGm => run_inertial_gm(h, x0, p),
    }
}

/// Partial sums of `α_k‖x^k − x^{k−1}‖²` along a RIPPA trace.
pub fn inertial_series(trace: &IterationTrace, p: &MinParams) -> Vec<f64> {
    let mut s = 0.0;
    trace
        .step_norms
        .iter()
        .enumerate()
        .map(|(k, d)| {
            s += p.inertia.at(k) * d * d;
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{catalog, Params};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn half_sq() -> Objective {
        Objective::new("half_sq", FeasibleSet::full(1).unwrap(), 1.0, |x| 0.5 * x[0] * x[0])
            .unwrap()
            .with_grad(|x| vec![x[0]])
            .with_lip_grad(1.0)
    }

    fn power_norm() -> Objective {
        catalog("power_norm", &Params::new().with("n", 2.0).with("alpha", 0.5).with("half_width", 1.0)).unwrap()
    }

    #[test]
    fn rho_upper_examples() {
        // At β̂ = 1/2 the denominator is ρ′/2 + (2 − ρ′)/2 + ρ′ = 1 + ρ′.
        for r in [0.2, 0.5, 1.0, 1.5] {
            assert!((rho_upper(0.5, r) - 1.5 * r / (1.0 + r)).abs() < 1e-15);
        }
        assert_eq!(rho_upper(0.5, 1.0), 0.75);
        assert!(default_rippa_params(1.0, 0.0, 1.0).is_err());
        let p = default_rippa_params(1.0, 0.0, 0.5).unwrap();
        assert_eq!(p.relax, Schedule::constant(0.5));
        assert!(validate_rippa(&FeasibleSet::interval(0.0, 1.0).unwrap(), &p).unwrap().guarded);
        assert!(default_rippa_params(1.0, 0.2, 1.0).is_err());
        let p = default_rippa_params(1.0, 0.2, 0.2).unwrap();
        assert!(validate_rippa(&FeasibleSet::full(1).unwrap(), &p).unwrap().guarded);
    }

    #[test]
    fn rippa_invariants() {
        let k = FeasibleSet::full(1).unwrap();
        let mut p = MinParams::new(Variant::Rippa);
        p.inertia = Schedule::constant(1.0);
        assert!(validate_rippa(&k, &p).is_err());
        let mut p = MinParams::new(Variant::Rippa);
        p.relax = Schedule::constant(2.0);
        assert!(validate_rippa(&k, &p).is_err());
        let p = MinParams::new(Variant::Rippa).step(Schedule::constant(-1.0));
        assert!(validate_rippa(&k, &p).is_err());
        let mut p = MinParams::new(Variant::Rippa);
        p.inertia = Schedule::constant(0.3);
        p.inertia_bound = 0.3;
        let g = validate_rippa(&FeasibleSet::interval(0.0, 1.0).unwrap(), &p).unwrap();
        assert!(!g.guarded);
    }

    #[test]
    fn ppa_power_norm_reaches_origin() {
        let h = power_norm();
        let p = MinParams::new(Variant::Ppa).step(Schedule::constant(0.5)).max_iters(200);
        let tr = run_ppa(&h, h.domain(), &pt(&[1.0, 1.0]), &p).unwrap();
        assert!(tr.solution.norm() <= 1e-6, "{:?}", tr.solution);
        assert!(tr.iterations() <= 200);
        assert_eq!(tr.terminated_by, Termination::ExactFixedPoint);
    }

    #[test]
    fn ppa_equals_manual_prox_loop() {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let p = MinParams::new(Variant::Ppa).step(Schedule::constant(0.5));
        let tr = run_ppa(&h, h.domain(), &pt(&[0.9]), &p).unwrap();
        let mut x = pt(&[0.9]);
        for k in 0..tr.len() {
            assert_eq!(tr.iterates[k], x);
            x = prox(&h, h.domain(), 0.5, &x, &p.solver).unwrap().point;
        }
        let r = run_rippa(&h, h.domain(), &pt(&[0.9]), &MinParams { variant: Variant::Rippa, ..p.clone() }).unwrap();
        assert!(r.same_path(&tr));
    }

    #[test]
    fn start_at_minimizer_is_exact_fixed_point() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let tr = run_ppa(&h, h.domain(), &pt(&[0.0]), &MinParams::default()).unwrap();
        assert_eq!(tr.terminated_by, Termination::ExactFixedPoint);
        assert_eq!(tr.iterations(), 0);
        assert_eq!(tr.residuals[0], 0.0);
        let b = run_bppa(&h, h.domain(), &pt(&[0.0]), &MinParams::new(Variant::Bppa)).unwrap();
        assert_eq!(b.iterations(), 0);
    }

    #[test]
    fn bppa_half_sq_reproduces_ppa() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let p = MinParams::new(Variant::Bppa).step(Schedule::constant(0.3));
        let a = run_bppa(&h, h.domain(), &pt(&[4.0]), &p).unwrap();
        let b = run_ppa(&h, h.domain(), &pt(&[4.0]), &p).unwrap();
        assert!(a.same_path(&b));
    }

    #[test]
    fn bppa_entropy_strict_descent() {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let mut p = MinParams::new(Variant::Bppa).step(Schedule::constant(0.5));
        p.bregman = Some("neg_entropy".into());
        p.bregman_shift = 2.0;
        let tr = run_bppa(&h, h.domain(), &pt(&[0.9]), &p).unwrap();
        assert!(tr.len() > 3 && tr.solution[0].abs() <= 1e-6);
        for (w, d) in tr.values.windows(2).zip(&tr.step_norms[1..]) {
            assert!(*d == 0.0 || w[1] < w[0], "{w:?}");
        }
    }

    #[test]
    fn subgradient_examples() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let p = MinParams::new(Variant::Subgrad).step(Schedule::harmonic(1.5)).max_iters(10_000);
        let tr = run_subgradient(&h, h.domain(), &pt(&[4.0]), &p, None).unwrap();
        assert!(tr.guard.guarded, "{:?}", tr.guard);
        assert!(tr.solution[0].abs() <= 1e-3);
        let z = run_subgradient(&h, h.domain(), &pt(&[0.0]), &p, None).unwrap();
        assert_eq!(z.iterations(), 0);
        let g = catalog("gauss_well", &Params::new()).unwrap();
        let tr = run_subgradient(&g, g.domain(), &pt(&[0.8]), &MinParams::new(Variant::Subgrad).step(Schedule::harmonic(2.0)), None).unwrap();
        assert!(tr.solution[0].abs() <= 1e-6);
    }

    #[test]
    fn gradient_closed_form() {
        let p = MinParams::new(Variant::Grad).step(Schedule::constant(0.5)).max_iters(20);
        let tr = run_gradient(&half_sq(), &pt(&[3.0]), &p).unwrap();
        for (k, x) in tr.iterates.iter().enumerate() {
            assert_eq!(x[0], 3.0 * 0.5f64.powi(k as i32));
        }
    }

    #[test]
    fn gradient_sin_quad_guarded_and_perturbed() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let p = MinParams::new(Variant::Grad).step(Schedule::constant(0.009));
        let tr = run_gradient(&h, &pt(&[3.0]), &p).unwrap();
        assert!(tr.guard.guarded, "{:?}", tr.guard);
        assert!(tr.solution[0].abs() <= 1e-8);
        let mut q = p.clone();
        q.perturbation = Some(Perturbation { scale: 1.0, ratio: 0.5 });
        let tr = run_gradient(&h, &pt(&[3.0]), &q).unwrap();
        assert!(tr.solution[0].abs() <= 1e-6);
    }

    #[test]
    fn heavy_ball_examples() {
        let mut p = MinParams::new(Variant::HeavyBall);
        p.theta = 0.5;
        p.eta = 0.5f64.sqrt();
        let tr = run_heavy_ball(&half_sq(), &pt(&[2.0]), &p).unwrap();
        assert!(tr.guard.guarded && tr.solution[0].abs() <= 1e-7);
        let h = catalog("sin_quad", &Params::new()).unwrap();
        p.eta = 0.3;
        let tr = run_heavy_ball(&h, &pt(&[3.0]), &p).unwrap();
        assert!(tr.guard.guarded && tr.solution[0].abs() <= 1e-7, "{:?}", tr.solution);
    }

    #[test]
    fn heavy_ball_theta_zero_is_gradient_descent() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let mut p = MinParams::new(Variant::HeavyBall);
        p.theta = 0.0;
        p.eta = 0.09;
        let hb = run_heavy_ball(&h, &pt(&[2.0]), &p).unwrap();
        assert!(!hb.guard.guarded);
        let gd = run_gradient(&h, &pt(&[2.0]), &MinParams::new(Variant::Grad).step(Schedule::constant(0.09 * 0.09))).unwrap();
        assert_eq!(hb.iterates, gd.iterates);
    }

    #[test]
    fn inertial_examples() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let p = MinParams::new(Variant::InertialGm).step(Schedule::constant(0.01));
        let tr = run_inertial_gm(&h, &pt(&[0.0]), &p).unwrap();
        assert_eq!(tr.iterations(), 0);
        assert_eq!(tr.terminated_by, Termination::Residual);
        // Undamped: bounded oscillation on t²/2 without convergence.
        let q = MinParams::new(Variant::InertialGm).step(Schedule::constant(0.01)).max_iters(5000);
        let tr = run_inertial_gm(&half_sq(), &pt(&[1.0]), &q).unwrap();
        assert!(tr.bounded && tr.terminated_by == Termination::MaxIters);
        assert!(tr.iterates.iter().all(|x| x[0].abs() <= 1.01));
        let big = MinParams::new(Variant::InertialGm).step(Schedule::constant(10.0));
        let tr = run_inertial_gm(&half_sq(), &pt(&[1.0]), &big).unwrap();
        assert_eq!(tr.terminated_by, Termination::Diverged);
        assert!(!tr.bounded);
    }

    #[test]
    fn rippa_default_params_summable() {
        let k = FeasibleSet::full(1).unwrap();
        let h = catalog("sin_quad", &Params::new()).unwrap().with_domain(k.clone());
        let p = default_rippa_params(h.modulus(), 0.2, 0.2).unwrap().solver(GlobalSolveConfig::default().with_radius(6.0));
        let tr = run_rippa(&h, &k, &pt(&[3.0]), &p).unwrap();
        assert!(tr.guard.guarded);
        assert!(tr.last_residual() <= p.stop_tol);
        let s = inertial_series(&tr, &p);
        assert!(s.last().unwrap().is_finite());
        assert!(tr.solution[0].abs() <= 1e-6);
    }
}
