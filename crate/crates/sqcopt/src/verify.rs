//! Sampled certificates for the structural properties of strongly
//! quasiconvex functions and for the standing assumptions on bifunctions.
//!
//! Every check is one-sided: a passing report means no violation was found for
//! the given sample size and seed. Margins are normalized by `1 + |h|` where
//! the check involves function values, so `passed` is exactly
//! `worst_margin ≥ −tolerance`.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{Bifunction, Objective};
use crate::geometry::{rng, uniform_ball, unit_direction, FeasibleSet, Point, Rng, Sampler};

const MAX_WITNESSES: usize = 10;
const T_GRID: usize = 20;

/// Sample size, seed and (for unbounded sets) sampling radius.
#[derive(Clone, Debug)]
pub struct VerifyOpts {
    pub samples: usize,
    pub seed: u64,
    pub radius: Option<f64>,
}

impl VerifyOpts {
    pub fn new(samples: usize, seed: u64) -> Self {
        VerifyOpts { samples, seed, radius: None }
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.radius = Some(r);
        self
    }
}

/// A violating input found by a check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub margin: f64,
}

/// Outcome of a sampled verification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub property: String,
    pub passed: bool,
    pub samples: usize,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
}

struct Collector {
    property: String,
    tol: f64,
    samples: usize,
    worst: f64,
    witnesses: Vec<Witness>,
}

impl Collector {
    fn new(property: &str, tol: f64) -> Self {
        Collector { property: property.into(), tol, samples: 0, worst: f64::INFINITY, witnesses: Vec::new() }
    }

    fn record(&mut self, margin: f64, witness: impl FnOnce() -> (Vec<Point>, Option<f64>)) {
        self.samples += 1;
        if margin < self.worst {
            self.worst = margin;
        }
        if margin < -self.tol && self.witnesses.len() < MAX_WITNESSES {
            let (points, t) = witness();
            self.witnesses.push(Witness { points, t, margin });
        }
    }

    fn finish(self, estimate: Option<f64>) -> CheckReport {
        let worst = if self.samples == 0 { 0.0 } else { self.worst };
        CheckReport {
            property: self.property,
            passed: worst >= -self.tol,
            samples: self.samples,
            tolerance: self.tol,
            worst_margin: worst,
            witnesses: self.witnesses,
            estimate,
        }
    }
}

fn estimate_report(property: &str, samples: usize, estimate: f64) -> CheckReport {
    CheckReport {
        property: property.into(),
        passed: true,
        samples,
        tolerance: 0.0,
        worst_margin: 0.0,
        witnesses: Vec::new(),
        estimate: Some(estimate),
    }
}

fn finite_or_domain(v: f64, what: &str, x: &Point) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::OutsideDomain(format!("{what} evaluated to NaN at {x}")));
    }
    Ok(v)
}

fn scale(vals: &[f64]) -> f64 {
    1.0 + vals.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Stratified t: every other draw cycles through the grid {0, 1/20, …, 1}.
fn draw_t(i: usize, rng: &mut Rng) -> f64 {
    if i.is_multiple_of(2) {
        ((i / 2) % (T_GRID + 1)) as f64 / T_GRID as f64
    } else {
        rng.random::<f64>()
    }
}

/// Interior t only: grid {1/20, …, 19/20} alternating with uniform draws.
fn draw_t_open(i: usize, rng: &mut Rng) -> f64 {
    if i.is_multiple_of(2) {
        (1 + (i / 2) % (T_GRID - 1)) as f64 / T_GRID as f64
    } else {
        rng.random::<f64>()
    }
}

fn check_dim(h_dim: usize, k: &FeasibleSet) -> Result<()> {
    if h_dim != k.dim() {
        return Err(Error::DimensionMismatch { expected: h_dim, got: k.dim() });
    }
    Ok(())
}

/// Samples `h(ty+(1−t)x) ≤ max{h(x),h(y)} − t(1−t)(γ/2)‖x−y‖²` with
/// relative tolerance `1e-8·(1+|h|)`.
pub fn check_sqc_sampled(h: &Objective, k: &FeasibleSet, gamma: f64, opts: &VerifyOpts) -> Result<CheckReport> {
    sqc_on(&|x: &Point| h.value(x), k, gamma, opts, "strong quasiconvexity")
}

fn sqc_on(h: &dyn Fn(&Point) -> f64, k: &FeasibleSet, gamma: f64, opts: &VerifyOpts, label: &str) -> Result<CheckReport> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParams(format!("γ must be ≥ 0, got {gamma}")));
    }
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut c = Collector::new(label, 1e-8);
    for i in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = sampler.draw(&mut r);
        let t = draw_t(i, &mut r);
        let z = Point::combine(t, &y, 1.0 - t, &x);
        let hx = finite_or_domain(h(&x), "objective", &x)?;
        let hy = finite_or_domain(h(&y), "objective", &y)?;
        let hz = finite_or_domain(h(&z), "objective", &z)?;
        let top = hx.max(hy);
        let margin = if top == f64::INFINITY || hz == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (top - t * (1.0 - t) * 0.5 * gamma * x.dist_sq(&y) - hz) / scale(&[hx, hy, hz])
        };
        c.record(margin, || (vec![x.clone(), y.clone()], Some(t)));
    }
    Ok(c.finish(None))
}

/// Sampled modulus estimate: the smallest value over sampled triples of
/// `2(max{h(x),h(y)} − h(tx+(1−t)y)) / (t(1−t)‖x−y‖²)`, floored at 0.
///
/// Triples are drawn sequentially, so a larger sample with the same seed is a
/// superset of a smaller one.
pub fn estimate_modulus(h: &Objective, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    check_dim(h.dim(), k)?;
    let (est, n) = modulus_on(&|x: &Point| h.value(x), k, opts)?;
    Ok(estimate_report("modulus estimate", n, est))
}

fn modulus_on(h: &dyn Fn(&Point) -> f64, k: &FeasibleSet, opts: &VerifyOpts) -> Result<(f64, usize)> {
    if !k.is_bounded() && opts.radius.is_none() {
        return Err(Error::Unbounded("modulus estimation needs a bounded set".into()));
    }
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut best = f64::INFINITY;
    let mut used = 0;
    for i in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = sampler.draw(&mut r);
        let t = draw_t_open(i, &mut r);
        let d = x.dist_sq(&y);
        if d < 1e-24 || t <= 0.0 || t >= 1.0 {
            continue;
        }
        let z = Point::combine(t, &x, 1.0 - t, &y);
        let top = h(&x).max(h(&y));
        let hz = h(&z);
        if !top.is_finite() || !hz.is_finite() {
            continue;
        }
        used += 1;
        let ratio = 2.0 * (top - hz) / (t * (1.0 - t) * d);
        if ratio < best {
            best = ratio;
        }
    }
    if used == 0 {
        return Err(Error::InvalidParams("all sampled triples were degenerate".into()));
    }
    Ok((best.max(0.0), used))
}

/// Modulus estimate for `f(x, ·)`, minimized over sampled `x`.
pub fn estimate_bifunction_modulus(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed ^ 0x9e37_79b9);
    let outer = 64.min(opts.samples.max(1));
    let per = (opts.samples / outer).max(1);
    let mut best = f64::INFINITY;
    let mut used = 0;
    for j in 0..outer {
        let x = sampler.draw(&mut r);
        let sec = |y: &Point| f.value(&x, y);
        let (est, n) = modulus_on(&sec, k, &VerifyOpts { samples: per, seed: opts.seed.wrapping_add(j as u64), radius: opts.radius })?;
        best = best.min(est);
        used += n;
    }
    Ok(estimate_report("bifunction modulus estimate", used, best))
}

/// Sampled version of A4: `f(x, ·)` passes the strong-quasiconvexity check
/// with the declared modulus for sampled `x`.
pub fn check_bifunction_sqc(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed ^ 0x51);
    let outer = 32.min(opts.samples.max(1));
    let per = (opts.samples / outer).max(1);
    let mut c = Collector::new("A4 strong quasiconvexity of f(x,·)", 1e-8);
    for j in 0..outer {
        let x = sampler.draw(&mut r);
        let sec = |y: &Point| f.value(&x, y);
        let rep = sqc_on(&sec, k, f.modulus(), &VerifyOpts { samples: per, seed: opts.seed.wrapping_add(j as u64), radius: opts.radius }, "")?;
        c.samples += rep.samples;
        c.worst = c.worst.min(rep.worst_margin);
        for w in rep.witnesses {
            if c.witnesses.len() < MAX_WITNESSES {
                let mut points = vec![x.clone()];
                points.extend(w.points);
                c.witnesses.push(Witness { points, ..w });
            }
        }
    }
    Ok(c.finish(None))
}

/// 2-supercoercivity along sampled rays: `h(r·d)/r²` stays bounded away from
/// zero over the upper half of `radii` and does not decay like `1/r`.
///
/// Returns [`Error::Inapplicable`] for bounded sets.
pub fn check_supercoercive(h: &Objective, k: &FeasibleSet, radii: &[f64], opts: &VerifyOpts) -> Result<CheckReport> {
    check_dim(h.dim(), k)?;
    if k.is_bounded() {
        return Err(Error::Inapplicable("supercoercivity needs an unbounded set".into()));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return Err(Error::InvalidParams("radii must be positive and strictly increasing (at least two)".into()));
    }
    let mut r = rng(opts.seed);
    let n = h.dim();
    let upper = &radii[radii.len() / 2..];
    let mut c = Collector::new("2-supercoercivity", 1e-12);
    let mut est = f64::INFINITY;
    let dirs = opts.samples.max(1);
    for _ in 0..dirs {
        let d = Point::raw(unit_direction(&mut r, n));
        let on_ray = radii.iter().all(|&s| k.contains(&d.scale(s), 1e-9).unwrap_or(false));
        if !on_ray {
            continue;
        }
        let ratios: Vec<f64> = upper.iter().map(|&s| h.value(&d.scale(s)) / (s * s)).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        est = est.min(lo);
        let first = ratios[0];
        let last = ratios[ratios.len() - 1];
        let margin = lo.min(last - 0.5 * first);
        c.record(margin, || (vec![d.clone()], None));
    }
    if c.samples == 0 {
        return Err(Error::Inapplicable("no sampled direction stays in the set".into()));
    }
    Ok(c.finish(Some(est)))
}

/// `h(x) − h(x̄) ≥ (γ/8)‖x − x̄‖²` on sampled `x`, tolerance `1e-9·(1+|h|)`.
pub fn check_quadratic_growth(h: &Objective, k: &FeasibleSet, xbar: &Point, gamma: f64, opts: &VerifyOpts) -> Result<CheckReport> {
    check_dim(h.dim(), k)?;
    if !k.contains(xbar, 1e-10)? {
        return Err(Error::OutsideDomain(format!("reference point {xbar} is not in {k}")));
    }
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let hb = h.value(xbar);
    let mut c = Collector::new("quadratic growth", 1e-9);
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let hx = finite_or_domain(h.value(&x), "objective", &x)?;
        let margin = (hx - hb - gamma / 8.0 * x.dist_sq(xbar)) / scale(&[hx, hb]);
        c.record(margin, || (vec![x.clone()], None));
    }
    Ok(c.finish(None))
}

fn need_grad(h: &Objective) -> Result<()> {
    if h.has_grad() {
        Ok(())
    } else {
        Err(Error::MissingGradient(h.name().to_string()))
    }
}

/// First-order characterization: `h(x) ≤ h(y) ⇒ ∇h(y)ᵀ(y−x) ≥ (γ/2)‖x−y‖²`.
pub fn check_foc(h: &Objective, k: &FeasibleSet, gamma: f64, opts: &VerifyOpts) -> Result<CheckReport> {
    need_grad(h)?;
    check_dim(h.dim(), k)?;
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut c = Collector::new("first-order characterization", 1e-8);
    for _ in 0..opts.samples {
        let a = sampler.draw(&mut r);
        let b = sampler.draw(&mut r);
        let (ha, hb) = (h.value(&a), h.value(&b));
        let (x, y, hy) = if ha <= hb { (&a, &b, hb) } else { (&b, &a, ha) };
        let g = h.gradient(y).unwrap();
        let lhs = g.dot(&y.sub(x));
        let margin = (lhs - 0.5 * gamma * x.dist_sq(y)) / scale(&[hy, lhs]);
        c.record(margin, || (vec![x.clone(), y.clone()], None));
    }
    Ok(c.finish(None))
}

/// Polyak–Łojasiewicz inequality `‖∇h(x)‖² ≥ (γ²/(2L))(h(x) − h(x̄))`.
pub fn check_pl(h: &Objective, k: &FeasibleSet, xbar: &Point, gamma: f64, lip: Option<f64>, opts: &VerifyOpts) -> Result<CheckReport> {
    need_grad(h)?;
    check_dim(h.dim(), k)?;
    let l = lip.or(h.lip_grad()).ok_or_else(|| Error::InvalidParams(format!("{}: gradient Lipschitz constant missing", h.name())))?;
    let nu = gamma * gamma / (2.0 * l);
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let hb = h.value(xbar);
    let mut c = Collector::new("Polyak-Lojasiewicz", 1e-9);
    let mut est = f64::INFINITY;
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let hx = h.value(&x);
        let g2 = h.gradient(&x).unwrap().norm_sq();
        if hx - hb > 1e-12 {
            est = est.min(g2 / (hx - hb));
        }
        let margin = (g2 - nu * (hx - hb)) / scale(&[hx, hb]);
        c.record(margin, || (vec![x.clone()], None));
    }
    Ok(c.finish(est.is_finite().then_some(est)))
}

/// Result of a CFZ check: the certificate (None when the gradient vanishes)
/// and the sampled report.
#[derive(Clone, Debug, Serialize)]
pub struct CfzOutcome {
    pub direction: Option<Point>,
    pub coefficient: Option<f64>,
    pub report: CheckReport,
}

/// Builds the certificate `e = −∇h(x̄)/‖∇h(x̄)‖`, `α = γ/(2‖∇h(x̄)‖)` from the
/// declared modulus and checks `⟨e, y − x̄⟩ ≥ α‖y − x̄‖²` on sampled `y` in
/// `B(x̄, ρ) ∩ K` with `h(y) ≤ h(x̄)`.
pub fn check_cfz_at(h: &Objective, k: &FeasibleSet, xbar: &Point, rho: f64, opts: &VerifyOpts) -> Result<CfzOutcome> {
    need_grad(h)?;
    let gamma = h.modulus();
    if !(gamma > 0.0) {
        return Err(Error::InvalidParams(format!("{}: CFZ certificate needs a positive modulus", h.name())));
    }
    let g = h.gradient(xbar).unwrap();
    let gn = g.norm();
    if gn <= 1e-15 {
        return Ok(CfzOutcome {
            direction: None,
            coefficient: None,
            report: Collector::new("CFZ certificate (trivial)", 1e-10).finish(None),
        });
    }
    let e = g.scale(-1.0 / gn);
    let alpha = gamma / (2.0 * gn);
    let report = check_cfz_certificate(h, k, xbar, &e, alpha, rho, opts)?;
    Ok(CfzOutcome { direction: Some(e), coefficient: Some(alpha), report })
}

/// Checks a given certificate `(e, α)` at `x̄`.
pub fn check_cfz_certificate(
    h: &Objective,
    k: &FeasibleSet,
    xbar: &Point,
    e: &Point,
    alpha: f64,
    rho: f64,
    opts: &VerifyOpts,
) -> Result<CheckReport> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {rho}")));
    }
    let mut r = rng(opts.seed);
    let hb = h.value(xbar);
    let mut c = Collector::new("CFZ certificate", 1e-10);
    let mut attempts = 0;
    while c.samples < opts.samples && attempts < 20 * opts.samples.max(1) {
        attempts += 1;
        let y = xbar.add(&Point::raw(uniform_ball(&mut r, xbar.dim(), rho)));
        if !k.contains(&y, 1e-12)? || !(h.value(&y) <= hb) {
            continue;
        }
        let d = y.sub(xbar);
        let margin = (e.dot(&d) - alpha * d.norm_sq()) / (1.0 + rho);
        c.record(margin, || (vec![y.clone()], None));
    }
    Ok(c.finish(Some(alpha)))
}

/// One-sided membership test for `z ∈ ∂^K_{β,γ} h(x̄)`:
/// `max{h(y),h(x̄)} ≥ h(x̄) + (t/β)zᵀ(y−x̄) + (t/2)(γ − t/β − tγ)‖y−x̄‖²` on
/// sampled `y ∈ K` and `t ∈ {0, 0.05, …, 1}`.
pub fn subdiff_member(
    h: &Objective,
    k: &FeasibleSet,
    xbar: &Point,
    z: &Point,
    beta: f64,
    gamma: f64,
    opts: &VerifyOpts,
) -> Result<CheckReport> {
    membership(h, k, xbar, z, beta, gamma, opts, false)
}

/// Membership in the sublevel strong subdifferential `∂_{β,γ} h(x̄)`: the
/// test of [`subdiff_member`] restricted to sampled `y ∈ K` with
/// `h(y) ≤ h(x̄)`. A differentiable `h` is strongly quasiconvex with modulus
/// γ exactly when `∇h(x) ∈ ∂_{1,γ} h(x)` everywhere.
pub fn sublevel_subdiff_member(
    h: &Objective,
    k: &FeasibleSet,
    xbar: &Point,
    z: &Point,
    beta: f64,
    gamma: f64,
    opts: &VerifyOpts,
) -> Result<CheckReport> {
    membership(h, k, xbar, z, beta, gamma, opts, true)
}

#[allow(clippy::too_many_arguments)]
fn membership(
    h: &Objective,
    k: &FeasibleSet,
    xbar: &Point,
    z: &Point,
    beta: f64,
    gamma: f64,
    opts: &VerifyOpts,
    sublevel: bool,
) -> Result<CheckReport> {
    if !(beta > 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidParams(format!("need β > 0 and γ ≥ 0, got β = {beta}, γ = {gamma}")));
    }
    check_dim(h.dim(), k)?;
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let hb = finite_or_domain(h.value(xbar), "objective", xbar)?;
    let name = if sublevel { "sublevel strong subdifferential membership" } else { "strong subdifferential membership" };
    let mut c = Collector::new(name, 1e-8);
    let mut used = 0;
    let mut attempts = 0;
    while used < opts.samples && attempts < 20 * opts.samples.max(1) {
        attempts += 1;
        let y = sampler.draw(&mut r);
        let hy = finite_or_domain(h.value(&y), "objective", &y)?;
        if sublevel && hy > hb {
            continue;
        }
        used += 1;
        let top = hy.max(hb);
        let d = y.sub(xbar);
        let zd = z.dot(&d);
        let d2 = d.norm_sq();
        for j in 0..=T_GRID {
            let t = j as f64 / T_GRID as f64;
            let rhs = hb + t / beta * zd + 0.5 * t * (gamma - t / beta - t * gamma) * d2;
            let margin = if top == f64::INFINITY { f64::INFINITY } else { (top - rhs) / scale(&[hy, hb]) };
            c.record(margin, || (vec![y.clone()], Some(t)));
        }
    }
    Ok(c.finish(None))
}

/// Sampled A5 constant: largest positive ratio
/// `(f(x,z) − f(x,y) − f(y,z)) / (‖x−y‖² + ‖y−z‖²)`, or 0. Numerators below
/// the rounding level of the three evaluations count as zero.
pub fn estimate_eta(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    if !k.is_bounded() && opts.radius.is_none() {
        return Err(Error::Unbounded("η estimation needs a bounded set".into()));
    }
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut best = 0.0f64;
    let mut used = 0;
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = sampler.draw(&mut r);
        let z = sampler.draw(&mut r);
        let den = x.dist_sq(&y) + y.dist_sq(&z);
        if den < 1e-24 {
            continue;
        }
        used += 1;
        let (fxz, fxy, fyz) = (f.value(&x, &z), f.value(&x, &y), f.value(&y, &z));
        let num = fxz - fxy - fyz;
        // Ignore numerators at the level of cancellation error.
        if num > 4.0 * f64::EPSILON * (fxz.abs() + fxy.abs() + fyz.abs()) {
            best = best.max(num / den);
        }
    }
    Ok(estimate_report("eta estimate", used, best))
}

/// A5 with the declared η.
pub fn check_a5(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let eta = f.eta();
    let mut c = Collector::new("A5 Lipschitz-type condition", 1e-8);
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = sampler.draw(&mut r);
        let z = sampler.draw(&mut r);
        let (fxz, fxy, fyz) = (f.value(&x, &z), f.value(&x, &y), f.value(&y, &z));
        let margin = (eta * (x.dist_sq(&y) + y.dist_sq(&z)) - (fxz - fxy - fyz)) / scale(&[fxz, fxy, fyz]);
        c.record(margin, || (vec![x.clone(), y.clone(), z.clone()], None));
    }
    Ok(c.finish(Some(eta)))
}

/// A0: `f(x, x) = 0` within 1e-12.
pub fn check_a0(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut c = Collector::new("A0 f(x,x) = 0", 1e-12);
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let v = f.value(&x, &x);
        c.record(-v.abs(), || (vec![x.clone()], None));
    }
    Ok(c.finish(None))
}

/// Pseudomonotonicity `f(x,y) ≥ 0 ⇒ f(y,x) ≤ 0` on sampled pairs (every
/// eighth pair is diagonal), tolerance 1e-10.
pub fn check_pseudomonotone(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut c = Collector::new("A2 pseudomonotonicity", 1e-10);
    for i in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = if i % 8 == 0 { x.clone() } else { sampler.draw(&mut r) };
        for (a, b) in [(&x, &y), (&y, &x)] {
            if f.value(a, b) >= 0.0 {
                let margin = -f.value(b, a);
                c.record(margin, || (vec![a.clone(), b.clone()], None));
            }
        }
    }
    Ok(c.finish(None))
}

/// Continuity probe standing in for the semicontinuity assumptions A1 and
/// A3: perturbing either argument by 1e-9 changes `f` by at most 1e-3.
pub fn check_continuity_probe(f: &Bifunction, k: &FeasibleSet, opts: &VerifyOpts) -> Result<CheckReport> {
    let sampler = Sampler::new(k, opts.radius)?;
    let mut r = rng(opts.seed);
    let mut c = Collector::new("A1/A3 continuity probe", 1e-3);
    let n = f.dim();
    for _ in 0..opts.samples {
        let x = sampler.draw(&mut r);
        let y = sampler.draw(&mut r);
        let dx = k.project(&x.axpy(1e-9, &Point::raw(unit_direction(&mut r, n))))?;
        let dy = k.project(&y.axpy(1e-9, &Point::raw(unit_direction(&mut r, n))))?;
        let base = f.value(&x, &y);
        let margin = -(f.value(&dx, &y) - base).abs().max((f.value(&x, &dy) - base).abs());
        c.record(margin, || (vec![x.clone(), y.clone()], None));
    }
    Ok(c.finish(None))
}

/// Central finite differences with step `1e-6·(1+‖x‖)`; relative error
/// `‖g_fd − g‖ / max(1, ‖g‖)` must stay below 1e-6.
pub fn grad_check(h: &Objective, points: &[Point]) -> Result<CheckReport> {
    need_grad(h)?;
    let mut c = Collector::new("gradient check", 1e-6);
    let mut worst = 0.0f64;
    for x in points {
        let g = h.gradient(x).unwrap();
        let step = 1e-6 * (1.0 + x.norm());
        let mut fd = Vec::with_capacity(x.dim());
        for i in 0..x.dim() {
            let mut a = x.coords().to_vec();
            let mut b = a.clone();
            a[i] += step;
            b[i] -= step;
            fd.push((h.value_at(&a) - h.value_at(&b)) / (2.0 * step));
        }
        let err = Point::raw(fd).dist(&g) / g.norm().max(1.0);
        worst = worst.max(err);
        c.record(-err, || (vec![x.clone()], None));
    }
    Ok(c.finish(Some(worst)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{catalog, Params};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn custom(name: &str, k: FeasibleSet, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Objective {
        Objective::new(name, k, 0.0, f).unwrap()
    }

    #[test]
    fn euclid_norm_on_interval_passes() {
        let h = catalog("euclid_norm", &Params::new().with("n", 1.0).with("gamma", 1.0)).unwrap();
        let k = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let rep = check_sqc_sampled(&h, &k, 1.0, &VerifyOpts::new(10_000, 1)).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.witnesses.is_empty());
    }

    #[test]
    fn linear_function_on_short_interval_is_sqc_for_small_gamma() {
        // For h(t) = t on an interval of length L the inequality reduces to
        // (1−t)·d ≥ t(1−t)(γ/2)d², i.e. γ·d ≤ 2 for every pair.
        let k = FeasibleSet::interval(0.0, 10.0).unwrap();
        let h = custom("id", k.clone(), |x| x[0]);
        assert!(check_sqc_sampled(&h, &k, 0.01, &VerifyOpts::new(10_000, 2)).unwrap().passed);
        let rep = check_sqc_sampled(&h, &k, 1.0, &VerifyOpts::new(10_000, 2)).unwrap();
        assert!(!rep.passed && !rep.witnesses.is_empty());
    }

    #[test]
    fn cubic_fails_for_any_gamma() {
        let k = FeasibleSet::interval(-2.0, 2.0).unwrap();
        let h = custom("cubic", k.clone(), |x| x[0].powi(3) + 0.5 * x[0] * x[0]);
        for g in [1e-6, 0.1, 1.0] {
            assert!(!check_sqc_sampled(&h, &k, g, &VerifyOpts::new(10_000, 3)).unwrap().passed);
        }
    }

    #[test]
    fn nan_outside_domain_is_an_error() {
        let h = catalog("inv_gap", &Params::new()).unwrap();
        let k = FeasibleSet::interval(-1.0, 1.0).unwrap();
        assert!(matches!(check_sqc_sampled(&h, &k, 1.0, &VerifyOpts::new(100, 1)), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn constant_function_has_zero_modulus() {
        let k = FeasibleSet::interval(0.0, 1.0).unwrap();
        let h = custom("c", k.clone(), |_| 3.0);
        let rep = estimate_modulus(&h, &k, &VerifyOpts::new(1000, 1)).unwrap();
        assert_eq!(rep.estimate, Some(0.0));
    }

    #[test]
    fn gauss_well_estimate_above_declared() {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let rep = estimate_modulus(&h, h.domain(), &VerifyOpts::new(20_000, 5)).unwrap();
        assert!(rep.estimate.unwrap() >= 0.36787, "{rep:?}");
    }

    #[test]
    fn neg_quad_estimate_positive() {
        let h = catalog("neg_quad", &Params::new()).unwrap();
        let rep = estimate_modulus(&h, h.domain(), &VerifyOpts::new(20_000, 5)).unwrap();
        assert!(rep.estimate.unwrap() > 0.0);
    }

    #[test]
    fn supercoercivity_examples() {
        let radii = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];
        let full = FeasibleSet::full(1).unwrap();
        let q = custom("half_sq", full.clone(), |x| 0.5 * x[0] * x[0]);
        let rep = check_supercoercive(&q, &full, &radii, &VerifyOpts::new(16, 1)).unwrap();
        assert!(rep.passed && (rep.estimate.unwrap() - 0.5).abs() < 1e-12);
        let half = FeasibleSet::interval(0.0, f64::INFINITY).unwrap();
        let lin = custom("id", half.clone(), |x| x[0]);
        assert!(!check_supercoercive(&lin, &half, &radii, &VerifyOpts::new(16, 1)).unwrap().passed);
        let s = catalog("sin_quad", &Params::new()).unwrap().with_domain(full.clone());
        assert!(check_supercoercive(&s, &full, &radii, &VerifyOpts::new(16, 1)).unwrap().passed);
        let g = catalog("gauss_well", &Params::new()).unwrap();
        assert!(matches!(check_supercoercive(&g, g.domain(), &radii, &VerifyOpts::new(4, 1)), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn quadratic_growth_examples() {
        let h = catalog("euclid_norm", &Params::new().with("n", 2.0).with("gamma", 1.0)).unwrap();
        let o = VerifyOpts::new(1000, 4);
        assert!(check_quadratic_growth(&h, h.domain(), &Point::zeros(2), 1.0, &o).unwrap().passed);
        let off = check_quadratic_growth(&h, h.domain(), &pt(&[0.5, 0.0]), 1.0, &o).unwrap();
        assert!(!off.passed && !off.witnesses.is_empty());
        assert!(check_quadratic_growth(&h, h.domain(), &pt(&[3.0, 0.0]), 1.0, &o).is_err());
        let g = catalog("gauss_well", &Params::new()).unwrap();
        assert!(check_quadratic_growth(&g, g.domain(), &pt(&[0.0]), g.modulus(), &o).unwrap().passed);
    }

    #[test]
    fn foc_examples() {
        let s = catalog("sin_quad", &Params::new()).unwrap();
        let o = VerifyOpts::new(10_000, 6);
        assert!(check_foc(&s, s.domain(), s.modulus(), &o).unwrap().passed);
        // t ↦ t needs pairs farther apart than 2/γ = 20 to fail.
        let k = FeasibleSet::interval(0.0, 100.0).unwrap();
        let lin = custom("id", k.clone(), |x| x[0]).with_grad(|_| vec![1.0]);
        assert!(!check_foc(&lin, &k, 0.1, &o).unwrap().passed);
        let short = FeasibleSet::interval(0.0, 10.0).unwrap();
        assert!(check_foc(&lin, &short, 0.1, &o).unwrap().passed);
        assert!(check_foc(&s, s.domain(), 0.0, &o).unwrap().passed);
        let r = catalog("root_quartic", &Params::new()).unwrap();
        assert!(matches!(check_foc(&r, r.domain(), 0.1, &o), Err(Error::MissingGradient(_))));
    }

    #[test]
    fn pl_examples() {
        let k = FeasibleSet::interval(-5.0, 5.0).unwrap();
        let q = custom("half_sq", k.clone(), |x| 0.5 * x[0] * x[0]).with_grad(|x| vec![x[0]]).with_lip_grad(1.0);
        let o = VerifyOpts::new(1000, 7);
        assert!(check_pl(&q, &k, &pt(&[0.0]), 1.0, None, &o).unwrap().passed);
        let s = catalog("sin_quad", &Params::new()).unwrap();
        assert!(check_pl(&s, s.domain(), &pt(&[0.0]), s.modulus(), None, &o).unwrap().passed);
        assert!(!check_pl(&s, s.domain(), &pt(&[0.0]), 10.0, None, &o).unwrap().passed);
        let g = catalog("gauss_well", &Params::new()).unwrap().without_grad();
        assert!(check_pl(&g, g.domain(), &pt(&[0.0]), 0.3, None, &o).is_err());
    }

    #[test]
    fn cfz_examples() {
        let s = catalog("sin_quad", &Params::new()).unwrap();
        let o = VerifyOpts::new(500, 8);
        let out = check_cfz_at(&s, s.domain(), &pt(&[1.0]), 2.0, &o).unwrap();
        assert!(out.report.passed && out.report.samples > 0);
        assert_eq!(out.direction.unwrap(), pt(&[-1.0]));
        let at_min = check_cfz_at(&s, s.domain(), &pt(&[0.0]), 1.0, &o).unwrap();
        assert!(at_min.direction.is_none() && at_min.report.passed);
        // h(x) = x on [0, ∞): declaring γ = 4 gives α = 2/x̄ at x̄ = 1.
        let half = FeasibleSet::interval(0.0, f64::INFINITY).unwrap();
        let lin = Objective::new("id", half.clone(), 4.0, |x| x[0]).unwrap().with_grad(|_| vec![1.0]);
        let out = check_cfz_at(&lin, &half, &pt(&[1.0]), 0.5, &o).unwrap();
        assert_eq!(out.coefficient, Some(2.0));
        assert!(out.report.passed);
    }

    #[test]
    fn subdifferential_of_extended_inv_gap() {
        let h = catalog("inv_gap", &Params::new().with("extended", 1.0)).unwrap();
        let k = FeasibleSet::full(1).unwrap();
        let o = VerifyOpts::new(2000, 9).radius(2.0);
        assert!(subdiff_member(&h, &k, &pt(&[0.0]), &pt(&[-0.6]), 1.0, 1.0, &o).unwrap().passed);
        let rep = subdiff_member(&h, &k, &pt(&[0.0]), &pt(&[0.0]), 1.0, 1.0, &o).unwrap();
        assert!(!rep.passed && !rep.witnesses.is_empty());
        // The explicit witness y = 1, t = 1/4.
        let y1 = FeasibleSet::interval(1.0, 1.0).unwrap();
        assert!(!subdiff_member(&h, &y1, &pt(&[0.0]), &pt(&[0.0]), 1.0, 1.0, &VerifyOpts::new(1, 0)).unwrap().passed);
    }

    #[test]
    fn gradient_is_a_strong_subgradient() {
        let g = catalog("gauss_well", &Params::new()).unwrap();
        let o = VerifyOpts::new(500, 10);
        for x in [-0.7, 0.0, 0.4] {
            let xb = pt(&[x]);
            let z = g.gradient(&xb).unwrap();
            assert!(subdiff_member(&g, g.domain(), &xb, &z, 1.0, g.modulus(), &o).unwrap().passed);
        }
    }

    #[test]
    fn eta_examples() {
        let k = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let h = catalog("sin_quad", &Params::new().with("half_width", 1.0)).unwrap();
        let vg = Bifunction::value_gap(&h).unwrap();
        assert_eq!(estimate_eta(&vg, &k, &VerifyOpts::new(5000, 1)).unwrap().estimate, Some(0.0));
        let sq = Bifunction::new("sq", k.clone(), 1.0, 1.0, |x, y| (y[0] - x[0]).powi(2)).unwrap();
        let e = estimate_eta(&sq, &k, &VerifyOpts::new(5000, 1)).unwrap().estimate.unwrap();
        assert!(e > 0.0 && e <= 1.0 + 1e-12);
        assert!(check_a5(&sq, &k, &VerifyOpts::new(5000, 2)).unwrap().passed);
    }

    #[test]
    fn pseudomonotone_examples() {
        let k = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let o = VerifyOpts::new(2000, 3);
        let mono = Bifunction::new("lin", k.clone(), 0.0, 0.0, |x, y| {
            x.iter().zip(y).map(|(a, b)| a * (b - a)).sum()
        })
        .unwrap();
        assert!(check_pseudomonotone(&mono, &k, &o).unwrap().passed);
        let h = catalog("euclid_norm", &Params::new().with("n", 2.0)).unwrap();
        let vg = Bifunction::value_gap(&h).unwrap();
        assert!(check_pseudomonotone(&vg, &k, &o).unwrap().passed);
        assert!(check_a0(&vg, &k, &o).unwrap().passed);
        let shifted = Bifunction::new("shift", k.clone(), 0.0, 0.0, |x, y| {
            (y[0] * y[0] + y[1] * y[1]).sqrt() - (x[0] * x[0] + x[1] * x[1]).sqrt() + 1.0
        })
        .unwrap();
        assert!(!check_a0(&shifted, &k, &o).unwrap().passed);
        assert!(!check_pseudomonotone(&shifted, &k, &o).unwrap().passed);
    }

    #[test]
    fn gradient_checks() {
        let s = catalog("sin_quad", &Params::new()).unwrap();
        assert!(grad_check(&s, &[pt(&[0.0])]).unwrap().passed);
        let g = catalog("gauss_well", &Params::new()).unwrap();
        assert!(grad_check(&g, &[pt(&[0.3])]).unwrap().passed);
        let wrong = g.clone().with_grad(|x| vec![x[0]]);
        assert!(!grad_check(&wrong, &[pt(&[0.3])]).unwrap().passed);
    }
}
