//! Objective catalog, bifunctions, Bregman kernels and modulus-preserving
//! combinators.
//!
//! Catalog entries carry a declared modulus γ that is a lower bound for the
//! true strong-quasiconvexity modulus on the declared domain. Where no closed
//! form exists the value is a sampled estimate reduced by a safety margin.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, FeasibleSet, Point, SetSpec};
use crate::verify;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type BiEvalFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type BiGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Certified modulus of `t² + 3 sin² t`. The sampled infimum of the defining
/// ratio on [−10, 10] is about 0.6966, attained as t → 0 with x = −y ≈ 2.2467.
pub const SIN_QUAD_MODULUS: f64 = 0.65;
/// Certified modulus of `−t² − t` on [0, 1]; the ratio's infimum is 2.
pub const NEG_QUAD_MODULUS: f64 = 1.9;

/// A real function with a declared domain and strong-quasiconvexity modulus.
#[derive(Clone)]
pub struct Objective {
    name: String,
    domain: FeasibleSet,
    modulus: f64,
    eval: EvalFn,
    grad: Option<GradFn>,
    lip_grad: Option<f64>,
    known_min: Option<(Point, f64)>,
    discontinuous: bool,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("modulus", &self.modulus)
            .field("has_grad", &self.grad.is_some())
            .field("lip_grad", &self.lip_grad)
            .field("known_min", &self.known_min)
            .finish()
    }
}

impl Objective {
    pub fn new(
        name: impl Into<String>,
        domain: FeasibleSet,
        modulus: f64,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(modulus >= 0.0 && modulus.is_finite()) {
            return Err(Error::InvalidParams(format!("modulus must be finite and ≥ 0, got {modulus}")));
        }
        Ok(Objective {
            name: name.into(),
            domain,
            modulus,
            eval: Arc::new(eval),
            grad: None,
            lip_grad: None,
            known_min: None,
            discontinuous: false,
        })
    }

    pub fn with_grad(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_lip_grad(mut self, l: f64) -> Self {
        self.lip_grad = Some(l);
        self
    }

    pub fn with_known_min(mut self, x: Point, value: f64) -> Self {
        self.known_min = Some((x, value));
        self
    }

    pub fn with_domain(mut self, domain: FeasibleSet) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_modulus(mut self, modulus: f64) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn without_grad(mut self) -> Self {
        self.grad = None;
        self.lip_grad = None;
        self
    }

    fn mark_discontinuous(mut self) -> Self {
        self.discontinuous = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &FeasibleSet {
        &self.domain
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn lip_grad(&self) -> Option<f64> {
        self.lip_grad
    }

    pub fn known_min(&self) -> Option<&(Point, f64)> {
        self.known_min.as_ref()
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// True when the function is lower semicontinuous but not continuous.
    pub fn is_discontinuous(&self) -> bool {
        self.discontinuous
    }

    pub fn value(&self, x: &Point) -> f64 {
        (self.eval)(x.coords())
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &Point) -> Option<Point> {
        self.grad.as_ref().map(|g| Point::raw(g(x.coords())))
    }

    pub fn gradient_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }
}

/// One catalog parameter: a number, a vector or a matrix (list of rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Vec(Vec<f64>),
    Mat(Vec<Vec<f64>>),
}

/// Named catalog parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, ParamValue>);

impl Params {
    pub fn new() -> Self {
        Params(BTreeMap::new())
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.0.insert(key.to_string(), ParamValue::Num(v));
        self
    }

    pub fn with_vec(mut self, key: &str, v: Vec<f64>) -> Self {
        self.0.insert(key.to_string(), ParamValue::Vec(v));
        self
    }

    pub fn with_mat(mut self, key: &str, m: Vec<Vec<f64>>) -> Self {
        self.0.insert(key.to_string(), ParamValue::Mat(m));
        self
    }

    fn only(&self, entry: &str, allowed: &[&str]) -> Result<()> {
        for k in self.0.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::InvalidParams(format!(
                    "{entry}: unknown parameter `{k}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Num(v)) if v.is_finite() => Ok(*v),
            Some(v) => Err(Error::InvalidParams(format!("parameter `{key}` must be a finite number, got {v:?}"))),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.num(key, default as f64)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidParams(format!("parameter `{key}` must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn vector(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(ParamValue::Vec(v)) => Ok(Some(v.clone())),
            Some(ParamValue::Num(v)) => Ok(Some(vec![*v])),
            Some(ParamValue::Mat(m)) if m.len() == 1 => Ok(Some(m[0].clone())),
            Some(v) => Err(Error::InvalidParams(format!("parameter `{key}` must be a vector, got {v:?}"))),
        }
    }

    pub fn matrix(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(ParamValue::Mat(m)) => Ok(Some(m.clone())),
            Some(ParamValue::Num(v)) => Ok(Some(vec![vec![*v]])),
            Some(v) => Err(Error::InvalidParams(format!("parameter `{key}` must be a matrix, got {v:?}"))),
        }
    }
}

pub const CATALOG: [&str; 9] = [
    "abs_shift",
    "euclid_norm",
    "neg_quad",
    "gauss_well",
    "sin_quad",
    "inv_gap",
    "root_quartic",
    "power_norm",
    "quad_fractional",
];

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidParams(msg))
}

fn positive(entry: &str, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        invalid(format!("{entry}: `{key}` must be positive, got {v}"))
    }
}

/// Builds a catalog objective from its name and parameters.
///
/// | name | parameters (defaults) | domain | modulus |
/// |---|---|---|---|
/// | `abs_shift` | `a` (0), `gamma` (1) | [0, 1/γ] | γ |
/// | `euclid_norm` | `n` (2), `gamma` (1), `half_width` | ball(0, 1/γ) or a cube inside it | γ |
/// | `neg_quad` | none | [0, 1] | 1.9 (sampled) |
/// | `gauss_well` | `c` (1), `d` (1), `delta` (1) | [−δ, δ] | d·e^{−δ²} |
/// | `sin_quad` | `half_width` (5) | [−w, w] | 0.65 (sampled) |
/// | `inv_gap` | `extended` (0) | [0, 1], or ℝ with +∞ outside | 1 |
/// | `root_quartic` | `c` (1), `k` (0) | [−c, c] | 1/(2(c²+k²)^{3/4}) |
/// | `power_norm` | `n` (2), `alpha` (0.5), `half_width` (1) | [−w, w]ⁿ | 1/(80^{1/4}√r) for α = ½ |
/// | `quad_fractional` | `A`, `a`, `alpha`, `B`, `b`, `beta`, `lo`, `hi`, `m`, `M` | box | λ_min(A)/M |
pub fn catalog(name: &str, params: &Params) -> Result<Objective> {
    match name {
        "abs_shift" => abs_shift(params),
        "euclid_norm" => euclid_norm(params),
        "neg_quad" => neg_quad(params),
        "gauss_well" => gauss_well(params),
        "sin_quad" => sin_quad(params),
        "inv_gap" => inv_gap(params),
        "root_quartic" => root_quartic(params),
        "power_norm" => power_norm(params),
        "quad_fractional" => quad_fractional(params),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

fn abs_shift(p: &Params) -> Result<Objective> {
    p.only("abs_shift", &["a", "gamma"])?;
    let a = p.num("a", 0.0)?;
    let gamma = positive("abs_shift", "gamma", p.num("gamma", 1.0)?)?;
    let hi = 1.0 / gamma;
    let argmin = (-a).clamp(0.0, hi);
    Ok(Objective::new("abs_shift", FeasibleSet::interval(0.0, hi)?, gamma, move |x| (x[0] + a).abs())?
        .with_grad(move |x| vec![sign(x[0] + a)])
        .with_known_min(Point::raw(vec![argmin]), (argmin + a).abs()))
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn euclid_norm(p: &Params) -> Result<Objective> {
    p.only("euclid_norm", &["n", "gamma", "half_width"])?;
    let n = p.count("n", 2)?;
    let gamma = positive("euclid_norm", "gamma", p.num("gamma", 1.0)?)?;
    let domain = match p.0.get("half_width") {
        None => FeasibleSet::ball(vec![0.0; n], 1.0 / gamma)?,
        Some(_) => {
            let w = positive("euclid_norm", "half_width", p.num("half_width", 1.0)?)?;
            if w * (n as f64).sqrt() > 1.0 / gamma + 1e-12 {
                return invalid(format!(
                    "euclid_norm: cube of half-width {w} is not inside the ball of radius 1/γ = {}",
                    1.0 / gamma
                ));
            }
            FeasibleSet::cube(n, w)?
        }
    };
    Ok(Objective::new("euclid_norm", domain, gamma, norm)?
        .with_grad(|x| {
            let r = norm(x);
            if r == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|v| v / r).collect()
            }
        })
        .with_known_min(Point::zeros(n), 0.0))
}

fn neg_quad(p: &Params) -> Result<Objective> {
    p.only("neg_quad", &[])?;
    Ok(Objective::new("neg_quad", FeasibleSet::interval(0.0, 1.0)?, NEG_QUAD_MODULUS, |x| -x[0] * x[0] - x[0])?
        .with_grad(|x| vec![-2.0 * x[0] - 1.0])
        .with_lip_grad(2.0)
        .with_known_min(Point::raw(vec![1.0]), -2.0))
}

fn gauss_well(p: &Params) -> Result<Objective> {
    p.only("gauss_well", &["c", "d", "delta"])?;
    let c = p.num("c", 1.0)?;
    let d = positive("gauss_well", "d", p.num("d", 1.0)?)?;
    let delta = positive("gauss_well", "delta", p.num("delta", 1.0)?)?;
    let gamma = d * (-delta * delta).exp();
    Ok(Objective::new("gauss_well", FeasibleSet::interval(-delta, delta)?, gamma, move |x| {
        c - d * (-x[0] * x[0]).exp()
    })?
    .with_grad(move |x| vec![2.0 * d * x[0] * (-x[0] * x[0]).exp()])
    .with_lip_grad(2.0 * d)
    .with_known_min(Point::raw(vec![0.0]), c - d))
}

fn sin_quad(p: &Params) -> Result<Objective> {
    p.only("sin_quad", &["half_width"])?;
    let w = positive("sin_quad", "half_width", p.num("half_width", 5.0)?)?;
    Ok(Objective::new("sin_quad", FeasibleSet::interval(-w, w)?, SIN_QUAD_MODULUS, |x| {
        let s = x[0].sin();
        x[0] * x[0] + 3.0 * s * s
    })?
    .with_grad(|x| vec![2.0 * x[0] + 3.0 * (2.0 * x[0]).sin()])
    .with_lip_grad(8.0)
    .with_known_min(Point::raw(vec![0.0]), 0.0))
}

fn inv_gap(p: &Params) -> Result<Objective> {
    p.only("inv_gap", &["extended"])?;
    let extended = p.num("extended", 0.0)? != 0.0;
    let outside = if extended { f64::INFINITY } else { f64::NAN };
    let domain = if extended { FeasibleSet::full(1)? } else { FeasibleSet::interval(0.0, 1.0)? };
    let h = Objective::new("inv_gap", domain, 1.0, move |x| {
        let t = x[0];
        if t == 0.0 {
            0.0
        } else if t > 0.0 && t <= 1.0 {
            -1.0 / t
        } else {
            outside
        }
    })?;
    Ok(h.mark_discontinuous())
}

fn root_quartic(p: &Params) -> Result<Objective> {
    p.only("root_quartic", &["c", "k"])?;
    let c = positive("root_quartic", "c", p.num("c", 1.0)?)?;
    let k = p.num("k", 0.0)?;
    let k2 = k * k;
    let gamma = 1.0 / (2.0 * (c * c + k2).powf(0.75));
    let h = Objective::new("root_quartic", FeasibleSet::interval(-c, c)?, gamma, move |x| {
        (x[0] * x[0] + k2).powf(0.25)
    })?
    .with_known_min(Point::raw(vec![0.0]), k.abs().sqrt());
    if k == 0.0 {
        return Ok(h);
    }
    Ok(h.with_grad(move |x| vec![x[0] / (2.0 * (x[0] * x[0] + k2).powf(0.75))])
        .with_lip_grad(1.0 / (2.0 * k.abs().powf(1.5))))
}

fn power_norm(p: &Params) -> Result<Objective> {
    p.only("power_norm", &["n", "alpha", "half_width"])?;
    let n = p.count("n", 2)?;
    let alpha = p.num("alpha", 0.5)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("power_norm: alpha must lie in (0, 1), got {alpha}"));
    }
    let w = positive("power_norm", "half_width", p.num("half_width", 1.0)?)?;
    let domain = FeasibleSet::cube(n, w)?;
    let h = Objective::new("power_norm", domain.clone(), 0.0, move |x| norm(x).powf(alpha))?
        .with_grad(move |x| {
            let r = norm(x);
            if r == 0.0 {
                vec![0.0; x.len()]
            } else {
                let s = alpha * r.powf(alpha - 2.0);
                x.iter().map(|v| s * v).collect()
            }
        })
        .with_known_min(Point::zeros(n), 0.0);
    let gamma = if alpha == 0.5 {
        let r = w * (n as f64).sqrt();
        1.0 / (80f64.powf(0.25) * r.sqrt())
    } else {
        let est = verify::estimate_modulus(&h, &domain, &verify::VerifyOpts::new(20_000, 0x5eed))?;
        0.5 * est.estimate.unwrap_or(0.0)
    };
    Ok(h.with_modulus(gamma))
}

fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    SymmetricEigen::new(mat).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    SymmetricEigen::new(mat).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn quad_form(m: &[Vec<f64>], v: &[f64], x: &[f64], c: f64) -> f64 {
    let mut q = 0.0;
    for (i, row) in m.iter().enumerate() {
        q += x[i] * dot(row, x);
    }
    0.5 * q + dot(v, x) + c
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

fn square_symmetric(name: &str, m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return invalid(format!("quad_fractional: `{name}` must be {n}×{n}"));
    }
    for i in 0..n {
        for j in 0..n {
            if (m[i][j] - m[j][i]).abs() > 1e-12 || !m[i][j].is_finite() {
                return invalid(format!("quad_fractional: `{name}` must be finite and symmetric"));
            }
        }
    }
    Ok(())
}

fn quad_fractional(p: &Params) -> Result<Objective> {
    p.only("quad_fractional", &["A", "a", "alpha", "B", "b", "beta", "lo", "hi", "m", "M"])?;
    let a_mat = p.matrix("A")?.unwrap_or_else(|| vec![vec![2.0]]);
    let n = a_mat.len();
    let a_vec = p.vector("a")?.unwrap_or_else(|| vec![0.0; n]);
    let alpha = p.num("alpha", 0.0)?;
    let b_mat = p.matrix("B")?.unwrap_or_else(|| vec![vec![0.0; n]; n]);
    let b_vec = p.vector("b")?.unwrap_or_else(|| {
        let mut v = vec![0.0; n];
        v[0] = 0.5;
        v
    });
    let beta = p.num("beta", 1.0)?;
    let lo = p.vector("lo")?.unwrap_or_else(|| vec![0.0; n]);
    let hi = p.vector("hi")?.unwrap_or_else(|| vec![1.0; n]);
    let m_lo = p.num("m", 1.0)?;
    let m_hi = p.num("M", 1.5)?;
    square_symmetric("A", &a_mat, n)?;
    square_symmetric("B", &b_mat, n)?;
    if a_vec.len() != n || b_vec.len() != n || lo.len() != n || hi.len() != n {
        return invalid(format!("quad_fractional: vectors must have length {n}"));
    }
    let lam = min_eigenvalue(&a_mat);
    if lam <= 0.0 {
        return invalid(format!("quad_fractional: A must be positive definite (λ_min = {lam})"));
    }
    if !(0.0 < m_lo && m_lo < m_hi) {
        return invalid(format!("quad_fractional: need 0 < m < M, got m = {m_lo}, M = {m_hi}"));
    }
    let domain = FeasibleSet::boxed(lo, hi)?;
    if !domain.is_bounded() {
        return invalid("quad_fractional: box must be bounded".into());
    }
    let samples = domain.sample(0xf4ac, 1000, None)?;
    let den = |x: &[f64]| quad_form(&b_mat, &b_vec, x, beta);
    let num = |x: &[f64]| quad_form(&a_mat, &a_vec, x, alpha);
    for x in &samples {
        let d = den(x.coords());
        if d < m_lo - 1e-12 || d > m_hi + 1e-12 {
            return invalid(format!("quad_fractional: denominator {d} at {x} outside [m, M] = [{m_lo}, {m_hi}]"));
        }
    }
    let b_zero = b_mat.iter().flatten().all(|v| *v == 0.0);
    let case_b = max_eigenvalue(&b_mat) <= 1e-12 && samples.iter().all(|x| num(x.coords()) >= 0.0);
    let case_c = min_eigenvalue(&b_mat) >= -1e-12 && samples.iter().all(|x| num(x.coords()) <= 0.0);
    if !(b_zero || case_b || case_c) {
        return invalid("quad_fractional: none of the sign conditions (a) B = 0, (b) numerator ≥ 0 with B ⪯ 0, (c) numerator ≤ 0 with B ⪰ 0 holds".into());
    }
    let gamma = lam / m_hi;
    let zero_min = a_vec.iter().all(|v| *v == 0.0) && alpha == 0.0 && domain.contains(&Point::zeros(n), 0.0)?;
    let (am, av, bm, bv) = (a_mat.clone(), a_vec.clone(), b_mat.clone(), b_vec.clone());
    let (am2, av2, bm2, bv2) = (a_mat, a_vec, b_mat, b_vec);
    let h = Objective::new("quad_fractional", domain, gamma, move |x| {
        quad_form(&am, &av, x, alpha) / quad_form(&bm, &bv, x, beta)
    })?
    .with_grad(move |x| {
        let nv = quad_form(&am2, &av2, x, alpha);
        let dv = quad_form(&bm2, &bv2, x, beta);
        let gn: Vec<f64> = mat_vec(&am2, x).iter().zip(&av2).map(|(u, v)| u + v).collect();
        let gd: Vec<f64> = mat_vec(&bm2, x).iter().zip(&bv2).map(|(u, v)| u + v).collect();
        gn.iter().zip(&gd).map(|(u, v)| (u * dv - nv * v) / (dv * dv)).collect()
    });
    Ok(if zero_min { h.with_known_min(Point::zeros(n), 0.0) } else { h })
}

/// `κ·h` with modulus `κ·γ`.
pub fn combine_scale(h: &Objective, kappa: f64) -> Result<Objective> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("scale factor must be positive, got {kappa}"));
    }
    let e = h.eval.clone();
    let mut out = Objective::new(format!("{}*{kappa}", h.name), h.domain.clone(), kappa * h.modulus, move |x| {
        kappa * e(x)
    })?;
    if let Some(g) = h.grad.clone() {
        out = out.with_grad(move |x| g(x).into_iter().map(|v| kappa * v).collect());
    }
    out.lip_grad = h.lip_grad.map(|l| kappa * l);
    out.known_min = h.known_min.clone().map(|(x, v)| (x, kappa * v));
    out.discontinuous = h.discontinuous;
    Ok(out)
}

/// `h∘A` on `domain`, with modulus `γ·σ_min(A)²`.
///
/// `A` is given by rows and must be square and nonsingular. The image of
/// `domain` under `A` must stay inside the domain of `h`; this is checked on
/// the box corners (when `domain` is a box) and on 10³ samples.
pub fn combine_linear(h: &Objective, a: Vec<Vec<f64>>, domain: FeasibleSet) -> Result<Objective> {
    let n = h.dim();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return invalid(format!("linear map must be {n}×{n}"));
    }
    if domain.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: domain.dim() });
    }
    let mat = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let sv = mat.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if !(smin > 1e-12 * smax.max(1.0)) {
        return invalid(format!("linear map is singular (σ_min = {smin})"));
    }
    let mut probes = domain.sample(0x11aa, 1000, Some(1.0))?;
    if let SetSpec::Box { lo, hi } = domain.spec() {
        if domain.is_bounded() {
            for mask in 0..(1usize << n.min(12)) {
                let c = (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
                probes.push(Point::raw(c));
            }
        }
    }
    for x in &probes {
        let y = Point::raw(mat_vec(&a, x.coords()));
        if !h.domain.contains(&y, 1e-9)? {
            return Err(Error::OutsideDomain(format!("A·{x} = {y} leaves the domain {}", h.domain)));
        }
    }
    let e = h.eval.clone();
    let a1 = a.clone();
    let mut out = Objective::new(format!("{}∘A", h.name), domain.clone(), h.modulus * smin * smin, move |x| {
        e(&mat_vec(&a1, x))
    })?;
    if let Some(g) = h.grad.clone() {
        let a2 = a.clone();
        out = out.with_grad(move |x| {
            let gy = g(&mat_vec(&a2, x));
            (0..a2.len()).map(|j| a2.iter().zip(&gy).map(|(row, gi)| row[j] * gi).sum()).collect()
        });
        out.lip_grad = h.lip_grad.map(|l| l * smax * smax);
    }
    if let Some((xbar, v)) = &h.known_min {
        if let Some(inv) = mat.try_inverse() {
            let pre: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * xbar[j]).sum()).collect();
            let pre = Point::raw(pre);
            if domain.contains(&pre, 1e-12)? {
                out.known_min = Some((pre, *v));
            }
        }
    }
    out.discontinuous = h.discontinuous;
    Ok(out)
}

/// Pointwise maximum, with modulus equal to the smallest modulus.
pub fn combine_max(hs: &[Objective]) -> Result<Objective> {
    let first = hs.first().ok_or_else(|| Error::InvalidParams("combine_max needs at least one objective".into()))?;
    if hs.len() == 1 {
        return Ok(first.clone());
    }
    for h in &hs[1..] {
        if h.domain != first.domain {
            return invalid(format!("combine_max: domains of {} and {} differ", first.name, h.name));
        }
    }
    let evals: Vec<EvalFn> = hs.iter().map(|h| h.eval.clone()).collect();
    let names: Vec<&str> = hs.iter().map(|h| h.name.as_str()).collect();
    let gamma = hs.iter().map(|h| h.modulus).fold(f64::INFINITY, f64::min);
    let e2 = evals.clone();
    let mut out = Objective::new(format!("max({})", names.join(",")), first.domain.clone(), gamma, move |x| {
        e2.iter().map(|e| e(x)).fold(f64::NEG_INFINITY, f64::max)
    })?;
    if hs.iter().all(|h| h.grad.is_some()) {
        let grads: Vec<GradFn> = hs.iter().map(|h| h.grad.clone().unwrap()).collect();
        out = out.with_grad(move |x| {
            let mut best = 0;
            let mut bv = f64::NEG_INFINITY;
            for (i, e) in evals.iter().enumerate() {
                let v = e(x);
                if v > bv {
                    bv = v;
                    best = i;
                }
            }
            grads[best](x)
        });
    }
    out.discontinuous = hs.iter().any(|h| h.discontinuous);
    Ok(out)
}

/// A bifunction `f(x, y)` with modulus γ for `f(x, ·)` and constant η of the
/// Lipschitz-type condition `f(x,z) − f(x,y) − f(y,z) ≤ η(‖x−y‖² + ‖y−z‖²)`.
#[derive(Clone)]
pub struct Bifunction {
    name: String,
    domain: FeasibleSet,
    modulus: f64,
    eta: f64,
    eval: BiEvalFn,
    partial_grad_y: Option<BiGradFn>,
    value_gap_of: Option<Objective>,
}

impl fmt::Debug for Bifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bifunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("modulus", &self.modulus)
            .field("eta", &self.eta)
            .finish()
    }
}

impl Bifunction {
    pub fn new(
        name: impl Into<String>,
        domain: FeasibleSet,
        modulus: f64,
        eta: f64,
        eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(modulus >= 0.0 && eta >= 0.0 && modulus.is_finite() && eta.is_finite()) {
            return invalid(format!("bifunction needs finite γ ≥ 0 and η ≥ 0, got γ = {modulus}, η = {eta}"));
        }
        Ok(Bifunction {
            name: name.into(),
            domain,
            modulus,
            eta,
            eval: Arc::new(eval),
            partial_grad_y: None,
            value_gap_of: None,
        })
    }

    pub fn with_partial_grad(mut self, g: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.partial_grad_y = Some(Arc::new(g));
        self
    }

    /// `f(x, y) = h(y) − h(x)`, so that the equilibrium problem is the
    /// minimization of `h`. γ is the modulus of `h` and η = 0.
    pub fn value_gap(h: &Objective) -> Result<Self> {
        let e = h.eval.clone();
        let mut f = Bifunction::new(format!("value_gap({})", h.name), h.domain.clone(), h.modulus, 0.0, move |x, y| {
            e(y) - e(x)
        })?;
        if let Some(g) = h.grad.clone() {
            f = f.with_partial_grad(move |_x, y| g(y));
        }
        f.value_gap_of = Some(h.clone());
        Ok(f)
    }

    /// `f(x,y) = p(g(y) − g(x)) + xᵀ(y − x)` with
    /// `g(y) = max{√‖y‖, ‖y − q·e‖² − q}` on `domain`.
    ///
    /// γ and η are estimated by sampling; γ is reduced by 10% and η raised by
    /// 5% so that the declared values are conservative.
    pub fn glt_example(p: f64, q: f64, domain: FeasibleSet) -> Result<Self> {
        if !(p > 1.0 && q > 1.0) {
            return invalid(format!("glt_example needs p, q > 1, got p = {p}, q = {q}"));
        }
        if !domain.is_bounded() {
            return Err(Error::Unbounded("glt_example needs a bounded domain for its estimates".into()));
        }
        let g = move |y: &[f64]| {
            let sh: f64 = y.iter().map(|v| (v - q) * (v - q)).sum();
            norm(y).sqrt().max(sh - q)
        };
        let mut f = Bifunction::new(format!("glt_example(p={p},q={q})"), domain.clone(), 0.0, 0.0, move |x, y| {
            p * (g(y) - g(x)) + dot(x, y) - dot(x, x)
        })?
        .with_partial_grad(move |x, y| {
            let r = norm(y);
            let sh: f64 = y.iter().map(|v| (v - q) * (v - q)).sum();
            let quad_active = sh - q > r.sqrt();
            y.iter()
                .zip(x)
                .map(|(yi, xi)| {
                    let gi = if quad_active {
                        2.0 * (yi - q)
                    } else if r > 0.0 {
                        yi / (2.0 * r.powf(1.5))
                    } else {
                        0.0
                    };
                    p * gi + xi
                })
                .collect()
        });
        let opts = verify::VerifyOpts::new(40_000, 0x617);
        let gamma = verify::estimate_bifunction_modulus(&f, &domain, &opts)?.estimate.unwrap_or(0.0);
        let eta = verify::estimate_eta(&f, &domain, &opts)?.estimate.unwrap_or(0.0);
        f.modulus = 0.9 * gamma;
        f.eta = 1.05 * eta;
        Ok(f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &FeasibleSet {
        &self.domain
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn value(&self, x: &Point, y: &Point) -> f64 {
        (self.eval)(x.coords(), y.coords())
    }

    pub fn value_at(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.eval)(x, y)
    }

    pub fn has_partial_grad(&self) -> bool {
        self.partial_grad_y.is_some()
    }

    /// `∇_y f(x, y)` when available.
    pub fn partial_grad(&self, x: &Point, y: &Point) -> Option<Point> {
        self.partial_grad_y.as_ref().map(|g| Point::raw(g(x.coords(), y.coords())))
    }

    /// The objective `h` when this is `value_gap(h)`.
    pub fn value_gap_objective(&self) -> Option<&Objective> {
        self.value_gap_of.as_ref()
    }

    /// `y ↦ f(x, y)` as an objective on the same domain with modulus γ.
    pub fn section(&self, x: &Point) -> Result<Objective> {
        let e = self.eval.clone();
        let xc = x.coords().to_vec();
        let mut h = Objective::new(format!("{}(x,·)", self.name), self.domain.clone(), self.modulus, move |y| e(&xc, y))?;
        if let Some(g) = self.partial_grad_y.clone() {
            let xc = x.coords().to_vec();
            h = h.with_grad(move |y| g(&xc, y));
        }
        Ok(h)
    }
}

/// Builds a bifunction by name. `value_gap` needs the objective `h`.
pub fn bifunction_catalog(name: &str, params: &Params, h: Option<&Objective>) -> Result<Bifunction> {
    match name {
        "value_gap" => {
            params.only("value_gap", &[])?;
            let h = h.ok_or_else(|| Error::InvalidParams("value_gap needs an objective".into()))?;
            Bifunction::value_gap(h)
        }
        "glt_example" => {
            params.only("glt_example", &["p", "q", "n", "lo", "hi"])?;
            let p = params.num("p", 2.0)?;
            let q = params.num("q", 2.0)?;
            let n = params.count("n", 1)?;
            let lo = params.vector("lo")?.unwrap_or_else(|| vec![0.0; n]);
            let hi = params.vector("hi")?.unwrap_or_else(|| vec![4.0; n]);
            Bifunction::glt_example(p, q, FeasibleSet::boxed(lo, hi)?)
        }
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// Zone of a Bregman kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum Zone {
    Whole,
    /// The open set `{x : x_i > bound for all i}`.
    Above(f64),
}

#[derive(Clone, Debug, PartialEq)]
enum Kernel {
    HalfSqNorm,
    NegEntropy { shift: f64 },
}

/// A Bregman kernel φ with its zone and analytic gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct BregmanFunction {
    name: String,
    kernel: Kernel,
}

impl BregmanFunction {
    pub fn half_sq_norm() -> Self {
        BregmanFunction { name: "half_sq_norm".into(), kernel: Kernel::HalfSqNorm }
    }

    /// `φ(x) = Σ (x_i + s) ln(x_i + s)` on the zone `x_i > −s`.
    pub fn neg_entropy_shifted(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return invalid(format!("entropy shift must be finite, got {shift}"));
        }
        Ok(BregmanFunction { name: "neg_entropy".into(), kernel: Kernel::NegEntropy { shift } })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn zone(&self) -> Zone {
        match self.kernel {
            Kernel::HalfSqNorm => Zone::Whole,
            Kernel::NegEntropy { shift } => Zone::Above(-shift),
        }
    }

    pub fn is_half_sq_norm(&self) -> bool {
        self.kernel == Kernel::HalfSqNorm
    }

    pub fn in_zone(&self, x: &[f64]) -> bool {
        match self.zone() {
            Zone::Whole => true,
            Zone::Above(b) => x.iter().all(|v| *v > b),
        }
    }

    pub fn in_closed_zone(&self, x: &[f64]) -> bool {
        match self.zone() {
            Zone::Whole => true,
            Zone::Above(b) => x.iter().all(|v| *v >= b),
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        match self.kernel {
            Kernel::HalfSqNorm => 0.5 * dot(x, x),
            Kernel::NegEntropy { shift } => x.iter().map(|v| xlogx(v + shift)).sum(),
        }
    }

    pub fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        match self.kernel {
            Kernel::HalfSqNorm => x.to_vec(),
            Kernel::NegEntropy { shift } => x.iter().map(|v| (v + shift).ln() + 1.0).collect(),
        }
    }

    /// `D(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩`, evaluated in a cancellation
    /// free form for both kernels.
    pub fn divergence(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kernel {
            Kernel::HalfSqNorm => 0.5 * crate::geometry::dist_sq(x, y),
            Kernel::NegEntropy { shift } => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let (u, v) = (a + shift, b + shift);
                    let t = if u == 0.0 { 0.0 } else { u * (u / v).ln() };
                    t - u + v
                })
                .sum(),
        }
    }
}

fn xlogx(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.ln()
    }
}

/// Bregman kernel by name: `half_sq_norm` or `neg_entropy`.
pub fn bregman_catalog(name: &str) -> Result<BregmanFunction> {
    match name {
        "half_sq_norm" => Ok(BregmanFunction::half_sq_norm()),
        "neg_entropy" => BregmanFunction::neg_entropy_shifted(0.0),
        other => Err(Error::UnknownName(other.to_string())),
    }
}
