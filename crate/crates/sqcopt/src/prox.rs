//! Multistart global minimization and the Euclidean and Bregman proximity
//! operators built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{BregmanFunction, Objective, Zone};
use crate::geometry::{FeasibleSet, Point, SetSpec};

/// Tuning of the multistart search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalSolveConfig {
    /// Number of seeds refined by local descent.
    pub n_starts: usize,
    /// Seeding grid points per axis for dimensions 1 and 2; 0 picks 10001
    /// in 1D and 101 in 2D.
    pub grid_density: usize,
    /// Final compass step (and projected-gradient step norm) at which a local
    /// solve stops.
    pub local_tol: f64,
    pub max_local_iters: usize,
    /// Half-width of the search box used when the feasible set is unbounded.
    pub search_radius: Option<f64>,
    /// Number of low-discrepancy seeds in dimension 3 and above.
    pub halton_points: usize,
}

impl Default for GlobalSolveConfig {
    fn default() -> Self {
        GlobalSolveConfig {
            n_starts: 64,
            grid_density: 0,
            local_tol: 1e-10,
            max_local_iters: 5000,
            search_radius: None,
            halton_points: 4096,
        }
    }
}

impl GlobalSolveConfig {
    pub fn with_radius(mut self, r: f64) -> Self {
        self.search_radius = Some(r);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidParams("n_starts must be at least 1".into()));
        }
        if !(self.local_tol > 0.0) {
            return Err(Error::InvalidParams(format!("local_tol must be positive, got {}", self.local_tol)));
        }
        if let Some(r) = self.search_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParams(format!("search radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Output of [`global_min`], [`prox`] and [`bregman_prox`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProxResult {
    pub point: Point,
    /// Subproblem objective at `point`.
    pub value: f64,
    /// `‖point − x‖` for prox operators, 0 for plain minimization.
    pub residual: f64,
    /// Distinct near-optimal points, best first; the first entry equals `point`
    /// only when there is no tie.
    pub candidates: Vec<Point>,
    /// Objective evaluations spent.
    pub evals: usize,
}

type Eval<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;
type Grad<'a> = dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a;

/// The search region in parameter space. Affine sets are searched in the
/// coordinates of their orthonormal basis.
enum Chart {
    Direct(FeasibleSet),
    Affine { basis: Vec<Vec<f64>>, offset: Vec<f64>, param: FeasibleSet },
}

impl Chart {
    fn param_set(&self) -> &FeasibleSet {
        match self {
            Chart::Direct(s) => s,
            Chart::Affine { param, .. } => param,
        }
    }

    fn to_x(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Chart::Direct(_) => u.to_vec(),
            Chart::Affine { basis, offset, .. } => {
                let mut x = offset.clone();
                for (c, col) in u.iter().zip(basis) {
                    for (o, b) in x.iter_mut().zip(col) {
                        *o += c * b;
                    }
                }
                x
            }
        }
    }

    fn to_u(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Chart::Direct(_) => x.to_vec(),
            Chart::Affine { basis, offset, .. } => basis
                .iter()
                .map(|col| col.iter().zip(x).zip(offset).map(|((b, xi), o)| b * (xi - o)).sum())
                .collect(),
        }
    }

    fn grad_u(&self, g: Vec<f64>) -> Vec<f64> {
        match self {
            Chart::Direct(_) => g,
            Chart::Affine { basis, .. } => basis.iter().map(|col| col.iter().zip(&g).map(|(b, v)| b * v).sum()).collect(),
        }
    }

    fn project(&self, u: &[f64]) -> Vec<f64> {
        let p = self.param_set().project(&Point::raw(u.to_vec()));
        p.map(Point::into_vec).unwrap_or_else(|_| u.to_vec())
    }
}

fn bounded_box(lo: &[f64], hi: &[f64], center: &[f64], r: Option<f64>, floor: Option<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut l = lo.to_vec();
    let mut h = hi.to_vec();
    for i in 0..l.len() {
        if let Some(b) = floor {
            l[i] = l[i].max(b);
        }
        if !l[i].is_finite() || !h[i].is_finite() {
            let r = r.ok_or_else(|| Error::Unbounded("global search over an unbounded set needs search_radius".into()))?;
            let c = center[i].clamp(l[i], h[i]);
            if !l[i].is_finite() {
                l[i] = (c - r).min(h[i]);
            }
            if !h[i].is_finite() {
                h[i] = (c + r).max(l[i]);
            }
        }
        if l[i] > h[i] {
            return Err(Error::InvalidSet("search region is empty".into()));
        }
    }
    Ok((l, h))
}

/// Builds the bounded region searched for minimizers of a subproblem on `k`
/// around `center`, optionally intersected with `{x_i ≥ floor}`.
fn chart(k: &FeasibleSet, center: &[f64], radius: Option<f64>, floor: Option<f64>) -> Result<Chart> {
    let n = k.dim();
    let floors = |dim: usize| -> Vec<(Vec<f64>, f64)> {
        match floor {
            None => Vec::new(),
            Some(b) => (0..dim)
                .map(|i| {
                    let mut a = vec![0.0; dim];
                    a[i] = -1.0;
                    (a, -b)
                })
                .collect(),
        }
    };
    match k.spec() {
        SetSpec::FullSpace { .. } => {
            let (l, h) = bounded_box(&vec![f64::NEG_INFINITY; n], &vec![f64::INFINITY; n], center, radius, floor)?;
            Ok(Chart::Direct(FeasibleSet::boxed(l, h)?))
        }
        SetSpec::Box { lo, hi } => {
            let (l, h) = bounded_box(lo, hi, center, radius, floor)?;
            Ok(Chart::Direct(FeasibleSet::boxed(l, h)?))
        }
        SetSpec::Ball { center: c, radius: r } => {
            if floor.is_none() {
                return Ok(Chart::Direct(k.clone()));
            }
            let lo: Vec<f64> = c.iter().map(|v| v - r).collect();
            let hi: Vec<f64> = c.iter().map(|v| v + r).collect();
            if lo.iter().zip(&hi).any(|(_, h)| *h < floor.unwrap()) {
                return Err(Error::InvalidSet("set does not meet the closed zone".into()));
            }
            // Ball ∩ lower bounds as halfspaces is not representable; the ball
            // is kept and the zone is enforced by the penalty being +∞.
            Ok(Chart::Direct(k.clone()))
        }
        SetSpec::Halfspaces { dim, normals, bounds } => {
            let mut cons: Vec<(Vec<f64>, f64)> = normals.iter().cloned().zip(bounds.iter().cloned()).collect();
            cons.extend(floors(*dim));
            if !k.is_bounded() {
                let r = radius.ok_or_else(|| Error::Unbounded("global search over an unbounded set needs search_radius".into()))?;
                for i in 0..*dim {
                    let mut a = vec![0.0; *dim];
                    a[i] = 1.0;
                    cons.push((a.clone(), center[i] + r));
                    a[i] = -1.0;
                    cons.push((a, -(center[i] - r)));
                }
            }
            Ok(Chart::Direct(FeasibleSet::halfspaces(*dim, cons)?))
        }
        SetSpec::Affine { basis, offset } => {
            if floor.is_some() {
                return Err(Error::InvalidSet("Bregman zones on affine sets are not supported".into()));
            }
            let r = radius.ok_or_else(|| Error::Unbounded("global search over an affine set needs search_radius".into()))?;
            let m = basis.len();
            let tmp = Chart::Affine { basis: basis.clone(), offset: offset.clone(), param: FeasibleSet::full(m.max(1))? };
            let uc = tmp.to_u(center);
            if m == 0 {
                return Ok(Chart::Affine { basis: basis.clone(), offset: offset.clone(), param: FeasibleSet::boxed(vec![0.0], vec![0.0])? });
            }
            let lo = uc.iter().map(|c| c - r).collect();
            let hi = uc.iter().map(|c| c + r).collect();
            Ok(Chart::Affine { basis: basis.clone(), offset: offset.clone(), param: FeasibleSet::boxed(lo, hi)? })
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().all(|p| !c.is_multiple_of(*p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Unit-interval coordinate `s` mapped to `[lo, hi]` so that the endpoints
/// and the midpoint of a symmetric odd grid are hit exactly.
fn lerp(lo: f64, hi: f64, s: f64) -> f64 {
    if s == 0.5 {
        0.5 * lo + 0.5 * hi
    } else {
        lo * (1.0 - s) + hi * s
    }
}

fn seeds(set: &FeasibleSet, cfg: &GlobalSolveConfig) -> (Vec<Vec<f64>>, f64) {
    let (lo, hi) = set.bounding_box();
    let n = lo.len();
    let diam = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0f64, f64::max);
    let mut pts = Vec::new();
    let spacing;
    match n {
        1 | 2 => {
            let g = if cfg.grid_density > 0 { cfg.grid_density } else if n == 1 { 10_001 } else { 101 };
            let g = g.max(2);
            let axis = |i: usize, j: usize| lerp(lo[i], hi[i], j as f64 / (g - 1) as f64);
            if n == 1 {
                pts.extend((0..g).map(|j| vec![axis(0, j)]));
            } else {
                for a in 0..g {
                    for b in 0..g {
                        pts.push(vec![axis(0, a), axis(1, b)]);
                    }
                }
            }
            spacing = diam / (g - 1) as f64;
        }
        _ => {
            let ps = primes(n);
            let m = cfg.halton_points.max(1);
            for i in 1..=m as u64 {
                pts.push((0..n).map(|d| lerp(lo[d], hi[d], radical_inverse(i, ps[d]))).collect());
            }
            spacing = diam / (m as f64).powf(1.0 / n as f64);
        }
    }
    if !matches!(set.spec(), SetSpec::Box { .. }) {
        for p in &mut pts {
            *p = set.project(&Point::raw(p.clone())).map(Point::into_vec).unwrap_or_else(|_| p.clone());
        }
    }
    (pts, spacing)
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

struct Local {
    u: Vec<f64>,
    value: f64,
    evals: usize,
}

fn refine(f: &Eval, grad: Option<&Grad>, chart: &Chart, start: &[f64], f0: f64, step0: f64, cfg: &GlobalSolveConfig) -> Local {
    let mut u = start.to_vec();
    let mut fu = f0;
    let mut evals = 0;
    let eval = |u: &[f64], evals: &mut usize| {
        *evals += 1;
        finite_or_inf(f(&chart.to_x(u)))
    };
    let mut iters = 0;
    if let Some(g) = grad {
        let mut s = 1.0;
        while iters < cfg.max_local_iters && fu.is_finite() {
            iters += 1;
            let gu = chart.grad_u(g(&chart.to_x(&u)));
            if gu.iter().any(|v| !v.is_finite()) {
                break;
            }
            s *= 2.0;
            let mut moved = false;
            let mut small = false;
            while s > 1e-20 {
                let trial = chart.project(&u.iter().zip(&gu).map(|(a, b)| a - s * b).collect::<Vec<_>>());
                let d2 = crate::geometry::dist_sq(&trial, &u);
                if d2.sqrt() <= cfg.local_tol {
                    small = true;
                    break;
                }
                let ft = eval(&trial, &mut evals);
                if ft <= fu - 1e-4 / s * d2 {
                    u = trial;
                    fu = ft;
                    moved = true;
                    break;
                }
                s *= 0.5;
            }
            if small || !moved {
                break;
            }
        }
    }
    let mut h = step0;
    let dim = u.len();
    while h >= cfg.local_tol && iters < cfg.max_local_iters {
        iters += 1;
        let mut improved = false;
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut t = u.clone();
                t[i] += sign * h;
                let t = chart.project(&t);
                if t == u {
                    continue;
                }
                let ft = eval(&t, &mut evals);
                if ft < fu {
                    u = t;
                    fu = ft;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Local { u, value: fu, evals }
}

/// Multistart minimization of `f` over the chart; `priority` seeds are tried
/// first and win exact ties.
fn multistart(f: &Eval, grad: Option<&Grad>, chart: &Chart, priority: &[Vec<f64>], cfg: &GlobalSolveConfig) -> Result<(Vec<(Vec<f64>, f64)>, usize)> {
    cfg.validate()?;
    let set = chart.param_set();
    let (grid, spacing) = seeds(set, cfg);
    let mut all: Vec<Vec<f64>> = priority.iter().map(|x| chart.project(&chart.to_u(x))).collect();
    let n_pri = all.len();
    all.extend(grid);
    let vals: Vec<f64> = all.iter().map(|u| finite_or_inf(f(&chart.to_x(u)))).collect();
    let mut evals = vals.len();
    let mut order: Vec<usize> = (n_pri..all.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = (0..n_pri).collect();
    let sep = 2.0 * spacing;
    for &i in &order {
        if chosen.len() >= cfg.n_starts + n_pri {
            break;
        }
        let far = chosen.iter().all(|&j| all[i].iter().zip(&all[j]).any(|(a, b)| (a - b).abs() > sep));
        if far {
            chosen.push(i);
        }
    }
    let step0 = spacing.max(cfg.local_tol);
    let locals: Vec<Local> = chosen.par_iter().map(|&i| refine(f, grad, chart, &all[i], vals[i], step0, cfg)).collect();
    evals += locals.iter().map(|l| l.evals).sum::<usize>();
    let found: Vec<(Vec<f64>, f64)> = locals.into_iter().map(|l| (l.u, l.value)).collect();
    if found.iter().all(|(_, v)| !v.is_finite()) {
        return Err(Error::Solver("every local solve ended at a non-finite value".into()));
    }
    Ok((found, evals))
}

/// Clusters refined points and assembles the result in the original space.
fn assemble(f: &Eval, k: &FeasibleSet, chart: &Chart, found: Vec<(Vec<f64>, f64)>, evals: usize, center: Option<&Point>) -> Result<ProxResult> {
    let mut pts: Vec<(Point, f64, usize)> = Vec::with_capacity(found.len());
    let mut extra = 0;
    for (i, (u, _)) in found.into_iter().enumerate() {
        let x = k.project(&Point::raw(chart.to_x(&u)))?;
        let v = finite_or_inf(f(x.coords()));
        extra += 1;
        pts.push((x, v, i));
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    let mut reps: Vec<(Point, f64)> = Vec::new();
    for (x, v, _) in pts {
        if reps.iter().all(|(r, _)| r.dist(&x) > 1e-6) {
            reps.push((x, v));
        }
    }
    let best = reps[0].1;
    let tol = 1e-8 * (1.0 + best.abs());
    let near: Vec<(Point, f64)> = reps.into_iter().filter(|(_, v)| *v <= best + tol).collect();
    let (point, value) = near
        .iter()
        .min_by(|a, b| a.0.lex_cmp(&b.0))
        .map(|(p, v)| (p.clone(), *v))
        .unwrap();
    let residual = center.map_or(0.0, |c| point.dist(c));
    Ok(ProxResult { point, value, residual, candidates: near.into_iter().map(|(p, _)| p).collect(), evals: evals + extra })
}

/// Global minimum of `h` over `k` by multistart local descent.
pub fn global_min(h: &Objective, k: &FeasibleSet, cfg: &GlobalSolveConfig) -> Result<ProxResult> {
    if h.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: k.dim() });
    }
    let origin = k.project(&Point::zeros(k.dim())).map(Point::into_vec).unwrap_or_else(|_| vec![0.0; k.dim()]);
    let chart = chart(k, &origin, cfg.search_radius, None)?;
    let f = |x: &[f64]| h.value_at(x);
    let g = |x: &[f64]| h.gradient_at(x).unwrap();
    let grad: Option<&Grad> = if h.has_grad() { Some(&g) } else { None };
    let (found, evals) = multistart(&f, grad, &chart, &[origin], cfg)?;
    assemble(&f, k, &chart, found, evals, None)
}

fn check_point(k: &FeasibleSet, beta: f64, x: &Point) -> Result<()> {
    if x.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: x.dim() });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("prox center {x}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!("β must be positive, got {beta}")));
    }
    Ok(())
}

/// `prox_{βh}(K, x)`: global minimizers of `h(y) + ‖y − x‖²/(2β)` over `K`.
pub fn prox(h: &Objective, k: &FeasibleSet, beta: f64, x: &Point, cfg: &GlobalSolveConfig) -> Result<ProxResult> {
    check_point(k, beta, x)?;
    if h.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: k.dim() });
    }
    let xc = x.coords();
    let f = |y: &[f64]| h.value_at(y) + crate::geometry::dist_sq(y, xc) / (2.0 * beta);
    let g = |y: &[f64]| {
        let mut d = h.gradient_at(y).unwrap();
        for ((d, a), b) in d.iter_mut().zip(y).zip(xc) {
            *d += (a - b) / beta;
        }
        d
    };
    let grad: Option<&Grad> = if h.has_grad() { Some(&g) } else { None };
    let px = k.project(x)?;
    let chart = chart(k, px.coords(), cfg.search_radius, None)?;
    let (found, evals) = multistart(&f, grad, &chart, &[px.into_vec()], cfg)?;
    assemble(&f, k, &chart, found, evals, Some(x))
}

/// `min ‖c − x‖` over the prox candidates at `x`; zero exactly at fixed
/// points, which are the minimizers of `h` on `K`.
pub fn prox_fixed_point_residual(h: &Objective, k: &FeasibleSet, beta: f64, x: &Point, cfg: &GlobalSolveConfig) -> Result<f64> {
    let r = prox(h, k, beta, x, cfg)?;
    Ok(r.candidates.iter().map(|c| c.dist(x)).fold(r.residual, f64::min))
}

/// Bregman proximity operator: minimizers of `h(y) + D_φ(y, x)/β` over
/// `K ∩ cl S`. With the half squared norm kernel this is [`prox`].
pub fn bregman_prox(
    h: &Objective,
    k: &FeasibleSet,
    phi: &BregmanFunction,
    beta: f64,
    x: &Point,
    cfg: &GlobalSolveConfig,
) -> Result<ProxResult> {
    check_point(k, beta, x)?;
    if !phi.in_zone(x.coords()) {
        return Err(Error::OutsideDomain(format!("{x} is outside the zone of {}", phi.name())));
    }
    if phi.is_half_sq_norm() {
        return prox(h, k, beta, x, cfg);
    }
    let floor = match phi.zone() {
        Zone::Whole => None,
        Zone::Above(b) => Some(b),
    };
    let xc = x.coords();
    let f = |y: &[f64]| {
        if !phi.in_closed_zone(y) {
            return f64::INFINITY;
        }
        h.value_at(y) + phi.divergence(y, xc) / beta
    };
    let gx = phi.grad_phi(xc);
    let g = |y: &[f64]| {
        let mut d = h.gradient_at(y).unwrap();
        for ((d, a), b) in d.iter_mut().zip(phi.grad_phi(y)).zip(&gx) {
            *d += (a - b) / beta;
        }
        d
    };
    let grad: Option<&Grad> = if h.has_grad() { Some(&g) } else { None };
    let mut px = k.project(x)?;
    if !phi.in_closed_zone(px.coords()) {
        px = Point::raw(px.coords().iter().map(|v| v.max(floor.unwrap_or(*v))).collect());
    }
    let chart = chart(k, px.coords(), cfg.search_radius, floor)?;
    let (found, evals) = multistart(&f, grad, &chart, &[px.into_vec()], cfg)?;
    let out = assemble(&f, k, &chart, found, evals, Some(x))?;
    if !out.value.is_finite() {
        return Err(Error::InvalidSet("feasible set does not meet the closed zone".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{catalog, Params};
    use crate::geometry::rng;
    use rand::Rng as _;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn cfg() -> GlobalSolveConfig {
        GlobalSolveConfig::default()
    }

    #[test]
    fn sin_quad_global_min_is_origin() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let r = global_min(&h, h.domain(), &cfg()).unwrap();
        assert!(r.point[0].abs() <= 1e-6 && r.value.abs() <= 1e-10, "{r:?}");
    }

    #[test]
    fn power_norm_in_the_square() {
        let h = catalog("power_norm", &Params::new().with("n", 2.0).with("alpha", 0.5).with("half_width", 1.0)).unwrap();
        let r = global_min(&h, h.domain(), &cfg()).unwrap();
        assert!(r.point.norm() <= 1e-6, "{r:?}");
    }

    #[test]
    fn unbounded_search_needs_radius() {
        let h = Objective::new("q", FeasibleSet::full(1).unwrap(), 1.0, |x| 0.5 * x[0] * x[0]).unwrap();
        assert!(matches!(global_min(&h, h.domain(), &cfg()), Err(Error::Unbounded(_))));
        assert!(prox(&h, h.domain(), 1.0, &pt(&[3.0]), &cfg().with_radius(10.0)).is_ok());
    }

    #[test]
    fn closed_form_proxes() {
        let full = FeasibleSet::full(1).unwrap();
        let q = Objective::new("q", full.clone(), 1.0, |x| 0.5 * x[0] * x[0]).unwrap().with_grad(|x| vec![x[0]]);
        let r = prox(&q, &full, 1.0, &pt(&[3.0]), &cfg().with_radius(10.0)).unwrap();
        assert!((r.point[0] - 1.5).abs() <= 1e-8, "{r:?}");
        assert!((r.residual - 1.5).abs() <= 1e-8);
        let a = Objective::new("abs", full.clone(), 0.0, |x| x[0].abs()).unwrap();
        let r = prox(&a, &full, 1.0, &pt(&[3.0]), &cfg().with_radius(10.0)).unwrap();
        assert!((r.point[0] - 2.0).abs() <= 1e-8, "{r:?}");
        let n = catalog("neg_quad", &Params::new()).unwrap();
        let r = prox(&n, n.domain(), 0.25, &pt(&[0.0]), &cfg()).unwrap();
        assert!((r.point[0] - 0.5).abs() <= 1e-8, "{r:?}");
    }

    #[test]
    fn two_point_prox_is_set_valued() {
        // −|t| on [−1,1] from x = 0 with β = 1: both endpoints are optimal.
        let k = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let h = Objective::new("negabs", k.clone(), 0.0, |x| -x[0].abs()).unwrap();
        let r = prox(&h, &k, 1.0, &pt(&[0.0]), &cfg()).unwrap();
        assert_eq!(r.candidates.len(), 2);
        assert_eq!(r.point, pt(&[-1.0]));
    }

    #[test]
    fn fixed_point_residuals() {
        let h = catalog("power_norm", &Params::new().with("n", 2.0).with("alpha", 0.5).with("half_width", 1.0)).unwrap();
        let m = global_min(&h, h.domain(), &cfg()).unwrap();
        assert!(prox_fixed_point_residual(&h, h.domain(), 1.0, &m.point, &cfg()).unwrap() <= 1e-6);
        assert!(prox_fixed_point_residual(&h, h.domain(), 1.0, &pt(&[0.8, -0.5]), &cfg()).unwrap() > 1e-3);
        let k = FeasibleSet::interval(-3.0, 3.0).unwrap();
        let q = Objective::new("q", k.clone(), 2.0, |x| (x[0] - 1.0).powi(2)).unwrap().with_grad(|x| vec![2.0 * (x[0] - 1.0)]);
        assert_eq!(prox_fixed_point_residual(&q, &k, 0.5, &pt(&[1.0]), &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn bregman_half_sq_matches_prox() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let phi = BregmanFunction::half_sq_norm();
        let mut r = rng(11);
        for _ in 0..20 {
            let x = pt(&[r.random_range(-5.0..5.0)]);
            let beta = r.random_range(0.1..2.0);
            let a = prox(&h, h.domain(), beta, &x, &cfg()).unwrap();
            let b = bregman_prox(&h, h.domain(), &phi, beta, &x, &cfg()).unwrap();
            assert!(a.point.dist(&b.point) <= 1e-8);
        }
    }

    #[test]
    fn bregman_fixed_point_at_minimizer() {
        let k = FeasibleSet::interval(0.1, 4.0).unwrap();
        let h = Objective::new("abs1", k.clone(), 0.0, |x| (x[0] - 1.0).abs()).unwrap();
        let phi = BregmanFunction::neg_entropy_shifted(0.0).unwrap();
        let r = bregman_prox(&h, &k, &phi, 1.0, &pt(&[1.0]), &cfg()).unwrap();
        assert!(r.candidates.iter().any(|c| c.dist(&pt(&[1.0])) <= 1e-8), "{r:?}");
    }

    #[test]
    fn bregman_entropy_matches_grid() {
        let k = FeasibleSet::interval(0.1, 4.0).unwrap();
        let h = Objective::new("abs1", k.clone(), 0.0, |x| (x[0] - 1.0).abs()).unwrap();
        let phi = BregmanFunction::neg_entropy_shifted(0.0).unwrap();
        let r = bregman_prox(&h, &k, &phi, 1.0, &pt(&[2.0]), &cfg()).unwrap();
        let f = |y: f64| (y - 1.0).abs() + y * (y / 2.0).ln() - y + 2.0;
        let (mut by, mut bv) = (0.1, f64::INFINITY);
        for i in 0..=100_000 {
            let y = 0.1 + 3.9 * i as f64 / 100_000.0;
            if f(y) < bv {
                bv = f(y);
                by = y;
            }
        }
        // One-sided slopes at the kink are −1 + ln ½ < 0 < 1 + ln ½.
        assert!((r.point[0] - by).abs() <= 1e-4 && (r.point[0] - 1.0).abs() <= 1e-6, "{r:?}");
    }

    #[test]
    fn bregman_rejects_point_outside_zone() {
        let k = FeasibleSet::interval(-1.0, 4.0).unwrap();
        let h = Objective::new("abs1", k.clone(), 0.0, |x| (x[0] - 1.0).abs()).unwrap();
        let phi = BregmanFunction::neg_entropy_shifted(0.0).unwrap();
        assert!(matches!(bregman_prox(&h, &k, &phi, 1.0, &pt(&[-0.5]), &cfg()), Err(Error::OutsideDomain(_))));
        let r = bregman_prox(&h, &k, &phi, 1.0, &pt(&[0.5]), &cfg()).unwrap();
        assert!(r.point[0] >= 0.0);
    }

    #[test]
    fn affine_search_in_basis_coordinates() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let k = FeasibleSet::affine(vec![vec![s, s]], vec![0.0, 0.0]).unwrap();
        let h = Objective::new("q", k.clone(), 2.0, |x| (x[0] - 1.0).powi(2) + x[1] * x[1]).unwrap();
        let r = global_min(&h, &k, &cfg().with_radius(5.0)).unwrap();
        assert!(r.point.dist(&pt(&[0.5, 0.5])) <= 1e-6, "{r:?}");
    }

    #[test]
    fn deterministic() {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let a = prox(&h, h.domain(), 0.7, &pt(&[0.9]), &cfg()).unwrap();
        let b = prox(&h, h.domain(), 0.7, &pt(&[0.9]), &cfg()).unwrap();
        assert_eq!(a, b);
    }
}
