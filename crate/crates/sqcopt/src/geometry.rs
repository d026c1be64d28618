//! Points, feasible sets, Euclidean projections and seeded sampling.
//!
//! Every solver in the crate works on [`Point`] values inside a
//! [`FeasibleSet`]. Sets are validated on construction and are immutable
//! afterwards, so they can be shared freely between threads.
//!
//! Random sampling uses ChaCha8 seeded from a `u64`, which makes every sampled
//! verifier and multistart search reproducible.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used for every sampled computation.
pub type Rng = ChaCha8Rng;

/// Seeded generator.
pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ORTHO_TOL: f64 = 1e-12;
const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_SWEEPS: usize = 10_000;

/// A point of ℝⁿ with finite coordinates.
///
/// [`Point::new`] rejects NaN and infinite coordinates. Arithmetic helpers do
/// not re-check, so iterative solvers test [`Point::is_finite`] themselves when
/// they need a divergence guard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParams("point must have at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {i} of point is {}", coords[i])));
        }
        Ok(Point(coords))
    }

    /// Builds a point without the finiteness check.
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn scalar(t: f64) -> Result<Self> {
        Point::new(vec![t])
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        dist_sq(&self.0, &other.0)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// `self − other`.
    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + other`.
    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| s * a).collect())
    }

    /// `self + s·d`.
    pub fn axpy(&self, s: f64, d: &Point) -> Point {
        Point(self.0.iter().zip(&d.0).map(|(a, b)| a + s * b).collect())
    }

    /// `a·x + b·y`.
    pub fn combine(a: f64, x: &Point, b: f64, y: &Point) -> Point {
        Point(x.0.iter().zip(&y.0).map(|(p, q)| a * p + b * q).collect())
    }

    /// Lexicographic order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.partial_cmp(b) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Serializable description of a feasible set.
///
/// Affine subspaces are given by orthonormal basis columns and an offset.
/// Halfspace intersections are `{x : normals[i]·x ≤ bounds[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    FullSpace { dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Affine { basis: Vec<Vec<f64>>, offset: Vec<f64> },
    Halfspaces { dim: usize, normals: Vec<Vec<f64>>, bounds: Vec<f64> },
}

/// A validated closed convex set with exact Euclidean projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetSpec", into = "SetSpec")]
pub struct FeasibleSet {
    spec: SetSpec,
}

impl From<FeasibleSet> for SetSpec {
    fn from(s: FeasibleSet) -> Self {
        s.spec
    }
}

impl TryFrom<SetSpec> for FeasibleSet {
    type Error = Error;
    fn try_from(spec: SetSpec) -> Result<Self> {
        validate_spec(&spec)?;
        Ok(FeasibleSet { spec })
    }
}

fn validate_spec(spec: &SetSpec) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidSet(m));
    match spec {
        SetSpec::FullSpace { dim } => {
            if *dim == 0 {
                return bad("dimension must be positive".into());
            }
        }
        SetSpec::Box { lo, hi } => {
            if lo.is_empty() || lo.len() != hi.len() {
                return bad(format!("box bounds have lengths {} and {}", lo.len(), hi.len()));
            }
            for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                if l.is_nan() || h.is_nan() || !(l <= h) || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                    return bad(format!("box coordinate {i}: need lo ≤ hi, got [{l}, {h}]"));
                }
            }
        }
        SetSpec::Ball { center, radius } => {
            if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                return bad("ball center must be a finite nonempty vector".into());
            }
            if !(radius.is_finite() && *radius > 0.0) {
                return bad(format!("ball radius must be positive, got {radius}"));
            }
        }
        SetSpec::Affine { basis, offset } => {
            let n = offset.len();
            if n == 0 || offset.iter().any(|c| !c.is_finite()) {
                return bad("affine offset must be a finite nonempty vector".into());
            }
            if basis.len() > n {
                return bad(format!("{} basis columns exceed dimension {n}", basis.len()));
            }
            for (i, u) in basis.iter().enumerate() {
                if u.len() != n {
                    return bad(format!("basis column {i} has length {}, expected {n}", u.len()));
                }
                for (j, v) in basis.iter().enumerate().take(i + 1) {
                    let target = if i == j { 1.0 } else { 0.0 };
                    let d = dot(u, v);
                    if (d - target).abs() > ORTHO_TOL {
                        return bad(format!("basis columns {j},{i} not orthonormal (inner product {d})"));
                    }
                }
            }
        }
        SetSpec::Halfspaces { dim, normals, bounds } => {
            if *dim == 0 || normals.len() != bounds.len() {
                return bad("halfspace description needs dim > 0 and one bound per normal".into());
            }
            for (i, a) in normals.iter().enumerate() {
                if a.len() != *dim || a.iter().any(|c| !c.is_finite()) || dot(a, a) == 0.0 {
                    return bad(format!("normal {i} must be a finite nonzero vector of length {dim}"));
                }
                if !bounds[i].is_finite() {
                    return bad(format!("bound {i} is not finite"));
                }
            }
        }
    }
    Ok(())
}

impl FeasibleSet {
    pub fn full(dim: usize) -> Result<Self> {
        SetSpec::FullSpace { dim }.try_into()
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        SetSpec::Box { lo, hi }.try_into()
    }

    /// The interval `[a, b]` in one dimension.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::boxed(vec![a], vec![b])
    }

    /// The cube `[−w, w]ⁿ`.
    pub fn cube(n: usize, w: f64) -> Result<Self> {
        Self::boxed(vec![-w; n], vec![w; n])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        SetSpec::Ball { center, radius }.try_into()
    }

    pub fn affine(basis: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        SetSpec::Affine { basis, offset }.try_into()
    }

    pub fn halfspaces(dim: usize, constraints: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let (normals, bounds) = constraints.into_iter().unzip();
        SetSpec::Halfspaces { dim, normals, bounds }.try_into()
    }

    pub fn spec(&self) -> &SetSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        match &self.spec {
            SetSpec::FullSpace { dim } | SetSpec::Halfspaces { dim, .. } => *dim,
            SetSpec::Box { lo, .. } => lo.len(),
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::Affine { offset, .. } => offset.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match &self.spec {
            SetSpec::Box { lo, hi } => lo.iter().chain(hi).all(|v| v.is_finite()),
            SetSpec::Ball { .. } => true,
            SetSpec::Affine { basis, .. } => basis.is_empty(),
            SetSpec::FullSpace { .. } | SetSpec::Halfspaces { .. } => false,
        }
    }

    /// True for the full space and affine subspaces.
    pub fn is_affine(&self) -> bool {
        matches!(self.spec, SetSpec::FullSpace { .. } | SetSpec::Affine { .. })
    }

    /// Coordinate bounds of the set, possibly infinite.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        match &self.spec {
            SetSpec::Box { lo, hi } => (lo.clone(), hi.clone()),
            SetSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SetSpec::Affine { basis, offset } if basis.is_empty() => (offset.clone(), offset.clone()),
            _ => (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]),
        }
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        self.check_dim(x)?;
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("projection input {x}")));
        }
        Ok(match &self.spec {
            SetSpec::FullSpace { .. } => x.clone(),
            SetSpec::Box { lo, hi } => {
                Point::raw(x.0.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect())
            }
            SetSpec::Ball { center, radius } => {
                let d = dist_sq(&x.0, center).sqrt();
                if d <= *radius {
                    x.clone()
                } else {
                    let s = radius / d;
                    Point::raw(x.0.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect())
                }
            }
            SetSpec::Affine { basis, offset } => {
                let rel: Vec<f64> = x.0.iter().zip(offset).map(|(v, o)| v - o).collect();
                let mut out = offset.clone();
                for u in basis {
                    let c = dot(u, &rel);
                    for (o, ui) in out.iter_mut().zip(u) {
                        *o += c * ui;
                    }
                }
                Point::raw(out)
            }
            SetSpec::Halfspaces { normals, bounds, .. } => dykstra(normals, bounds, x)?,
        })
    }

    /// Whether `x` lies within Euclidean distance `tol` of the set.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        self.check_dim(x)?;
        if !(tol >= 0.0) {
            return Err(Error::InvalidParams(format!("tolerance must be nonnegative, got {tol}")));
        }
        if !x.is_finite() {
            return Ok(false);
        }
        if let SetSpec::FullSpace { .. } = self.spec {
            return Ok(true);
        }
        let p = self.project(x)?;
        Ok(p.dist(x) <= tol)
    }

    /// `m` points of the set drawn from a ChaCha8 generator seeded with `seed`.
    ///
    /// Unbounded sets need `radius`; sampling is then restricted to the part of
    /// the set inside the ball of that radius around the origin (or around the
    /// offset for affine subspaces).
    pub fn sample(&self, seed: u64, m: usize, radius: Option<f64>) -> Result<Vec<Point>> {
        let s = Sampler::new(self, radius)?;
        let mut r = rng(seed);
        Ok((0..m).map(|_| s.draw(&mut r)).collect())
    }
}

impl fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            SetSpec::FullSpace { dim } => write!(f, "R^{dim}"),
            SetSpec::Box { lo, hi } => write!(f, "box {lo:?}..{hi:?}"),
            SetSpec::Ball { center, radius } => write!(f, "ball({center:?}, {radius})"),
            SetSpec::Affine { basis, offset } => write!(f, "affine(dim {}, offset {offset:?})", basis.len()),
            SetSpec::Halfspaces { normals, .. } => write!(f, "{} halfspaces", normals.len()),
        }
    }
}

fn project_halfspace(a: &[f64], b: f64, y: &mut [f64]) {
    let v = dot(a, y) - b;
    if v > 0.0 {
        let s = v / dot(a, a);
        for (yi, ai) in y.iter_mut().zip(a) {
            *yi -= s * ai;
        }
    }
}

fn feasible(normals: &[Vec<f64>], bounds: &[f64], x: &[f64], tol: f64) -> bool {
    normals.iter().zip(bounds).all(|(a, b)| dot(a, x) - b <= tol * a.iter().map(|c| c * c).sum::<f64>().sqrt())
}

fn dykstra(normals: &[Vec<f64>], bounds: &[f64], x0: &Point) -> Result<Point> {
    if feasible(normals, bounds, &x0.0, DYKSTRA_TOL) {
        return Ok(x0.clone());
    }
    if normals.len() == 1 {
        let mut y = x0.0.clone();
        project_halfspace(&normals[0], bounds[0], &mut y);
        return Ok(Point::raw(y));
    }
    let n = x0.dim();
    let mut x = x0.0.clone();
    let mut incr = vec![vec![0.0; n]; normals.len()];
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let prev = x.clone();
        for (i, (a, b)) in normals.iter().zip(bounds).enumerate() {
            let mut y: Vec<f64> = x.iter().zip(&incr[i]).map(|(v, p)| v + p).collect();
            let before = y.clone();
            project_halfspace(a, *b, &mut y);
            incr[i] = before.iter().zip(&y).map(|(u, v)| u - v).collect();
            x = y;
        }
        if dist_sq(&x, &prev).sqrt() <= DYKSTRA_TOL && feasible(normals, bounds, &x, DYKSTRA_TOL) {
            return Ok(Point::raw(x));
        }
    }
    Err(Error::Solver("Dykstra projection did not converge (empty intersection?)".into()))
}

/// Draws points of a set one at a time.
pub struct Sampler<'a> {
    set: &'a FeasibleSet,
    lo: Vec<f64>,
    hi: Vec<f64>,
    radius: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(set: &'a FeasibleSet, radius: Option<f64>) -> Result<Self> {
        let (mut lo, mut hi) = set.bounding_box();
        let needs_radius = !set.is_bounded();
        let r = match radius {
            Some(r) if r.is_finite() && r > 0.0 => r,
            Some(r) => return Err(Error::InvalidParams(format!("sampling radius must be positive, got {r}"))),
            None if needs_radius => {
                return Err(Error::Unbounded(format!("sampling {set} needs a radius")));
            }
            None => 0.0,
        };
        if let SetSpec::Box { .. } = set.spec {
            for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
                if !l.is_finite() {
                    *l = l.max(-r).min(*h);
                }
                if !h.is_finite() {
                    *h = h.min(r).max(*l);
                }
                if !l.is_finite() {
                    *l = *h - 2.0 * r;
                }
            }
        }
        Ok(Sampler { set, lo, hi, radius: r })
    }

    pub fn draw(&self, rng: &mut Rng) -> Point {
        match &self.set.spec {
            SetSpec::Box { .. } => Point::raw(
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(l, h)| if l == h { *l } else { l + (h - l) * rng.random::<f64>() })
                    .collect(),
            ),
            SetSpec::Ball { center, radius } => {
                let u = uniform_ball(rng, center.len(), *radius);
                Point::raw(center.iter().zip(&u).map(|(c, v)| c + v).collect())
            }
            SetSpec::FullSpace { dim } => Point::raw(uniform_ball(rng, *dim, self.radius)),
            SetSpec::Affine { basis, offset } => {
                let u = uniform_ball(rng, basis.len().max(1), self.radius);
                let mut out = offset.clone();
                for (c, col) in u.iter().zip(basis) {
                    for (o, b) in out.iter_mut().zip(col) {
                        *o += c * b;
                    }
                }
                Point::raw(out)
            }
            SetSpec::Halfspaces { dim, normals, bounds } => {
                let mut last = vec![0.0; *dim];
                for _ in 0..1000 {
                    last = uniform_ball(rng, *dim, self.radius);
                    if feasible(normals, bounds, &last, 0.0) {
                        return Point::raw(last);
                    }
                }
                { let p = Point::raw(last); dykstra(normals, bounds, &p).unwrap_or(p) }
            }
        }
    }
}

/// Uniform sample of the ball of radius `r` around the origin of ℝⁿ.
pub(crate) fn uniform_ball(rng: &mut Rng, n: usize, r: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dot(&g, &g).sqrt().max(f64::MIN_POSITIVE);
    let scale = r * rng.random::<f64>().powf(1.0 / n as f64) / norm;
    for v in &mut g {
        *v *= scale;
    }
    g
}

/// Uniform sample of the unit sphere in ℝⁿ.
pub(crate) fn unit_direction(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dot(&g, &g).sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Free-function form of [`FeasibleSet::project`].
pub fn project(set: &FeasibleSet, x: &Point) -> Result<Point> {
    set.project(x)
}

/// Free-function form of [`FeasibleSet::contains`].
pub fn contains(set: &FeasibleSet, x: &Point, tol: f64) -> Result<bool> {
    set.contains(x, tol)
}

/// Free-function form of [`FeasibleSet::sample`].
pub fn sample(set: &FeasibleSet, seed: u64, m: usize, radius: Option<f64>) -> Result<Vec<Point>> {
    set.sample(seed, m, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn box_projection_clamps() {
        let k = FeasibleSet::cube(2, 1.0).unwrap();
        let k01 = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(k01.project(&p(&[2.0, -1.0])).unwrap(), p(&[1.0, 0.0]));
        assert_eq!(k.project(&p(&[0.5, -3.0])).unwrap(), p(&[0.5, -1.0]));
    }

    #[test]
    fn ball_projection_scales() {
        let k = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let q = k.project(&p(&[3.0, 4.0])).unwrap();
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn affine_projection_symmetric() {
        let s = 0.5f64.sqrt();
        let k = FeasibleSet::affine(vec![vec![s, -s]], vec![0.5, 0.5]).unwrap();
        let q = k.project(&p(&[0.0, 0.0])).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn affine_rejects_non_orthonormal_basis() {
        assert!(FeasibleSet::affine(vec![vec![1.0, 1.0]], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn dykstra_matches_corner() {
        let k = FeasibleSet::halfspaces(2, vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)]).unwrap();
        let q = k.project(&p(&[1.0, 2.0])).unwrap();
        assert!(q.norm() < 1e-9);
        let k = FeasibleSet::halfspaces(2, vec![(vec![1.0, 1.0], 1.0), (vec![-1.0, 1.0], 1.0)]).unwrap();
        let q = k.project(&p(&[0.0, 3.0])).unwrap();
        assert!(q.dist(&p(&[0.0, 1.0])) < 1e-9, "{q}");
    }

    #[test]
    fn contains_examples() {
        let k = FeasibleSet::interval(0.0, 1.0).unwrap();
        assert!(k.contains(&p(&[1.0000001]), 1e-6).unwrap());
        let b = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!b.contains(&p(&[1.1, 0.0]), 1e-3).unwrap());
        let f = FeasibleSet::full(3).unwrap();
        assert!(f.contains(&p(&[1e300, -4.0, 2.0]), 0.0).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let k = FeasibleSet::cube(2, 1.0).unwrap();
        assert!(matches!(k.project(&p(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_feasible() {
        let k = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let a = k.sample(7, 3, None).unwrap();
        assert_eq!(a, k.sample(7, 3, None).unwrap());
        assert!(a.iter().all(|x| k.contains(x, 0.0).unwrap()));
    }

    #[test]
    fn ball_sample_mean_near_center() {
        let k = FeasibleSet::ball(vec![0.3, -0.2], 1.0).unwrap();
        let pts = k.sample(11, 10_000, None).unwrap();
        for (i, c) in [0.3, -0.2].iter().enumerate() {
            let mean: f64 = pts.iter().map(|x| x[i]).sum::<f64>() / pts.len() as f64;
            assert!((mean - c).abs() < 0.05);
        }
    }

    #[test]
    fn unbounded_sampling_needs_radius() {
        let k = FeasibleSet::full(2).unwrap();
        assert!(matches!(k.sample(1, 2, None), Err(Error::Unbounded(_))));
        assert_eq!(k.sample(1, 2, Some(3.0)).unwrap().len(), 2);
        let half = FeasibleSet::interval(0.0, f64::INFINITY).unwrap();
        let pts = half.sample(1, 50, Some(5.0)).unwrap();
        assert!(pts.iter().all(|x| (0.0..=5.0).contains(&x[0])));
    }

    #[test]
    fn set_spec_round_trips_through_toml_shape() {
        let k = FeasibleSet::cube(2, 1.0).unwrap();
        let v = serde_json::to_value(&k).unwrap();
        let back: FeasibleSet = serde_json::from_value(v).unwrap();
        assert_eq!(k, back);
        let bad = serde_json::json!({"kind": "ball", "center": [0.0], "radius": -1.0});
        assert!(serde_json::from_value::<FeasibleSet>(bad).is_err());
    }
}
