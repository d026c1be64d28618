//! Fixed-step integration of gradient flows and exponential-rate fitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::Objective;
use crate::geometry::Point;

/// Sampled trajectory on a uniform time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<Point>>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn terminal(&self) -> &Point {
        self.states.last().unwrap()
    }

    /// `½‖u̇‖² + h(u)` along a second-order trajectory.
    pub fn energy(&self) -> Option<Vec<f64>> {
        let v = self.velocities.as_ref()?;
        Some(v.iter().zip(&self.values).map(|(v, h)| 0.5 * v.norm_sq() + h).collect())
    }
}

fn grid(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("need T ≥ dt, got T = {t_end}, dt = {dt}")));
    }
    Ok((t_end / dt).round() as usize)
}

fn grad(h: &Objective, u: &[f64]) -> Result<Vec<f64>> {
    h.gradient_at(u).ok_or_else(|| Error::MissingGradient(h.name().to_string()))
}

fn finite(u: &[f64], t: f64) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("state at t = {t}")))
    }
}

/// Classical four-stage step for `ẏ = f(t, y)`.
fn rk4(f: &dyn Fn(f64, &[f64]) -> Result<Vec<f64>>, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let shift = |k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &shift(&k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &shift(&k2, 0.5 * dt))?;
    let k4 = f(t + dt, &shift(&k3, dt))?;
    Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// Perturbation `ψ(t)` of the first-order flow.
pub type Forcing<'a> = &'a dyn Fn(f64) -> Point;

/// `u̇ = −∇h(u) + ψ(t)`, `u(0) = x0`.
pub fn integrate_ds1(h: &Objective, psi: Option<Forcing>, x0: &Point, t_end: f64, dt: f64) -> Result<Trajectory> {
    let steps = grid(t_end, dt)?;
    if x0.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: x0.dim() });
    }
    let f = |t: f64, u: &[f64]| -> Result<Vec<f64>> {
        let mut g = grad(h, u)?;
        for v in &mut g {
            *v = -*v;
        }
        if let Some(psi) = psi {
            for (v, p) in g.iter_mut().zip(psi(t).coords()) {
                *v += p;
            }
        }
        Ok(g)
    };
    let mut u = x0.coords().to_vec();
    let mut out = Trajectory { times: vec![0.0], states: vec![x0.clone()], velocities: None, values: vec![h.value(x0)] };
    for i in 0..steps {
        let t = i as f64 * dt;
        u = rk4(&f, t, &u, dt)?;
        let t1 = (i + 1) as f64 * dt;
        finite(&u, t1)?;
        out.times.push(t1);
        out.values.push(h.value_at(&u));
        out.states.push(Point::raw(u.clone()));
    }
    Ok(out)
}

/// `ü + αu̇ + ∇h(u) = 0`, integrated in the variables `(u, u̇)`.
pub fn integrate_ds2(h: &Objective, damping: f64, x0: &Point, v0: &Point, t_end: f64, dt: f64) -> Result<Trajectory> {
    let steps = grid(t_end, dt)?;
    if !(damping >= 0.0) {
        return Err(Error::InvalidParams(format!("damping must be ≥ 0, got {damping}")));
    }
    let n = h.dim();
    if x0.dim() != n || v0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.dim().max(v0.dim()) });
    }
    let f = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (u, v) = y.split_at(n);
        let g = grad(h, u)?;
        let mut out = v.to_vec();
        out.extend(v.iter().zip(&g).map(|(v, g)| -damping * v - g));
        Ok(out)
    };
    let mut y: Vec<f64> = x0.coords().iter().chain(v0.coords()).copied().collect();
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        velocities: Some(vec![v0.clone()]),
        values: vec![h.value(x0)],
    };
    for i in 0..steps {
        y = rk4(&f, i as f64 * dt, &y, dt)?;
        let t1 = (i + 1) as f64 * dt;
        finite(&y, t1)?;
        out.times.push(t1);
        out.values.push(h.value_at(&y[..n]));
        out.states.push(Point::raw(y[..n].to_vec()));
        out.velocities.as_mut().unwrap().push(Point::raw(y[n..].to_vec()));
    }
    Ok(out)
}

/// `ü = −∇h(u)`: the undamped system.
pub fn integrate_ds2_undamped_descent(h: &Objective, x0: &Point, v0: &Point, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_ds2(h, 0.0, x0, v0, t_end, dt)
}

/// Distances below this are treated as exact convergence.
pub const RATE_FLOOR: f64 = 1e-14;

/// Least-squares fit of `log‖x − target‖` against time or iteration index.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateFit {
    Fit { rate: f64, r2: f64, points: usize },
    /// Fewer than 10 resolvable distances in the window.
    BelowFloor { points: usize },
}

impl RateFit {
    pub fn rate(&self) -> Option<f64> {
        match self {
            RateFit::Fit { rate, .. } => Some(*rate),
            RateFit::BelowFloor { .. } => None,
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match self {
            RateFit::Fit { r2, .. } => Some(*r2),
            RateFit::BelowFloor { .. } => None,
        }
    }
}

/// Fits `log d_i ≈ a + rate·t_i` over the last `window` fraction of the
/// samples whose distance to `target` is at least [`RATE_FLOOR`].
pub fn fit_log_linear(times: &[f64], states: &[Point], target: &Point, window: f64) -> Result<RateFit> {
    if times.len() != states.len() {
        return Err(Error::InvalidParams("times and states differ in length".into()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParams(format!("window must lie in (0, 1], got {window}")));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(states)
        .map(|(t, x)| (*t, x.dist(target)))
        .filter(|(_, d)| *d >= RATE_FLOOR)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    let take = ((pts.len() as f64 * window).ceil() as usize).min(pts.len());
    let tail = &pts[pts.len() - take..];
    if tail.len() < 10 {
        return Ok(RateFit::BelowFloor { points: tail.len() });
    }
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = tail.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("window has a single time value".into()));
    }
    let rate = sxy / sxx;
    let ss_res: f64 = tail.iter().map(|p| (p.1 - my - rate * (p.0 - mt)).powi(2)).sum();
    let r2 = if syy == 0.0 { 0.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit::Fit { rate, r2, points: tail.len() })
}

/// Exponential rate of a trajectory toward `target`.
pub fn fit_exponential_rate(traj: &Trajectory, target: &Point, window: f64) -> Result<RateFit> {
    fit_log_linear(&traj.times, &traj.states, target, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{catalog, Params};
    use crate::geometry::FeasibleSet;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn half_sq() -> Objective {
        Objective::new("half_sq", FeasibleSet::full(1).unwrap(), 1.0, |x| 0.5 * x[0] * x[0])
            .unwrap()
            .with_grad(|x| vec![x[0]])
    }

    #[test]
    fn ds1_linear_flow() {
        let tr = integrate_ds1(&half_sq(), None, &pt(&[1.0]), 5.0, 1e-3).unwrap();
        assert_eq!(tr.times.len(), 5001);
        assert!((tr.terminal()[0] - (-5f64).exp()).abs() <= 1e-4);
        assert!(tr.values.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        let fit = fit_exponential_rate(&tr, &pt(&[0.0]), 0.5).unwrap();
        assert!((fit.rate().unwrap() + 1.0).abs() <= 0.05);
    }

    #[test]
    fn ds1_sin_quad_and_forcing() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let tr = integrate_ds1(&h, None, &pt(&[3.0]), 20.0, 1e-2).unwrap();
        assert!(tr.terminal()[0].abs() <= 1e-4);
        let psi = |t: f64| Point::raw(vec![(-t).exp()]);
        let tr = integrate_ds1(&half_sq(), Some(&psi), &pt(&[1.0]), 20.0, 1e-2).unwrap();
        // u(t) = (1 + t)e^{−t} solves u̇ = −u + e^{−t}, u(0) = 1.
        assert!((tr.terminal()[0] - 21.0 * (-20f64).exp()).abs() <= 1e-8);
    }

    #[test]
    fn ds2_critical_damping_and_energy() {
        let tr = integrate_ds2(&half_sq(), 2.0, &pt(&[1.0]), &pt(&[0.0]), 5.0, 1e-3).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert!((x[0] - (1.0 + t) * (-t).exp()).abs() <= 1e-4);
        }
        let tr = integrate_ds2(&half_sq(), 0.0, &pt(&[1.0]), &pt(&[0.0]), 10.0, 1e-3).unwrap();
        let e = tr.energy().unwrap();
        assert!(e.iter().all(|v| (v - e[0]).abs() <= 1e-6));
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let tr = integrate_ds2(&h, 1.0, &pt(&[2.0]), &pt(&[0.0]), 30.0, 1e-2).unwrap();
        assert!(tr.terminal()[0].abs() <= 1e-3);
    }

    #[test]
    fn undamped_matches_zero_damping() {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let a = integrate_ds2_undamped_descent(&h, &pt(&[1.5]), &pt(&[-0.5]), 3.0, 1e-2).unwrap();
        let b = integrate_ds2(&h, 0.0, &pt(&[1.5]), &pt(&[-0.5]), 3.0, 1e-2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fits() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let states: Vec<Point> = times.iter().map(|t| pt(&[(-t).exp()])).collect();
        let f = fit_log_linear(&times, &states, &pt(&[0.0]), 1.0).unwrap();
        assert!((f.rate().unwrap() + 1.0).abs() <= 1e-3 && f.r2().unwrap() > 0.999999);
        let flat: Vec<Point> = times.iter().map(|_| pt(&[0.0])).collect();
        assert_eq!(fit_log_linear(&times, &flat, &pt(&[0.0]), 1.0).unwrap(), RateFit::BelowFloor { points: 0 });
    }

    #[test]
    fn bad_grids() {
        assert!(integrate_ds1(&half_sq(), None, &pt(&[1.0]), 0.5, 1.0).is_err());
        assert!(integrate_ds1(&half_sq(), None, &pt(&[1.0]), 1.0, 0.0).is_err());
        let blow = Objective::new("blow", FeasibleSet::full(1).unwrap(), 0.0, |x| -x[0].powi(4)).unwrap().with_grad(|x| vec![-4.0 * x[0].powi(3)]);
        assert!(matches!(integrate_ds1(&blow, None, &pt(&[10.0]), 10.0, 0.5), Err(Error::NonFinite(_))));
    }
}
