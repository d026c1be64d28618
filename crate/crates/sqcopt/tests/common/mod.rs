#![allow(dead_code)]

use sqcopt::{Bifunction, Objective, Point};

pub fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

/// Brute-force minimizer over a box: a tensor grid with `m` points per axis,
/// zoomed around the best point `rounds` times.
pub fn grid_argmin(h: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], m: usize, rounds: usize) -> Vec<f64> {
    let n = lo.len();
    let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
    let mut best = lo.clone();
    for _ in 0..rounds {
        let mut best_v = f64::INFINITY;
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            for i in 0..n {
                x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (m - 1) as f64;
            }
            let v = h(&x);
            if v < best_v {
                best_v = v;
                best.copy_from_slice(&x);
            }
            let mut i = 0;
            while i < n {
                idx[i] += 1;
                if idx[i] < m {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        for i in 0..n {
            let w = 2.0 * (hi[i] - lo[i]) / (m - 1) as f64;
            let (a, b) = (lo[i], hi[i]);
            lo[i] = (best[i] - w).max(a);
            hi[i] = (best[i] + w).min(b);
        }
    }
    best
}

pub fn objective_oracle(h: &Objective) -> Point {
    let (lo, hi) = h.domain().bounding_box();
    let m = if lo.len() == 1 { 20_001 } else { 401 };
    pt(&grid_argmin(&|x| h.value_at(x), &lo, &hi, m, 4))
}

/// Grid solution of a one-dimensional equilibrium problem on `[a, b]`:
/// the point maximizing `min_y f(x, y)` over a grid of `y`.
pub fn ep_oracle_1d(f: &Bifunction, a: f64, b: f64) -> f64 {
    let ys: Vec<f64> = (0..=4000).map(|i| a + (b - a) * i as f64 / 4000.0).collect();
    let gap = |x: &[f64]| -> f64 { -ys.iter().map(|y| f.value_at(x, &[*y])).fold(f64::INFINITY, f64::min) };
    grid_argmin(&gap, &[a], &[b], 2001, 4)[0]
}
