mod common;

use common::{ep_oracle_1d, grid_argmin, objective_oracle, pt};
use sqcopt::dynamics::integrate_ds1;
use sqcopt::equilibrium::ep_residual;
use sqcopt::equilibrium::EpProblem;
use sqcopt::functions::{catalog, combine_max, combine_scale, Params};
use sqcopt::harness::{fit_linear_rate, LinearRate};
use sqcopt::prox::{global_min, prox, GlobalSolveConfig};
use sqcopt::{Bifunction, FeasibleSet, Objective, Point};

#[test]
fn global_min_matches_grid_oracle_on_catalog() {
    // inv_gap is left out: its infimum −∞ is approached as t → 0⁺.
    for name in ["abs_shift", "neg_quad", "gauss_well", "sin_quad", "root_quartic", "power_norm", "quad_fractional", "euclid_norm"] {
        let h = catalog(name, &Params::new()).unwrap();
        let got = global_min(&h, h.domain(), &GlobalSolveConfig::default()).unwrap();
        let oracle = objective_oracle(&h);
        if !h.domain().contains(&oracle, 1e-9).unwrap() {
            // The oracle searches the bounding box; skip sets it overshoots.
            continue;
        }
        assert!((got.value - h.value(&oracle)).abs() <= 1e-7, "{name}: {} vs {}", got.value, h.value(&oracle));
        assert!(got.point.dist(&oracle) <= 1e-3, "{name}: {} vs {oracle}", got.point);
    }
}

#[test]
fn prox_matches_closed_form_for_the_norm() {
    // For β·h = β|t| the prox is soft thresholding.
    let h = catalog("euclid_norm", &Params::new().with("n", 1.0).with("gamma", 0.1)).unwrap();
    let cfg = GlobalSolveConfig::default();
    for (x, beta) in [(3.0f64, 1.0f64), (-2.5, 0.5), (0.4, 1.0), (5.0, 2.0)] {
        let expect = if x > 0.0 { (x - beta).max(0.0) } else { (x + beta).min(0.0) };
        let got = prox(&h, h.domain(), beta, &pt(&[x]), &cfg).unwrap().point[0];
        assert!((got - expect).abs() <= 1e-7, "x={x}, β={beta}: {got} vs {expect}");
    }
}

#[test]
fn prox_matches_brute_force_on_sin_quad() {
    let h = catalog("sin_quad", &Params::new()).unwrap();
    let cfg = GlobalSolveConfig::default();
    for (x, beta) in [(4.5, 0.3), (-3.0, 1.0), (1.7, 2.0)] {
        let f = |y: &[f64]| h.value_at(y) + (y[0] - x).powi(2) / (2.0 * beta);
        let oracle = grid_argmin(&f, &[-5.0], &[5.0], 20_001, 4)[0];
        let got = prox(&h, h.domain(), beta, &pt(&[x]), &cfg).unwrap().point[0];
        assert!((got - oracle).abs() <= 1e-5, "x={x}: {got} vs {oracle}");
    }
}

#[test]
fn glt_solution_matches_closed_form_and_grid() {
    let k = FeasibleSet::interval(0.0, 4.0).unwrap();
    let f = Bifunction::glt_example(2.0, 2.0, k.clone()).unwrap();
    let closed = (3.0 - 5f64.sqrt()) / 2.0;
    let grid = ep_oracle_1d(&f, 0.0, 4.0);
    assert!((grid - closed).abs() <= 1e-3, "{grid} vs {closed}");
    let prob = EpProblem::new(f, k, None).unwrap();
    assert!(ep_residual(&prob, &pt(&[closed]), &GlobalSolveConfig::default()).unwrap() >= -1e-6);
}

#[test]
fn combinations_keep_minimizers() {
    let g = catalog("gauss_well", &Params::new()).unwrap();
    let s = combine_scale(&g, 3.0).unwrap();
    assert!((s.modulus() - 3.0 * g.modulus()).abs() < 1e-15);
    let m = combine_max(&[g.clone(), s]).unwrap();
    let best = global_min(&m, m.domain(), &GlobalSolveConfig::default()).unwrap();
    assert!(best.point.norm() <= 1e-6);
}

#[test]
fn ds1_matches_exponential_decay() {
    let h = Objective::new("half_sq", FeasibleSet::full(2).unwrap(), 1.0, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
        .unwrap()
        .with_grad(|x| x.to_vec());
    let tr = integrate_ds1(&h, None, &pt(&[1.0, -2.0]), 3.0, 0.01).unwrap();
    for (t, u) in tr.times.iter().zip(&tr.states) {
        assert!((u[0] - (-t).exp()).abs() <= 1e-8 && (u[1] + 2.0 * (-t).exp()).abs() <= 1e-8);
    }
}

#[test]
fn linear_rate_of_a_geometric_sequence() {
    let xs: Vec<Point> = (0..30).map(|k| pt(&[0.8f64.powi(k), -0.8f64.powi(k)])).collect();
    match fit_linear_rate(&xs, &Point::zeros(2)).unwrap() {
        LinearRate::Fit { q, r2, .. } => assert!((q - 0.8).abs() < 1e-9 && r2 > 0.999_999),
        other => panic!("{other:?}"),
    }
}
