mod common;

use common::pt;
use proptest::prelude::*;
use sqcopt::equilibrium::{solve, EpParams, EpProblem, EpVariant};
use sqcopt::functions::{catalog, Params};
use sqcopt::minimize::{run_ppa, run_rippa, MinParams, Schedule, Variant};
use sqcopt::prox::{prox, GlobalSolveConfig};
use sqcopt::verify::{check_sqc_sampled, VerifyOpts};
use sqcopt::{Bifunction, FeasibleSet, Point};

fn sets() -> Vec<FeasibleSet> {
    vec![
        FeasibleSet::boxed(vec![-1.0, 0.0], vec![2.0, 0.5]).unwrap(),
        FeasibleSet::ball(vec![0.5, -0.5], 1.5).unwrap(),
        FeasibleSet::affine(vec![vec![0.6, 0.8]], vec![0.0, 1.0]).unwrap(),
        FeasibleSet::halfspaces(2, vec![(vec![1.0, 0.0], 1.0), (vec![1.0, 1.0], 0.5), (vec![0.0, -1.0], 2.0)]).unwrap(),
        FeasibleSet::full(2).unwrap(),
    ]
}

fn point2() -> impl Strategy<Value = Point> {
    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| pt(&[a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive(x in point2(), y in point2()) {
        for k in sets() {
            let px = k.project(&x).unwrap();
            let py = k.project(&y).unwrap();
            prop_assert!(k.contains(&px, 1e-7).unwrap());
            prop_assert!(px.dist(&k.project(&px).unwrap()) <= 1e-7);
            prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-7);
        }
    }

    #[test]
    fn projection_satisfies_the_obtuse_angle_condition(x in point2(), seed in 0u64..1000) {
        for k in sets() {
            let px = k.project(&x).unwrap();
            for y in k.sample(seed, 8, Some(5.0)).unwrap() {
                prop_assert!(x.sub(&px).dot(&y.sub(&px)) <= 1e-6 * (1.0 + x.norm() + y.norm()));
            }
        }
    }

    #[test]
    fn prox_beats_sampled_competitors(x in -6.0f64..6.0, beta in 0.05f64..3.0, seed in 0u64..1000) {
        let h = catalog("sin_quad", &Params::new()).unwrap();
        let k = h.domain();
        let x = pt(&[x]);
        let r = prox(&h, k, beta, &x, &GlobalSolveConfig::default()).unwrap();
        prop_assert!(k.contains(&r.point, 1e-12).unwrap());
        let obj = |y: &Point| h.value(y) + y.dist_sq(&x) / (2.0 * beta);
        let best = obj(&r.point);
        for y in k.sample(seed, 64, None).unwrap() {
            prop_assert!(best <= obj(&y) + 1e-9);
        }
    }

    #[test]
    fn prox_of_the_minimizer_is_the_minimizer(beta in 0.05f64..5.0) {
        for name in ["gauss_well", "sin_quad", "power_norm"] {
            let h = catalog(name, &Params::new()).unwrap();
            let xbar = Point::zeros(h.dim());
            let r = prox(&h, h.domain(), beta, &xbar, &GlobalSolveConfig::default()).unwrap();
            prop_assert!(r.point.norm() <= 1e-7, "{name}: {}", r.point);
        }
    }

    #[test]
    fn rippa_without_inertia_or_relaxation_is_ppa(x0 in -1.0f64..1.0, c in 0.1f64..3.0) {
        let h = catalog("gauss_well", &Params::new()).unwrap();
        let p = MinParams::new(Variant::Ppa).step(Schedule::constant(c)).max_iters(300);
        let a = run_ppa(&h, h.domain(), &pt(&[x0]), &p).unwrap();
        let b = run_rippa(&h, h.domain(), &pt(&[x0]), &MinParams { variant: Variant::Rippa, ..p }).unwrap();
        prop_assert!(a.same_path(&b));
    }

    #[test]
    fn runs_are_deterministic(x0 in -4.0f64..4.0, beta in 0.05f64..0.25) {
        let k = FeasibleSet::interval(0.0, 4.0).unwrap();
        let prob = EpProblem::new(Bifunction::glt_example(2.0, 2.0, k.clone()).unwrap(), k, None).unwrap();
        let p = EpParams::new(EpVariant::RippaEp).beta(Schedule::constant(beta)).relax(0.8).max_iters(100);
        let x0 = pt(&[x0.abs()]);
        prop_assert!(solve(&prob, &x0, &p).unwrap().same_path(&solve(&prob, &x0, &p).unwrap()));
    }

    #[test]
    fn sqc_reports_are_reproducible_and_monotone_in_gamma(seed in 0u64..10_000, g in 0.0f64..1.0) {
        let h = catalog("root_quartic", &Params::new()).unwrap();
        let opts = VerifyOpts::new(500, seed);
        let a = check_sqc_sampled(&h, h.domain(), g, &opts).unwrap();
        prop_assert_eq!(&a, &check_sqc_sampled(&h, h.domain(), g, &opts).unwrap());
        let b = check_sqc_sampled(&h, h.domain(), g + 0.5, &opts).unwrap();
        prop_assert!(b.worst_margin <= a.worst_margin);
    }

    #[test]
    fn harmonic_schedule_values(scale in 0.01f64..10.0, k in 0usize..10_000) {
        prop_assert_eq!(Schedule::harmonic(scale).at(k), scale / (k as f64 + 1.0));
    }
}
