//! The proximal, relaxed-inertial and extragradient equilibrium solvers on a
//! one-dimensional problem whose solution is (3 - sqrt 5)/2.

use sqcopt::equilibrium::{ep_residual, solve, validate, EpParams, EpProblem, EpVariant};
use sqcopt::minimize::Schedule;
use sqcopt::prox::GlobalSolveConfig;
use sqcopt::{Bifunction, FeasibleSet, Point};

fn main() -> sqcopt::Result<()> {
    let k = FeasibleSet::interval(0.0, 4.0)?;
    let prob = EpProblem::new(Bifunction::glt_example(2.0, 2.0, k.clone())?, k, None)?;
    println!("gamma = {:.4}, eta = {:.4}, assumptions certified: {}", prob.f.modulus(), prob.f.eta(), prob.certified());
    let x0 = Point::scalar(3.0)?;
    let base = |v| EpParams::new(v).beta(Schedule::constant(0.2)).stop_tol(1e-8).max_iters(3000);
    let runs = [
        base(EpVariant::PpaEp),
        base(EpVariant::RippaEp).relax(0.9),
        base(EpVariant::RegEp),
        EpParams { step: Schedule::harmonic(1.0), ..base(EpVariant::EgEp) },
        EpParams { step: Schedule::harmonic(0.19), ..base(EpVariant::PegEp) },
    ];
    for p in runs {
        let guarded = validate(&prob, &p)?.guarded;
        let tr = solve(&prob, &x0, &p)?;
        let res = ep_residual(&prob, tr.solution(), &GlobalSolveConfig::default())?;
        println!(
            "{:<10} guarded={guarded:<5} iterations={:<5} x = {:.8} residual {res:.2e}",
            p.variant.name(),
            tr.iterations(),
            tr.solution()[0]
        );
    }
    println!("closed form: {:.8}", (3.0 - 5f64.sqrt()) / 2.0);
    Ok(())
}
