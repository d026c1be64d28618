//! Subgradient, gradient and heavy-ball methods on sin_quad, with step sizes
//! taken from the validated ranges.

use sqcopt::functions::{catalog, Params};
use sqcopt::minimize::{run, MinParams, Schedule, Variant};
use sqcopt::Point;

fn main() -> sqcopt::Result<()> {
    let h = catalog("sin_quad", &Params::new())?;
    let (gamma, l) = (h.modulus(), h.lip_grad().unwrap());
    let x0 = Point::scalar(4.0)?;
    let mut hb = MinParams::new(Variant::HeavyBall);
    hb.theta = 0.3;
    hb.eta = (0.9 * (1.0 - 0.09) / l).sqrt();
    let runs = [
        ("subgradient", MinParams::new(Variant::Subgrad).step(Schedule::harmonic(0.9 / gamma))),
        ("gradient", MinParams::new(Variant::Grad).step(Schedule::constant(0.9 * (gamma / (l * l)).min(2.0 / l)))),
        ("heavy ball", hb),
        ("gradient, unguarded", MinParams::new(Variant::Grad).step(Schedule::constant(0.2))),
    ];
    for (label, p) in runs {
        let tr = run(&h, h.domain(), &x0, &p.stop_tol(1e-10))?;
        println!("{label:<20} guarded={:<5} iterations={:<6} x = {:.3e}", tr.guard.guarded, tr.iterations(), tr.solution[0]);
    }
    Ok(())
}
