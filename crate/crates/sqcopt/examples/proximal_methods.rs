//! Proximal point, relaxed-inertial and Bregman proximal iterations on the
//! nonconvex objective sqrt(||x||).

use sqcopt::functions::{catalog, Params};
use sqcopt::minimize::{default_rippa_params, run, MinParams, Schedule, Variant};
use sqcopt::Point;

fn main() -> sqcopt::Result<()> {
    let h = catalog("power_norm", &Params::new().with("n", 2.0))?;
    let x0 = Point::new(vec![1.0, 0.8])?;
    let mut bppa = MinParams::new(Variant::Bppa).step(Schedule::constant(0.5));
    bppa.bregman = Some("neg_entropy".into());
    bppa.bregman_shift = 2.0;
    let runs = [
        ("ppa", MinParams::new(Variant::Ppa).step(Schedule::constant(0.5))),
        ("rippa", default_rippa_params(h.modulus(), 0.0, 0.5)?),
        ("bppa (entropy)", bppa),
    ];
    for (label, p) in runs {
        let tr = run(&h, h.domain(), &x0, &p.stop_tol(1e-10))?;
        println!(
            "{label:<15} guarded={:<5} iterations={:<4} {:?} x = {}",
            tr.guard.guarded,
            tr.iterations(),
            tr.terminated_by,
            tr.solution
        );
        for note in &tr.guard.notes {
            println!("    note: {note}");
        }
    }
    Ok(())
}
