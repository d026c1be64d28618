//! Sampled certificates for every catalog objective, plus a function that is
//! not strongly quasiconvex.

use sqcopt::functions::{catalog, Params};
use sqcopt::verify::{check_sqc_sampled, estimate_modulus, VerifyOpts};
use sqcopt::{FeasibleSet, Objective};

fn main() -> sqcopt::Result<()> {
    let opts = VerifyOpts::new(10_000, 1);
    println!("{:<16} {:>10} {:>10} {:>8}", "objective", "declared", "sampled", "passed");
    for name in ["abs_shift", "euclid_norm", "neg_quad", "gauss_well", "sin_quad", "inv_gap", "root_quartic", "power_norm", "quad_fractional"] {
        let h = catalog(name, &Params::new())?;
        let rep = check_sqc_sampled(&h, h.domain(), h.modulus(), &opts)?;
        let est = estimate_modulus(&h, h.domain(), &opts)?.estimate.unwrap_or(f64::NAN);
        println!("{name:<16} {:>10.4} {est:>10.4} {:>8}", h.modulus(), rep.passed);
    }

    let k = FeasibleSet::interval(-2.0, 2.0)?;
    let cubic = Objective::new("cubic", k.clone(), 0.0, |x| x[0].powi(3) + 0.5 * x[0] * x[0])?;
    let rep = check_sqc_sampled(&cubic, &k, 1e-6, &opts)?;
    println!("\nt^3 + t^2/2 on [-2, 2]: passed = {}, worst margin {:.3e}", rep.passed, rep.worst_margin);
    if let Some(w) = rep.witnesses.first() {
        println!("witness: x = {}, y = {}, t = {:?}", w.points[0], w.points[1], w.t);
    }
    Ok(())
}
