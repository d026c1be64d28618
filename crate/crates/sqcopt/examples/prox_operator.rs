//! The proximity operator of a nonconvex function and the strong
//! subdifferential inclusion it satisfies.

use sqcopt::functions::{catalog, Params};
use sqcopt::prox::{prox, GlobalSolveConfig};
use sqcopt::verify::{subdiff_member, VerifyOpts};
use sqcopt::Point;

fn main() -> sqcopt::Result<()> {
    let h = catalog("sin_quad", &Params::new())?;
    let cfg = GlobalSolveConfig::default();
    for (x, beta) in [(4.5, 0.25), (4.5, 2.0), (-1.2, 1.0)] {
        let x = Point::scalar(x)?;
        let r = prox(&h, h.domain(), beta, &x, &cfg)?;
        let z = x.sub(&r.point);
        let member = subdiff_member(&h, h.domain(), &r.point, &z, beta, h.modulus(), &VerifyOpts::new(500, 0))?;
        println!(
            "prox at x = {x}, beta = {beta}: {} ({} candidate(s), {} evaluations), x - prox in strong subdifferential: {}",
            r.point,
            r.candidates.len(),
            r.evals,
            member.passed
        );
    }
    Ok(())
}
