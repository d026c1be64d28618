//! First- and second-order gradient flows on gauss_well and their fitted
//! exponential rates.

use sqcopt::dynamics::{fit_exponential_rate, integrate_ds1, integrate_ds2};
use sqcopt::functions::{catalog, Params};
use sqcopt::Point;

fn main() -> sqcopt::Result<()> {
    let h = catalog("gauss_well", &Params::new())?;
    let x0 = Point::scalar(0.9)?;
    let target = Point::scalar(0.0)?;
    let first = integrate_ds1(&h, None, &x0, 10.0, 1e-3)?;
    println!("DS1: u(10) = {:.3e}, rate {:?}", first.terminal()[0], fit_exponential_rate(&first, &target, 0.5)?.rate());
    for damping in [0.5, 2.0, 4.0] {
        let tr = integrate_ds2(&h, damping, &x0, &Point::scalar(0.0)?, 20.0, 1e-3)?;
        let rate = fit_exponential_rate(&tr, &target, 0.5)?;
        println!("DS2 damping {damping}: u(20) = {:.3e}, rate {:?}", tr.terminal()[0], rate.rate());
    }
    Ok(())
}
