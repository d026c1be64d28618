//! Inertia/relaxation grid for the relaxed-inertial proximal method, run from
//! a TOML configuration with the results written to a directory.
//!
//! `cargo run --example sweep -- [OUT_DIR]`

use sqcopt::harness::{sweep_compare, RunConfig};

const CONFIG: &str = r#"
schema_version = 1
seed = 5

[problem]
objective = "power_norm"

[start]
x0 = [1.0, 1.0]

[minimize]
variant = "rippa"
step = { kind = "constant", value = 0.5 }
max_iters = 500
stop_tol = 1e-8

[sweep]
alphas = [0.0, 0.1, 0.2]
rhos = [0.5, 1.0, 1.5]
"#;

fn main() -> sqcopt::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/sweep".into());
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let table = sweep_compare(&cfg, out.as_ref(), 4)?;
    println!("{:>6} {:>6} {:>8} {:>8} {:>10}", "alpha", "rho", "guarded", "iters", "baseline");
    for r in &table.rows {
        let iters = r.iterations.map_or("-".into(), |n| n.to_string());
        println!("{:>6} {:>6} {:>8} {iters:>8} {:>10}", r.alpha, r.rho, r.guarded, r.baseline);
    }
    println!("some cell strictly beats the baseline: {}", table.strictly_beats_baseline);
    println!("cell traces written under {out}/cells");
    Ok(())
}
