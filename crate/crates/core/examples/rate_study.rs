// Run a convergence-rate experiment from a TOML config and print the table.
//
// `cargo run --release --example rate_study -- configs/fractional_apriori.toml`

use std::path::PathBuf;
use std::time::Instant;

use dfdreg::bench::{run_experiment, ExperimentConfig};

fn main() -> dfdreg::Result<()> {
    let path: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "configs/fractional_apriori.toml".into()).into();
    let cfg = ExperimentConfig::from_file(&path)?;
    let t0 = Instant::now();
    let table = run_experiment(&cfg)?;
    println!("{:>10} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}", "delta", "alpha", "mean", "max", "lower", "worst", "upper");
    for r in &table.rows {
        println!(
            "{:>10.3e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}  covered={:?} ratio={:?} gap={:?} unsolved={}",
            r.delta,
            r.alpha,
            r.mean_error,
            r.max_error,
            r.lower_bound,
            r.worst_case.unwrap_or(f64::NAN),
            r.upper_bound,
            r.covered,
            r.ratio,
            r.morozov_max_gap,
            r.unsolved
        );
    }
    println!("slope {:?} +- {:?}", table.slope, table.slope_half_width);
    if let Some(t) = &table.truth {
        println!("E = {:.4e}, measured source radius {:.4e}", t.e, t.source_radius);
    }
    println!("pass flags {:?}", table.pass_flags);
    for w in &table.warnings {
        println!("warning: {w}");
    }
    println!("elapsed {:.2?}", t0.elapsed());
    Ok(())
}
