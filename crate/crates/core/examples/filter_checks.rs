// Numerical checks of the filter assumptions for Tikhonov, spectral
// cut-off and a deliberately broken filter.

use dfdreg::filters::{check_condition_c, check_discrepancy_condition, check_rate_condition, CheckGrid, Filter};
use dfdreg::source::IndexFunction;

pub fn run() -> dfdreg::Result<()> {
    let grid = CheckGrid::default();
    let phi: IndexFunction = "poly:p=2".parse()?;
    let doubled = Filter::custom("doubled", *Filter::tikhonov().constants(), |a, mu| 2.0 / (a + mu));
    for f in [Filter::tikhonov(), Filter::spectral_cutoff(), doubled] {
        let c = check_condition_c(&f, &grid);
        let rate = check_rate_condition(&f, &phi, &grid)?;
        let disc = check_discrepancy_condition(&f, &grid);
        println!(
            "{:>10}: C {} (sup mu g = {:.4}), rate {} (gamma1 {:.6}, gamma2 {:.4}), discrepancy {} (rho {:.4})",
            f.name(),
            c.passed,
            c.c2_sup,
            rate.passed,
            rate.gamma1_est,
            rate.gamma2_est,
            disc.passed,
            disc.rho_est
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
