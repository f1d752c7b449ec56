// Lower bounds on the worst-case error, coverage of noise levels, and a
// Monte-Carlo estimate of the worst case in between.

use dfdreg::analysis::{delta_stars, density_check, empirical_worst_case, lower_bound, WorstCaseSetup};
use dfdreg::bench::{covering_beta, diagonal_toy};
use dfdreg::filters::{check_rate_condition, CheckGrid, Filter};
use dfdreg::frames::SolveOptions;
use dfdreg::param::{a_priori_alpha, apriori_error_bound, FrameConstants, Rule};
use dfdreg::source::IndexFunction;

pub fn run() -> dfdreg::Result<()> {
    let (op, sys) = diagonal_toy(128, 1.0)?;
    let c = FrameConstants::from_system(&sys)?;
    let phi = IndexFunction::poly(2.0)?;
    let filter = Filter::tikhonov();
    let e = 1.0;

    let stars = delta_stars(sys.kappa(), &phi, e, c.a_v.sqrt())?;
    let beta = covering_beta(&stars).expect("distinct kappa");
    let density = density_check(&stars, beta, 0.5)?;
    println!("beta {beta:.4}, floor {:.3e}, covered {:?}", density.floor, density.covered_interval);

    let gamma2 = check_rate_condition(&filter, &phi, &CheckGrid::default())?.gamma2_est;
    println!("{:>9} {:>10} {:>10} {:>10}", "delta", "lower", "empirical", "upper");
    for delta in [1e-1, 1e-2, 1e-3] {
        let alpha = a_priori_alpha(&phi, delta, e, c.a_v)?;
        let setup = WorstCaseSetup {
            op: &op,
            sys: &sys,
            filter: &filter,
            rule: Rule::Fixed(alpha),
            phi,
            e,
            opts: SolveOptions::default(),
        };
        let wc = empirical_worst_case(&setup, delta, 4, 3)?;
        let lo = lower_bound(&phi, e, delta, c.b_u.sqrt(), c.a_v.sqrt(), beta)?;
        let hi = apriori_error_bound(&phi, e, delta, &c, filter.constants().gamma1, gamma2)?;
        println!("{delta:>9.1e} {lo:>10.4e} {:>10.4e} {hi:>10.4e}", wc.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
