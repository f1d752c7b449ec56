// A diagonal toy problem: verify the decomposition, invert exact data
// and regularize noisy data with Tikhonov and spectral cut-off.

use dfdreg::bench::diagonal_toy;
use dfdreg::dfd::{add_noise, picard_solve, regularize, verify_dfd, ForwardOperator};
use dfdreg::filters::Filter;
use dfdreg::frames::SolveOptions;
use dfdreg::grid::GridFunction;
use num_complex::Complex64;

pub fn run() -> dfdreg::Result<()> {
    let (op, sys) = diagonal_toy(128, 1.0)?;
    let rep = verify_dfd(&op, &sys, 1e-12)?;
    println!("verify: passed {} with residual {:.1e}", rep.passed, rep.max_residual);

    let x = GridFunction::from_fn(*sys.grid(), |t| Complex64::new((-(t - 3.0).powi(2)).exp(), 0.0));
    let y = op.apply(&x)?;
    let opts = SolveOptions::default();
    println!("Picard error on exact data {:.2e}", picard_solve(&sys, &y, &opts)?.sub(&x)?.norm());

    let yd = add_noise(&y, sys.range_subspace(), 1e-3, 42)?;
    for f in [Filter::tikhonov(), Filter::spectral_cutoff()] {
        for alpha in [1e-1, 1e-2, 1e-3, 1e-4] {
            let err = regularize(&sys, &f, alpha, &yd, &opts)?.sub(&x)?.norm();
            println!("{:>16} alpha {alpha:.0e}: error {err:.4e}", f.name());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
