// A priori and discrepancy-principle parameter choice on the toy problem.

use dfdreg::bench::diagonal_toy;
use dfdreg::dfd::{add_noise, regularize, ForwardOperator};
use dfdreg::filters::Filter;
use dfdreg::frames::SolveOptions;
use dfdreg::grid::GridFunction;
use dfdreg::param::{a_priori_alpha, morozov_solve, FrameConstants, MorozovConfig};
use dfdreg::source::{source_norm, IndexFunction};
use dfdreg::Error;
use num_complex::Complex64;

pub fn run() -> dfdreg::Result<()> {
    let (op, sys) = diagonal_toy(256, 1.0)?;
    let c = FrameConstants::from_system(&sys)?;
    let phi = IndexFunction::poly(2.0)?;
    let filter = Filter::tikhonov();
    let opts = SolveOptions::default();

    let x = GridFunction::from_fn(*sys.grid(), |t| Complex64::new(t.sin().abs().powi(3), 0.0));
    let e = source_norm(&x, &sys, &phi)?.sqrt();
    let y = op.apply(&x)?;
    println!("truth: |x| = {:.4}, source radius E = {e:.4}", x.norm());

    let morozov = MorozovConfig::new(1.5, c.a_v, c.b_v, filter.constants().rho);
    for (i, delta) in [1e-1, 1e-2, 1e-3, 1e-4].into_iter().enumerate() {
        let yd = add_noise(&y, sys.range_subspace(), delta, i as u64)?;
        let a = a_priori_alpha(&phi, delta, e, c.a_v)?;
        let err_a = regularize(&sys, &filter, a, &yd, &opts)?.sub(&x)?.norm();
        let sol = morozov_solve(&sys, &filter, &morozov, &yd, delta)?;
        let err_d = regularize(&sys, &filter, sol.alpha, &yd, &opts)?.sub(&x)?.norm();
        println!(
            "delta {delta:.0e}: a priori alpha {a:.3e} error {err_a:.3e} | discrepancy alpha {:.3e} error {err_d:.3e} ({} steps, |d - target| = {:.1e})",
            sol.alpha,
            sol.iterations,
            (sol.residual - sol.target).abs()
        );
    }

    // Noise larger than the data: the discrepancy equation has no root.
    let yd = add_noise(&y.scaled(1e-3), sys.range_subspace(), 1.0, 9)?;
    match morozov_solve(&sys, &filter, &morozov, &yd, 1.0) {
        Err(Error::NotSolvable { lhs, rhs }) => println!("not solvable: {lhs:.3e} >= {rhs:.3e}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
