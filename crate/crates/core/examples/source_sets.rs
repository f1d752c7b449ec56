// Index functions, the associated `Theta(z) = z phi^{-1}(z)` and source
// norms of a few vectors.

use dfdreg::bench::diagonal_toy;
use dfdreg::grid::GridFunction;
use dfdreg::source::{source_norm, IndexFunction};
use num_complex::Complex64;

pub fn run() -> dfdreg::Result<()> {
    for spec in ["poly:p=1", "poly:p=2", "log:p=1"] {
        let phi: IndexFunction = spec.parse()?;
        let z = 0.1 * phi.z_max().min(1.0);
        let w = phi.theta(z)?;
        println!(
            "{phi}: phi(0.01) = {:.6e}, Theta({z:.3}) = {w:.6e}, Theta^-1 back = {:.6e}, concave {}",
            phi.eval(0.01)?,
            phi.theta_inv(w)?,
            phi.is_concave()
        );
    }

    let (_, sys) = diagonal_toy(64, 1.0)?;
    let phi = IndexFunction::poly(2.0)?;
    for k in [1.0, 3.0, 10.0] {
        let x = GridFunction::from_fn(*sys.grid(), |t| Complex64::new((k * t).cos(), 0.0));
        println!("cos({k} t): |x| = {:.4}, source norm {:.4}", x.norm(), source_norm(&x, &sys, &phi)?.sqrt());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
