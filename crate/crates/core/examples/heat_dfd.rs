// Build both heat DFD systems and check `K* v = kappa u`.

use std::time::Instant;

use dfdreg::dfd::verify_dfd;
use dfdreg::grid::Grid;
use dfdreg::heat::{build_band_dfd, build_wvd, HeatOperator, MeyerWavelet};

pub fn run() -> dfdreg::Result<()> {
    let wavelet = MeyerWavelet::default();

    let t0 = Instant::now();
    let op = HeatOperator::new(Grid::new(4096, 16.0)?, 0.5, 1.0)?;
    let (wvd, info) = build_wvd(&op, &wavelet, 0, 5)?;
    let rep = verify_dfd(&op, &wvd, 1e-8)?;
    println!(
        "WVD: {} elements, residual {:.2e}, c in [{:.4}, {:.4}], v bounds [{:.4e}, {:.4e}] ({:.2?})",
        wvd.len(),
        rep.max_residual,
        info.c_lo,
        info.c_hi,
        info.v_bounds.lower,
        info.v_bounds.upper,
        t0.elapsed()
    );
    for b in &info.levels {
        println!(
            "  level {:>2}: kappa/m in [{:.4e}, {:.4e}], predicted [{:.4e}, {:.4e}]",
            b.level, b.measured.0, b.measured.1, b.predicted.0, b.predicted.1
        );
    }

    let t0 = Instant::now();
    let op = HeatOperator::new(Grid::new(1024, 64.0)?, 1.0, 1.0)?;
    let (band, info) = build_band_dfd(&op, &wavelet, 0, 1, 40)?;
    let rep = verify_dfd(&op, &band, 1e-8)?;
    println!(
        "band DFD: {} elements ({} empty pairs pruned), residual {:.2e}, v bounds [{:.4}, {:.4}] ({:.2?})",
        band.len(),
        info.pruned,
        rep.max_residual,
        info.v_bounds.lower,
        info.v_bounds.upper,
        t0.elapsed()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
