// Meyer wavelet frame on a periodic grid: analysis, synthesis, bound
// estimates and reconstruction through the dual frame.

use dfdreg::dfd::random_in_subspace;
use dfdreg::frames::{BoundsOptions, SolveOptions};
use dfdreg::grid::Grid;
use dfdreg::heat::MeyerWavelet;

pub fn run() -> dfdreg::Result<()> {
    let grid = Grid::new(512, 8.0)?;
    let frame = MeyerWavelet::default().frame(&grid, 0, 3)?;
    println!("{} elements, {} nonzero spectral entries ({})", frame.len(), frame.nnz(), frame.truncation());

    let est = frame.estimate_bounds(&BoundsOptions::default())?;
    println!("estimated bounds [{:.12}, {:.12}], recorded {:?}", est.lower, est.upper, frame.bounds());

    let x = random_in_subspace(&grid, frame.subspace(), 7)?;
    let coeffs = frame.analysis(&x)?;
    let energy: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    println!("|x|^2 = {:.15}, sum |<x, u>|^2 = {:.15}", x.norm().powi(2), energy);

    let back = frame.reconstruct(&x, &SolveOptions::default())?;
    println!("reconstruction error {:.2e}", back.sub(&x)?.norm());
    Ok(())
}

#[allow(dead_code)]
fn main() -> dfdreg::Result<()> {
    run()
}
