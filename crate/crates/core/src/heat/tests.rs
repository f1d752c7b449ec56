use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::dfd::{random_in_subspace, verify_dfd, ForwardOperator};
use crate::grid::{Grid, GridFunction};

#[test]
fn meyer_profile_partitions_unity() {
    let w = MeyerWavelet::default();
    assert_eq!(meyer::nu(0.0), 0.0);
    assert_eq!(meyer::nu(1.0), 1.0);
    assert!((meyer::nu(0.5) - 0.5).abs() < 1e-15);
    for i in 0..2000 {
        let xi = 0.01 + i as f64 * 0.005;
        // |phi(xi/2)|^2 = |phi(xi)|^2 + |psi(xi)|^2
        let lhs = w.phi_hat(xi / 2.0).powi(2);
        let rhs = w.phi_hat(xi).powi(2) + w.psi_hat_abs(xi).powi(2);
        assert!((lhs - rhs).abs() < 1e-14, "xi={xi}");
    }
}

#[test]
fn meyer_basis_is_orthonormal() {
    let grid = Grid::new(256, 4.0).unwrap();
    let f = MeyerWavelet::default().frame(&grid, 0, 2).unwrap();
    assert_eq!(f.len(), 4 + 4 + 8 + 16);
    let dense: Vec<Vec<Complex64>> = f.elements().iter().map(|e| e.to_dense(grid.n())).collect();
    let mut worst: f64 = 0.0;
    for (a, ea) in dense.iter().enumerate() {
        for (b, eb) in dense.iter().enumerate() {
            let g: Complex64 = ea.iter().zip(eb).map(|(x, y)| x * y.conj()).sum::<Complex64>() * grid.length();
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - want).norm());
        }
    }
    assert!(worst < 1e-12, "Gram defect {worst:e}");
    for i in 0..f.len() {
        assert!(f.element(i).max_imag() < 1e-14);
    }
}

#[test]
fn meyer_frame_is_parseval_on_its_band() {
    let grid = Grid::new(512, 8.0).unwrap();
    let f = MeyerWavelet::default().frame(&grid, -1, 3).unwrap();
    for seed in 0..5 {
        let x = random_in_subspace(&grid, f.subspace(), seed).unwrap();
        let e = f.frame_norm_sqr(&x).unwrap();
        assert!((e - x.norm().powi(2)).abs() < 1e-12 * e);
    }
    assert!(MeyerWavelet::default().frame(&grid, 0, 6).is_err());
    assert!(MeyerWavelet::default().frame(&Grid::new(512, 6.0).unwrap(), -2, 1).is_err());
}

#[test]
fn heat_operator_acts_diagonally() {
    let grid = Grid::new(64, 2.0 * PI).unwrap();
    let op = HeatOperator::new(grid.clone(), 1.0, 1.0).unwrap();
    let mode = GridFunction::from_fn(grid.clone(), |x| Complex64::from_polar(1.0, x));
    let out = op.forward(&mode).unwrap();
    for (o, i) in out.samples().iter().zip(mode.samples()) {
        assert!((o - i * (-1f64).exp()).norm() < 1e-15);
    }
    assert!(op.forward(&GridFunction::zeros(grid.clone())).unwrap().norm() == 0.0);

    let frac = HeatOperator::new(grid.clone(), 0.5, 2.0).unwrap();
    let m = frac.multiplier();
    let want = mittag_leffler(0.5, -4.0 * 2f64.sqrt()).unwrap();
    assert!((m[2] - want).abs() < 1e-15 && m[2] == m[62]);
    for w in m[..32].windows(2) {
        assert!(w[1] < w[0] && w[1] > 0.0);
    }
    assert!(HeatOperator::new(grid, 0.0, 1.0).is_err());
}

#[test]
fn heat_adjoint_matches_forward() {
    let grid = Grid::new(256, 10.0).unwrap();
    let op = HeatOperator::new(grid.clone(), 0.7, 0.5).unwrap();
    let full = crate::grid::Subspace::Full;
    for seed in 0..5 {
        let x = random_in_subspace(&grid, &full, seed).unwrap();
        let y = random_in_subspace(&grid, &full, seed + 100).unwrap();
        let lhs = op.apply(&x).unwrap().inner(&y).unwrap();
        let rhs = x.inner(&op.apply_adjoint(&y).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
    }
}

#[test]
fn wvd_small_grid() {
    let grid = Grid::new(512, 4.0).unwrap();
    let op = HeatOperator::new(grid, 0.5, 1.0).unwrap();
    let (sys, info) = build_wvd(&op, &MeyerWavelet::default(), 0, 3).unwrap();
    assert_eq!(wvd_kappa(3), 0.015625);
    assert_eq!(wvd_kappa(0), 1.0);
    let rep = verify_dfd(&op, &sys, 1e-12).unwrap();
    assert!(rep.passed, "{rep:?}");
    for b in &info.levels {
        assert!(b.measured.0 >= b.predicted.0 && b.measured.1 <= b.predicted.1, "{b:?}");
    }
    assert!(info.v_bounds.lower > 0.0 && info.v_bounds.upper >= info.v_bounds.lower);
    assert!(build_wvd(&HeatOperator::new(Grid::new(512, 4.0).unwrap(), 1.0, 1.0).unwrap(), &MeyerWavelet::default(), 0, 3).is_err());
}

#[test]
fn band_dfd_small_grid() {
    let grid = Grid::new(256, 16.0).unwrap();
    let op = HeatOperator::new(grid.clone(), 1.0, 1.0).unwrap();
    let (sys, info) = build_band_dfd(&op, &MeyerWavelet::default(), 0, 1, 12).unwrap();
    assert!(info.pruned > 0);
    assert!((band_kappa(2, 1.0) - 0.1353352832366127).abs() < 1e-16);
    let rep = verify_dfd(&op, &sys, 1e-12).unwrap();
    assert!(rep.passed, "{rep:?}");
    for seed in 0..5 {
        let x = random_in_subspace(&grid, sys.u().subspace(), seed).unwrap();
        let e = sys.u().frame_norm_sqr(&x).unwrap();
        assert!((e - x.norm().powi(2)).abs() < 1e-12 * e);
    }
    let est = sys.v().estimate_bounds(&Default::default()).unwrap();
    let b = info.v_bounds;
    assert!((est.lower - b.lower).abs() < 1e-6 * b.lower && (est.upper - b.upper).abs() < 1e-6 * b.upper);
    assert!(b.upper <= (2f64).exp());
}

#[test]
fn sobolev_norm_of_a_mode() {
    let grid = Grid::new(64, 2.0 * PI).unwrap();
    let mode = GridFunction::from_fn(grid, |x| Complex64::from_polar(1.0, 3.0 * x));
    let n0 = mode.norm();
    assert!((sobolev_norm(&mode, 1.0) - n0 * 10f64.sqrt()).abs() < 1e-12);
}
