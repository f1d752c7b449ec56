use std::sync::OnceLock;

use dfdreg::analysis::{delta_stars, density_check, lower_bound};
use dfdreg::bench::{diagonal_toy, fit_loglog};
use dfdreg::dfd::{add_noise, random_in_subspace, regularize, DfdSystem, FourierMultiplier, ForwardOperator};
use dfdreg::filters::Filter;
use dfdreg::frames::{Frame, IndexSet, Label, SolveOptions};
use dfdreg::grid::{Grid, GridFunction, Subspace};
use dfdreg::heat::{build_wvd, HeatOperator, MeyerWavelet};
use dfdreg::param::{a_priori_alpha, discrepancy, morozov_solve, FrameConstants, MorozovConfig};
use dfdreg::source::{source_norm, IndexFunction};
use num_complex::Complex64;
use proptest::prelude::*;

const OPTS: SolveOptions = SolveOptions { tol: 1e-13, max_iter: 5000 };

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn toy() -> &'static (FourierMultiplier, DfdSystem) {
    static T: OnceLock<(FourierMultiplier, DfdSystem)> = OnceLock::new();
    T.get_or_init(|| diagonal_toy(64, 1.0).unwrap())
}

fn small_wvd() -> &'static (HeatOperator, DfdSystem) {
    static W: OnceLock<(HeatOperator, DfdSystem)> = OnceLock::new();
    W.get_or_init(|| {
        let op = HeatOperator::new(Grid::new(512, 8.0).unwrap(), 0.5, 1.0).unwrap();
        let (sys, _) = build_wvd(&op, &MeyerWavelet::default(), 0, 3).unwrap();
        (op, sys)
    })
}

fn phi_strategy() -> impl Strategy<Value = IndexFunction> {
    prop_oneof![
        (0.05f64..4.0).prop_map(|p| IndexFunction::poly(p).unwrap()),
        (0.25f64..3.0).prop_map(|p| IndexFunction::log(p).unwrap()),
    ]
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_between_samples_and_spectrum(k in 2u32..9, length in 0.5f64..100.0, seed in any::<u64>()) {
        let grid = Grid::new(1 << k, length).unwrap();
        let x = random_in_subspace(&grid, &Subspace::Full, seed).unwrap().scaled(3.0);
        let h: f64 = x.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() * grid.spacing();
        prop_assert!(rel(x.spectrum().norm().powi(2), h) <= 1e-12);
    }

    #[test]
    fn index_sets_reject_unsorted_or_repeated_labels(mut raw in prop::collection::vec((-3i32..3, 0i32..4), 2..20)) {
        let labels = |v: &[(i32, i32)]| v.iter().map(|&(a, b)| Label(vec![a, b])).collect::<Vec<_>>();
        raw.sort();
        let has_dup = raw.windows(2).any(|w| w[0] == w[1]);
        prop_assert_eq!(IndexSet::new(labels(&raw)).is_ok(), !has_dup);
        raw.dedup();
        if raw.len() > 1 {
            raw.reverse();
            prop_assert!(IndexSet::new(labels(&raw)).is_err());
        }
    }

    #[test]
    fn frame_bounds_hold_on_the_subspace(seed in any::<u64>()) {
        let (_, sys) = small_wvd();
        for f in [sys.u(), sys.v()] {
            let b = f.bounds().unwrap();
            let x = random_in_subspace(f.grid(), f.subspace(), seed).unwrap();
            let e: f64 = f.analysis(&x).unwrap().iter().map(|c| c.norm_sqr()).sum();
            prop_assert!(e >= b.lower * (1.0 - 1e-10) && e <= b.upper * (1.0 + 1e-10), "{e} not in {b:?}");
        }
    }

    #[test]
    fn analysis_and_synthesis_are_adjoint(seed in any::<u64>(), a in coeffs(8)) {
        let (_, sys) = small_wvd();
        let f = sys.v();
        let x = random_in_subspace(f.grid(), &Subspace::Full, seed).unwrap();
        let mut full = vec![Complex64::new(0.0, 0.0); f.len()];
        for (i, c) in a.iter().enumerate() {
            full[(i * 37 + seed as usize % 11) % f.len()] += c;
        }
        let lhs: Complex64 = f.analysis(&x).unwrap().iter().zip(&full).map(|(p, q)| p * q.conj()).sum();
        let rhs = x.inner(&f.synthesis(&full).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()).max(1e-12));
    }

    #[test]
    fn dual_frame_reconstructs(seed in any::<u64>()) {
        let (_, sys) = small_wvd();
        let f = sys.v();
        prop_assert!(f.tight_constant().is_none());
        let x = random_in_subspace(f.grid(), f.subspace(), seed).unwrap();
        let back = f.reconstruct(&x, &OPTS).unwrap();
        prop_assert!(back.sub(&x).unwrap().norm() <= 1e-8 * x.norm());
    }

    #[test]
    fn tight_shortcut_matches_the_iterative_dual(c in 0.2f64..5.0, seed in any::<u64>()) {
        let grid = Grid::new(32, 3.0).unwrap();
        let funcs: Vec<GridFunction> = (0..32)
            .map(|m| {
                let mut s = vec![Complex64::new(0.0, 0.0); 32];
                s[m] = Complex64::new(c / grid.length().sqrt(), 0.0);
                dfdreg::grid::Spectrum::new(grid, s).unwrap().to_grid_function()
            })
            .collect();
        let plain = Frame::from_functions(grid, IndexSet::range(32), &funcs, Subspace::Full).unwrap();
        let tight = plain.clone().with_tight_constant(c).unwrap();
        let x = random_in_subspace(&grid, &Subspace::Full, seed).unwrap();
        let a = tight.dual_apply(&x, &OPTS).unwrap();
        let b = plain.dual_apply(&x, &OPTS).unwrap();
        prop_assert!(a.sub(&b).unwrap().norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn filter_residual_identity_and_range(alpha in 1e-8f64..10.0, mu in 0.0f64..10.0) {
        for f in [Filter::tikhonov(), Filter::spectral_cutoff()] {
            let g = f.eval(alpha, mu);
            prop_assert!((f.residual(alpha, mu) - (1.0 - mu * g)).abs() <= 1e-15);
            prop_assert!(mu * g >= 0.0 && mu * g <= f.constants().c_g * (1.0 + 1e-15));
        }
        let t = Filter::tikhonov();
        prop_assert!((alpha * mu).sqrt() * t.eval(alpha, mu) <= 0.5 * (1.0 + 1e-15));
    }

    #[test]
    fn tikhonov_residual_is_monotone(alpha in 1e-6f64..1.0, mu in 1e-6f64..1.0, s in 1.001f64..10.0) {
        let t = Filter::tikhonov();
        prop_assert!(t.residual(alpha, mu * s) < t.residual(alpha, mu));
        prop_assert!(t.residual(alpha * s, mu) > t.residual(alpha, mu));
    }

    #[test]
    fn index_functions_round_trip_and_increase(phi in phi_strategy(), u in 0.0f64..1.0, s in 1.01f64..3.0) {
        let mu = phi.mu_max().min(1.0) * 10f64.powf(-8.0 * u);
        let mu2 = (mu * s).min(phi.mu_max().min(1.0));
        let z = phi.eval(mu).unwrap();
        prop_assert!(rel(phi.inverse(z).unwrap(), mu) <= 1e-9);
        if mu2 > mu {
            prop_assert!(phi.eval(mu2).unwrap() > z);
        }
        let w = phi.theta(z).unwrap();
        prop_assert!(rel(phi.theta(phi.theta_inv(w).unwrap()).unwrap(), w) <= 1e-9);
        if mu2 > mu {
            let z2 = phi.eval(mu2).unwrap();
            prop_assert!(phi.theta(z2).unwrap() > w);
            prop_assert!(phi.theta_inv(phi.theta(z2).unwrap()).unwrap() > phi.theta_inv(w).unwrap());
        }
    }

    #[test]
    fn theta_inverse_property_for_concave_phi(p in 0.05f64..=2.0, log in any::<bool>(), t in 1e-6f64..1.0, u in 0.0f64..1.0) {
        let phi = if log { IndexFunction::log(p.max(0.25)).unwrap() } else { IndexFunction::poly(p).unwrap() };
        prop_assert!(phi.is_concave());
        let z = phi.theta_max().min(1.0) * 10f64.powf(-10.0 * u);
        let lhs = phi.theta_inv(t * t * z).unwrap();
        prop_assert!(lhs >= t * phi.theta_inv(z).unwrap() - 1e-10);
    }

    #[test]
    fn heat_operator_is_self_adjoint_and_contracting(gamma in 0.2f64..=1.0, t in 0.1f64..2.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let op = HeatOperator::new(Grid::new(256, 16.0).unwrap(), gamma, t).unwrap();
        let x = random_in_subspace(op.grid(), &Subspace::Full, s1).unwrap();
        let y = random_in_subspace(op.grid(), &Subspace::Full, s2).unwrap();
        let a = op.apply(&x).unwrap().inner(&y).unwrap();
        let b = x.inner(&op.apply_adjoint(&y).unwrap()).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-14));
        let m = op.multiplier();
        let grid = op.grid();
        let mut order: Vec<usize> = (0..grid.n()).collect();
        order.sort_by(|&i, &j| grid.frequency(i).abs().total_cmp(&grid.frequency(j).abs()));
        for w in order.windows(2) {
            prop_assert!(m[w[0]] > 0.0 && m[w[0]] <= 1.0);
            prop_assert!(m[w[1]] <= m[w[0]]);
        }
    }

    #[test]
    fn synthetic_noise_has_exact_norm(delta in 1e-8f64..10.0, seed in any::<u64>()) {
        let (op, sys) = toy();
        let y = op.apply(&random_in_subspace(sys.grid(), &Subspace::Full, seed ^ 1).unwrap()).unwrap();
        let yd = add_noise(&y, sys.range_subspace(), delta, seed).unwrap();
        prop_assert!(rel(yd.sub(&y).unwrap().norm(), delta) <= 1e-12);
    }

    #[test]
    fn diagonal_identities(alpha in 1e-6f64..1.0, seed in any::<u64>(), cutoff in any::<bool>()) {
        let (op, sys) = toy();
        let f = if cutoff { Filter::spectral_cutoff() } else { Filter::tikhonov() };
        let yd = random_in_subspace(sys.grid(), &Subspace::Full, seed).unwrap();
        let x = regularize(sys, &f, alpha, &yd, &OPTS).unwrap();
        let b = sys.v().analysis(&yd).unwrap();
        let cu = sys.u().analysis(&x).unwrap();
        let ckv = sys.v().analysis(&op.apply(&x).unwrap()).unwrap();
        let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (i, &k) in sys.kappa().iter().enumerate() {
            let g = f.eval(alpha, k * k);
            prop_assert!((cu[i] - b[i] * (k * g)).norm() <= 1e-10 * scale / alpha.sqrt());
            prop_assert!((ckv[i] - b[i] * (k * k * g)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn regularization_is_linear(alpha in 1e-6f64..1.0, s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let (_, sys) = small_wvd();
        let f = Filter::tikhonov();
        let y1 = random_in_subspace(sys.grid(), &Subspace::Full, s1).unwrap();
        let y2 = random_in_subspace(sys.grid(), &Subspace::Full, s2).unwrap();
        let lhs = regularize(sys, &f, alpha, &y1.axpy(a, &y2).unwrap(), &OPTS).unwrap();
        let rhs = regularize(sys, &f, alpha, &y1, &OPTS).unwrap()
            .axpy(a, &regularize(sys, &f, alpha, &y2, &OPTS).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12 * rhs.norm().max(lhs.norm()));
    }

    #[test]
    fn error_splits_into_bounded_terms(p in 0.5f64..4.0, alpha in 1e-5f64..0.5, delta in 1e-6f64..1e-1, seed in any::<u64>()) {
        let (op, sys) = toy();
        let c = FrameConstants::from_system(sys).unwrap();
        let phi = IndexFunction::poly(p).unwrap();
        let f = Filter::tikhonov();
        let truth = random_in_subspace(sys.grid(), &Subspace::Full, seed).unwrap();
        let e = source_norm(&truth, sys, &phi).unwrap().sqrt();
        let y = op.apply(&truth).unwrap();
        let yd = add_noise(&y, sys.range_subspace(), delta, seed ^ 7).unwrap();
        let xd = regularize(sys, &f, alpha, &yd, &OPTS).unwrap();
        let xa = regularize(sys, &f, alpha, &y, &OPTS).unwrap();
        // sup_t t^s / (1 + t) with s = p / 4
        let s = p / 4.0;
        let gamma2 = if s < 1.0 { s.powf(s) * (1.0 - s).powf(1.0 - s) } else { 1.0 };
        let noise_term = f.constants().gamma1 * (c.b_v / c.a_u).sqrt() * delta / alpha.sqrt();
        let approx_term = gamma2 / c.a_u.sqrt() * phi.eval(alpha).unwrap().sqrt() * e;
        prop_assert!(xd.sub(&xa).unwrap().norm() <= noise_term * (1.0 + 1e-10));
        prop_assert!(xa.sub(&truth).unwrap().norm() <= approx_term * (1.0 + 1e-10));
    }

    #[test]
    fn residual_inequality_on_the_toy(alpha in 1e-5f64..1.0, delta in 1e-4f64..1.0, seed in any::<u64>()) {
        let (op, sys) = toy();
        let f = Filter::tikhonov();
        let truth = random_in_subspace(sys.grid(), &Subspace::Full, seed).unwrap();
        let y = op.apply(&truth).unwrap();
        let yd = add_noise(&y, sys.range_subspace(), delta, seed ^ 3).unwrap();
        let x = regularize(sys, &f, alpha, &yd, &OPTS).unwrap();
        let ell = 1.0 / alpha;
        let lhs = x.sub(&truth).unwrap().norm().powi(2)
            + ell * (op.apply(&x).unwrap().sub(&yd).unwrap().norm().powi(2) - y.sub(&yd).unwrap().norm().powi(2));
        let cu = sys.u().analysis(&truth).unwrap();
        let rhs: f64 = sys.kappa().iter().zip(&cu).map(|(&k, c)| f.residual(alpha, k * k) * c.norm_sqr()).sum();
        prop_assert!(rhs - lhs >= -1e-9 * (1.0 + ell * delta * delta));
    }

    #[test]
    fn discrepancy_increases_and_root_ignores_the_bracket(seed in any::<u64>(), u in 0.0f64..1.0) {
        let (op, sys) = toy();
        let f = Filter::tikhonov();
        let c = FrameConstants::from_system(sys).unwrap();
        let y = op.apply(&random_in_subspace(sys.grid(), &Subspace::Full, seed).unwrap()).unwrap();
        let delta = y.norm() * 10f64.powf(-1.0 - 3.0 * u);
        let yd = add_noise(&y, sys.range_subspace(), delta, seed ^ 5).unwrap();
        let mut prev = 0.0;
        for i in 0..60 {
            let d = discrepancy(sys, &f, 10f64.powf(-9.0 + 0.2 * i as f64), &yd).unwrap();
            prop_assert!(d > prev);
            prev = d;
        }
        let mut cfg = MorozovConfig::new(1.5, c.a_v, c.b_v, 1.0);
        let a = morozov_solve(sys, &f, &cfg, &yd, delta).unwrap();
        prop_assert!((a.residual - a.target).abs() <= cfg.tol);
        cfg.bracket = (a.alpha * 0.9, a.alpha * 1.1);
        let b = morozov_solve(sys, &f, &cfg, &yd, delta).unwrap();
        prop_assert!(rel(a.alpha, b.alpha) <= 1e-8);
    }

    #[test]
    fn a_priori_alpha_decreases_in_e(phi in phi_strategy(), delta in 1e-8f64..1e-3, e in 0.5f64..100.0) {
        let a = a_priori_alpha(&phi, delta, e, 1.0).unwrap();
        prop_assert!(a_priori_alpha(&phi, delta, 2.0 * e, 1.0).unwrap() < a);
    }

    #[test]
    fn density_is_monotone_in_beta(decay in 0.3f64..3.0, b1 in 0.05f64..0.95, shrink in 0.1f64..1.0) {
        let (_, sys) = diagonal_toy(32, decay).unwrap();
        let phi = IndexFunction::poly(2.0).unwrap();
        let stars = delta_stars(sys.kappa(), &phi, 1.0, 1.0).unwrap();
        let wide = density_check(&stars, b1 * shrink, 0.9).unwrap();
        let narrow = density_check(&stars, b1, 0.9).unwrap();
        prop_assert!(wide.gaps.len() <= narrow.gaps.len());
        prop_assert!(!narrow.covered() || wide.covered());
        prop_assert!(wide.delta_stars.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn lower_bound_is_homogeneous_in_e(p in 0.5f64..4.0, r in 1e-6f64..1e-2, e in 0.1f64..10.0, k in 1.5f64..20.0) {
        let phi = IndexFunction::poly(p).unwrap();
        let a = lower_bound(&phi, e, r * e, 1.0, 1.0, 0.5).unwrap();
        let b = lower_bound(&phi, k * e, r * k * e, 1.0, 1.0, 0.5).unwrap();
        prop_assert!(rel(b, k * a) <= 1e-9);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(slope in -3.0f64..3.0, c in 0.01f64..100.0, n in 3usize..12) {
        let x: Vec<f64> = (0..n).map(|i| 10f64.powf(-(i as f64) / 2.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(slope)).collect();
        let (s, hw) = fit_loglog(&x, &y).unwrap();
        prop_assert!((s - slope).abs() <= 1e-10);
        prop_assert!(hw.unwrap() <= 1e-8);
    }
}
