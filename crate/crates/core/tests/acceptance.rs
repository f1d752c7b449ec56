//! Acceptance suite. Every criterion runs, prints one line, and the process
//! exits nonzero if any of them failed.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dfdreg::bench::{build_system, run_experiment, ExperimentConfig, OutputPaths, ProblemKind, RateTable, MOROZOV_RESIDUAL_TOL};
use dfdreg::dfd::{add_noise, random_in_subspace, regularize, verify_dfd, ForwardOperator};
use dfdreg::filters::{check_condition_c, check_discrepancy_condition, check_rate_condition, CheckGrid, Filter};
use dfdreg::frames::SolveOptions;
use dfdreg::grid::{Grid, GridFunction};
use dfdreg::heat::{envelope_constants, mittag_leffler};
use dfdreg::param::{morozov_solve, FrameConstants, MorozovConfig};
use dfdreg::source::IndexFunction;
use dfdreg::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    let s = (0..grid.n())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    GridFunction::new(grid, s).unwrap()
}

fn config(name: &str, out: &Path) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"));
    let mut cfg = ExperimentConfig::from_file(&path)?;
    cfg.outputs = OutputPaths::in_dir(out, name);
    Ok(cfg)
}

fn runtime_ok(t: Duration, limit: f64) -> bool {
    t.as_secs_f64() < limit
}

/// Dense filtered SVD of the operator matrix.
fn svd_oracle(op: &dyn ForwardOperator, filter: &Filter, alpha: f64, y: &GridFunction) -> GridFunction {
    let grid = *op.grid();
    let n = grid.n();
    let mut k = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let col = op.apply(&GridFunction::new(grid, e).unwrap()).unwrap();
        for (i, v) in col.samples().iter().enumerate() {
            k[(i, j)] = *v;
        }
    }
    let svd = k.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let yv = DMatrix::from_column_slice(n, 1, y.samples());
    let mut c = u.adjoint() * yv;
    for (i, s) in svd.singular_values.iter().enumerate() {
        c[i] *= s * filter.eval(alpha, s * s);
    }
    let x = vt.adjoint() * c;
    GridFunction::new(grid, x.iter().copied().collect()).unwrap()
}

fn c01_svd_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for (f, filter) in [Filter::tikhonov(), Filter::spectral_cutoff()].iter().enumerate() {
        let decay = 0.5 + f as f64;
        let (op, sys) = build_system(ProblemKind::DiagonalToy { decay }, 64, 0.0, 0, 0, 0)?;
        for _ in 0..20 {
            let alpha = 10f64.powf(r.random_range(-6.0..0.0));
            let y = complex_gaussian(*sys.grid(), &mut r);
            let x = regularize(&sys, filter, alpha, &y, &SolveOptions::default())?;
            let oracle = svd_oracle(op.as_ref(), filter, alpha, &y);
            worst = worst.max(x.sub(&oracle)?.norm() / oracle.norm());
        }
    }
    let t = start.elapsed();
    Ok((worst <= 1e-12 && runtime_ok(t, 1.0), format!("max relative deviation {worst:.2e}, {:.2} s", t.as_secs_f64())))
}

fn c02_verify_systems() -> Outcome {
    let start = Instant::now();
    let wvd = build_system(ProblemKind::FractionalBackward { gamma: 0.5, t: 1.0 }, 4096, 16.0, 0, 5, 0)?;
    let band = build_system(ProblemKind::ClassicalBackward { t: 1.0 }, 1024, 64.0, 0, 1, 40)?;
    let a = verify_dfd(wvd.0.as_ref(), &wvd.1, 1e-8)?;
    let b = verify_dfd(band.0.as_ref(), &band.1, 1e-8)?;
    let t = start.elapsed();
    Ok((
        a.passed && b.passed && runtime_ok(t, 30.0),
        format!("wvd residual {:.2e}, band residual {:.2e}, {:.1} s", a.max_residual, b.max_residual, t.as_secs_f64()),
    ))
}

fn c03_band_parseval() -> Outcome {
    let (_, sys) = build_system(ProblemKind::ClassicalBackward { t: 1.0 }, 1024, 64.0, 0, 1, 40)?;
    let u = sys.u();
    let a = u.tight_constant().ok_or("band u-frame is not marked tight")?;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let x = random_in_subspace(u.grid(), u.subspace(), 1000 + seed)?;
        let energy: f64 = u.analysis(&x)?.iter().map(|c| c.norm_sqr()).sum();
        let nx = x.norm().powi(2);
        worst = worst.max((energy - a * a * nx).abs() / nx);
    }
    Ok((worst <= 1e-10, format!("tight constant {a}, max Parseval defect {worst:.2e}")))
}

fn slope_line(t: &RateTable) -> String {
    match (t.slope, t.slope_ci) {
        (Some(s), Some([lo, hi])) => format!("slope {s:.4} (95% CI [{lo:.4}, {hi:.4}])"),
        (s, _) => format!("slope {s:?}"),
    }
}

fn c04_fractional_rate(t: &RateTable, secs: f64) -> Outcome {
    let ok = t.slope.is_some_and(|s| (s - 0.5).abs() <= 0.15) && t.rows.iter().all(|r| r.max_error.is_finite()) && secs < 120.0;
    Ok((ok, format!("{}, {secs:.1} s", slope_line(t))))
}

fn c05_posterior_rate(out: &Path) -> Outcome {
    let t = run_experiment(&config("fractional_morozov", out)?)?;
    let gap = t.rows.iter().filter_map(|r| r.morozov_max_gap).fold(0.0, f64::max);
    let draws = t.config.as_ref().map_or(1, |c| c.noise_draws);
    let solved = t.rows.iter().all(|r| r.unsolved < draws + 2);
    let ok = t.slope.is_some_and(|s| (s - 0.5).abs() <= 0.15) && gap <= MOROZOV_RESIDUAL_TOL && solved;
    Ok((ok, format!("{}, largest |d - target| {gap:.2e}", slope_line(&t))))
}

fn c06_log_rate(out: &Path) -> Outcome {
    let t = run_experiment(&config("classical", out)?)?;
    let ratios: Vec<f64> = t.rows.iter().filter_map(|r| r.ratio).collect();
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let decades = (t.rows[0].delta / t.rows[t.rows.len() - 1].delta).log10();
    let ok = ratios.len() == t.rows.len() && decades >= 2.0 - 1e-12 && lo > 0.0 && hi / lo <= 4.0;
    Ok((ok, format!("ratio in [{lo:.3}, {hi:.3}], spread {:.3} over {decades:.1} decades", hi / lo)))
}

fn c07_sandwich(t: &RateTable) -> Outcome {
    let covered: Vec<_> = t.rows.iter().filter(|r| r.covered == Some(true)).collect();
    let mut ok = !covered.is_empty();
    let mut detail = Vec::new();
    for r in &covered {
        let w = r.worst_case.ok_or("sandwich column missing")?;
        ok &= r.lower_bound <= w && w <= r.upper_bound;
        detail.push(format!("{:.1e}: {:.3e} <= {:.3e} <= {:.3e}", r.delta, r.lower_bound, w, r.upper_bound));
    }
    Ok((ok, format!("{} covered rows; {}", covered.len(), detail.join("; "))))
}

fn c08_theta_property() -> Outcome {
    let mut r = rng(808);
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    let mut phis: Vec<IndexFunction> = vec![IndexFunction::poly(2.0)?];
    for _ in 0..7 {
        phis.push(IndexFunction::poly(r.random_range(0.05..2.0))?);
    }
    for p in [0.5, 1.0, 2.0] {
        phis.push(IndexFunction::log(p)?);
    }
    let per = 1000 / phis.len() + 1;
    for phi in &phis {
        let top = phi.theta_max().min(1.0);
        for _ in 0..per {
            let z = top * 10f64.powf(-r.random_range(0.0..12.0));
            let t: f64 = r.random_range(1e-6..=1.0);
            let margin = phi.theta_inv(t * t * z)? - t * phi.theta_inv(z)?;
            worst = worst.min(margin);
            cases += 1;
        }
    }
    Ok((cases >= 1000 && worst >= -1e-10, format!("{cases} cases, smallest margin {worst:.3e}")))
}

fn c09_filters() -> Outcome {
    let grid = CheckGrid::default();
    let phi = IndexFunction::poly(2.0)?;
    let t = Filter::tikhonov();
    let c = check_condition_c(&t, &grid);
    let a = check_rate_condition(&t, &phi, &grid)?;
    let b = check_discrepancy_condition(&t, &grid);
    let adversarial = Filter::custom("doubled", *t.constants(), |a, mu| 2.0 / (a + mu));
    let adv = check_condition_c(&adversarial, &grid);
    let ok = c.passed
        && a.passed
        && (a.gamma1_est - 0.5).abs() <= 1e-6
        && b.passed
        && (b.rho_est - 1.0).abs() <= 1e-6
        && (b.ell_min - 1.0).abs() <= 1e-9
        && (b.ell_max - 1.0).abs() <= 1e-9
        && !adv.c2_holds;
    Ok((
        ok,
        format!(
            "gamma1 {:.9}, rho {:.9}, alpha ell in [{}, {}], adversarial sup mu g = {}",
            a.gamma1_est, b.rho_est, b.ell_min, b.ell_max, adv.c2_sup
        ),
    ))
}

/// `e^{x^2} erfc(x)` for `x >= 0`: a positive-term erf series below 2, the
/// Laplace continued fraction above.
fn erfcx(x: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    if x < 2.0 {
        let (mut term, mut sum, mut n) = (1.0, 1.0, 0.0);
        while term > 1e-18 * sum {
            n += 1.0;
            term *= 2.0 * x * x / (2.0 * n + 1.0);
            sum += term;
        }
        return (x * x).exp() - 2.0 * x / sqrt_pi * sum;
    }
    let mut f = x;
    for k in (1..5000).rev() {
        f = x + 0.5 * k as f64 / f;
    }
    1.0 / (sqrt_pi * f)
}

fn c10_mittag_leffler() -> Outcome {
    let mut exp_err: f64 = 0.0;
    for i in 0..=5000 {
        let z = -50.0 * i as f64 / 5000.0;
        exp_err = exp_err.max((mittag_leffler(1.0, z)? - z.exp()).abs());
    }
    let mut erfc_err: f64 = 0.0;
    for i in 0..=3000 {
        let x = 30.0 * i as f64 / 3000.0;
        let want = erfcx(x);
        erfc_err = erfc_err.max((mittag_leffler(0.5, -x)? - want).abs() / want);
    }
    let mut env_ok = true;
    let mut spans = Vec::new();
    let mut r = rng(1010);
    for g in [0.25, 0.5, 0.75, 0.9] {
        let (lo, hi) = envelope_constants(g, 1e6)?;
        env_ok &= lo > 0.0 && hi.is_finite();
        for _ in 0..400 {
            let x = 10f64.powf(r.random_range(-4.0..6.0));
            let v = (1.0 + x) * mittag_leffler(g, -x)?;
            env_ok &= v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9);
        }
        spans.push(format!("{g}: [{lo:.4}, {hi:.4}]"));
    }
    Ok((
        exp_err <= 1e-13 && erfc_err <= 1e-10 && env_ok,
        format!("exp error {exp_err:.1e}, erfc identity error {erfc_err:.1e}, envelopes {}", spans.join(" ")),
    ))
}

fn c11_morozov_solvability() -> Outcome {
    let (op, sys) = build_system(ProblemKind::DiagonalToy { decay: 1.0 }, 256, 0.0, 0, 0, 0)?;
    let c = FrameConstants::from_system(&sys)?;
    let filter = Filter::tikhonov();
    let cfg = MorozovConfig::new(1.5, c.a_v, c.b_v, filter.constants().rho);
    let mut r = rng(1111);
    let (mut solved, mut refused, mut wrong) = (0, 0, 0);
    let mut gap: f64 = 0.0;
    for i in 0..40 {
        let x = random_in_subspace(sys.grid(), sys.u().subspace(), 5000 + i)?;
        let y = op.apply(&x)?;
        let delta = y.norm() * 10f64.powf(r.random_range(-4.0..0.5));
        let yd = add_noise(&y, sys.range_subspace(), delta, 6000 + i)?;
        let holds = cfg.tau * c.b_v.sqrt() * delta < cfg.rho * c.a_v.sqrt() * sys.range_subspace().project(&yd).norm();
        match (holds, morozov_solve(&sys, &filter, &cfg, &yd, delta)) {
            (true, Ok(sol)) => {
                solved += 1;
                gap = gap.max((sol.residual - sol.target).abs());
            }
            (false, Err(Error::NotSolvable { .. })) => refused += 1,
            _ => wrong += 1,
        }
    }
    let ok = wrong == 0 && solved > 0 && refused > 0 && gap <= MOROZOV_RESIDUAL_TOL;
    Ok((ok, format!("{solved} solved (largest gap {gap:.1e}), {refused} refused, {wrong} wrong")))
}

fn c12_determinism(out: &Path) -> Outcome {
    let mut csvs = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut exit_ok = true;
    for run in ["a", "b"] {
        let dir = out.join(format!("toy_{run}"));
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_dfdreg"))
            .args(["bench", "toy", "--quick", "--seed", "7", "--out-dir"])
            .arg(&dir)
            .output()?
            .status;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        exit_ok &= status.success();
        let mut bytes = std::fs::read(dir.join("toy_apriori.csv"))?;
        bytes.extend(std::fs::read(dir.join("toy_morozov.csv"))?);
        csvs.push(bytes);
    }
    let same = csvs[0] == csvs[1];
    Ok((same && exit_ok && slowest < 10.0, format!("identical CSV {same}, exit 0 {exit_ok}, slowest run {slowest:.2} s")))
}

fn main() -> ExitCode {
    let out = tempfile::tempdir().expect("temporary directory");
    let dir = out.path();

    let start = Instant::now();
    let fractional = config("fractional_apriori", dir).and_then(|c| Ok(run_experiment(&c)?));
    let secs = start.elapsed().as_secs_f64();

    let from_fractional = |f: &dyn Fn(&RateTable) -> Outcome| -> Outcome {
        match &fractional {
            Ok(t) => f(t),
            Err(e) => Err(e.to_string().into()),
        }
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("1 filtered SVD oracle", c01_svd_oracle()),
        ("2 decomposition check", c02_verify_systems()),
        ("3 band Parseval", c03_band_parseval()),
        ("4 fractional a priori rate", from_fractional(&|t| c04_fractional_rate(t, secs))),
        ("5 fractional discrepancy rate", c05_posterior_rate(dir)),
        ("6 logarithmic rate", c06_log_rate(dir)),
        ("7 lower/upper sandwich", from_fractional(&c07_sandwich)),
        ("8 Theta property", c08_theta_property()),
        ("9 filter conditions", c09_filters()),
        ("10 Mittag-Leffler", c10_mittag_leffler()),
        ("11 discrepancy solvability", c11_morozov_solvability()),
        ("12 determinism", c12_determinism(dir)),
    ];

    let mut failed = 0;
    for (name, outcome) in results {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!("criterion {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
