//! Convergence-rate experiments: reconstruct a synthesized truth from
//! noisy data over a sweep of noise levels and fit the observed rate.
//!
//! Three problems are available: the time-fractional backward heat
//! problem on its wavelet-vaguelette decomposition, the classical backward
//! heat problem on its band-partitioned decomposition, and a diagonal toy
//! on the Fourier basis with `kappa_m = (|m'| + 1)^{-a}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analysis::{delta_stars, density_check, empirical_worst_case, lower_bound, worst_case_noise, DensityReport, WorstCaseSetup};
use crate::dfd::{noise, regularize, DfdSystem, FourierMultiplier, ForwardOperator};
use crate::error::{Error, Result};
use crate::filters::{check_condition_c, check_discrepancy_condition, check_rate_condition, CheckGrid, Filter};
use crate::frames::{Frame, IndexSet, SolveOptions, SparseSpectrum};
use crate::grid::{Grid, GridFunction, Spectrum, Subspace};
use crate::heat::{build_band_dfd, build_wvd, sobolev_norm, HeatOperator, MeyerWavelet};
use crate::param::{a_priori_alpha, apriori_error_bound, morozov_solve, posterior_error_bound, FrameConstants, MorozovConfig, Rule};
use crate::source::{source_norm, sobolev_to_source, IndexFunction};

pub const CSV_HEADER: [&str; 6] = ["delta", "alpha", "mean_error", "max_error", "lower_bound", "upper_bound"];

/// Largest accepted `|d(alpha_D) - tau sqrt(B_v) delta|`.
pub const MOROZOV_RESIDUAL_TOL: f64 = 1e-10;

/// Power iterations for the adversarial noise direction.
const POWER_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    FractionalBackward { gamma: f64, t: f64 },
    ClassicalBackward { t: f64 },
    /// `kappa_m = (|m'| + 1)^{-decay}` on the Fourier basis of `[0, 2 pi)`.
    DiagonalToy { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    APriori,
    Morozov { tau: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl OutputPaths {
    /// `<dir>/<stem>.csv`, `.json` and `.dat`.
    pub fn in_dir(dir: &Path, stem: &str) -> Self {
        Self {
            csv: Some(dir.join(format!("{stem}.csv"))),
            json: Some(dir.join(format!("{stem}.json"))),
            plot: Some(dir.join(format!("{stem}.dat"))),
        }
    }
}

/// Fully resolved experiment description; embedded in every JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub phi: String,
    pub filter: String,
    pub rule: RuleSpec,
    pub delta_sweep: Vec<f64>,
    pub noise_draws: usize,
    pub seed: u64,
    pub n: usize,
    pub length: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub n_max: u32,
    /// `|theta_0|_{H^q}` of the synthesized truth.
    pub truth_norm: f64,
    /// Extra decay `s` of the truth spectrum beyond the source smoothness.
    pub smoothness_margin: f64,
    pub expected_slope: Option<f64>,
    pub slope_tol: f64,
    /// Classical problem: accepted max/min of the ratio column.
    pub ratio_max: f64,
    pub sandwich: bool,
    /// Random source-set members per row in the worst-case search.
    pub worst_case_draws: usize,
    pub outputs: OutputPaths,
}

/// Flat key-value form read from TOML.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: String,
    gamma: Option<f64>,
    t: Option<f64>,
    decay: Option<f64>,
    phi: String,
    filter: Option<String>,
    rule: Option<String>,
    tau: Option<f64>,
    delta_sweep: Vec<f64>,
    noise_draws: Option<usize>,
    seed: Option<u64>,
    n: Option<usize>,
    length: Option<f64>,
    j_min: Option<i32>,
    j_max: Option<i32>,
    n_max: Option<u32>,
    truth_norm: Option<f64>,
    smoothness_margin: Option<f64>,
    expected_slope: Option<f64>,
    slope_tol: Option<f64>,
    ratio_max: Option<f64>,
    sandwich: Option<bool>,
    worst_case_draws: Option<usize>,
    output_csv: Option<PathBuf>,
    output_json: Option<PathBuf>,
    output_plot: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let cfg_err = |m: &str| Error::Config(m.to_string());
        let problem = match raw.problem.as_str() {
            "fractional_backward" => ProblemKind::FractionalBackward {
                gamma: raw.gamma.unwrap_or(0.5),
                t: raw.t.unwrap_or(1.0),
            },
            "classical_backward" => {
                if raw.gamma.is_some_and(|g| g != 1.0) {
                    return Err(cfg_err("classical_backward fixes gamma = 1"));
                }
                ProblemKind::ClassicalBackward { t: raw.t.unwrap_or(1.0) }
            }
            "diagonal_toy" => ProblemKind::DiagonalToy { decay: raw.decay.unwrap_or(1.0) },
            other => return Err(Error::Config(format!("unknown problem '{other}'"))),
        };
        let rule = match raw.rule.as_deref().unwrap_or("apriori") {
            "apriori" | "a_priori" => RuleSpec::APriori,
            "morozov" => RuleSpec::Morozov { tau: raw.tau.unwrap_or(1.5) },
            other => return Err(Error::Config(format!("unknown rule '{other}'"))),
        };
        let (n, length, j_min, j_max) = match problem {
            ProblemKind::FractionalBackward { .. } => (4096, 16.0, 0, 5),
            ProblemKind::ClassicalBackward { .. } => (1024, 64.0, 0, 1),
            ProblemKind::DiagonalToy { .. } => (64, 2.0 * PI, 0, 0),
        };
        if matches!(problem, ProblemKind::DiagonalToy { .. }) && raw.length.is_some() {
            return Err(cfg_err("the diagonal toy lives on [0, 2 pi); drop 'length'"));
        }
        let cfg = Self {
            problem,
            phi: raw.phi,
            filter: raw.filter.unwrap_or_else(|| "tikhonov".into()),
            rule,
            delta_sweep: raw.delta_sweep,
            noise_draws: raw.noise_draws.unwrap_or(10),
            seed: raw.seed.unwrap_or(0),
            n: raw.n.unwrap_or(n),
            length: raw.length.unwrap_or(length),
            j_min: raw.j_min.unwrap_or(j_min),
            j_max: raw.j_max.unwrap_or(j_max),
            n_max: raw.n_max.unwrap_or(40),
            truth_norm: raw.truth_norm.unwrap_or(1.0),
            smoothness_margin: raw.smoothness_margin.unwrap_or(0.51),
            expected_slope: raw.expected_slope,
            slope_tol: raw.slope_tol.unwrap_or(0.15),
            ratio_max: raw.ratio_max.unwrap_or(4.0),
            sandwich: raw.sandwich.unwrap_or(false),
            worst_case_draws: raw.worst_case_draws.unwrap_or(4),
            outputs: OutputPaths { csv: raw.output_csv, json: raw.output_json, plot: raw.output_plot },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.delta_sweep.is_empty() {
            return bad("delta_sweep is empty".into());
        }
        if self.delta_sweep.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return bad("delta_sweep entries must be positive".into());
        }
        if self.delta_sweep.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta_sweep must be strictly decreasing".into());
        }
        if self.noise_draws == 0 {
            return bad("noise_draws must be at least 1".into());
        }
        if !(self.truth_norm > 0.0 && self.truth_norm.is_finite()) {
            return bad(format!("truth_norm must be positive, got {}", self.truth_norm));
        }
        if !(self.smoothness_margin >= 0.0) {
            return bad("smoothness_margin must be nonnegative".into());
        }
        if !(self.slope_tol > 0.0 && self.ratio_max >= 1.0) {
            return bad("slope_tol must be positive and ratio_max at least 1".into());
        }
        if let RuleSpec::Morozov { tau } = self.rule {
            if !(tau > 1.0) {
                return bad(format!("tau must exceed 1, got {tau}"));
            }
        }
        if let ProblemKind::DiagonalToy { decay } = self.problem {
            if !(decay > 0.0) {
                return bad(format!("toy decay must be positive, got {decay}"));
            }
        }
        Ok(())
    }

    /// Diagonal toy with `kappa_m = 1 / (|m'| + 1)`, `phi = mu`, Tikhonov.
    pub fn toy(rule: RuleSpec, quick: bool, seed: u64) -> Self {
        let (n, draws, points) = if quick { (256, 10, 6) } else { (1024, 40, 9) };
        let delta_sweep = (0..points).map(|i| 10f64.powf(-1.0 - 2.0 * i as f64 / (points - 1) as f64)).collect();
        Self {
            problem: ProblemKind::DiagonalToy { decay: 1.0 },
            phi: "poly:p=2".into(),
            filter: "tikhonov".into(),
            rule,
            delta_sweep,
            noise_draws: draws,
            seed,
            n,
            length: 2.0 * PI,
            j_min: 0,
            j_max: 0,
            n_max: 0,
            truth_norm: 1.0,
            smoothness_margin: 0.51,
            expected_slope: Some(0.5),
            slope_tol: 0.1,
            ratio_max: 4.0,
            sandwich: true,
            worst_case_draws: 4,
            outputs: OutputPaths::default(),
        }
    }
}

/// A forward operator with its decomposition and the Sobolev certificate
/// `sqrt(source_norm) <= C |theta|_{H^q}`.
pub struct Problem {
    pub op: Box<dyn ForwardOperator>,
    pub sys: DfdSystem,
    pub constants: FrameConstants,
    pub sobolev_order: f64,
    pub sobolev_constant: f64,
}

/// Fourier basis of `[0, 2 pi)` with `K` diagonal, `kappa_m = (|m'| + 1)^{-decay}`.
pub fn diagonal_toy(n: usize, decay: f64) -> Result<(FourierMultiplier, DfdSystem)> {
    let grid = Grid::new(n, 2.0 * PI)?;
    let scale = Complex64::new(1.0 / grid.length().sqrt(), 0.0);
    let elems = (0..n).map(|m| SparseSpectrum { indices: vec![m as u32], values: vec![scale] }).collect();
    let kappa: Vec<f64> = (0..n).map(|m| (grid.signed_index(m).abs() as f64 + 1.0).powf(-decay)).collect();
    let u = Frame::new(grid, IndexSet::range(n), elems, Subspace::Full)?
        .with_tight_constant(1.0)?
        .with_minimal(Some(true))
        .with_truncation(format!("all {n} Fourier modes"));
    let op = FourierMultiplier::from_real(grid, &kappa)?;
    Ok((op, DfdSystem::new(u.clone(), u, kappa)?))
}

/// Forward operator and decomposition for a problem kind. The toy ignores
/// `length`, the heat problems take `j_min..=j_max` and the band problem
/// `n_max`.
pub fn build_system(
    kind: ProblemKind,
    n: usize,
    length: f64,
    j_min: i32,
    j_max: i32,
    n_max: u32,
) -> Result<(Box<dyn ForwardOperator>, DfdSystem)> {
    let wavelet = MeyerWavelet::default();
    match kind {
        ProblemKind::FractionalBackward { gamma, t } => {
            let op = HeatOperator::new(Grid::new(n, length)?, gamma, t)?;
            let (sys, _) = build_wvd(&op, &wavelet, j_min, j_max)?;
            Ok((Box::new(op), sys))
        }
        ProblemKind::ClassicalBackward { t } => {
            let op = HeatOperator::new(Grid::new(n, length)?, 1.0, t)?;
            let (sys, _) = build_band_dfd(&op, &wavelet, j_min, j_max, n_max)?;
            Ok((Box::new(op), sys))
        }
        ProblemKind::DiagonalToy { decay } => {
            let (op, sys) = diagonal_toy(n, decay)?;
            Ok((Box::new(op), sys))
        }
    }
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig, phi: &IndexFunction) -> Result<Self> {
        let poly = matches!(phi, IndexFunction::Poly { .. });
        let wanted = match cfg.problem {
            ProblemKind::ClassicalBackward { .. } => !poly,
            _ => poly,
        };
        if !wanted {
            return Err(Error::Config(format!("{phi} does not match the {:?} problem", cfg.problem)));
        }
        let (op, sys) = build_system(cfg.problem, cfg.n, cfg.length, cfg.j_min, cfg.j_max, cfg.n_max)?;
        let constants = FrameConstants::from_system(&sys)?;
        let p = phi.p();
        let (q, c) = match cfg.problem {
            // 2^{2 j p} <= (1 + w^2)^p on level j's support, and the squared
            // wavelet spectra sum to one.
            ProblemKind::FractionalBackward { .. } => (p, 1.0),
            ProblemKind::ClassicalBackward { t } => (p, sobolev_to_source(p, 1.0, t, constants.b_u)?),
            // (1 + |m|)^{a p} <= 2^{a p / 2} (1 + m^2)^{a p / 2}
            ProblemKind::DiagonalToy { decay } => (0.5 * decay * p, 2f64.powf(0.25 * decay * p)),
        };
        Ok(Self { op, sys, constants, sobolev_order: q, sobolev_constant: c })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceTruth {
    #[serde(skip)]
    pub theta: GridFunction,
    pub sobolev_order: f64,
    pub sobolev_norm: f64,
    /// Source radius certified from the Sobolev norm.
    pub e: f64,
    /// `sqrt(source_norm)`, measured.
    pub source_radius: f64,
}

/// Real truth on the `u` subspace with `|F theta(w)| ~ (1 + w^2)^{-(q + s)/2}`
/// and random phases, scaled to `|theta|_{H^q} = truth_norm`. The reported
/// `E = C |theta|_{H^q}` is checked against the measured source norm.
pub fn make_source_truth(cfg: &ExperimentConfig, problem: &Problem, phi: &IndexFunction) -> Result<SourceTruth> {
    let sys = &problem.sys;
    let grid = *sys.grid();
    let n = grid.n();
    let q = problem.sobolev_order;
    let mask = sys.u().subspace();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7275_7468);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..=n / 2 {
        let mirror = (n - m) % n;
        if !mask.contains_bin(m) || (m != 0 && m == mirror) {
            continue;
        }
        let w = grid.frequency(m);
        let amp = (1.0 + w * w).powf(-0.5 * (q + cfg.smoothness_margin));
        if m == 0 {
            coeffs[0] = Complex64::new(if rng.random_bool(0.5) { amp } else { -amp }, 0.0);
        } else {
            let c = Complex64::from_polar(amp, 2.0 * PI * rng.random::<f64>());
            coeffs[m] = c;
            coeffs[mirror] = c.conj();
        }
    }
    let raw = Spectrum::new(grid, coeffs)?.to_grid_function();
    let hq = sobolev_norm(&raw, q);
    if !(hq > 0.0) {
        return Err(Error::Degenerate("truth spectrum vanishes on the u subspace".into()));
    }
    let theta = raw.scaled(cfg.truth_norm / hq);
    let e = problem.sobolev_constant * cfg.truth_norm;
    let s = source_norm(&theta, sys, phi)?;
    if s > e * e * (1.0 + 1e-12) {
        return Err(Error::Degenerate(format!("source certificate fails: source norm {s:e} > E^2 = {:e}", e * e)));
    }
    Ok(SourceTruth { theta, sobolev_order: q, sobolev_norm: cfg.truth_norm, e, source_radius: s.sqrt() })
}

/// Smallest ratio between consecutive distinct `delta*`: the largest `beta`
/// for which the intervals `[delta*, delta* / beta]` leave no gaps.
pub fn covering_beta(delta_stars: &[f64]) -> Option<f64> {
    let mut ds: Vec<f64> = delta_stars.iter().copied().filter(|d| d.is_finite() && *d > 0.0).collect();
    ds.sort_by(|a, b| b.total_cmp(a));
    ds.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    ds.windows(2).map(|w| w[1] / w[0]).min_by(f64::total_cmp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub delta: f64,
    /// The a priori `alpha`, or the mean of the discrepancy `alpha` over draws.
    pub alpha: f64,
    /// Mean error over the Gaussian draws.
    pub mean_error: f64,
    /// Largest error over Gaussian and adversarial noise.
    pub max_error: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// `max(max_error, empirical worst case)` when the sandwich is run.
    pub worst_case: Option<f64>,
    pub covered: Option<bool>,
    /// `max_error / (E (-ln(delta / E))^{-p})` for the logarithmic problem.
    pub ratio: Option<f64>,
    pub morozov_max_gap: Option<f64>,
    pub unsolved: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RateTable {
    pub config: Option<ExperimentConfig>,
    pub rows: Vec<RateRow>,
    pub slope: Option<f64>,
    /// 95% Student-t interval for the slope.
    pub slope_ci: Option<[f64; 2]>,
    pub slope_half_width: Option<f64>,
    pub pass_flags: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    pub truth: Option<SourceTruth>,
    pub constants: Option<FrameConstants>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub rho: Option<f64>,
    pub density: Option<DensityReport>,
}

impl RateTable {
    pub fn passed(&self) -> bool {
        self.pass_flags.values().all(|&b| b)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            let vals = [r.delta, r.alpha, r.mean_error, r.max_error, r.lower_bound, r.upper_bound];
            w.write_record(vals.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// `log10(delta) log10(max_error)` per line.
    pub fn plot_data(&self) -> String {
        self.rows.iter().map(|r| format!("{:e} {:e}\n", r.delta.log10(), r.max_error.log10())).collect()
    }
}

pub fn emit_outputs(table: &RateTable, paths: &OutputPaths) -> Result<()> {
    let write = |p: &Path, s: String| -> Result<()> {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Ok(fs::write(p, s)?)
    };
    if let Some(p) = &paths.csv {
        write(p, table.to_csv()?)?;
    }
    if let Some(p) = &paths.json {
        write(p, table.to_json()?)?;
    }
    if let Some(p) = &paths.plot {
        write(p, table.plot_data())?;
    }
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x` with a 95% half-width
/// (`None` below three points).
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<(f64, Option<f64>)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if n < 3 {
        return Some((slope, None));
    }
    let ss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (ss / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).ok()?.inverse_cdf(0.975);
    Some((slope, Some(t * se)))
}

/// Worker count from `BENCH_THREADS`, if set.
pub fn bench_threads() -> Result<Option<usize>> {
    match std::env::var("BENCH_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("BENCH_THREADS must be a positive integer, got '{s}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn draw_seed(seed: u64, row: usize, draw: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((row as u64) << 32) ^ draw as u64
}

struct Outcome {
    error: f64,
    alpha: f64,
    gap: Option<f64>,
    gaussian: bool,
}

/// Runs the sweep on a pool capped by `BENCH_THREADS` and writes the
/// configured outputs. Results do not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RateTable> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = bench_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let table = pool.install(|| sweep(cfg))?;
    emit_outputs(&table, &cfg.outputs)?;
    Ok(table)
}

fn sweep(cfg: &ExperimentConfig) -> Result<RateTable> {
    let phi: IndexFunction = cfg.phi.parse()?;
    let filter = Filter::parse(&cfg.filter)?;
    let check_grid = CheckGrid::default();
    let cond_c = check_condition_c(&filter, &check_grid);
    let rate = check_rate_condition(&filter, &phi, &check_grid)?;
    let disc = matches!(cfg.rule, RuleSpec::Morozov { .. }).then(|| check_discrepancy_condition(&filter, &check_grid));
    if !cond_c.passed || !rate.passed || disc.as_ref().is_some_and(|d| !d.passed) {
        let report = serde_json::json!({ "condition_c": cond_c, "rate": rate, "discrepancy": disc });
        return Err(Error::Assumption(report.to_string()));
    }

    let problem = Problem::build(cfg, &phi)?;
    let truth = make_source_truth(cfg, &problem, &phi)?;
    let Problem { op, sys, constants: c, .. } = &problem;
    let op: &dyn ForwardOperator = op.as_ref();
    let e = truth.e;
    let y = op.apply(&truth.theta)?;
    let opts = SolveOptions::default();
    let gamma1 = filter.constants().gamma1;
    let gamma2 = rate.gamma2_est;
    let rho = disc.as_ref().map_or(filter.constants().rho, |d| d.rho_est);
    let rule_for = |alpha_prior: f64| match cfg.rule {
        RuleSpec::APriori => Rule::Fixed(alpha_prior),
        RuleSpec::Morozov { tau } => Rule::Morozov(MorozovConfig::new(tau, c.a_v, c.b_v, rho)),
    };

    let v_inf = c.a_v.sqrt();
    let u_sup = c.b_u.sqrt();
    let stars = delta_stars(sys.kappa(), &phi, e, v_inf)?;
    let beta = covering_beta(&stars);
    let density = match beta {
        Some(b) => Some(density_check(&stars, b, cfg.delta_sweep[0])?),
        None => None,
    };

    // Per row: a priori alpha and the noise direction R_alpha amplifies most.
    let per_row: Vec<(f64, GridFunction)> = cfg
        .delta_sweep
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| -> Result<(f64, GridFunction)> {
            let alpha = a_priori_alpha(&phi, delta, e, c.a_v)?;
            let dir = worst_case_noise(sys, &filter, alpha, POWER_ITERATIONS, draw_seed(cfg.seed, i, usize::MAX), &opts)?.0;
            Ok((alpha, dir))
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..cfg.delta_sweep.len())
        .flat_map(|i| (0..cfg.noise_draws + 2).map(move |d| (i, d)))
        .collect();
    let outcomes: Vec<Option<Outcome>> = tasks
        .par_iter()
        .map(|&(i, d)| -> Result<Option<Outcome>> {
            let delta = cfg.delta_sweep[i];
            let (alpha_prior, dir) = &per_row[i];
            let gaussian = d < cfg.noise_draws;
            let e_noise = if gaussian {
                noise(sys.grid(), sys.range_subspace(), delta, draw_seed(cfg.seed, i, d))?
            } else {
                dir.scaled(if d == cfg.noise_draws { delta } else { -delta })
            };
            let yd = y.add(&e_noise)?;
            let (alpha, gap) = match rule_for(*alpha_prior) {
                Rule::Fixed(a) => (a, None),
                Rule::Morozov(mc) => match morozov_solve(sys, &filter, &mc, &yd, delta) {
                    Ok(sol) => (sol.alpha, Some((sol.residual - sol.target).abs())),
                    Err(Error::NotSolvable { .. }) => return Ok(None),
                    Err(err) => return Err(err),
                },
            };
            let error = regularize(sys, &filter, alpha, &yd, &opts)?.sub(&truth.theta)?.norm();
            Ok(Some(Outcome { error, alpha, gap, gaussian }))
        })
        .collect::<Result<_>>()?;

    let p = phi.p();
    let mut rows = Vec::with_capacity(cfg.delta_sweep.len());
    for (i, (chunk, &delta)) in outcomes.chunks(cfg.noise_draws + 2).zip(&cfg.delta_sweep).enumerate() {
        let solved: Vec<&Outcome> = chunk.iter().flatten().collect();
        let gauss: Vec<&&Outcome> = solved.iter().filter(|o| o.gaussian).collect();
        let mean = |v: &mut dyn Iterator<Item = f64>, k: usize| if k == 0 { f64::NAN } else { v.sum::<f64>() / k as f64 };
        let mean_error = mean(&mut gauss.iter().map(|o| o.error), gauss.len());
        let max_error = if solved.is_empty() { f64::NAN } else { solved.iter().map(|o| o.error).fold(0.0, f64::max) };
        let alpha = match cfg.rule {
            RuleSpec::APriori => per_row[i].0,
            RuleSpec::Morozov { .. } => mean(&mut solved.iter().map(|o| o.alpha), solved.len()),
        };
        let upper_bound = match cfg.rule {
            RuleSpec::APriori => apriori_error_bound(&phi, e, delta, c, gamma1, gamma2)?,
            RuleSpec::Morozov { tau } => posterior_error_bound(&phi, e, delta, c, tau)?,
        };
        let lower = match beta {
            Some(b) => lower_bound(&phi, e, delta, u_sup, v_inf, b)?,
            None => f64::NAN,
        };
        let morozov_max_gap = matches!(cfg.rule, RuleSpec::Morozov { .. })
            .then(|| solved.iter().filter_map(|o| o.gap).fold(0.0, f64::max));
        let ratio = matches!(phi, IndexFunction::Log { .. }).then(|| max_error / (e * (-(delta / e).ln()).powf(-p)));
        rows.push(RateRow {
            delta,
            alpha,
            mean_error,
            max_error,
            lower_bound: lower,
            upper_bound,
            worst_case: None,
            covered: density.as_ref().map(|r| r.covers(delta)),
            ratio,
            morozov_max_gap,
            unsolved: chunk.len() - solved.len(),
        });
    }

    if cfg.sandwich {
        let worst: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| -> Result<f64> {
                let setup = WorstCaseSetup {
                    op,
                    sys,
                    filter: &filter,
                    rule: rule_for(per_row[i].0),
                    phi,
                    e,
                    opts,
                };
                let wc = empirical_worst_case(&setup, r.delta, cfg.worst_case_draws, draw_seed(cfg.seed ^ 0x5a9d, i, 0))?;
                Ok(wc.value.max(r.max_error))
            })
            .collect::<Result<_>>()?;
        for (r, w) in rows.iter_mut().zip(worst) {
            r.worst_case = Some(w);
        }
    }

    let mut table = RateTable {
        config: Some(cfg.clone()),
        gamma1: Some(gamma1),
        gamma2: Some(gamma2),
        rho: disc.as_ref().map(|_| rho),
        constants: Some(*c),
        density,
        ..Default::default()
    };
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let maxes: Vec<f64> = rows.iter().map(|r| r.max_error).collect();
    if let Some((s, hw)) = fit_loglog(&deltas, &maxes) {
        table.slope = Some(s);
        table.slope_half_width = hw;
        table.slope_ci = hw.map(|h| [s - h, s + h]);
    }
    let flags = &mut table.pass_flags;
    flags.insert("finite_errors".into(), rows.iter().all(|r| r.max_error.is_finite() && r.mean_error.is_finite()));
    let logarithmic = matches!(phi, IndexFunction::Log { .. });
    let expected = cfg.expected_slope.or((!logarithmic).then(|| p / (p + 2.0)));
    if let Some(want) = expected {
        flags.insert("slope".into(), table.slope.is_some_and(|s| (s - want).abs() <= cfg.slope_tol));
    }
    if logarithmic {
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        flags.insert("ratio".into(), lo > 0.0 && hi / lo <= cfg.ratio_max);
    }
    if matches!(cfg.rule, RuleSpec::Morozov { .. }) {
        flags.insert("morozov_solvable".into(), rows.iter().all(|r| r.unsolved == 0));
        flags.insert(
            "morozov_residuals".into(),
            rows.iter().all(|r| r.morozov_max_gap.is_some_and(|g| g <= MOROZOV_RESIDUAL_TOL)),
        );
    }
    if cfg.sandwich {
        let covered: Vec<&RateRow> = rows.iter().filter(|r| r.covered == Some(true)).collect();
        if covered.is_empty() {
            table.warnings.push("no sweep row is covered by the density check; sandwich not tested".into());
        }
        let ok = !covered.is_empty()
            && covered.iter().all(|r| r.worst_case.is_some_and(|w| r.lower_bound <= w && w <= r.upper_bound));
        flags.insert("sandwich".into(), ok);
    }
    let inversions = rows.windows(2).filter(|w| w[1].mean_error > w[0].mean_error).count();
    if inversions > 1 {
        table.warnings.push(format!("mean_error increases {inversions} times as delta decreases"));
    }
    table.rows = rows;
    table.truth = Some(truth);
    Ok(table)
}
