use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use dfdreg::analysis::{delta_stars, density_check, empirical_worst_case, lower_bound, WorstCaseSetup};
use dfdreg::bench::{build_system, covering_beta, run_experiment, ExperimentConfig, OutputPaths, ProblemKind, RateTable, RuleSpec};
use dfdreg::dfd::{add_noise, picard_solve, regularize, verify_dfd, DfdSystem, ForwardOperator};
use dfdreg::filters::{check_condition_c, check_discrepancy_condition, check_rate_condition, CheckGrid, Filter};
use dfdreg::frames::{BoundsOptions, Frame, SolveOptions};
use dfdreg::grid::{Grid, GridFunction, Subspace};
use dfdreg::heat::{build_band_dfd, build_wvd, HeatOperator, MeyerWavelet};
use dfdreg::io::{load_frame, load_grid_function, load_system, Container};
use dfdreg::param::{a_priori_alpha, apriori_error_bound, discrepancy, morozov_solve, FrameConstants, MorozovConfig, Rule};
use dfdreg::source::IndexFunction;

#[derive(Parser)]
#[command(name = "dfdreg", version, about = "Filtered diagonal frame decomposition regularization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    #[command(subcommand)]
    Frames(FramesCmd),
    #[command(subcommand)]
    Filters(FiltersCmd),
    #[command(subcommand)]
    Dfd(DfdCmd),
    #[command(subcommand)]
    Param(ParamCmd),
    #[command(subcommand)]
    Analysis(AnalysisCmd),
    #[command(subcommand)]
    Heat(HeatCmd),
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Subcommand)]
enum FramesCmd {
    /// Bounds and tightness diagnostics of a frame.
    Inspect {
        /// Frame container; otherwise the frame is taken from a system.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "u")]
        which: Which,
        #[command(flatten)]
        sys: SystemArgs,
        /// Skip the Lanczos bound estimate.
        #[arg(long)]
        no_estimate: bool,
    },
}

#[derive(Subcommand)]
enum FiltersCmd {
    /// Numerical checks of the filter assumptions (JSON).
    Check {
        #[arg(long, default_value = "tikhonov")]
        filter: String,
        #[arg(long, default_value = "poly:p=2")]
        phi: String,
    },
}

#[derive(Subcommand)]
enum DfdCmd {
    /// Check `K* v = kappa u` on a constructed system.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Picard solution `sum kappa^{-1} <y, v> dual(u)`.
    Solve {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Filtered reconstruction at a given or a priori alpha.
    Regularize {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "tikhonov")]
        filter: String,
        #[arg(long)]
        alpha: Option<f64>,
        /// Used with `--delta` and `--e` for the a priori alpha.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        e: Option<f64>,
        /// Recorded in the metadata only.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum ParamCmd {
    /// `alpha = phi^{-1}(Theta^{-1}(A_v delta^2 / E^2))`.
    Apriori {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        e: f64,
        /// Defaults to the system's lower v bound, else 1.
        #[arg(long)]
        a_v: Option<f64>,
        #[command(flatten)]
        sys: SystemArgs,
        /// Data for reporting the residual at the chosen alpha.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "tikhonov")]
        filter: String,
    },
    /// Discrepancy principle `d(alpha) = tau sqrt(B_v) delta`.
    Morozov {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.5)]
        tau: f64,
        #[arg(long, default_value = "tikhonov")]
        filter: String,
        #[arg(long)]
        a_v: Option<f64>,
        #[arg(long)]
        b_v: Option<f64>,
    },
}

#[derive(Subcommand)]
enum AnalysisCmd {
    /// Lower bound, Monte-Carlo worst case and a priori upper bound. One
    /// delta gives JSON, several give CSV `delta,lower,empirical,upper`.
    Lowerbound {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        e: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long, default_value = "tikhonov")]
        filter: String,
        /// Defaults to the covering value from the delta* spacing.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 4)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Coverage of `(0, delta0]` by the intervals `[delta*, delta* / beta]`.
    Density {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        delta0: f64,
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Subcommand)]
enum HeatCmd {
    /// Apply the heat forward map to an initial profile.
    Forward {
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 16.0)]
        length: f64,
        /// Initial state container; a centred Gaussian bump otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Also save the initial state here.
        #[arg(long)]
        save_initial: Option<PathBuf>,
        /// Add Gaussian noise of this norm.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Construct the DFD of the heat operator: wavelet-vaguelette for
    /// gamma < 1, band-partitioned for gamma = 1.
    BuildDfd {
        #[arg(long)]
        gamma: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        j_min: Option<i32>,
        #[arg(long)]
        j_max: Option<i32>,
        #[arg(long, default_value_t = 40)]
        n_max: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Run an experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write `<stem>.csv/.json/.dat` here instead of the configured paths.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Diagonal toy suite: a priori and discrepancy rules.
    Toy {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "bench_out/toy")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    U,
    V,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemName {
    /// Fractional heat problem, wavelet-vaguelette decomposition.
    Wvd,
    /// Classical heat problem, band-partitioned decomposition.
    Band,
    /// Diagonal toy on the Fourier basis.
    Toy,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "toy")]
    problem: ProblemName,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Toy decay `a` in `kappa = (|m| + 1)^{-a}`.
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    j_min: Option<i32>,
    #[arg(long)]
    j_max: Option<i32>,
    #[arg(long, default_value_t = 40)]
    n_max: u32,
}

impl ProblemArgs {
    fn build(&self) -> Result<(Box<dyn ForwardOperator>, DfdSystem)> {
        let (kind, n, length, j_min, j_max) = match self.problem {
            ProblemName::Wvd => (ProblemKind::FractionalBackward { gamma: self.gamma, t: self.t }, 4096, 16.0, 0, 5),
            ProblemName::Band => (ProblemKind::ClassicalBackward { t: self.t }, 1024, 64.0, 0, 1),
            ProblemName::Toy => (ProblemKind::DiagonalToy { decay: self.decay }, 64, 2.0 * std::f64::consts::PI, 0, 0),
        };
        Ok(build_system(
            kind,
            self.n.unwrap_or(n),
            self.length.unwrap_or(length),
            self.j_min.unwrap_or(j_min),
            self.j_max.unwrap_or(j_max),
            self.n_max,
        )?)
    }
}

/// A saved system, or one constructed from the problem options.
#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    system: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
}

impl SystemArgs {
    fn load(&self) -> Result<DfdSystem> {
        match &self.system {
            Some(p) => load_system(p).with_context(|| format!("reading {}", p.display())),
            None => Ok(self.problem.build()?.1),
        }
    }
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn frame_report(f: &Frame, estimate: bool) -> Result<Value> {
    let estimated = if estimate { Some(f.estimate_bounds(&BoundsOptions::default())?) } else { None };
    let ratio = f.bounds().or(estimated).map(|b| b.upper / b.lower);
    Ok(json!({
        "elements": f.len(),
        "grid": { "n": f.grid().n(), "length": f.grid().length() },
        "subspace_dimension": f.subspace().dimension(f.grid()),
        "nnz": f.nnz(),
        "recorded_bounds": f.bounds(),
        "estimated_bounds": estimated,
        "tight_constant": f.tight_constant(),
        "bound_ratio": ratio,
        "tight": ratio.map(|r| (r - 1.0).abs() <= 1e-8),
        "minimal": f.minimal(),
        "truncation": f.truncation(),
    }))
}

fn constants_or_default(sys: &DfdSystem) -> FrameConstants {
    FrameConstants::from_system(sys).unwrap_or(FrameConstants { a_u: 1.0, b_u: 1.0, a_v: 1.0, b_v: 1.0 })
}

fn write_bench_summary(table: &RateTable, label: &str) {
    for r in &table.rows {
        eprintln!(
            "{label}: delta {:.3e} alpha {:.3e} mean {:.4e} max {:.4e} lower {:.4e} upper {:.4e}",
            r.delta, r.alpha, r.mean_error, r.max_error, r.lower_bound, r.upper_bound
        );
    }
    if let Some(s) = table.slope {
        eprintln!("{label}: slope {s:.4} +- {:.4}", table.slope_half_width.unwrap_or(f64::NAN));
    }
    for (k, v) in &table.pass_flags {
        println!("{label} {k}: {}", if *v { "PASS" } else { "FAIL" });
    }
    for w in &table.warnings {
        eprintln!("{label} warning: {w}");
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Frames(FramesCmd::Inspect { frame, which, sys, no_estimate }) => {
            let f = match frame {
                Some(p) => load_frame(&p)?,
                None => {
                    let s = sys.load()?;
                    match which {
                        Which::U => s.u().clone(),
                        Which::V => s.v().clone(),
                    }
                }
            };
            print_json(&frame_report(&f, !no_estimate)?)?;
        }
        Cmd::Filters(FiltersCmd::Check { filter, phi }) => {
            let f = Filter::parse(&filter)?;
            let phi: IndexFunction = phi.parse()?;
            let grid = CheckGrid::default();
            let c = check_condition_c(&f, &grid);
            let rate = check_rate_condition(&f, &phi, &grid)?;
            let disc = check_discrepancy_condition(&f, &grid);
            let passed = c.passed && rate.passed && disc.passed;
            print_json(&json!({
                "filter": f.name(),
                "phi": phi.to_string(),
                "constants": f.constants(),
                "grid": grid,
                "condition_c": c,
                "rate_condition": rate,
                "discrepancy_condition": disc,
                "passed": passed,
            }))?;
            return Ok(passed);
        }
        Cmd::Dfd(DfdCmd::Verify { problem, tol }) => {
            let (op, sys) = problem.build()?;
            let rep = verify_dfd(op.as_ref(), &sys, tol)?;
            print_json(&serde_json::to_value(&rep)?)?;
            return Ok(rep.passed);
        }
        Cmd::Dfd(DfdCmd::Solve { sys, data, output }) => {
            let s = sys.load()?;
            let y = load_grid_function(&data)?;
            let x = picard_solve(&s, &y, &SolveOptions::default())?;
            Container::GridFunction(x.clone()).save(&output)?;
            let meta = json!({ "method": "picard", "data": data, "output": output, "norm": x.norm() });
            std::fs::write(output.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
            print_json(&meta)?;
        }
        Cmd::Dfd(DfdCmd::Regularize { sys, data, output, filter, alpha, phi, delta, e, seed }) => {
            let s = sys.load()?;
            let y = load_grid_function(&data)?;
            let f = Filter::parse(&filter)?;
            let phi_fn: Option<IndexFunction> = phi.as_deref().map(str::parse).transpose()?;
            let alpha = match (alpha, &phi_fn, delta, e) {
                (Some(a), ..) => a,
                (None, Some(p), Some(d), Some(e)) => a_priori_alpha(p, d, e, constants_or_default(&s).a_v)?,
                _ => bail!("give --alpha, or --phi with --delta and --e"),
            };
            let x = regularize(&s, &f, alpha, &y, &SolveOptions::default())?;
            Container::GridFunction(x.clone()).save(&output)?;
            let meta = json!({
                "alpha": alpha,
                "delta": delta,
                "seed": seed,
                "filter": f.name(),
                "phi": phi_fn.map(|p| p.to_string()),
                "residual": discrepancy(&s, &f, alpha, &y)?,
                "norm": x.norm(),
            });
            std::fs::write(output.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
            print_json(&meta)?;
        }
        Cmd::Param(ParamCmd::Apriori { phi, delta, e, a_v, sys, data, filter }) => {
            let phi: IndexFunction = phi.parse()?;
            let s = match (&sys.system, &data) {
                (Some(_), _) | (None, Some(_)) => Some(sys.load()?),
                _ => None,
            };
            let a_v = a_v.or_else(|| s.as_ref().map(|s| constants_or_default(s).a_v)).unwrap_or(1.0);
            let alpha = a_priori_alpha(&phi, delta, e, a_v)?;
            let residual = match (&s, &data) {
                (Some(s), Some(d)) => Some(discrepancy(s, &Filter::parse(&filter)?, alpha, &load_grid_function(d)?)?),
                _ => None,
            };
            print_json(&json!({
                "alpha": alpha,
                "residual": residual,
                "iterations": 0,
                "constants_used": { "a_v": a_v, "delta": delta, "e": e, "phi": phi.to_string() },
            }))?;
        }
        Cmd::Param(ParamCmd::Morozov { sys, data, delta, tau, filter, a_v, b_v }) => {
            let s = sys.load()?;
            let f = Filter::parse(&filter)?;
            let y = load_grid_function(&data)?;
            let c = constants_or_default(&s);
            let rho = check_discrepancy_condition(&f, &CheckGrid::default()).rho_est;
            let cfg = MorozovConfig::new(tau, a_v.unwrap_or(c.a_v), b_v.unwrap_or(c.b_v), rho);
            let sol = morozov_solve(&s, &f, &cfg, &y, delta)?;
            print_json(&json!({
                "alpha": sol.alpha,
                "residual": sol.residual,
                "iterations": sol.iterations,
                "constants_used": {
                    "tau": cfg.tau, "a_v": cfg.a_v, "b_v": cfg.b_v, "rho": cfg.rho,
                    "target": sol.target, "tol": cfg.tol,
                },
            }))?;
        }
        Cmd::Analysis(AnalysisCmd::Lowerbound { problem, phi, e, delta, filter, beta, draws, seed }) => {
            let phi: IndexFunction = phi.parse()?;
            let f = Filter::parse(&filter)?;
            let (op, sys) = problem.build()?;
            let c = constants_or_default(&sys);
            let (u_sup, v_inf) = (c.b_u.sqrt(), c.a_v.sqrt());
            let stars = delta_stars(sys.kappa(), &phi, e, v_inf)?;
            let beta = match beta.or_else(|| covering_beta(&stars)) {
                Some(b) => b,
                None => bail!("cannot derive beta from a single delta*; pass --beta"),
            };
            let top = delta.iter().copied().fold(0.0, f64::max);
            let density = density_check(&stars, beta, top)?;
            let gamma2 = check_rate_condition(&f, &phi, &CheckGrid::default())?.gamma2_est;
            let mut rows = Vec::new();
            for (i, &d) in delta.iter().enumerate() {
                let alpha = a_priori_alpha(&phi, d, e, c.a_v)?;
                let setup = WorstCaseSetup {
                    op: op.as_ref(),
                    sys: &sys,
                    filter: &f,
                    rule: Rule::Fixed(alpha),
                    phi,
                    e,
                    opts: SolveOptions::default(),
                };
                let wc = empirical_worst_case(&setup, d, draws, seed.wrapping_add(i as u64))?;
                let lower = lower_bound(&phi, e, d, u_sup, v_inf, beta)?;
                let upper = apriori_error_bound(&phi, e, d, &c, f.constants().gamma1, gamma2)?;
                rows.push((d, lower, wc.value, upper, density.covers(d)));
            }
            if rows.len() == 1 {
                let (d, lower, emp, upper, covered) = rows[0];
                print_json(&json!({
                    "delta": d, "lower": lower, "empirical": emp, "upper": upper,
                    "covered": covered, "beta": beta,
                }))?;
            } else {
                let mut w = csv::Writer::from_writer(std::io::stdout());
                w.write_record(["delta", "lower", "empirical", "upper"])?;
                for (d, lower, emp, upper, _) in rows {
                    w.write_record([d, lower, emp, upper].iter().map(|v| format!("{v:e}")))?;
                }
                w.flush()?;
            }
        }
        Cmd::Analysis(AnalysisCmd::Density { sys, phi, e, delta0, beta }) => {
            let phi: IndexFunction = phi.parse()?;
            let s = sys.load()?;
            let v_inf = constants_or_default(&s).a_v.sqrt();
            let stars = delta_stars(s.kappa(), &phi, e, v_inf)?;
            let beta = match beta.or_else(|| covering_beta(&stars)) {
                Some(b) => b,
                None => bail!("cannot derive beta from a single delta*; pass --beta"),
            };
            let rep = density_check(&stars, beta, delta0)?;
            let covered = rep.covered();
            print_json(&json!({ "report": rep, "covered": covered }))?;
        }
        Cmd::Heat(HeatCmd::Forward { gamma, t, n, length, input, output, save_initial, delta, seed }) => {
            let grid = Grid::new(n, length)?;
            let x0 = match input {
                Some(p) => load_grid_function(&p)?,
                None => GridFunction::from_fn(grid, |x| {
                    let s = x - 0.5 * length;
                    Complex64::new((-s * s).exp(), 0.0)
                }),
            };
            if let Some(p) = save_initial {
                Container::GridFunction(x0.clone()).save(&p)?;
            }
            let op = HeatOperator::new(*x0.grid(), gamma, t)?;
            let mut y = op.forward(&x0)?;
            if let Some(d) = delta {
                y = add_noise(&y, &Subspace::Full, d, seed)?;
            }
            Container::GridFunction(y.clone()).save(&output)?;
            print_json(&json!({
                "gamma": gamma, "T": t, "n": x0.grid().n(), "length": x0.grid().length(),
                "input_norm": x0.norm(), "output_norm": y.norm(), "delta": delta, "seed": seed,
            }))?;
        }
        Cmd::Heat(HeatCmd::BuildDfd { gamma, t, n, length, j_min, j_max, n_max, output }) => {
            let wavelet = MeyerWavelet::default();
            let (sys, info) = if gamma < 1.0 {
                let op = HeatOperator::new(Grid::new(n.unwrap_or(4096), length.unwrap_or(16.0))?, gamma, t)?;
                let (sys, info) = build_wvd(&op, &wavelet, j_min.unwrap_or(0), j_max.unwrap_or(5))?;
                let rep = verify_dfd(&op, &sys, 1e-8)?;
                (sys, json!({ "construction": "wavelet-vaguelette", "info": info, "verify": rep }))
            } else {
                let op = HeatOperator::new(Grid::new(n.unwrap_or(1024), length.unwrap_or(64.0))?, gamma, t)?;
                let (sys, info) = build_band_dfd(&op, &wavelet, j_min.unwrap_or(0), j_max.unwrap_or(1), n_max)?;
                let rep = verify_dfd(&op, &sys, 1e-8)?;
                (sys, json!({ "construction": "band-partitioned", "info": info, "verify": rep }))
            };
            if let Some(p) = &output {
                Container::System(sys.clone()).save(p)?;
            }
            print_json(&json!({ "elements": sys.len(), "output": output, "details": info }))?;
        }
        Cmd::Bench(BenchCmd::Run { config, out_dir }) => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(dir) = out_dir {
                let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
                cfg.outputs = OutputPaths::in_dir(&dir, stem);
            }
            let table = run_experiment(&cfg)?;
            write_bench_summary(&table, &stem_of(&config));
            return Ok(table.passed());
        }
        Cmd::Bench(BenchCmd::Toy { quick, seed, out_dir }) => {
            let mut all = true;
            for (name, rule) in [("toy_apriori", RuleSpec::APriori), ("toy_morozov", RuleSpec::Morozov { tau: 1.5 })] {
                let mut cfg = ExperimentConfig::toy(rule, quick, seed);
                cfg.outputs = OutputPaths::in_dir(&out_dir, name);
                let table = run_experiment(&cfg)?;
                write_bench_summary(&table, name);
                all &= table.passed();
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn stem_of(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("bench").to_string()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
