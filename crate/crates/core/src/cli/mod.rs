//! The `selfsim` batch driver: `solve`, `sweep`, `uniqueness`, `verify` and `bl`.
//!
//! Every command writes CSV files into the output directory and reports through
//! its exit code: 0 success, 1 configuration error, 2 non-convergence,
//! 3 verification failure. Output depends only on the configuration.

pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::fmt::Display;

use clap::{Args, Parser, Subcommand};

use crate::boundary_layer::{bl_residual_weighted, compute_bl_data};
use crate::error::{Error, Result};
use crate::profile::{default_laplace_samples, diagnostics, laplace_gap, solve_profile, ProfileSolution};
use crate::space::{weighted_norm, GridFunction, WeightParams};

use config::{fmt_f64, DEFAULT_BL_THRESHOLD, DEFAULT_UNIQUENESS_THRESHOLD};
pub use config::{CommandArgs, RunConfig, SharedArgs};
use output::{write_text, CsvSink, PROFILE_GNUPLOT, SWEEP_GNUPLOT};
pub use verify::{run_identity_suite, CheckResult, CHECK_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ConfigError,
    NonConvergence,
    VerificationFailure,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ConfigError => 1,
            Outcome::NonConvergence => 2,
            Outcome::VerificationFailure => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "selfsim",
    version,
    about = "Self-similar profiles of the coagulation equation for perturbed constant kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the unit-mass profile; writes profile.csv and diagnostics.csv.
    Solve(SharedArgs),
    /// Solve over a decreasing list of ε; writes sweep.csv.
    Sweep(SweepArgs),
    /// Solve from several initial profiles; writes uniqueness.csv.
    Uniqueness(UniquenessArgs),
    /// Run the identity suite; writes verify.csv.
    Verify(VerifyArgs),
    /// Solve and evaluate the boundary-layer residual; writes bl.csv.
    Bl(BlArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    epsilon_list: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct UniquenessArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Comma-separated initial profiles: exp, exp2, exp:<b>, gamma2.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    init_list: Option<Vec<String>>,
    /// Largest admissible pairwise distance (default 1e-6).
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Run only the named checks (comma-separated).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct BlArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Largest admissible relative residual (default 1e-3).
    #[arg(long)]
    threshold: Option<f64>,
}

/// Parses `args` (program name first), runs the command and returns its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Outcome::ConfigError.code() } else { Outcome::Success.code() };
        }
    };
    let (name, shared, cmd) = match cli.command {
        Command::Solve(s) => ("solve", s, CommandArgs::default()),
        Command::Sweep(a) => ("sweep", a.shared, CommandArgs { epsilon_list: a.epsilon_list, ..Default::default() }),
        Command::Uniqueness(a) => (
            "uniqueness",
            a.shared,
            CommandArgs { init_list: a.init_list, threshold: a.threshold, ..Default::default() },
        ),
        Command::Verify(a) => ("verify", a.shared, CommandArgs { only: a.only, ..Default::default() }),
        Command::Bl(a) => ("bl", a.shared, CommandArgs { threshold: a.threshold, ..Default::default() }),
    };
    let cfg = match RunConfig::resolve(&shared, &cmd) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let result = std::fs::create_dir_all(&cfg.output_dir).map_err(Error::from).and_then(|_| match name {
        "solve" => cmd_solve(&cfg),
        "sweep" => cmd_sweep(&cfg),
        "uniqueness" => cmd_uniqueness(&cfg),
        "verify" => cmd_verify(&cfg),
        _ => cmd_bl(&cfg),
    });
    match result {
        Ok(outcome) => outcome.code(),
        Err(e) => fail(e),
    }
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidKernel(_)
        | Error::InvalidParameter(_)
        | Error::Io(_) => Outcome::ConfigError.code(),
        _ => Outcome::NonConvergence.code(),
    }
}

fn meta_push(meta: &mut Vec<(String, String)>, key: &str, value: impl Display) {
    meta.push((key.to_string(), value.to_string()));
}

fn solve_with(cfg: &RunConfig, epsilon: f64, init: &str) -> Result<ProfileSolution> {
    let kernel = cfg.kernel_with_epsilon(epsilon)?;
    solve_profile(&kernel, &cfg.solver, &cfg.initial_profile(init)?)
}

fn report_unconverged(sol: &ProfileSolution) {
    eprintln!(
        "error: no convergence at epsilon = {} after {} iterations (last change {:e})",
        sol.spec.epsilon, sol.iterations, sol.last_change
    );
}

/// Writes `profile.csv` and `diagnostics.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let sol = solve_with(cfg, cfg.kernel.epsilon, &cfg.init)?;
    let mut meta = cfg.metadata("solve");
    meta_push(&mut meta, "init", &cfg.init);
    meta_push(&mut meta, "converged", sol.converged);
    meta_push(&mut meta, "iterations", sol.iterations);

    let mut profile = CsvSink::create(&cfg.output_dir.join("profile.csv"), &meta, &["x", "pi"])?;
    for (&x, &v) in sol.profile.grid().nodes().iter().zip(sol.profile.values()) {
        profile.row([fmt_f64(x), fmt_f64(v)])?;
    }
    let report = diagnostics(&sol, &cfg.solver)?;
    let mut diag = CsvSink::create(&cfg.output_dir.join("diagnostics.csv"), &meta, &["name", "value"])?;
    for (name, v) in &report.entries {
        diag.row([name.clone(), fmt_f64(*v)])?;
    }
    if cfg.gnuplot_script {
        write_text(&cfg.output_dir.join("profile.gp"), PROFILE_GNUPLOT)?;
    }
    if sol.converged {
        Ok(Outcome::Success)
    } else {
        report_unconverged(&sol);
        Ok(Outcome::NonConvergence)
    }
}

/// One `sweep.csv` row: `‖Π − e^{-x}‖` in `X_{-α,β}` and `X_{0,1}`, `κ`, the
/// Laplace gap and `|Π(1) − e^{-1}|`.
pub fn sweep_row(sol: &ProfileSolution, w: WeightParams) -> Result<[f64; 6]> {
    let p = &sol.profile;
    let e = GridFunction::from_fn(p.grid(), |x| (-x).exp())?;
    let d = p.sub(&e)?;
    Ok([
        sol.spec.epsilon,
        weighted_norm(&d, w)?,
        weighted_norm(&d, WeightParams::new(0.0, 1.0))?,
        compute_bl_data(p, &sol.spec)?.kappa,
        laplace_gap(p, &default_laplace_samples())?,
        (p.eval(1.0) - (-1.0f64).exp()).abs(),
    ])
}

/// Writes `sweep.csv`, one row per `ε`. Stops at the first solve that fails to
/// converge, keeping the rows already written.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let eps = &cfg.epsilon_list;
    if eps.is_empty() {
        return Err(Error::Config("epsilon_list must not be empty".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("epsilon_list must be strictly decreasing".into()));
    }
    for &e in eps {
        cfg.kernel_with_epsilon(e)?;
    }
    let mut meta = cfg.metadata("sweep");
    meta_push(&mut meta, "init", &cfg.init);
    let header = ["epsilon", "norm_ab", "norm_01", "kappa", "laplace_gap", "pointwise_gap_x1"];
    let mut sink = CsvSink::create(&cfg.output_dir.join("sweep.csv"), &meta, &header)?;
    if cfg.gnuplot_script {
        write_text(&cfg.output_dir.join("sweep.gp"), SWEEP_GNUPLOT)?;
    }
    let w = cfg.norm_weight();
    for &e in eps {
        let sol = solve_with(cfg, e, &cfg.init)?;
        if !sol.converged {
            report_unconverged(&sol);
            return Ok(Outcome::NonConvergence);
        }
        sink.row(sweep_row(&sol, w)?.map(fmt_f64))?;
    }
    Ok(Outcome::Success)
}

/// Writes the pairwise `X_{-α,β}` distances between the solves from every
/// initial profile to `uniqueness.csv`.
pub fn cmd_uniqueness(cfg: &RunConfig) -> Result<Outcome> {
    let inits = &cfg.init_list;
    if inits.len() < 2 {
        return Err(Error::Config(format!("init_list needs at least two entries, got {}", inits.len())));
    }
    for name in inits {
        cfg.initial_profile(name)?;
    }
    let threshold = cfg.threshold.unwrap_or(DEFAULT_UNIQUENESS_THRESHOLD);
    let mut profiles = Vec::with_capacity(inits.len());
    for name in inits {
        let sol = solve_with(cfg, cfg.kernel.epsilon, name)?;
        if !sol.converged {
            report_unconverged(&sol);
            return Ok(Outcome::NonConvergence);
        }
        profiles.push(sol.profile);
    }
    let mut meta = cfg.metadata("uniqueness");
    meta_push(&mut meta, "threshold", fmt_f64(threshold));
    let mut sink = CsvSink::create(&cfg.output_dir.join("uniqueness.csv"), &meta, &["init_a", "init_b", "distance"])?;
    let w = cfg.norm_weight();
    let mut worst = 0.0f64;
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            let d = weighted_norm(&profiles[i].sub(&profiles[j])?, w)?;
            worst = worst.max(d);
            sink.row([inits[i].clone(), inits[j].clone(), fmt_f64(d)])?;
        }
    }
    if worst <= threshold {
        Ok(Outcome::Success)
    } else {
        eprintln!("largest pairwise distance {worst:e} exceeds {threshold:e}");
        Ok(Outcome::VerificationFailure)
    }
}

/// Writes `verify.csv` with one row per identity check.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    if let Some(bad) = cfg.only.iter().find(|o| !CHECK_NAMES.contains(&o.as_str())) {
        return Err(Error::Config(format!("unknown check {bad:?}; available: {}", CHECK_NAMES.join(", "))));
    }
    let results = run_identity_suite(&cfg.grid()?, cfg.norm_weight(), &cfg.only);
    let mut meta = cfg.metadata("verify");
    meta_push(&mut meta, "seed", verify::RANDOM_SEED);
    let mut sink =
        CsvSink::create(&cfg.output_dir.join("verify.csv"), &meta, &["check_name", "measured", "tolerance", "pass"])?;
    for r in &results {
        sink.row([r.name.to_string(), fmt_f64(r.measured), fmt_f64(r.tolerance), r.pass.to_string()])?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(Outcome::VerificationFailure)
    }
}

/// Writes `bl.csv`: `ε`, `κ`, `Φ(x_min)`, the relative boundary-layer residual in
/// `X_{-α,β}` and `Φ(1)`.
pub fn cmd_bl(cfg: &RunConfig) -> Result<Outcome> {
    let threshold = cfg.threshold.unwrap_or(DEFAULT_BL_THRESHOLD);
    let sol = solve_with(cfg, cfg.kernel.epsilon, &cfg.init)?;
    if !sol.converged {
        report_unconverged(&sol);
        return Ok(Outcome::NonConvergence);
    }
    let data = compute_bl_data(&sol.profile, &sol.spec)?;
    let residual = bl_residual_weighted(&sol.profile, &sol.spec, cfg.norm_weight())?;
    let mut meta = cfg.metadata("bl");
    meta_push(&mut meta, "init", &cfg.init);
    meta_push(&mut meta, "threshold", fmt_f64(threshold));
    let mut sink = CsvSink::create(
        &cfg.output_dir.join("bl.csv"),
        &meta,
        &["epsilon", "kappa", "phi_at_xmin", "bl_residual", "phi_at_1"],
    )?;
    sink.row([sol.spec.epsilon, data.kappa, data.phi.value(0), residual, data.phi.eval(1.0)].map(fmt_f64))?;
    if residual <= threshold {
        Ok(Outcome::Success)
    } else {
        eprintln!("boundary-layer residual {residual:e} exceeds {threshold:e}");
        Ok(Outcome::VerificationFailure)
    }
}
