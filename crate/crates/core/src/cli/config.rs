//! Run configuration: command-line flags layered over an optional
//! `key = value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Perturbation};
use crate::profile::{Renormalization, SolverOptions};
use crate::space::{default_beta, Grid, GridFunction, WeightParams, DEFAULT_N, DEFAULT_X_MAX, DEFAULT_X_MIN};

pub const DEFAULT_EPSILON_LIST: &[f64] = &[0.2, 0.1, 0.05, 0.025];
pub const DEFAULT_INIT_LIST: &[&str] = &["exp", "exp2"];
pub const DEFAULT_UNIQUENESS_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_BL_THRESHOLD: f64 = 1e-3;

/// Keys accepted in a `--config` file.
const KNOWN_KEYS: &[&str] = &[
    "x_min",
    "x_max",
    "n",
    "epsilon",
    "alpha",
    "c_star",
    "form",
    "beta",
    "tol",
    "max_iter",
    "damping",
    "renormalization",
    "no_renormalize",
    "out",
    "init",
    "epsilon_list",
    "init_list",
    "threshold",
    "only",
    "gnuplot_script",
];

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct SharedArgs {
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_star: Option<f64>,
    /// Perturbation form: `power_symmetric` or `bounded_custom`.
    #[arg(long)]
    pub form: Option<String>,
    /// Norm exponent for `x ≥ 1`; defaults to `(3 + α)/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    /// `dilation` or `scaling`.
    #[arg(long)]
    pub renormalization: Option<String>,
    #[arg(long)]
    pub no_renormalize: bool,
    /// Initial profile for `solve` and `bl` (see `init_list`).
    #[arg(long)]
    pub init: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV files.
    #[arg(long)]
    pub gnuplot_script: bool,
}

/// Flags specific to one subcommand; unset ones fall back to the file.
#[derive(Clone, Debug, Default)]
pub struct CommandArgs {
    pub epsilon_list: Option<Vec<f64>>,
    pub init_list: Option<Vec<String>>,
    pub threshold: Option<f64>,
    pub only: Option<Vec<String>>,
}

/// A fully resolved and validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub kernel: KernelSpec,
    pub solver: SolverOptions,
    pub output_dir: PathBuf,
    pub init: String,
    pub epsilon_list: Vec<f64>,
    pub init_list: Vec<String>,
    /// `None` selects the command's default.
    pub threshold: Option<f64>,
    pub only: Vec<String>,
    pub gnuplot_script: bool,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.n)
    }

    /// `X_{-α,β}` with the configured `β`.
    pub fn norm_weight(&self) -> WeightParams {
        self.solver.norm_weight(&self.kernel)
    }

    /// The kernel with `ε` replaced.
    pub fn kernel_with_epsilon(&self, epsilon: f64) -> Result<KernelSpec> {
        let mut k = self.kernel.clone();
        k.epsilon = epsilon;
        k.validate()?;
        Ok(k)
    }

    /// `# key=value` lines describing the run.
    pub fn metadata(&self, command: &str) -> Vec<(String, String)> {
        let beta = self.solver.beta.unwrap_or_else(|| default_beta(self.kernel.alpha));
        let renorm = match (self.solver.renormalize, self.solver.renormalization) {
            (false, _) => "none",
            (true, Renormalization::Dilation) => "dilation",
            (true, Renormalization::Scaling) => "scaling",
        };
        [
            ("command", command.to_string()),
            ("x_min", fmt_f64(self.x_min)),
            ("x_max", fmt_f64(self.x_max)),
            ("n", self.n.to_string()),
            ("epsilon", fmt_f64(self.kernel.epsilon)),
            ("alpha", fmt_f64(self.kernel.alpha)),
            ("c_star", fmt_f64(self.kernel.c_star)),
            ("form", self.kernel.form.name().to_string()),
            ("beta", fmt_f64(beta)),
            ("tol", fmt_f64(self.solver.tol)),
            ("max_iter", self.solver.max_iter.to_string()),
            ("damping", fmt_f64(self.solver.damping)),
            ("renormalization", renorm.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Builds the configuration from flags, the optional file and defaults, in
    /// that order of precedence, and validates it.
    pub fn resolve(shared: &SharedArgs, cmd: &CommandArgs) -> Result<Self> {
        let file = match &shared.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);

        let x_min = pick(shared.x_min, get("x_min"), "x_min")?.unwrap_or(DEFAULT_X_MIN);
        let x_max = pick(shared.x_max, get("x_max"), "x_max")?.unwrap_or(DEFAULT_X_MAX);
        let n = pick(shared.n, get("n"), "n")?.unwrap_or(DEFAULT_N);
        Grid::new(x_min, x_max, n)?;

        let epsilon = pick(shared.epsilon, get("epsilon"), "epsilon")?.unwrap_or(0.0);
        let alpha = pick(shared.alpha, get("alpha"), "alpha")?.unwrap_or(0.5);
        let c_star = pick(shared.c_star, get("c_star"), "c_star")?.unwrap_or(1.0);
        let form: Perturbation = match shared.form.as_deref().or(get("form")) {
            Some(s) => s.parse()?,
            None => Perturbation::PowerSymmetric,
        };
        let kernel = KernelSpec::new(epsilon, alpha, form, c_star)?;

        let defaults = SolverOptions::default();
        let no_renorm =
            shared.no_renormalize || pick::<bool>(None, get("no_renormalize"), "no_renormalize")?.unwrap_or(false);
        let renormalization =
            match pick::<String>(shared.renormalization.clone(), get("renormalization"), "renormalization")?.as_deref()
            {
                None | Some("dilation") => Renormalization::Dilation,
                Some("scaling") => Renormalization::Scaling,
                Some(other) => {
                    return Err(Error::Config(format!("renormalization must be dilation or scaling, got {other:?}")))
                }
            };
        let solver = SolverOptions {
            damping: pick(shared.damping, get("damping"), "damping")?.unwrap_or(defaults.damping),
            tol: pick(shared.tol, get("tol"), "tol")?.unwrap_or(defaults.tol),
            max_iter: pick(shared.max_iter, get("max_iter"), "max_iter")?.unwrap_or(defaults.max_iter),
            renormalize: !no_renorm,
            renormalization,
            beta: pick(shared.beta, get("beta"), "beta")?,
        };
        solver.validate()?;

        let output_dir = pick(shared.out.clone(), get("out"), "out")?.unwrap_or_else(|| PathBuf::from("."));
        let init = pick(shared.init.clone(), get("init"), "init")?.unwrap_or_else(|| "exp".into());
        let epsilon_list = match &cmd.epsilon_list {
            Some(v) => v.clone(),
            None => match get("epsilon_list") {
                Some(s) => parse_list(s, "epsilon_list")?,
                None => DEFAULT_EPSILON_LIST.to_vec(),
            },
        };
        let init_list = match &cmd.init_list {
            Some(v) => v.clone(),
            None => match get("init_list") {
                Some(s) => parse_list(s, "init_list")?,
                None => DEFAULT_INIT_LIST.iter().map(|s| s.to_string()).collect(),
            },
        };
        let only = match &cmd.only {
            Some(v) => v.clone(),
            None => match get("only") {
                Some(s) => parse_list(s, "only")?,
                None => Vec::new(),
            },
        };
        let threshold = pick(cmd.threshold, get("threshold"), "threshold")?;
        if let Some(t) = threshold {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("threshold must be non-negative, got {t}")));
            }
        }
        let gnuplot_script =
            shared.gnuplot_script || pick::<bool>(None, get("gnuplot_script"), "gnuplot_script")?.unwrap_or(false);

        let cfg = Self {
            x_min,
            x_max,
            n,
            kernel,
            solver,
            output_dir,
            init,
            epsilon_list,
            init_list,
            threshold,
            only,
            gnuplot_script,
        };
        cfg.initial_profile(&cfg.init)?;
        Ok(cfg)
    }

    /// Named initial profiles, all with unit integral: `exp` is `e^{-x}`, `exp2`
    /// is `2e^{-2x}`, `exp:b` is `be^{-bx}` and `gamma2` is `4xe^{-2x}`. The
    /// solver renormalises the mass.
    pub fn initial_profile(&self, name: &str) -> Result<GridFunction> {
        let grid = self.grid()?;
        let b = match name.trim() {
            "exp" => 1.0,
            "exp2" => 2.0,
            "gamma2" => return GridFunction::from_fn(&grid, |x| 4.0 * x * (-2.0 * x).exp()),
            other => match other.strip_prefix("exp:").map(str::parse::<f64>) {
                Some(Ok(b)) if b > 0.0 && b.is_finite() => b,
                _ => return Err(Error::Config(format!("unknown initial profile {other:?}"))),
            },
        };
        GridFunction::from_fn(&grid, |x| b * (-b * x).exp())
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn pick<T: FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| Error::Config(format!("cannot parse {key} = {s:?}"))),
    }
}

/// Splits a comma-separated list; empty entries are dropped.
pub fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("cannot parse {key} entry {t:?}"))))
        .collect()
}

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}
