//! Command-line front end: curve spectra, anisotropy solves, cone checks,
//! generic relaxations and timing tables.
//!
//! Exit codes: 0 success, 2 bad arguments or input, 3 solver failure,
//! 4 certification failure (outputs are still written).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anisofit::anisotropy::{closed_grid, wulff_geometry, AnisotropyFunction};
use anisofit::curve::{read_curve_csv, spectrum, CurveSpectrum};
use anisofit::pipeline::{eotc_csv, eotc_report, solve_anisotropy, AnisotropyProblemSpec, ConstraintKind, DEFAULT_MODES, GAP_WARN};
use anisofit::qcqp::{solve_relaxation, QcqpProblem};
use anisofit::trigcone::cone_membership;
use anisofit::Error;
use clap::{Parser, ValueEnum};
use conic::SolverOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_UNCERTIFIED: i32 = 4;

pub const MIN_SAMPLES: usize = 16;
pub const DEFAULT_SAMPLES: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Solve,
    CheckCone,
    Relax,
    Eotc,
}

#[derive(Debug, Parser)]
#[command(name = "anisofit", version, about = "Optimal anisotropy functions of planar curves")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Curve CSV (spectrum, solve, eotc), anisotropy JSON (check-cone) or
    /// problem JSON (relax).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file, or directory for `solve`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Number of modes; a comma-separated increasing list for `eotc`.
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Spectrum JSON to solve from instead of a curve.
    #[arg(long)]
    from_spectrum: Option<PathBuf>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Log solver iterations to stderr.
    #[arg(long)]
    verbose: bool,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub modes: Vec<usize>,
    pub constraint: ConstraintKind,
    pub samples: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub from_spectrum: Option<PathBuf>,
    pub verbose: bool,
}

impl RunConfig {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_iter, verbose: self.verbose, ..SolverOptions::default() }
    }

    fn single_mode(&self) -> Result<usize, CliError> {
        match self.modes.as_slice() {
            [n] => Ok(*n),
            _ => Err(CliError::usage("Arguments", "expected a single value for --modes")),
        }
    }

    fn require_input(&self) -> Result<&Path, CliError> {
        self.input.as_deref().ok_or_else(|| CliError::usage("Arguments", "--input is required"))
    }
}

/// Error with its exit code and machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn usage(code: &str, message: impl Into<String>) -> Self {
        Self { exit: EXIT_USAGE, code: code.into(), message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_USAGE };
        Self { exit, code: e.code().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn parse_modes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::usage("Arguments", format!("bad mode count '{t}'"))))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage("Config", format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn resolve(args: Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig {
        command: args.command,
        input: None,
        output: None,
        modes: vec![DEFAULT_MODES],
        constraint: ConstraintKind::Quadratic,
        samples: DEFAULT_SAMPLES,
        tol: SolverOptions::default().tol,
        max_iter: SolverOptions::default().max_iter,
        from_spectrum: None,
        verbose: false,
    };
    let bad = |k: &str, v: &str| CliError::usage("Config", format!("bad value '{v}' for {k}"));
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)?;
        for (k, v) in parse_config(&text)? {
            match k.as_str() {
                "input" => cfg.input = Some(v.into()),
                "output" => cfg.output = Some(v.into()),
                "modes" => cfg.modes = parse_modes(&v)?,
                "constraint" => cfg.constraint = v.parse().map_err(|_| bad(&k, &v))?,
                "samples" => cfg.samples = v.parse().map_err(|_| bad(&k, &v))?,
                "tol" => cfg.tol = v.parse().map_err(|_| bad(&k, &v))?,
                "max_iter" => cfg.max_iter = v.parse().map_err(|_| bad(&k, &v))?,
                "from_spectrum" => cfg.from_spectrum = Some(v.into()),
                "verbose" => cfg.verbose = v.parse().map_err(|_| bad(&k, &v))?,
                _ => return Err(CliError::usage("Config", format!("unknown key '{k}'"))),
            }
        }
    }
    if let Some(v) = args.input {
        cfg.input = Some(v);
    }
    if let Some(v) = args.output {
        cfg.output = Some(v);
    }
    if let Some(v) = args.modes {
        cfg.modes = parse_modes(&v)?;
    }
    if let Some(v) = args.constraint {
        cfg.constraint = v.parse().map_err(|_| bad("constraint", &v))?;
    }
    if let Some(v) = args.samples {
        cfg.samples = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.from_spectrum {
        cfg.from_spectrum = Some(v);
    }
    cfg.verbose |= args.verbose;

    if cfg.samples < MIN_SAMPLES {
        return Err(CliError::usage("Arguments", format!("--samples must be at least {MIN_SAMPLES}")));
    }
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(CliError::usage("Arguments", "--tol and --max-iter must be positive"));
    }
    if cfg.modes.is_empty() || cfg.modes.contains(&0) {
        return Err(CliError::usage("Arguments", "--modes must be positive"));
    }
    Ok(cfg)
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Errors are reported on stderr as `error: <code>: <message>`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: Arguments: {first}");
            return EXIT_USAGE;
        }
    };
    match resolve(args).and_then(|cfg| {
        let level = if cfg.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
        let _ = env_logger::Builder::new().filter_level(level).format_target(false).try_init();
        execute(&cfg)
    }) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.code, e.message.replace('\n', " "));
            e.exit
        }
    }
}

/// Runs a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    match cfg.command {
        Command::Spectrum => {
            let n = cfg.single_mode()?;
            let s = spectrum(&read_curve_csv(cfg.require_input()?)?, n)?;
            emit(cfg.output.as_deref(), &s.to_json()?)?;
            Ok(EXIT_OK)
        }
        Command::Solve => run_solve(cfg),
        Command::CheckCone => {
            let sigma = read_sigma(&fs::read_to_string(cfg.require_input()?)?)?;
            let m = cone_membership(&sigma, &cfg.solver_options())?;
            let json = serde_json::to_string_pretty(&m).map_err(Error::from)?;
            emit(cfg.output.as_deref(), &json)?;
            Ok(EXIT_OK)
        }
        Command::Relax => {
            let problem = QcqpProblem::from_json(&fs::read_to_string(cfg.require_input()?)?)?;
            let sol = solve_relaxation(&problem, &cfg.solver_options())?;
            let gap = sol.certificates.gap;
            println!(
                "objective={:.9e} gap={} rank_defect={} ratio=none",
                sol.objective_value,
                gap.map_or("none".into(), |g| format!("{g:.6e}")),
                sol.certificates.rank_defect
            );
            if let Some(out) = &cfg.output {
                fs::write(out, sol.to_json()?)?;
            }
            Ok(if gap.is_some_and(|g| g <= GAP_WARN) { EXIT_OK } else { EXIT_UNCERTIFIED })
        }
        Command::Eotc => {
            if cfg.modes.len() < 2 {
                return Err(CliError::usage("Arguments", "eotc needs --modes with at least two values"));
            }
            let max = *cfg.modes.iter().max().unwrap();
            let spec = problem_spec(cfg, max)?;
            let rows = eotc_report(&spec, &cfg.modes)?;
            emit(cfg.output.as_deref(), &eotc_csv(&rows))?;
            Ok(EXIT_OK)
        }
    }
}

/// Accepts a bare anisotropy function or a document with a `sigma` field,
/// such as the `result.json` written by `solve`.
fn read_sigma(text: &str) -> Result<AnisotropyFunction, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(Error::from)?;
    match value.get("sigma") {
        Some(inner) => Ok(AnisotropyFunction::from_json(&inner.to_string())?),
        None => Ok(AnisotropyFunction::from_json(text)?),
    }
}

fn load_spectrum(cfg: &RunConfig, modes: usize) -> Result<CurveSpectrum, CliError> {
    match (&cfg.from_spectrum, &cfg.input) {
        (Some(path), _) => Ok(CurveSpectrum::from_json(&fs::read_to_string(path)?)?),
        (None, Some(path)) => Ok(spectrum(&read_curve_csv(path)?, modes)?),
        (None, None) => Err(CliError::usage("Arguments", "--input or --from-spectrum is required")),
    }
}

fn problem_spec(cfg: &RunConfig, modes: usize) -> Result<AnisotropyProblemSpec, CliError> {
    let s = load_spectrum(cfg, modes)?;
    let mut spec = AnisotropyProblemSpec::new(s, modes, cfg.constraint);
    spec.options = cfg.solver_options();
    Ok(spec)
}

fn run_solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let spec = problem_spec(cfg, cfg.single_mode()?)?;
    let result = solve_anisotropy(&spec)?;
    println!("{}", result.summary_line());
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("result.json"), result.to_json()?)?;
        export_plot_data(&result.sigma, dir, cfg.samples)?;
    }
    Ok(if result.certified { EXIT_OK } else { EXIT_UNCERTIFIED })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Writes `sigma.csv` (ν, σ), `wulff.csv` (ν, x, y), `frank.csv` (ν, x, y)
/// and `kappa_inv.csv` (ν, σ + σ″) into `dir`, on `samples` angles from 0 to
/// 2π inclusive.
pub fn export_plot_data(sigma: &AnisotropyFunction, dir: &Path, samples: usize) -> Result<Vec<PathBuf>, CliError> {
    if samples < MIN_SAMPLES {
        return Err(CliError::usage("Arguments", format!("samples must be at least {MIN_SAMPLES}")));
    }
    let g = wulff_geometry(sigma, samples)?;
    let nu = closed_grid(samples);
    let files = [
        ("sigma.csv", "nu,sigma", nu.iter().map(|&v| vec![v, sigma.evaluate(v)]).collect::<Vec<_>>()),
        ("wulff.csv", "nu,x,y", g.nu.iter().zip(&g.boundary).map(|(v, p)| vec![*v, p[0], p[1]]).collect()),
        ("frank.csv", "nu,x,y", g.nu.iter().zip(&g.frank_diagram).map(|(v, p)| vec![*v, p[0], p[1]]).collect()),
        ("kappa_inv.csv", "nu,kappa_inv", g.nu.iter().zip(&g.curvature_reciprocal).map(|(v, k)| vec![*v, *k]).collect()),
    ];
    let mut paths = Vec::new();
    for (name, header, rows) in files {
        let mut text = format!("{header}\n");
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let path = dir.join(name);
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}
