//! Command-line interface: spectral quantities of branching random walks
//! on the integer lattice, driven by JSON kernel/source descriptors.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical-tolerance
//! failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use brw_spectra::asymptotics::{
    check_asymptote_with_tol, n_dependence_check, AlphaRational, AsymptoticsError, Quantity,
};
use brw_spectra::config::{
    canonical_json, ConfigError, KernelDescriptor, SimulationDescriptor, SourcesDescriptor,
};
use brw_spectra::green::{green_lambda, GreenError};
use brw_spectra::lattice_walk::{LatticePoint, WalkError, WalkSpec};
use brw_spectra::scenarios::Scenario;
use brw_spectra::simulator::{ode_m1, simulate, MomentSeries, SimulatorError};
use brw_spectra::spectral::{
    beta_critical_with_tol, gamma_eigenvalues, gamma_matrix, lambda0_with_tol,
    positive_spectrum, truncated_operator_eigen, SpectralError,
};
use brw_spectra::SourceConfig;

#[derive(Parser)]
#[command(name = "brw-spectra", version, about = "Spectral quantities of branching random walks on Z^d")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output file (default: stdout). A run manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative tolerance override for quadratures.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (fallback: env BRW_SPECTRA_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed override for simulation runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct KernelArg {
    /// Kernel descriptor JSON file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SourcesArg {
    /// Sources descriptor JSON file ({"points": [...], "beta": ...}).
    #[arg(long)]
    sources: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green function G_lambda(x, y).
    Green {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long)]
        lambda: f64,
        /// Start point, comma-separated integers.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<i64>,
        /// End point, comma-separated integers.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<i64>,
    },
    /// Critical source intensity beta_c.
    BetaC {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
    },
    /// Leading eigenvalue lambda_0(beta) of H_beta.
    Lambda0 {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
        /// Override the intensity from the sources file.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Full positive spectrum with criticality classification.
    Spectrum {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Finite-box operator eigenvalues vs the resolvent answer.
    TruncatedCheck {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
        #[arg(long)]
        beta: Option<f64>,
        /// Box halfwidth L (sites {-L..L}^d).
        #[arg(long = "box")]
        box_halfwidth: i64,
    },
    /// Fit an asymptotic law on a grid and compare with the prediction.
    AsymptoteCheck {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
        /// One of: green-small-lambda, green-deficit, lambda0.
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        grid_start: f64,
        #[arg(long)]
        grid_stop: f64,
        #[arg(long, default_value_t = 10)]
        grid_points: usize,
        /// Tail exponent as a rational string ("3/2"), overriding the
        /// kernel descriptor.
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Check that the eigenvalue law collapses onto the product N*beta.
    NCheck {
        #[command(flatten)]
        kernel: KernelArg,
        #[command(flatten)]
        sources: SourcesArg,
        #[arg(long)]
        beta_start: f64,
        #[arg(long)]
        beta_stop: f64,
        #[arg(long, default_value_t = 3)]
        beta_points: usize,
        /// Source counts, e.g. --n-list 1,2.
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
    },
    /// Monte Carlo first moments of the particle system.
    Simulate {
        /// Simulation descriptor JSON (kernel fields + sources +
        /// branching + run controls).
        #[arg(long)]
        config: PathBuf,
    },
    /// First-moment ODE on a finite box (supports beta < 0).
    OdeM1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "box")]
        box_halfwidth: i64,
    },
    /// Re-run a canonical asymptotic-regime scenario end-to-end.
    Repro {
        /// Regime label: one of 1i, 2iii, 4i, 4iii, 4iv.
        #[arg(long)]
        theorem: String,
    },
}

enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<GreenError> for CliError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::ToleranceNotReached { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Green(g) => g.into(),
            SpectralError::GapNotResolved { .. } | SpectralError::BracketNotFound => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::Green(g) => g.into(),
            AsymptoticsError::Spectral(s) => s.into(),
            AsymptoticsError::InsufficientAsymptoticRange { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimulatorError> for CliError {
    fn from(e: SimulatorError) -> Self {
        match e {
            SimulatorError::Spectral(s) => s.into(),
            SimulatorError::CapExceededEverywhere | SimulatorError::NonPositiveValues => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    config_digest: String,
    version: String,
    tolerance: Option<f64>,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
}

/// 17 significant digits, '.' decimal, locale-free.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_kernel(path: &PathBuf) -> Result<(WalkSpec, String), CliError> {
    let text = read_file(path)?;
    let desc: KernelDescriptor = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((desc.to_walk()?, text))
}

fn load_sources(path: &PathBuf) -> Result<(SourceConfig, String), CliError> {
    let text = read_file(path)?;
    let desc: SourcesDescriptor = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((desc.to_sources()?, text))
}

fn digest_of(parts: &[&str]) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    for p in parts {
        let canonical = canonical_json(p)
            .map_err(|e| CliError::Validation(format!("config digest: {e}")))?;
        hasher.update(canonical.as_bytes());
        hasher.update(b"\n");
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn moment_series_csv(series: &MomentSeries) -> String {
    let mut out = String::from("t,m1_total,stderr");
    for (p, _) in &series.m1_at {
        let label: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        let _ = write!(out, ",m1_at_{}", label.join("_"));
    }
    out.push('\n');
    for (i, &t) in series.times.iter().enumerate() {
        let _ = write!(out, "{},{},{}", fmt(t), fmt(series.m1_total[i]), fmt(series.stderr[i]));
        for (_, v) in &series.m1_at {
            let _ = write!(out, ",{}", fmt(v[i]));
        }
        out.push('\n');
    }
    out
}

fn apply_alpha_override(
    path: &PathBuf,
    alpha: &Option<String>,
) -> Result<(WalkSpec, String), CliError> {
    let text = read_file(path)?;
    let mut desc: KernelDescriptor = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(a) = alpha {
        let rational = AlphaRational::parse(a)?;
        desc.alpha = Some(rational.value());
    }
    Ok((desc.to_walk()?, text))
}

fn run(cli: &Cli) -> Result<(String, String), CliError> {
    let tol = cli.tol;
    match &cli.cmd {
        Cmd::Green { kernel, lambda, x, y } => {
            let (walk, text) = load_kernel(&kernel.config)?;
            let g = green_lambda(&walk, *lambda, x, y, tol)?;
            let mut csv = String::from("lambda");
            for i in 1..=walk.dimension() {
                let _ = write!(csv, ",dx_{i}");
            }
            csv.push_str(",value,err\n");
            let _ = write!(csv, "{}", fmt(*lambda));
            for (a, b) in x.iter().zip(y) {
                let _ = write!(csv, ",{}", b - a);
            }
            let _ = writeln!(csv, ",{},{}", fmt(g.value), fmt(g.err));
            Ok((csv, digest_of(&[&text])?))
        }
        Cmd::BetaC { kernel, sources } => {
            let (walk, ktext) = load_kernel(&kernel.config)?;
            let (src, stext) = load_sources(&sources.sources)?;
            let bc = beta_critical_with_tol(&walk, &src, tol)?;
            Ok((
                format!("beta_c\n{}\n", fmt(bc)),
                digest_of(&[&ktext, &stext])?,
            ))
        }
        Cmd::Lambda0 { kernel, sources, beta } => {
            let (walk, ktext) = load_kernel(&kernel.config)?;
            let (mut src, stext) = load_sources(&sources.sources)?;
            if let Some(b) = beta {
                src = src.with_beta(*b);
            }
            let l0 = lambda0_with_tol(&walk, &src, tol)?;
            let mut csv = String::from("beta,lambda_0\n");
            let _ = writeln!(
                csv,
                "{},{}",
                fmt(src.beta()),
                l0.map(fmt).unwrap_or_else(|| "subcritical".into())
            );
            Ok((csv, digest_of(&[&ktext, &stext])?))
        }
        Cmd::Spectrum { kernel, sources, beta } => {
            let (walk, ktext) = load_kernel(&kernel.config)?;
            let (mut src, stext) = load_sources(&sources.sources)?;
            if let Some(b) = beta {
                src = src.with_beta(*b);
            }
            let result = positive_spectrum(&walk, &src)?;
            let mut csv = String::from("beta,lambda_i,index,residual\n");
            for (i, &l) in result.eigenvalues.iter().enumerate() {
                // residual of the defining relation beta * gamma_i(lambda_i) = 1
                let gam = gamma_eigenvalues(&gamma_matrix(&walk, &src, l, tol)?)?[i];
                let res = (src.beta() * gam - 1.0).abs();
                let _ = writeln!(csv, "{},{},{},{}", fmt(src.beta()), fmt(l), i, fmt(res));
            }
            Ok((csv, digest_of(&[&ktext, &stext])?))
        }
        Cmd::TruncatedCheck { kernel, sources, beta, box_halfwidth } => {
            let (walk, ktext) = load_kernel(&kernel.config)?;
            let (mut src, stext) = load_sources(&sources.sources)?;
            if let Some(b) = beta {
                src = src.with_beta(*b);
            }
            let eigs = truncated_operator_eigen(&walk, &src, *box_halfwidth)?;
            let resolvent = lambda0_with_tol(&walk, &src, tol)?;
            let mut csv = String::from("box,index,lambda_box,lambda_resolvent\n");
            for (i, &l) in eigs.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    box_halfwidth,
                    i,
                    fmt(l),
                    resolvent.map(fmt).unwrap_or_else(|| "subcritical".into())
                );
            }
            Ok((csv, digest_of(&[&ktext, &stext])?))
        }
        Cmd::AsymptoteCheck {
            kernel,
            sources,
            quantity,
            grid_start,
            grid_stop,
            grid_points,
            alpha,
        } => {
            let (walk, ktext) = apply_alpha_override(&kernel.config, alpha)?;
            let (src, stext) = load_sources(&sources.sources)?;
            let quantity = match quantity.as_str() {
                "green-small-lambda" => Quantity::GreenSmallLambda,
                "green-deficit" => Quantity::GreenDeficit,
                "lambda0" => Quantity::Lambda0,
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown quantity {other:?}; expected green-small-lambda, green-deficit or lambda0"
                    )))
                }
            };
            if *grid_points < 4 || *grid_start <= 0.0 || *grid_stop <= *grid_start {
                return Err(CliError::Validation(
                    "grid must have >= 4 points and 0 < start < stop".into(),
                ));
            }
            let grid: Vec<f64> = (0..*grid_points)
                .map(|i| {
                    grid_start * (grid_stop / grid_start).powf(i as f64 / (grid_points - 1) as f64)
                })
                .collect();
            let report = check_asymptote_with_tol(&walk, &src, quantity, &grid, tol)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            Ok((json + "\n", digest_of(&[&ktext, &stext])?))
        }
        Cmd::NCheck {
            kernel,
            sources,
            beta_start,
            beta_stop,
            beta_points,
            n_list,
        } => {
            let (walk, ktext) = load_kernel(&kernel.config)?;
            let (src, stext) = load_sources(&sources.sources)?;
            if *beta_points < 1 || *beta_start <= 0.0 || *beta_stop < *beta_start {
                return Err(CliError::Validation("bad beta grid".into()));
            }
            let grid: Vec<f64> = if *beta_points == 1 {
                vec![*beta_start]
            } else {
                (0..*beta_points)
                    .map(|i| {
                        beta_start
                            * (beta_stop / beta_start).powf(i as f64 / (beta_points - 1) as f64)
                    })
                    .collect()
            };
            let points: Vec<LatticePoint> = src.points().to_vec();
            let report = n_dependence_check(&walk, &points, &grid, n_list)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            Ok((json + "\n", digest_of(&[&ktext, &stext])?))
        }
        Cmd::Simulate { config } => {
            let text = read_file(config)?;
            let desc: SimulationDescriptor = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
            let mut sim = desc.to_config()?;
            if let Some(s) = cli.seed {
                sim.seed = s;
            }
            let series = simulate(&sim)?;
            Ok((moment_series_csv(&series), digest_of(&[&text])?))
        }
        Cmd::OdeM1 { config, box_halfwidth } => {
            let text = read_file(config)?;
            let desc: SimulationDescriptor = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
            let sim = desc.to_config()?;
            let grid: Vec<f64> = (0..sim.time_points)
                .map(|i| sim.t_max * i as f64 / (sim.time_points - 1) as f64)
                .collect();
            let series = ode_m1(
                &sim.walk,
                &sim.sources,
                &sim.branching,
                *box_halfwidth,
                &grid,
                &sim.start,
            )?;
            Ok((moment_series_csv(&series), digest_of(&[&text])?))
        }
        Cmd::Repro { theorem } => {
            let scenario = Scenario::parse(theorem).ok_or_else(|| {
                CliError::Validation(format!(
                    "unknown regime label {theorem:?}; expected one of 1i, 2iii, 4i, 4iii, 4iv"
                ))
            })?;
            let outcome = scenario.run()?;
            let json = serde_json::to_string_pretty(&outcome)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if !outcome.pass {
                // report is still emitted on stderr for inspection
                eprintln!("{json}");
                return Err(CliError::Numerical(format!(
                    "scenario {theorem} did not meet its tolerance"
                )));
            }
            Ok((json + "\n", digest_of(&[&format!("{{\"scenario\":\"{theorem}\"}}")])?))
        }
    }
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Green { .. } => "green",
        Cmd::BetaC { .. } => "beta-c",
        Cmd::Lambda0 { .. } => "lambda0",
        Cmd::Spectrum { .. } => "spectrum",
        Cmd::TruncatedCheck { .. } => "truncated-check",
        Cmd::AsymptoteCheck { .. } => "asymptote-check",
        Cmd::NCheck { .. } => "n-check",
        Cmd::Simulate { .. } => "simulate",
        Cmd::OdeM1 { .. } => "ode-m1",
        Cmd::Repro { .. } => "repro",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("BRW_SPECTRA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    match run(&cli) {
        Ok((output, digest)) => {
            let elapsed = start.elapsed().as_secs_f64();
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &output) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    let manifest = RunManifest {
                        subcommand: subcommand_name(&cli.cmd).into(),
                        config_digest: digest,
                        version: env!("CARGO_PKG_VERSION").into(),
                        tolerance: cli.tol,
                        wall_clock_seconds: elapsed,
                        outputs: vec![path.display().to_string()],
                    };
                    let mpath = path.with_extension("manifest.json");
                    let body = serde_json::to_string_pretty(&manifest).expect("serializable");
                    if let Err(e) = std::fs::write(&mpath, body) {
                        eprintln!("error: cannot write {}: {e}", mpath.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{output}"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
