//! Command-line front end: `steady`, `propagate`, `sweep` and `predict`.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 for numerical failure.
//! The thread count comes from `--threads`, else the `MWCONV_THREADS`
//! environment variable, else all available cores.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mwconv::doppler::{average_states, velocity_resolved};
use mwconv::num_complex::Complex64;
use mwconv::regimes::{predict, Regime};
use mwconv::scan::{run_sweep, Observable, SweepParameter, SweepSpec};
use mwconv::{DriveFields, Execution, SteadyState};

use config::{build_config, parse_lines, parse_override, Assignment, ConfigError, RunConfig};
use output::{Replay, Sidecar, SweepGrid};

pub const THREADS_ENV: &str = "MWCONV_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mwconv",
    version,
    about = "Microwave-induced optical frequency conversion in a closed-loop Lambda medium"
)]
struct Cli {
    /// Worker threads (overrides MWCONV_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Evaluate everything on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (fig2, fig3, fig4, fig5).
    #[arg(long)]
    preset: Option<String>,
    /// Override one key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParameterArg {
    DeltaM,
    Delta31,
    Gm,
}

impl From<ParameterArg> for SweepParameter {
    fn from(p: ParameterArg) -> Self {
        match p {
            ParameterArg::DeltaM => SweepParameter::MwDetuning,
            ParameterArg::Delta31 => SweepParameter::OpticalDetuning,
            ParameterArg::Gm => SweepParameter::MwRabi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Weak,
    Strong,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady state at the cell entrance.
    Steady {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Amplitude of the generated wave (its phase is zero).
        #[arg(long, default_value_t = 0.0)]
        g32: f64,
        /// Also print every velocity class.
        #[arg(long)]
        per_class: bool,
    },
    /// Propagate through the cell and write the trace.
    Propagate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Re-run from a sidecar written earlier.
        #[arg(long, conflicts_with_all = ["config", "preset", "set"])]
        replay: Option<PathBuf>,
    },
    /// One propagation per parameter value; writes the end-point table.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Parameter to sweep (default: the preset's).
        #[arg(long, value_enum, requires = "values")]
        parameter: Option<ParameterArg>,
        /// Comma-separated sweep values.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "parameter"
        )]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with_all = ["config", "preset", "set", "parameter"])]
        replay: Option<PathBuf>,
    },
    /// Closed-form prediction for one regime.
    Predict {
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long)]
        g0sq: f64,
        #[arg(long)]
        gm: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta_m: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(ConfigError),
    Core(mwconv::Error),
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Config(e) => write!(f, "configuration: {e}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<mwconv::Error> for CliError {
    fn from(e: mwconv::Error) -> Self {
        CliError::Core(e)
    }
}

struct Context {
    execution: Execution,
    threads: Option<usize>,
}

/// Run the command line `argv` (program name first). Everything meant for
/// the user goes to `stdout`, diagnostics to `stderr`.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_INVALID
                }
            };
        }
    };
    let threads = match thread_count(cli.threads, std::env::var(THREADS_ENV).ok()) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let ctx = Context {
        execution: if cli.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        },
        threads,
    };
    let mut out = Vec::new();
    let mut err = Vec::new();
    let result = in_pool(threads, || dispatch(cli.command, &ctx, &mut out, &mut err));
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&err);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>, env: Option<String>) -> Result<Option<usize>, CliError> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(v)) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?,
        _ => return Ok(None),
    };
    if n == 0 {
        return Err(CliError::Usage("thread count must be >= 1".into()));
    }
    Ok(Some(n))
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut assignments: Vec<Assignment> = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
        assignments.extend(parse_lines(&text).map_err(|e| in_file(path, e))?);
    }
    if let Some(p) = &args.preset {
        assignments.push(parse_override(&format!("preset={p}"))?);
    }
    for s in &args.set {
        assignments.push(parse_override(s)?);
    }
    let file = args.config.as_deref();
    build_config(&assignments).map_err(|e| match (file, &e.origin) {
        (Some(path), Some(config::Origin::Line(_))) => in_file(path, e),
        _ => CliError::Config(e),
    })
}

fn in_file(path: &Path, mut e: ConfigError) -> CliError {
    e.message = format!("{} (in {})", e.message, path.display());
    CliError::Config(e)
}

fn read_replay(path: &Path, command: &str) -> Result<(RunConfig, Option<SweepGrid>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))?;
    let replay: Replay = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a sidecar: {e}", path.display())))?;
    if replay.command != command {
        return Err(CliError::Usage(format!(
            "{} was written by `{}`, not `{command}`",
            path.display(),
            replay.command
        )));
    }
    let config = config::parse_config(&replay.config_text)?;
    Ok((config, replay.sweep))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(path.to_owned(), e))
}

/// `fig2.csv` -> `fig2.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn dispatch(
    command: Command,
    ctx: &Context,
    out: &mut Vec<u8>,
    err: &mut Vec<u8>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(PathBuf::from("<stdout>"), e);
    match command {
        Command::Steady {
            cfg,
            g32,
            per_class,
        } => {
            let config = load_config(&cfg)?;
            if !(g32.is_finite() && g32 >= 0.0) {
                return Err(CliError::Usage(format!("--g32 must be >= 0, got {g32}")));
            }
            let setup = config.setup()?;
            let fields = DriveFields {
                a2: Complex64::new(g32, 0.0),
                ..setup.fields
            };
            let quad = setup.quadrature.build(setup.medium.vp)?;
            let states = velocity_resolved(&setup.medium, &fields, &quad, ctx.execution)?;
            let avg = average_states(&quad, &states)?;
            write_state(out, &avg).map_err(io)?;
            if per_class {
                writeln!(out, "\nvz,weight,{}", STATE_COLUMNS).map_err(io)?;
                for ((vz, w), s) in quad.nodes().iter().zip(quad.weights()).zip(&states) {
                    writeln!(out, "{vz:.16e},{w:.16e},{}", state_row(s)).map_err(io)?;
                }
            }
        }
        Command::Propagate {
            cfg,
            out: path,
            replay,
        } => {
            let config = match &replay {
                Some(p) => read_replay(p, "propagate")?.0,
                None => load_config(&cfg)?,
            };
            let setup = config.setup()?;
            let trace = setup.run(ctx.execution)?;
            let mut csv = Vec::new();
            output::write_trace_csv(&mut csv, &trace).map_err(io)?;
            write_file(&path, &csv)?;
            let peak = trace.interior_maximum();
            let mut sidecar = Sidecar::new("propagate", &file_name(&path), &config, &setup);
            sidecar.quadrature_nodes = setup.quadrature.build(setup.medium.vp)?.len();
            sidecar.threads = ctx.threads;
            sidecar.execution = execution_name(ctx.execution).into();
            sidecar.rows = trace.samples.len();
            sidecar.first_peak = peak.map(|p| output::PeakSummary {
                zeta: p.zeta,
                i32_rel: p.value,
            });
            sidecar.integration_steps = Some(trace.stats.accepted);
            write_sidecar(&path, &sidecar)?;
            writeln!(out, "rows={}", trace.samples.len()).map_err(io)?;
            match peak {
                Some(p) => {
                    writeln!(out, "first_peak_zeta={:.6}", p.zeta).map_err(io)?;
                    writeln!(out, "first_peak_I32_rel={:.6}", p.value).map_err(io)?;
                }
                None => writeln!(out, "first_peak_zeta=none").map_err(io)?,
            }
            writeln!(out, "end_I32_rel={:.6}", trace.last().i32_rel).map_err(io)?;
        }
        Command::Sweep {
            cfg,
            parameter,
            values,
            out: path,
            replay,
        } => {
            let (config, grid) = match &replay {
                Some(p) => read_replay(p, "sweep")?,
                None => {
                    let config = load_config(&cfg)?;
                    let grid = match parameter {
                        Some(p) => Some(SweepGrid {
                            parameter: p.into(),
                            values,
                        }),
                        None => config
                            .sweep
                            .clone()
                            .map(|(parameter, values)| SweepGrid { parameter, values }),
                    };
                    (config, grid)
                }
            };
            let grid = grid.ok_or_else(|| {
                CliError::Usage(
                    "no sweep: use a sweep preset (fig3, fig4, fig5) or --parameter with --values"
                        .into(),
                )
            })?;
            let setup = config.setup()?;
            let spec = SweepSpec {
                parameter: grid.parameter,
                values: grid.values.clone(),
                base: setup.clone(),
                observable: Observable::EndPoint,
            };
            let table = run_sweep(&spec, ctx.execution)?;
            let mut csv = Vec::new();
            output::write_sweep_csv(&mut csv, &table).map_err(io)?;
            write_file(&path, &csv)?;
            let mut sidecar = Sidecar::new("sweep", &file_name(&path), &config, &setup);
            sidecar.sweep = Some(grid);
            sidecar.quadrature_nodes = table.metadata.quadrature_nodes;
            sidecar.threads = ctx.threads;
            sidecar.execution = execution_name(ctx.execution).into();
            sidecar.rows = table.rows.len();
            sidecar.failures = output::failures_of(&table);
            write_sidecar(&path, &sidecar)?;
            writeln!(out, "rows={}", table.rows.len()).map_err(io)?;
            writeln!(out, "failures={}", table.failures()).map_err(io)?;
            if let Some(best) = table.best() {
                writeln!(out, "best_{}={:.6e}", spec.parameter.name(), best.value).map_err(io)?;
                writeln!(out, "best_I32_rel={:.6}", best.i32_rel).map_err(io)?;
            }
            if table.failures() > 0 {
                let _ = writeln!(
                    err,
                    "warning: {} of {} points failed; see the status column and {}",
                    table.failures(),
                    table.rows.len(),
                    sidecar_path(&path).display()
                );
            }
        }
        Command::Predict {
            regime,
            g0sq,
            gm,
            delta_m,
        } => {
            if !(g0sq.is_finite() && g0sq > 0.0) {
                return Err(CliError::Usage(format!("--g0sq must be > 0, got {g0sq}")));
            }
            let regime = match regime {
                RegimeArg::Weak => Regime::Weak,
                RegimeArg::Strong => Regime::Strong,
            };
            let fields = DriveFields {
                delta_m,
                ..DriveFields::resonant(g0sq.sqrt(), 0.0, gm, 0.0)
            };
            let p = predict(regime, &fields)?;
            let name = match p.regime {
                Regime::Weak => "weak",
                Regime::Strong => "strong",
            };
            writeln!(out, "regime={name}").map_err(io)?;
            writeln!(out, "zeta_period={:.3}", p.zeta_period).map_err(io)?;
            writeln!(out, "zeta_max={:.3}", p.zeta_max).map_err(io)?;
            writeln!(out, "loss_at_max={:.6}", p.loss_at_max).map_err(io)?;
            writeln!(out, "validity_margin={:.6}", p.validity_margin).map_err(io)?;
            writeln!(out, "two_photon_resonant={}", p.two_photon_resonant).map_err(io)?;
            writeln!(out, "scales_separated={}", p.scales_separated).map_err(io)?;
        }
    }
    Ok(())
}

fn execution_name(e: Execution) -> &'static str {
    if e.is_parallel() {
        "parallel"
    } else {
        "serial"
    }
}

fn write_sidecar(csv: &Path, sidecar: &Sidecar) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| CliError::Usage(format!("cannot encode sidecar: {e}")))?;
    write_file(&sidecar_path(csv), format!("{json}\n").as_bytes())
}

const STATE_COLUMNS: &str =
    "rho11,rho22,rho33,sigma21_re,sigma21_im,sigma31_re,sigma31_im,sigma32_re,sigma32_im";

fn state_values(s: &SteadyState) -> [f64; 9] {
    [
        s.rho11,
        s.rho22,
        s.rho33,
        s.sigma21.re,
        s.sigma21.im,
        s.sigma31.re,
        s.sigma31.im,
        s.sigma32.re,
        s.sigma32.im,
    ]
}

fn state_row(s: &SteadyState) -> String {
    state_values(s).map(|x| format!("{x:.16e}")).join(",")
}

fn write_state(out: &mut Vec<u8>, s: &SteadyState) -> std::io::Result<()> {
    for (name, v) in STATE_COLUMNS.split(',').zip(state_values(s)) {
        writeln!(out, "{name}={v:.16e}")?;
    }
    writeln!(out, "condition={:.3e}", s.condition)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_sources() {
        assert_eq!(thread_count(Some(3), Some("8".into())).unwrap(), Some(3));
        assert_eq!(thread_count(None, Some(" 8 ".into())).unwrap(), Some(8));
        assert_eq!(thread_count(None, None).unwrap(), None);
        assert_eq!(thread_count(None, Some(String::new())).unwrap(), None);
        assert!(thread_count(None, Some("many".into())).is_err());
        assert!(thread_count(Some(0), None).is_err());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(
            sidecar_path(Path::new("out/fig2.csv")),
            PathBuf::from("out/fig2.json")
        );
        assert_eq!(
            sidecar_path(Path::new("trace")),
            PathBuf::from("trace.json")
        );
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let numerical = CliError::Core(mwconv::Error::IllConditioned { condition: 1e13 });
        assert_eq!(numerical.exit_code(), EXIT_NUMERICAL);
        let invalid = CliError::Core(mwconv::Error::Domain("x".into()));
        assert_eq!(invalid.exit_code(), EXIT_INVALID);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_INVALID);
    }
}
