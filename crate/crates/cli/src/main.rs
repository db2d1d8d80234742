//! `rebsim`: derived parameters, single protocol runs, grid sweeps and
//! Pareto frontiers from a JSON configuration.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! guard tripped, 4 no row satisfies the feasibility bound.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rebsim::cavity::{derived_quantities, OperatingPoint};
use rebsim::sweep::{self, SweepRow};
use serde_json::{json, Map, Value};

use config::{Format, Resolved};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rebsim::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                rebsim::Error::NoSolution => 4,
                rebsim::Error::Io(_) | rebsim::Error::Csv(_) | rebsim::Error::Json(_) => 1,
                e if e.is_numerical_guard() => 3,
                _ => 2,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rebsim",
    version,
    about = "Remote-entanglement protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report cooperativities, Purcell factor, efficiencies and scattering amplitudes.
    Params(Common),
    /// Run the configured protocol once.
    Run(Common),
    /// Evaluate the configured protocol over the sweep grid.
    Sweep(SweepArgs),
    /// Reduce a saved sweep to its Pareto frontier.
    Pareto(ParetoArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Reserved for stochastic extensions; the current models are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Worker threads; falls back to REBSIM_THREADS, then to the core count.
    #[arg(long, env = "REBSIM_THREADS")]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct ParetoArgs {
    /// Sweep CSV written by `rebsim sweep`.
    results: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also report the highest-success frontier row at or below this infidelity.
    #[arg(long, allow_negative_numbers = true)]
    max_infidelity: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Params(args) => cmd_params(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Pareto(args) => cmd_pareto(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rebsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(args: &Common) -> Result<Resolved, CliError> {
    let resolved = config::load(&args.config)?;
    if args.seed.is_some() {
        log::info!("--seed is reserved; all current models are deterministic");
    }
    Ok(resolved)
}

fn output_path(args: &Common, resolved: &Resolved) -> Option<PathBuf> {
    args.out
        .clone()
        .or_else(|| resolved.config.output.path.as_ref().map(PathBuf::from))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(rebsim::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        other => out.push((
            prefix.to_string(),
            other.to_string().trim_matches('"').to_string(),
        )),
    }
}

fn cmd_params(args: &Common) -> Result<(), CliError> {
    let r = load(args)?;
    let p = &r.config.protocol;
    let projector = r
        .projector
        .with_cavity_detuning(p.delta_ac_ghz.unwrap_or_default());
    let projector_op =
        OperatingPoint::from_laser_detuning(&projector, p.delta_la_ghz.unwrap_or_default());
    let emission_op = OperatingPoint::from_laser_detuning(&r.emission, 0.0);
    let report = json!({
        "projector": derived_quantities(&projector, &projector_op)?,
        "emission": derived_quantities(&r.emission, &emission_op)?,
    });
    let path = output_path(args, &r);
    match args
        .format
        .or(r.config.output.format)
        .unwrap_or(Format::Json)
    {
        Format::Json => write_json(path.as_deref(), &report),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &report, &mut rows);
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(open_output(path.as_deref())?);
            w.write_record(["quantity", "value"])
                .map_err(rebsim::Error::from)?;
            for (k, v) in rows {
                w.write_record([k, v]).map_err(rebsim::Error::from)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn cmd_run(args: &Common) -> Result<(), CliError> {
    let r = load(args)?;
    let outcome = r.build(&[])?.run()?;
    let path = output_path(args, &r);
    match args
        .format
        .or(r.config.output.format)
        .unwrap_or(Format::Json)
    {
        Format::Json => write_json(
            path.as_deref(),
            &serde_json::to_value(&outcome).map_err(rebsim::Error::from)?,
        ),
        Format::Csv => {
            let row = SweepRow {
                values: Vec::new(),
                success_probability: outcome.success_probability,
                infidelity: outcome.infidelity,
                fidelity: outcome.fidelity,
                herald_pattern: outcome.herald_pattern,
                error: None,
            };
            sweep::write_csv(open_output(path.as_deref())?, &[], &[row])?;
            Ok(())
        }
    }
}

fn rows_json(names: &[String], rows: &[SweepRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| {
                let mut obj = Map::new();
                for (n, v) in names.iter().zip(&row.values) {
                    obj.insert(n.clone(), json!(v));
                }
                obj.insert("success_probability".into(), json!(row.success_probability));
                obj.insert("infidelity".into(), json!(row.infidelity));
                obj.insert("fidelity".into(), json!(row.fidelity));
                obj.insert("herald_pattern".into(), json!(row.herald_pattern));
                obj.insert("error".into(), json!(row.error));
                Value::Object(obj)
            })
            .collect(),
    )
}

fn write_rows(
    path: Option<&Path>,
    format: Format,
    names: &[String],
    rows: &[SweepRow],
) -> Result<(), CliError> {
    match format {
        Format::Csv => Ok(sweep::write_csv(open_output(path)?, names, rows)?),
        Format::Json => write_json(path, &rows_json(names, rows)),
    }
}

fn report_best(names: &[String], rows: &[SweepRow], bound: f64) -> Result<(), CliError> {
    let frontier = sweep::pareto_rows(names, rows);
    let best = frontier
        .iter()
        .filter(|r| r.infidelity <= bound)
        .max_by(|a, b| a.success_probability.total_cmp(&b.success_probability))
        .ok_or(rebsim::Error::NoSolution)?;
    let point: Vec<String> = names
        .iter()
        .zip(&best.values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    eprintln!(
        "best point at infidelity <= {bound}: {} success_probability={} infidelity={}",
        point.join(" "),
        best.success_probability,
        best.infidelity
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let r = load(&args.common)?;
    let parallelism = match args.parallelism {
        Some(0) => return Err(CliError::Config("parallelism must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    let mut result = sweep::run_sweep(|point| r.build(point)?.run(), &r.grid, parallelism)?;
    result.metadata.config_hash = Some(r.hash.clone());
    let names = r.grid.axis_names();
    let path = output_path(&args.common, &r);
    let format = args
        .common
        .format
        .or(r.config.output.format)
        .unwrap_or(Format::Csv);
    write_rows(path.as_deref(), format, &names, &result.rows)?;
    if let Some(p) = &path {
        let mut sidecar = p.clone().into_os_string();
        sidecar.push(".meta.json");
        sweep::write_metadata(Path::new(&sidecar), &result.metadata)?;
    }
    eprintln!(
        "{} rows ({} failed) in {:.3} s on {} workers",
        result.metadata.rows,
        result.metadata.failed_rows,
        result.metadata.wall_time_s,
        result.metadata.workers
    );
    if let Some(bound) = r.config.output.max_infidelity {
        report_best(&names, &result.rows, bound)?;
    }
    Ok(())
}

fn cmd_pareto(args: &ParetoArgs) -> Result<(), CliError> {
    let (names, rows) = sweep::read_csv_file(&args.results)?;
    let frontier = sweep::pareto_rows(&names, &rows);
    write_rows(
        args.out.as_deref(),
        args.format.unwrap_or(Format::Csv),
        &names,
        &frontier,
    )?;
    if let Some(bound) = args.max_infidelity {
        report_best(&names, &rows, bound)?;
    }
    Ok(())
}
