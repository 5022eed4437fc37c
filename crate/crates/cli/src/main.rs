//! `mdi-sweep`: distance sweeps of MDI-QKD key rates from the command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdi_core::channel::RelayConfiguration;
use mdi_core::mc;
use mdi_core::output::{self, OutputFormat};
use mdi_core::presets::{Curve, Registry, DEFAULT_CURVES};
use mdi_core::sweep::{self, CurveRecord, GridKind, SkipKind, SweepSpec};
use mdi_core::Error;

#[derive(Parser)]
#[command(name = "mdi-sweep", version, about = "Key-rate sweeps for DV and CV MDI-QKD relays")]
#[command(arg_required_else_help = true, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Check the DV formulas against the Monte Carlo simulator with default
    /// settings and print a pass/fail table.
    #[arg(long)]
    mc_validate: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate curves over a grid of total distances.
    Sweep(SweepArgs),
    /// Order-of-magnitude gap between two curves at one distance.
    Compare(CompareArgs),
    /// Check the DV formulas against the Monte Carlo simulator.
    ValidateMc(McArgs),
    /// List available curve names.
    Presets {
        /// Extra presets as a JSON file.
        #[arg(long)]
        preset_file: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Km,
    Db,
}

#[derive(Args)]
struct SweepArgs {
    /// Relay placement: a (at Alice), b (Alice leg 0.1 km), c (Alice leg 1 km),
    /// d (symmetric).
    #[arg(long, default_value_t = 'a')]
    panel: char,
    /// First grid point (km, or dB with `--grid db`).
    #[arg(long, default_value_t = 0.5)]
    dmin: f64,
    /// Last grid point (km, or dB with `--grid db`).
    #[arg(long, default_value_t = 25.0)]
    dmax: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Comma-separated curve names; see `presets`.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CURVES.map(String::from))]
    curves: Vec<String>,
    /// Fibre attenuation in dB/km.
    #[arg(long, default_value_t = 0.2)]
    atten: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or svg. Defaults to the extension of `--out`, else csv.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Measured points to draw on the SVG plot (`d_tot_km,rate_bits_per_use`).
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long)]
    preset_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Grid::Km)]
    grid: Grid,
}

#[derive(Args)]
struct CompareArgs {
    curve_x: String,
    curve_y: String,
    /// Total distance in km.
    #[arg(long)]
    at: f64,
    #[arg(long, default_value_t = 'a')]
    panel: char,
    #[arg(long, default_value_t = 0.2)]
    atten: f64,
    #[arg(long)]
    preset_file: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Number of random parameter points.
    #[arg(long, default_value_t = 5)]
    cases: usize,
    #[arg(long, default_value_t = 10_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold in standard errors.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
}

impl Default for McArgs {
    fn default() -> Self {
        Self { cases: 5, trials: 10_000_000, seed: 0, sigmas: 3.0 }
    }
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    /// Output was produced but some points or checks did not succeed.
    Incomplete,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_)
        | Error::UnknownCurve(_)
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::EmptyRecords => 2,
        _ => 1,
    }
}

fn registry(preset_file: Option<&Path>) -> mdi_core::Result<Registry> {
    let mut r = Registry::builtin();
    if let Some(p) = preset_file {
        r.extend_from_file(p)?;
    }
    Ok(r)
}

fn format_for(args: &SweepArgs) -> OutputFormat {
    args.format.unwrap_or_else(|| {
        args.out
            .as_deref()
            .and_then(Path::extension)
            .and_then(|e| e.to_str())
            .and_then(|e| e.parse().ok())
            .unwrap_or(OutputFormat::Csv)
    })
}

fn run_sweep(args: SweepArgs) -> mdi_core::Result<Status> {
    let registry = registry(args.preset_file.as_deref())?;
    let spec = SweepSpec {
        panel: args.panel,
        d_min: args.dmin,
        d_max: args.dmax,
        steps: args.steps,
        curves: args.curves.clone(),
        attenuation: args.atten,
        seed: args.seed,
        grid: match args.grid {
            Grid::Km => GridKind::Km,
            Grid::Db => GridKind::Db,
        },
    };
    let overlay = match &args.overlay {
        Some(p) => output::load_overlay_points(p)?,
        None => Vec::new(),
    };
    let records = sweep::run_sweep(&spec, &registry)?;
    let format = format_for(&args);
    let title = format!("panel {}", spec.panel);
    match &args.out {
        Some(path) => output::emit_outputs(&records, format, path, &overlay, &title)?,
        None => write_stdout(&records, format, &overlay, &title)?,
    }

    let failed: Vec<&CurveRecord> =
        records.iter().filter(|r| r.skipped == Some(SkipKind::Computation)).collect();
    for r in &failed {
        eprintln!("warning: {} at {} km: {}", r.curve_id, r.d_tot, r.notes);
    }
    Ok(if failed.is_empty() { Status::Ok } else { Status::Incomplete })
}

fn write_stdout(records: &[CurveRecord], format: OutputFormat, overlay: &[(f64, f64)], title: &str) -> mdi_core::Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        OutputFormat::Csv => output::write_csv(records, &mut out)?,
        OutputFormat::Json => output::write_json(records, &mut out)?,
        OutputFormat::Svg => out.write_all(output::render_svg(records, overlay, title).as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

fn run_compare(args: CompareArgs) -> mdi_core::Result<Status> {
    let registry = registry(args.preset_file.as_deref())?;
    let relay = RelayConfiguration::panel(args.panel)
        .ok_or_else(|| Error::InvalidInput(format!("unknown panel `{}`, expected a-d", args.panel)))?;
    let mut records = Vec::new();
    for name in [&args.curve_x, &args.curve_y] {
        let curve = registry.get(name)?;
        let (raw, aux, notes) = sweep::evaluate_point(relay, args.at, args.atten, &curve)?;
        records.push(CurveRecord {
            d_tot: args.at,
            curve_id: name.clone(),
            rate_raw: Some(raw),
            rate_clamped: Some(raw.max(0.0)),
            aux: Some(aux),
            skipped: None,
            notes,
        });
    }
    for r in &records {
        println!("{}\t{}", r.curve_id, output::format_significant(r.rate_raw.unwrap_or(f64::NAN), 6));
    }
    let gap = sweep::compare_curves(&records, &args.curve_x, &args.curve_y, args.at)?;
    println!("log10({}/{}) = {}", args.curve_x, args.curve_y, output::format_significant(gap, 4));
    Ok(Status::Ok)
}

fn run_mc(args: McArgs) -> mdi_core::Result<Status> {
    let cases = mc::random_cases(args.cases, args.seed);
    let rows = mc::validate(&cases, args.trials, args.seed, args.sigmas)?;
    println!("{:>4}  {:<6}  {:>12}  {:>12}  {:>10}  {:>6}  result", "case", "qty", "analytic", "estimate", "std_err", "z");
    for r in &rows {
        let (mean, se) = r.estimate.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.std_error));
        println!(
            "{:>4}  {:<6}  {:>12.6e}  {:>12.6e}  {:>10.3e}  {:>6.2}  {}",
            r.case,
            r.quantity,
            r.analytic,
            mean,
            se,
            r.z_score,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} checks within {} standard errors", rows.len() - failed, rows.len(), args.sigmas);
    Ok(if failed == 0 { Status::Ok } else { Status::Incomplete })
}

fn run_presets(preset_file: Option<PathBuf>) -> mdi_core::Result<Status> {
    let registry = registry(preset_file.as_deref())?;
    for (name, curve) in registry.iter() {
        let desc = match curve {
            Curve::Dv(p) => format!("dv  eta_d={} Y0={} e_d={} f_e={}", p.eta_d, p.y0, p.e_d, p.f_e),
            Curve::Cv(p) => format!("cv  eta_d={} eps={} phi={} xi={}", p.eta_d, p.epsilon, p.phi, p.xi),
            Curve::CapacityLower => "capacity lower bound".to_string(),
            Curve::CapacityUpper => "capacity upper bound".to_string(),
        };
        println!("{name:<20} {desc}");
    }
    Ok(Status::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Sweep(a)) => run_sweep(a),
        Some(Command::Compare(a)) => run_compare(a),
        Some(Command::ValidateMc(a)) => run_mc(a),
        Some(Command::Presets { preset_file }) => run_presets(preset_file),
        None if cli.mc_validate => run_mc(McArgs::default()),
        None => unreachable!("clap requires a subcommand or flag"),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Incomplete) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
