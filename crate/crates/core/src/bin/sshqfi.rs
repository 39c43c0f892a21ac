//! Command-line front end: traces, parameter sweeps, robustness tables,
//! convergence checks and bound-state scans, emitted as CSV plus a
//! `.meta.json` sidecar per data file.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sshqfi::dynamics::DENSE_SOLVE_LIMIT;
use sshqfi::error::{Error, Result};
use sshqfi::lattice::ModelParams;
use sshqfi::sweep::{
    self, parse_values, parse_windows, FileConfig, MethodChoice, RunMetadata, RunSettings,
    SweepAxis, Window,
};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "sshqfi",
    version,
    about = "Phase-QFI dynamics of a quantum emitter in a dimerized (SSH) chain",
    after_help = "Energies are in units of J, times in units of 1/J. \
                  Every data file gets a <name>.meta.json sidecar with the \
                  resolved parameters."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter point and write the u(t)/F(t) trace.
    Trace(TraceArgs),
    /// Sweep one parameter axis; one diagnostics CSV row per value.
    Sweep(SweepArgs),
    /// Cross-check indicator orderings over thresholds and windows.
    Robustness(RobustnessArgs),
    /// Chain-doubling and Krylov-enlargement stability checks.
    Convergence(ConvergenceArgs),
    /// Detuning-resolved bound-state scan via exact diagonalization.
    BoundStateScan(ScanArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Hopping energy scale J.
    #[arg(long = "J")]
    hopping: Option<f64>,
    /// Dimerization d, |d| <= 1.
    #[arg(long)]
    d: Option<f64>,
    /// Emitter-bath coupling g, units of J.
    #[arg(long)]
    g: Option<f64>,
    /// Emitter detuning from the gap center, units of J.
    #[arg(long)]
    delta: Option<f64>,
    /// Chain half-length L (2L+1 unit cells).
    #[arg(long = "L")]
    half_length: Option<usize>,
    /// Spectral strategy: auto, exact or krylov.
    #[arg(long)]
    method: Option<String>,
    /// Krylov dimension m.
    #[arg(long)]
    m: Option<usize>,
    /// Simulation horizon, units of 1/J.
    #[arg(long)]
    tmax: Option<f64>,
    /// Time-grid spacing, units of 1/J.
    #[arg(long)]
    dt: Option<f64>,
    /// Late-time averaging window start.
    #[arg(long)]
    t1: Option<f64>,
    /// Late-time averaging window end.
    #[arg(long)]
    t2: Option<f64>,
    /// Retention-time threshold.
    #[arg(long)]
    eta: Option<f64>,
    /// Useful-window threshold.
    #[arg(long)]
    eta_window: Option<f64>,
    /// Post-transient cutoff for the useful window.
    #[arg(long)]
    tcut: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count for sweeps (default: SSHQFI_WORKERS or 1).
    #[arg(long)]
    workers: Option<usize>,
    /// Fail (exit 3) instead of warning when the grid passes the
    /// recurrence horizon.
    #[arg(long)]
    strict: bool,
    /// Flat key-value configuration file; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also dump the assembled Hamiltonian in coordinate format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept axis: dimerization, coupling, detuning or
    /// detuning-normalized.
    #[arg(long)]
    axis: Option<String>,
    /// Values: comma list `0.1,0.3` or linspace `start:stop:count`.
    #[arg(long)]
    values: Option<String>,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    values: Option<String>,
    /// Retention thresholds to compare, comma list.
    #[arg(long)]
    etas: Option<String>,
    /// Averaging windows to compare, comma list of t1:t2.
    #[arg(long)]
    windows: Option<String>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Chain-length multiplier for the doubling check.
    #[arg(long, default_value_t = 2)]
    l_mult: usize,
    /// Krylov-dimension increment for the enlargement check.
    #[arg(long, default_value_t = 50)]
    m_add: usize,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    values: Option<String>,
}

/// Per-command defaults; chain sizes and Krylov dimensions follow the
/// reproduction recipes in the README.
struct CommandDefaults {
    half_length: usize,
    krylov_dim: usize,
    out: &'static str,
}

struct Resolved {
    params: ModelParams,
    settings: RunSettings,
    workers: usize,
    out: PathBuf,
}

fn resolve(common: &CommonArgs, defaults: &CommandDefaults) -> Result<(Resolved, FileConfig)> {
    let cfg = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let params = ModelParams::new(
        common.hopping.or(cfg.hopping).unwrap_or(1.0),
        common.d.or(cfg.d).unwrap_or(0.3),
        common.g.or(cfg.g).unwrap_or(0.4),
        common.delta.or(cfg.delta).unwrap_or(0.0),
        common
            .half_length
            .or(cfg.half_length)
            .unwrap_or(defaults.half_length),
    )?;
    let method = match common.method.as_deref().or(cfg.method.as_deref()) {
        Some(s) => MethodChoice::parse(s)?,
        None => MethodChoice::Auto,
    };
    let base = RunSettings::default();
    let settings = RunSettings {
        method,
        krylov_dim: common.m.or(cfg.m).unwrap_or(defaults.krylov_dim),
        t_max: common.tmax.or(cfg.tmax).unwrap_or(base.t_max),
        dt: common.dt.or(cfg.dt).unwrap_or(base.dt),
        t1: common.t1.or(cfg.t1).unwrap_or(base.t1),
        t2: common.t2.or(cfg.t2).unwrap_or(base.t2),
        eta_retention: common.eta.or(cfg.eta).unwrap_or(base.eta_retention),
        eta_window: common
            .eta_window
            .or(cfg.eta_window)
            .unwrap_or(base.eta_window),
        t_cut: common.tcut.or(cfg.tcut).unwrap_or(base.t_cut),
        strict: common.strict || cfg.strict.unwrap_or(false),
    };
    let workers = match common.workers.or(cfg.workers) {
        Some(w) => w,
        None => workers_from_env()?,
    };
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(defaults.out));
    Ok((
        Resolved {
            params,
            settings,
            workers,
            out,
        },
        cfg,
    ))
}

fn workers_from_env() -> Result<usize> {
    match std::env::var("SSHQFI_WORKERS") {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| {
            Error::InvalidParameter(format!("SSHQFI_WORKERS='{s}' is not a worker count"))
        }),
        Err(_) => Ok(1),
    }
}

fn warn_horizon(exceeded: bool, horizon: f64, t_max: f64) {
    if exceeded {
        eprintln!(
            "warning: grid end {t_max} exceeds the recurrence horizon {horizon:.3}; \
             late samples can contain finite-size reflections"
        );
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn params_json(r: &Resolved, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({
        "model": r.params,
        "settings": r.settings,
        "workers": r.workers,
        "out": r.out.display().to_string(),
    });
    if let (Some(obj), Some(extra_obj)) = (v.as_object_mut(), extra.as_object()) {
        for (k, val) in extra_obj {
            obj.insert(k.clone(), val.clone());
        }
    }
    v
}

fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let start = Instant::now();
    let (r, _) = resolve(
        &args.common,
        &CommandDefaults {
            half_length: 500,
            krylov_dim: 350,
            out: "trace.csv",
        },
    )?;
    let outcome = sweep::run_trace(&r.params, &r.settings)?;
    warn_horizon(outcome.horizon_exceeded, outcome.horizon, r.settings.t_max);

    let mut w = create_out(&r.out)?;
    sweep::write_trace_csv(&mut w, &outcome.trace, &outcome.qfi)?;
    drop(w);

    if let Some(matrix_path) = &args.dump_matrix {
        let mut mw = create_out(matrix_path)?;
        outcome.hamiltonian.write_coordinate(&mut mw)?;
        println!("wrote {}", matrix_path.display());
    }

    let mut meta = RunMetadata::new("trace", params_json(&r, json!({})));
    meta.recurrence_horizon = outcome.horizon;
    meta.horizon_exceeded = outcome.horizon_exceeded;
    meta.lanczos_breakdown = outcome.breakdown();
    meta.wall_clock_seconds = start.elapsed().as_secs_f64();
    meta.write_sidecar(&r.out)?;
    println!("wrote {} ({} samples)", r.out.display(), outcome.qfi.values().len());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let start = Instant::now();
    let (r, cfg) = resolve(
        &args.common,
        &CommandDefaults {
            half_length: 500,
            krylov_dim: 350,
            out: "sweep.csv",
        },
    )?;
    let axis = SweepAxis::parse(
        args.axis
            .as_deref()
            .or(cfg.axis.as_deref())
            .unwrap_or("detuning-normalized"),
    )?;
    let values = parse_values(
        args.values
            .as_deref()
            .or(cfg.values.as_deref())
            .ok_or_else(|| Error::InvalidParameter("sweep needs --values".into()))?,
    )?;
    let outcomes = sweep::run_sweep(&r.params, axis, &values, &r.settings, r.workers)?;
    let min_horizon = outcomes.iter().map(|o| o.horizon).fold(f64::INFINITY, f64::min);
    let any_exceeded = outcomes.iter().any(|o| o.horizon_exceeded);
    warn_horizon(any_exceeded, min_horizon, r.settings.t_max);

    let mut w = create_out(&r.out)?;
    let reports: Vec<_> = outcomes.iter().map(|o| o.report).collect();
    sweep::write_reports_csv(&mut w, &reports)?;
    drop(w);

    let mut meta = RunMetadata::new(
        "sweep",
        params_json(&r, json!({ "axis": axis, "values": values })),
    );
    meta.recurrence_horizon = min_horizon;
    meta.horizon_exceeded = any_exceeded;
    meta.lanczos_breakdown = outcomes.iter().any(|o| o.breakdown);
    meta.wall_clock_seconds = start.elapsed().as_secs_f64();
    meta.write_sidecar(&r.out)?;
    println!("wrote {} ({} rows)", r.out.display(), reports.len());
    Ok(())
}

fn cmd_robustness(args: &RobustnessArgs) -> Result<()> {
    let start = Instant::now();
    let (r, cfg) = resolve(
        &args.common,
        &CommandDefaults {
            half_length: 520,
            krylov_dim: 360,
            out: "robustness.csv",
        },
    )?;
    let axis = SweepAxis::parse(
        args.axis
            .as_deref()
            .or(cfg.axis.as_deref())
            .unwrap_or("detuning-normalized"),
    )?;
    let values = parse_values(
        args.values
            .as_deref()
            .or(cfg.values.as_deref())
            .unwrap_or("0:1.3:14"),
    )?;
    let etas = parse_values(
        args.etas
            .as_deref()
            .or(cfg.etas.as_deref())
            .unwrap_or("0.15,0.2,0.25"),
    )?;
    let windows: Vec<Window> = parse_windows(
        args.windows
            .as_deref()
            .or(cfg.windows.as_deref())
            .unwrap_or("30:90,40:100,50:100"),
    )?;
    let table = sweep::run_robustness(
        &r.params, axis, &values, &etas, &windows, &r.settings, r.workers,
    )?;
    warn_horizon(table.horizon_exceeded, table.min_horizon, r.settings.t_max);

    let mut w = create_out(&r.out)?;
    sweep::write_robustness_csv(&mut w, &table)?;
    drop(w);

    let mut meta = RunMetadata::new(
        "robustness",
        params_json(
            &r,
            json!({ "axis": axis, "values": values, "etas": etas, "windows": windows }),
        ),
    );
    meta.recurrence_horizon = table.min_horizon;
    meta.horizon_exceeded = table.horizon_exceeded;
    meta.lanczos_breakdown = table.breakdown;
    meta.wall_clock_seconds = start.elapsed().as_secs_f64();
    meta.write_sidecar(&r.out)?;
    println!(
        "wrote {} (retention ordering consistent: {}, average ordering consistent: {})",
        r.out.display(),
        table.retention_ordering_consistent,
        table.average_ordering_consistent
    );
    Ok(())
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<()> {
    let start = Instant::now();
    let (r, _) = resolve(
        &args.common,
        &CommandDefaults {
            half_length: 250,
            krylov_dim: 300,
            out: "convergence.csv",
        },
    )?;
    let report = sweep::run_convergence(&r.params, &r.settings, args.l_mult, args.m_add)?;
    warn_horizon(report.horizon_exceeded, report.horizon_base, r.settings.t_max);

    let mut w = create_out(&r.out)?;
    sweep::write_convergence_csv(&mut w, &report)?;
    drop(w);

    let mut meta = RunMetadata::new(
        "convergence",
        params_json(
            &r,
            json!({ "l_mult": args.l_mult, "m_add": args.m_add }),
        ),
    );
    meta.recurrence_horizon = report.horizon_base;
    meta.horizon_exceeded = report.horizon_exceeded;
    meta.wall_clock_seconds = start.elapsed().as_secs_f64();
    meta.write_sidecar(&r.out)?;

    println!(
        "chain_doubling: {} (max |dF| = {:.3e}, tol {:.0e})",
        if report.pass_length() { "PASS" } else { "FAIL" },
        report.max_dev_length,
        report.tolerance
    );
    println!(
        "krylov_enlargement: {} (max |dF| = {:.3e}, tol {:.0e})",
        if report.pass_krylov() { "PASS" } else { "FAIL" },
        report.max_dev_krylov,
        report.tolerance
    );
    println!("wrote {}", r.out.display());
    Ok(())
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let start = Instant::now();
    let (mut r, cfg) = resolve(
        &args.common,
        &CommandDefaults {
            half_length: 220,
            krylov_dim: 350,
            out: "bound_state_scan.csv",
        },
    )?;
    // The scan classifies individual eigenstates, which needs the full
    // spectrum: force exact diagonalization.
    r.settings.method = MethodChoice::Exact;
    if r.params.dim() > DENSE_SOLVE_LIMIT {
        return Err(Error::DenseSolveGuard {
            dim: r.params.dim(),
            limit: DENSE_SOLVE_LIMIT,
        });
    }
    let axis = SweepAxis::parse(
        args.axis
            .as_deref()
            .or(cfg.axis.as_deref())
            .unwrap_or("detuning-normalized"),
    )?;
    let values = parse_values(
        args.values
            .as_deref()
            .or(cfg.values.as_deref())
            .unwrap_or("0:1.3:27"),
    )?;
    let outcomes = sweep::run_sweep(&r.params, axis, &values, &r.settings, r.workers)?;
    let min_horizon = outcomes.iter().map(|o| o.horizon).fold(f64::INFINITY, f64::min);
    let any_exceeded = outcomes.iter().any(|o| o.horizon_exceeded);
    warn_horizon(any_exceeded, min_horizon, r.settings.t_max);

    let mut w = create_out(&r.out)?;
    let reports: Vec<_> = outcomes.iter().map(|o| o.report).collect();
    sweep::write_reports_csv(&mut w, &reports)?;
    drop(w);

    let mut meta = RunMetadata::new(
        "bound-state-scan",
        params_json(&r, json!({ "axis": axis, "values": values })),
    );
    meta.recurrence_horizon = min_horizon;
    meta.horizon_exceeded = any_exceeded;
    meta.wall_clock_seconds = start.elapsed().as_secs_f64();
    meta.write_sidecar(&r.out)?;
    println!("wrote {} ({} rows)", r.out.display(), reports.len());
    Ok(())
}

fn main() {
    // Per-job determinism: the eigensolver runs single-threaded and any
    // parallelism comes from the explicit sweep worker pool.
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Robustness(args) => cmd_robustness(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::BoundStateScan(args) => cmd_scan(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
