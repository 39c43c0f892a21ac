//! Parameter sweeps, operational-diagnostics tables and file emission for
//! the `sshqfi` command-line tool.
//!
//! Sweep points are independent jobs executed on a worker pool; result
//! assembly preserves the input order, so outputs do not depend on the
//! worker count. All numeric CSV output uses fixed formatting: the
//! amplitude trace carries 17 significant digits, diagnostics rows use the
//! shortest round-trip decimal form.

use crate::dynamics::{
    self, AmplitudeTrace, SpectralData, SpectralMethod, TimeGrid,
};
use crate::error::{Error, Result};
use crate::greens;
use crate::lattice::{self, band_edges, build_hamiltonian, ModelParams};
use crate::metrology::{
    self, qfi_trace, DiagnosticsReport, QfiTrace, RetentionTime, EDGE_MARGIN_DEFAULT,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Dimension up to which the default method selection prefers exact
/// diagonalization over Krylov propagation.
pub const AUTO_EXACT_LIMIT: usize = 1200;

/// Default Krylov dimension.
pub const DEFAULT_KRYLOV_DIM: usize = 350;

/// Spectral strategy requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    /// Exact diagonalization when the dimension allows it, Krylov above.
    Auto,
    Exact,
    Krylov,
}

impl MethodChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "krylov" => Ok(Self::Krylov),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected auto, exact or krylov)"
            ))),
        }
    }

    /// Resolve `Auto` against the Hilbert-space dimension.
    pub fn resolve(self, dim: usize) -> MethodChoice {
        match self {
            Self::Auto => {
                if dim <= AUTO_EXACT_LIMIT {
                    Self::Exact
                } else {
                    Self::Krylov
                }
            }
            other => other,
        }
    }
}

/// Which physical parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dimerization,
    Coupling,
    Detuning,
    /// Detuning in units of the band edge: delta = value * 2J|d|.
    DetuningNormalized,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dimerization" | "d" => Ok(Self::Dimerization),
            "coupling" | "g" => Ok(Self::Coupling),
            "detuning" | "delta" => Ok(Self::Detuning),
            "detuning-normalized" | "detuning_normalized" => Ok(Self::DetuningNormalized),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep axis '{other}'"
            ))),
        }
    }

    /// Substitute the swept value into the base parameters.
    pub fn apply(&self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut p = *base;
        match self {
            Self::Dimerization => p.dimerization = value,
            Self::Coupling => p.coupling = value,
            Self::Detuning => p.detuning = value,
            Self::DetuningNormalized => {
                if base.dimerization == 0.0 {
                    return Err(Error::InvalidParameter(
                        "normalized detuning is undefined at d = 0".into(),
                    ));
                }
                p.detuning = value * 2.0 * base.hopping * base.dimerization.abs();
            }
        }
        p.validate()?;
        Ok(p)
    }
}

/// Resolved numerical settings shared by all commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub method: MethodChoice,
    /// Krylov dimension m.
    pub krylov_dim: usize,
    /// Simulation horizon; also the retention-time cap and the
    /// useful-window end.
    pub t_max: f64,
    pub dt: f64,
    /// Late-time averaging window.
    pub t1: f64,
    pub t2: f64,
    /// Retention-time threshold.
    pub eta_retention: f64,
    /// Useful-window threshold.
    pub eta_window: f64,
    /// Post-transient cutoff for the useful window.
    pub t_cut: f64,
    /// Fail (exit 3) instead of warning when the grid passes the
    /// recurrence horizon.
    pub strict: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            krylov_dim: DEFAULT_KRYLOV_DIM,
            t_max: 100.0,
            dt: 0.05,
            t1: 40.0,
            t2: 100.0,
            eta_retention: 0.2,
            eta_window: 0.4,
            t_cut: 20.0,
            strict: false,
        }
    }
}

impl RunSettings {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_spacing(self.t_max, self.dt)
    }
}

/// Spectral data plus survival amplitude for one parameter point.
pub struct TraceOutcome {
    pub params: ModelParams,
    pub hamiltonian: lattice::HamiltonianMatrix,
    pub spectral: SpectralData,
    pub trace: AmplitudeTrace,
    pub qfi: QfiTrace,
    pub horizon: f64,
    pub horizon_exceeded: bool,
}

impl TraceOutcome {
    pub fn breakdown(&self) -> bool {
        self.spectral.breakdown()
    }
}

/// Build the Hamiltonian, obtain the spectrum with the resolved method and
/// evaluate u(t) and F(t) on the configured grid.
pub fn run_trace(params: &ModelParams, settings: &RunSettings) -> Result<TraceOutcome> {
    params.validate()?;
    let h = build_hamiltonian(params)?;
    let horizon = lattice::recurrence_horizon(params);
    let horizon_exceeded = settings.t_max > horizon;
    if horizon_exceeded && settings.strict {
        return Err(Error::HorizonExceeded(format!(
            "grid end {} exceeds the recurrence horizon {horizon:.3} at L = {}",
            settings.t_max, params.half_length
        )));
    }
    let spectral = match settings.method.resolve(h.dim()) {
        MethodChoice::Exact => dynamics::eigendecompose(&h)?,
        MethodChoice::Krylov => dynamics::lanczos_spectral(&h, settings.krylov_dim)?,
        MethodChoice::Auto => unreachable!("resolve() removes Auto"),
    };
    let grid = settings.grid()?;
    let trace = dynamics::survival_amplitude(&spectral, &grid);
    let qfi = qfi_trace(&trace);
    Ok(TraceOutcome {
        params: *params,
        hamiltonian: h,
        spectral,
        trace,
        qfi,
        horizon,
        horizon_exceeded,
    })
}

/// Diagnostics plus run flags for one sweep point.
pub struct PointOutcome {
    pub report: DiagnosticsReport,
    pub horizon: f64,
    pub horizon_exceeded: bool,
    pub breakdown: bool,
}

/// Full diagnostics pipeline for one parameter point: F(t), window
/// indicators and both the numerical and analytic bound-state columns.
pub fn run_point(params: &ModelParams, settings: &RunSettings) -> Result<PointOutcome> {
    let outcome = run_trace(params, settings)?;
    let f = &outcome.qfi;
    let f_bar = metrology::late_time_average(f, settings.t1, settings.t2)?;
    let t_eta = metrology::retention_time(f, settings.eta_retention, settings.t_max);
    let w_eta = metrology::useful_window(f, settings.eta_window, settings.t_cut, settings.t_max)?;

    let d = params.dimerization;
    let edge = 2.0 * params.hopping * d.abs();
    let delta_norm = if d == 0.0 {
        f64::NAN
    } else {
        params.detuning / edge
    };

    // Analytic benchmark from the pole equation; absent when the gap is
    // closed (or a decoupled emitter sits outside it).
    let analytic = greens::bound_state(
        params.detuning,
        params.coupling,
        params.hopping,
        params.dimerization,
    )
    .ok();
    // Numerical classification needs the full spectrum.
    let numerical = if outcome.spectral.method() == SpectralMethod::Exact && d != 0.0 {
        metrology::numerical_bound_state(
            &outcome.spectral,
            &band_edges(params.hopping, d),
            EDGE_MARGIN_DEFAULT,
        )
        .ok()
    } else {
        None
    };

    let (omega_bs, delta_edge) = match (&numerical, &analytic) {
        (Some(n), _) => (n.info.omega_bs, n.info.delta_edge),
        (None, Some(a)) => (a.omega_bs, a.delta_edge),
        (None, None) => (f64::NAN, f64::NAN),
    };

    let report = DiagnosticsReport {
        dimerization: d,
        coupling: params.coupling,
        detuning: params.detuning,
        delta_norm,
        f_bar,
        t_eta,
        w_eta,
        z_bs_num: numerical.as_ref().map_or(f64::NAN, |n| n.info.z_bs),
        z_bs_analytic: analytic.as_ref().map_or(f64::NAN, |a| a.z_bs),
        omega_bs,
        delta_edge,
        outer_weight: numerical.as_ref().map_or(f64::NAN, |n| n.outer_weight),
        eta_retention: settings.eta_retention,
        eta_window: settings.eta_window,
        t1: settings.t1,
        t2: settings.t2,
        t_cut: settings.t_cut,
        t_max: settings.t_max,
    };
    Ok(PointOutcome {
        report,
        horizon: outcome.horizon,
        horizon_exceeded: outcome.horizon_exceeded,
        breakdown: outcome.breakdown(),
    })
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Numerical(format!("worker pool: {e}")))
}

/// Run one sweep; rows are ordered exactly as the input values.
pub fn run_sweep(
    base: &ModelParams,
    axis: SweepAxis,
    values: &[f64],
    settings: &RunSettings,
    workers: usize,
) -> Result<Vec<PointOutcome>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep value list".into()));
    }
    for v in values {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite sweep value {v}")));
        }
    }
    let pool = worker_pool(workers)?;
    pool.install(|| {
        values
            .par_iter()
            .map(|&v| run_point(&axis.apply(base, v)?, settings))
            .collect()
    })
}

/// Averaging window [t1, t2] for robustness tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub t1: f64,
    pub t2: f64,
}

impl Window {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "window '{s}' must look like t1:t2"
            )));
        }
        let t1 = parse_float(parts[0])?;
        let t2 = parse_float(parts[1])?;
        if t2 <= t1 {
            return Err(Error::InvalidParameter(format!(
                "window '{s}' must have t2 > t1"
            )));
        }
        Ok(Self { t1, t2 })
    }
}

/// Cross-product table of retention times over thresholds and late-time
/// averages over windows, on a common detuning grid.
pub struct RobustnessTable {
    pub values: Vec<f64>,
    pub delta_norms: Vec<f64>,
    pub etas: Vec<f64>,
    pub windows: Vec<Window>,
    /// retention[k][i]: retention time at threshold k, grid point i.
    pub retention: Vec<Vec<RetentionTime>>,
    /// averages[k][i]: late-time average over window k, grid point i.
    pub averages: Vec<Vec<f64>>,
    pub retention_ordering_consistent: bool,
    pub average_ordering_consistent: bool,
    /// Smallest recurrence horizon across the grid.
    pub min_horizon: f64,
    pub horizon_exceeded: bool,
    pub breakdown: bool,
}

/// Do all settings induce the same ordering of the grid points? A pair of
/// points only counts as a contradiction when one setting orders it
/// strictly one way and another setting strictly the other way; ties
/// (capped retention times in particular) never contradict.
pub fn ordering_consistent(rows: &[Vec<f64>], tol: f64) -> bool {
    let Some(first) = rows.first() else {
        return true;
    };
    let n = first.len();
    for i in 0..n {
        for j in i + 1..n {
            let mut saw_less = false;
            let mut saw_greater = false;
            for row in rows {
                let diff = row[i] - row[j];
                if diff < -tol {
                    saw_less = true;
                } else if diff > tol {
                    saw_greater = true;
                }
            }
            if saw_less && saw_greater {
                return false;
            }
        }
    }
    true
}

const ORDERING_TOL: f64 = 1e-9;

pub fn run_robustness(
    base: &ModelParams,
    axis: SweepAxis,
    values: &[f64],
    etas: &[f64],
    windows: &[Window],
    settings: &RunSettings,
    workers: usize,
) -> Result<RobustnessTable> {
    if etas.len() < 2 || windows.len() < 2 {
        return Err(Error::InvalidParameter(
            "robustness needs at least two thresholds and two windows".into(),
        ));
    }
    for &eta in etas {
        if !(0.0..1.0).contains(&eta) || eta == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold {eta} outside (0, 1)"
            )));
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty detuning grid".into()));
    }

    let pool = worker_pool(workers)?;
    let traces: Vec<TraceOutcome> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| run_trace(&axis.apply(base, v)?, settings))
            .collect::<Result<Vec<_>>>()
    })?;

    let retention: Vec<Vec<RetentionTime>> = etas
        .iter()
        .map(|&eta| {
            traces
                .iter()
                .map(|t| metrology::retention_time(&t.qfi, eta, settings.t_max))
                .collect()
        })
        .collect();
    let averages: Vec<Vec<f64>> = windows
        .iter()
        .map(|w| {
            traces
                .iter()
                .map(|t| metrology::late_time_average(&t.qfi, w.t1, w.t2))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let retention_values: Vec<Vec<f64>> = retention
        .iter()
        .map(|row| row.iter().map(|t| t.time()).collect())
        .collect();

    Ok(RobustnessTable {
        delta_norms: traces
            .iter()
            .map(|t| {
                let d = t.params.dimerization;
                if d == 0.0 {
                    f64::NAN
                } else {
                    t.params.detuning / (2.0 * t.params.hopping * d.abs())
                }
            })
            .collect(),
        retention_ordering_consistent: ordering_consistent(&retention_values, ORDERING_TOL),
        average_ordering_consistent: ordering_consistent(&averages, ORDERING_TOL),
        min_horizon: traces.iter().map(|t| t.horizon).fold(f64::INFINITY, f64::min),
        horizon_exceeded: traces.iter().any(|t| t.horizon_exceeded),
        breakdown: traces.iter().any(|t| t.breakdown()),
        values: values.to_vec(),
        etas: etas.to_vec(),
        windows: windows.to_vec(),
        retention,
        averages,
    })
}

/// Convergence self-check: doubling the chain and enlarging the Krylov
/// space must leave F(t) unchanged below the recurrence horizon.
pub struct ConvergenceReport {
    pub base_half_length: usize,
    pub ref_half_length: usize,
    pub base_krylov_dim: usize,
    pub ref_krylov_dim: usize,
    pub max_dev_length: f64,
    pub max_dev_krylov: f64,
    pub tolerance: f64,
    pub horizon_base: f64,
    pub horizon_exceeded: bool,
}

impl ConvergenceReport {
    pub fn pass_length(&self) -> bool {
        self.max_dev_length < self.tolerance
    }

    pub fn pass_krylov(&self) -> bool {
        self.max_dev_krylov < self.tolerance
    }

    pub fn pass(&self) -> bool {
        self.pass_length() && self.pass_krylov()
    }
}

/// Stability threshold for the convergence checks.
pub const CONVERGENCE_TOL: f64 = 1e-6;

fn max_qfi_deviation(a: &QfiTrace, b: &QfiTrace) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

pub fn run_convergence(
    base: &ModelParams,
    settings: &RunSettings,
    length_factor: usize,
    krylov_increment: usize,
) -> Result<ConvergenceReport> {
    if length_factor < 2 {
        return Err(Error::InvalidParameter(
            "length factor must be at least 2".into(),
        ));
    }
    // Both checks run on Krylov propagation: the comparison is between
    // truncation parameters, not solver backends.
    let krylov = RunSettings {
        method: MethodChoice::Krylov,
        strict: settings.strict,
        ..*settings
    };
    let mut doubled = *base;
    doubled.half_length = base.half_length * length_factor;

    let base_run = run_trace(base, &krylov)?;
    let long_run = run_trace(&doubled, &krylov)?;
    let enlarged = RunSettings {
        krylov_dim: krylov.krylov_dim + krylov_increment,
        ..krylov
    };
    let enlarged_run = run_trace(base, &enlarged)?;

    Ok(ConvergenceReport {
        base_half_length: base.half_length,
        ref_half_length: doubled.half_length,
        base_krylov_dim: krylov.krylov_dim,
        ref_krylov_dim: enlarged.krylov_dim,
        max_dev_length: max_qfi_deviation(&base_run.qfi, &long_run.qfi),
        max_dev_krylov: max_qfi_deviation(&base_run.qfi, &enlarged_run.qfi),
        tolerance: CONVERGENCE_TOL,
        horizon_base: base_run.horizon,
        horizon_exceeded: base_run.horizon_exceeded,
    })
}

// ---------------------------------------------------------------------------
// Value-list parsing and file emission
// ---------------------------------------------------------------------------

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse '{s}' as a number")))
}

/// Parse a sweep value list: either a comma list `0.1,0.3,0.7` or a
/// linspace `start:stop:count` with inclusive endpoints.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::InvalidParameter("empty value list".into()));
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "linspace '{s}' must look like start:stop:count"
            )));
        }
        let start = parse_float(parts[0])?;
        let stop = parse_float(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad linspace count in '{s}'")))?;
        if count == 0 {
            return Err(Error::InvalidParameter("linspace count must be > 0".into()));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count)
            .map(|i| {
                if i + 1 == count {
                    stop
                } else {
                    start + i as f64 * step
                }
            })
            .collect());
    }
    s.split(',').map(parse_float).collect()
}

/// Parse a comma list of windows `30:90,40:100`.
pub fn parse_windows(s: &str) -> Result<Vec<Window>> {
    s.split(',').map(Window::parse).collect()
}

/// Run provenance written next to every data file.
#[derive(Debug, Serialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub recurrence_horizon: f64,
    pub horizon_exceeded: bool,
    pub lanczos_breakdown: bool,
    pub wall_clock_seconds: f64,
}

impl RunMetadata {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            parameters,
            recurrence_horizon: f64::NAN,
            horizon_exceeded: false,
            lanczos_breakdown: false,
            wall_clock_seconds: 0.0,
        }
    }

    /// Write `<stem>.meta.json` next to the data file.
    pub fn write_sidecar(&self, data_path: &Path) -> Result<()> {
        let path = sidecar_path(data_path);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("metadata serialization: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// `<dir>/<stem>.meta.json` for `<dir>/<stem>.<ext>`.
pub fn sidecar_path(data_path: &Path) -> std::path::PathBuf {
    data_path.with_extension("meta.json")
}

/// Amplitude-trace CSV: `t,re_u,im_u,qfi`, one row per sample, 17
/// significant digits.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &AmplitudeTrace, qfi: &QfiTrace) -> Result<()> {
    writeln!(w, "t,re_u,im_u,qfi")?;
    for (i, (u, f)) in trace.values().iter().zip(qfi.values()).enumerate() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            trace.grid().sample(i),
            u.re,
            u.im,
            f
        )?;
    }
    Ok(())
}

/// Diagnostics CSV: one row per swept value, in input order.
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[DiagnosticsReport]) -> Result<()> {
    writeln!(w, "{}", DiagnosticsReport::CSV_HEADER)?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Robustness CSV: the cross-product table in wide form, one row per grid
/// point, plus the table-level ordering verdicts repeated on every row.
pub fn write_robustness_csv<W: Write>(mut w: W, table: &RobustnessTable) -> Result<()> {
    let mut header = String::from("value,delta_norm");
    for eta in &table.etas {
        header.push_str(&format!(",t_eta_{eta}"));
        header.push_str(&format!(",t_eta_{eta}_capped"));
    }
    for win in &table.windows {
        header.push_str(&format!(",f_bar_{}_{}", win.t1, win.t2));
    }
    header.push_str(",retention_ordering_consistent,average_ordering_consistent");
    writeln!(w, "{header}")?;
    for i in 0..table.values.len() {
        let mut row = format!("{},{}", table.values[i], table.delta_norms[i]);
        for k in 0..table.etas.len() {
            let t = &table.retention[k][i];
            row.push_str(&format!(",{},{}", t.time(), u8::from(t.is_capped())));
        }
        for k in 0..table.windows.len() {
            row.push_str(&format!(",{}", table.averages[k][i]));
        }
        row.push_str(&format!(
            ",{},{}",
            table.retention_ordering_consistent, table.average_ordering_consistent
        ));
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Convergence CSV: one row per check.
pub fn write_convergence_csv<W: Write>(mut w: W, report: &ConvergenceReport) -> Result<()> {
    writeln!(w, "check,base,reference,max_abs_delta_f,tolerance,pass")?;
    writeln!(
        w,
        "chain_doubling,L={},L={},{},{},{}",
        report.base_half_length,
        report.ref_half_length,
        report.max_dev_length,
        report.tolerance,
        report.pass_length()
    )?;
    writeln!(
        w,
        "krylov_enlargement,m={},m={},{},{},{}",
        report.base_krylov_dim,
        report.ref_krylov_dim,
        report.max_dev_krylov,
        report.tolerance,
        report.pass_krylov()
    )?;
    Ok(())
}

/// Flat key-value configuration file; flags win over file values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "J")]
    pub hopping: Option<f64>,
    pub d: Option<f64>,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "L")]
    pub half_length: Option<usize>,
    pub method: Option<String>,
    pub m: Option<usize>,
    pub tmax: Option<f64>,
    pub dt: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub eta: Option<f64>,
    pub eta_window: Option<f64>,
    pub tcut: Option<f64>,
    pub workers: Option<usize>,
    pub strict: Option<bool>,
    pub out: Option<String>,
    pub axis: Option<String>,
    pub values: Option<String>,
    pub etas: Option<String>,
    pub windows: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::new(1.0, 0.3, 0.4, 0.0, 40).unwrap()
    }

    #[test]
    fn axis_substitution() {
        let p = SweepAxis::Coupling.apply(&base(), 0.8).unwrap();
        assert_eq!(p.coupling, 0.8);
        let p = SweepAxis::DetuningNormalized.apply(&base(), 0.5).unwrap();
        assert!((p.detuning - 0.3).abs() < 1e-15);
        let gapless = ModelParams::new(1.0, 0.0, 0.4, 0.0, 40).unwrap();
        assert!(SweepAxis::DetuningNormalized.apply(&gapless, 0.5).is_err());
        assert!(SweepAxis::Dimerization.apply(&base(), 1.5).is_err());
    }

    #[test]
    fn method_resolution() {
        assert_eq!(MethodChoice::Auto.resolve(883), MethodChoice::Exact);
        assert_eq!(MethodChoice::Auto.resolve(2003), MethodChoice::Krylov);
        assert_eq!(MethodChoice::Exact.resolve(5000), MethodChoice::Exact);
        assert!(MethodChoice::parse("lanczos").is_err());
    }

    #[test]
    fn value_list_parsing() {
        assert_eq!(parse_values("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        let lin = parse_values("0:1.3:27").unwrap();
        assert_eq!(lin.len(), 27);
        assert_eq!(lin[0], 0.0);
        assert_eq!(lin[26], 1.3);
        assert_eq!(parse_values("5:5:1").unwrap(), vec![5.0]);
        assert!(parse_values("").is_err());
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("a,b").is_err());
        let w = parse_windows("30:90,40:100").unwrap();
        assert_eq!(w[0], Window { t1: 30.0, t2: 90.0 });
        assert!(parse_windows("90:30").is_err());
    }

    #[test]
    fn ordering_consistency_logic() {
        // Strict reversal between settings is inconsistent.
        let inconsistent = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(!ordering_consistent(&inconsistent, 1e-12));
        // Ties (e.g. both capped at 100) do not contradict a strict order.
        let tied = vec![vec![100.0, 100.0], vec![90.0, 100.0]];
        assert!(ordering_consistent(&tied, 1e-12));
        let same = vec![vec![1.0, 2.0, 3.0], vec![10.0, 20.0, 30.0]];
        assert!(ordering_consistent(&same, 1e-12));
    }

    #[test]
    fn sweep_rows_follow_input_order() {
        let settings = RunSettings {
            t_max: 20.0,
            t1: 5.0,
            t2: 20.0,
            t_cut: 5.0,
            ..RunSettings::default()
        };
        let values = [0.5, 0.1, 0.3];
        let out = run_sweep(&base(), SweepAxis::Dimerization, &values, &settings, 2).unwrap();
        for (o, v) in out.iter().zip(values) {
            assert_eq!(o.report.dimerization, v);
        }
    }

    #[test]
    fn sweep_outputs_independent_of_workers() {
        let settings = RunSettings {
            t_max: 20.0,
            t1: 5.0,
            t2: 20.0,
            t_cut: 5.0,
            ..RunSettings::default()
        };
        let values = [0.0, 0.2, 0.4];
        let serial = run_sweep(&base(), SweepAxis::Detuning, &values, &settings, 1).unwrap();
        let parallel = run_sweep(&base(), SweepAxis::Detuning, &values, &settings, 4).unwrap();
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.report.csv_row(), b.report.csv_row());
        }
    }

    #[test]
    fn strict_mode_rejects_post_horizon_grid() {
        let short = ModelParams::new(1.0, 0.3, 0.4, 0.0, 10).unwrap();
        let strict = RunSettings {
            strict: true,
            ..RunSettings::default()
        };
        match run_trace(&short, &strict) {
            Err(Error::HorizonExceeded(_)) => {}
            other => panic!("expected horizon error, got {:?}", other.map(|_| ())),
        }
        let lax = RunSettings::default();
        let out = run_trace(&short, &lax).unwrap();
        assert!(out.horizon_exceeded);
    }

    #[test]
    fn trace_csv_format() {
        let p = ModelParams::new(1.0, 0.3, 0.0, 0.8, 1).unwrap();
        let settings = RunSettings {
            t_max: 0.1,
            dt: 0.05,
            ..RunSettings::default()
        };
        let out = run_trace(&p, &settings).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &out.trace, &out.qfi).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,re_u,im_u,qfi");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "d = 0.5\ng = 0.2\nL = 120\nmethod = \"exact\"\nstrict = true\n")
            .unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.d, Some(0.5));
        assert_eq!(cfg.half_length, Some(120));
        assert_eq!(cfg.strict, Some(true));
        assert!(cfg.tmax.is_none());

        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(
            sidecar_path(Path::new("out/run1.csv")),
            Path::new("out/run1.meta.json")
        );
    }
}
