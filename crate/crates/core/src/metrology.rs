//! Phase quantum Fisher information and operational late-time diagnostics.
//!
//! The probe is prepared in (|g> + e^{i phi}|e>)/sqrt(2); tracing out the
//! bath leaves a qubit whose Bloch vector is
//!
//! ```text
//! r_x = Re[u e^{i phi}],  r_y = Im[u e^{i phi}],  r_z = |u|^2 - 1,
//! ```
//!
//! and the one-parameter QFI reduces to |d_phi r|^2 = |u(t)|^2.
//! Because finite-window dynamics does not always settle into a clean
//! plateau, the post-transient behavior is summarized by three operational
//! indicators: the late-time average of F over [t1, t2], the retention
//! time at which F first drops below a threshold, and the useful-window
//! duration during which F stays above a threshold after an initial
//! transient cut.

use crate::dynamics::{AmplitudeTrace, SpectralData, TimeGrid};
use crate::error::{Error, Result};
use crate::greens::BoundStateInfo;
use crate::lattice::BandStructure;
use num_complex::Complex64;

/// Tolerance when checking that a requested time lies on the grid;
/// absorbs accumulated spacing round-off.
const GRID_EPS: f64 = 1e-9;

/// Default margin for classifying finite-chain eigenvalues against the
/// band edges. Band states come exponentially close to the edges but the
/// in-gap state keeps a finite separation at the parameters studied.
pub const EDGE_MARGIN_DEFAULT: f64 = 1e-9;

/// Time grid plus phase-QFI samples F(t) = |u(t)|^2.
#[derive(Debug, Clone)]
pub struct QfiTrace {
    grid: TimeGrid,
    f: Vec<f64>,
}

impl QfiTrace {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Linear interpolation between samples; `t` must lie on the grid.
    fn value_at(&self, t: f64) -> f64 {
        let dt = self.grid.spacing();
        let x = (t - self.grid.t_start()) / dt;
        let i = (x.floor() as usize).min(self.f.len() - 2);
        let frac = (x - i as f64).clamp(0.0, 1.0);
        self.f[i] + frac * (self.f[i + 1] - self.f[i])
    }

    fn check_covers(&self, lo: f64, hi: f64) -> Result<()> {
        if lo >= hi {
            return Err(Error::Range(format!(
                "window [{lo}, {hi}] is empty or reversed"
            )));
        }
        if lo < self.grid.t_start() - GRID_EPS || hi > self.grid.t_end() + GRID_EPS {
            return Err(Error::Range(format!(
                "window [{lo}, {hi}] not covered by grid [{}, {}]",
                self.grid.t_start(),
                self.grid.t_end()
            )));
        }
        Ok(())
    }
}

/// Pointwise squared modulus of the survival amplitude.
pub fn qfi_trace(trace: &AmplitudeTrace) -> QfiTrace {
    QfiTrace {
        grid: *trace.grid(),
        f: trace.values().iter().map(|u| u.norm_sqr()).collect(),
    }
}

/// Reduced emitter state for survival amplitude `u` and encoded phase
/// `phi`, in Bloch form.
#[derive(Debug, Clone, Copy)]
pub struct ReducedState {
    pub u: Complex64,
    pub phi: f64,
    pub bloch: [f64; 3],
}

impl ReducedState {
    /// |d_phi r|^2 = r_x^2 + r_y^2; equals |u|^2 independently of phi.
    pub fn qfi(&self) -> f64 {
        self.bloch[0] * self.bloch[0] + self.bloch[1] * self.bloch[1]
    }

    /// d_phi r = (-r_y, r_x, 0).
    pub fn phi_derivative(&self) -> [f64; 3] {
        [-self.bloch[1], self.bloch[0], 0.0]
    }

    pub fn bloch_norm_sq(&self) -> f64 {
        self.bloch.iter().map(|r| r * r).sum()
    }

    /// Angle of the locally optimal equatorial measurement basis,
    /// arg u + phi.
    pub fn optimal_angle(&self) -> f64 {
        self.u.arg() + self.phi
    }
}

/// Populate the Bloch vector of the reduced state.
pub fn reduced_state(u: Complex64, phi: f64) -> Result<ReducedState> {
    if u.norm() > 1.0 + 1e-9 {
        return Err(Error::Domain(format!(
            "survival amplitude modulus {} exceeds 1",
            u.norm()
        )));
    }
    let rotated = u * Complex64::from_polar(1.0, phi);
    Ok(ReducedState {
        u,
        phi,
        bloch: [rotated.re, rotated.im, u.norm_sqr() - 1.0],
    })
}

/// Late-time averaged QFI: the trapezoidal integral of F over [t1, t2]
/// divided by the window length, with endpoint values obtained by linear
/// interpolation between grid samples.
pub fn late_time_average(f: &QfiTrace, t1: f64, t2: f64) -> Result<f64> {
    f.check_covers(t1, t2)?;
    let grid = f.grid();
    let n = f.values().len();
    let mut integral = 0.0;
    for i in 0..n - 1 {
        let (a, b) = (grid.sample(i), grid.sample(i + 1));
        let lo = a.max(t1);
        let hi = b.min(t2);
        if hi <= lo {
            continue;
        }
        integral += 0.5 * (f.value_at(lo) + f.value_at(hi)) * (hi - lo);
    }
    Ok(integral / (t2 - t1))
}

/// Window average evaluated directly from the spectral data instead of a
/// sampled time trace:
///
/// ```text
/// mean of |u|^2 over [t1, t2] = sum_{a,b} w_a w_b K(E_a - E_b),
/// K(x) = (sin(x t2) - sin(x t1)) / (x (t2 - t1)),  K(0) = 1.
/// ```
///
/// Used as a consistency check against [`late_time_average`].
pub fn late_time_average_spectral(spec: &SpectralData, t1: f64, t2: f64) -> f64 {
    let width = t2 - t1;
    let pairs = spec.pairs();
    let mut sum = 0.0;
    for &(ea, wa) in pairs {
        for &(eb, wb) in pairs {
            let x = ea - eb;
            let kernel = if x.abs() < 1e-300 {
                1.0
            } else {
                ((x * t2).sin() - (x * t1).sin()) / (x * width)
            };
            sum += wa * wb * kernel;
        }
    }
    sum
}

/// Retention time: either the interpolated first crossing below the
/// threshold, or a marker that F stayed above it up to `t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetentionTime {
    Crossed(f64),
    Capped(f64),
}

impl RetentionTime {
    /// The crossing time, or the cap when no crossing occurred.
    pub fn time(&self) -> f64 {
        match *self {
            RetentionTime::Crossed(t) | RetentionTime::Capped(t) => t,
        }
    }

    pub fn is_capped(&self) -> bool {
        matches!(self, RetentionTime::Capped(_))
    }
}

/// First time at which F(t) falls below `eta`, scanning samples up to
/// `t_max` and interpolating linearly inside the bracketing interval.
pub fn retention_time(f: &QfiTrace, eta: f64, t_max: f64) -> RetentionTime {
    debug_assert!(eta > 0.0 && eta < 1.0);
    let grid = f.grid();
    let values = f.values();
    if values[0] < eta {
        return RetentionTime::Crossed(grid.t_start().min(t_max));
    }
    for i in 0..values.len() - 1 {
        let t_next = grid.sample(i + 1);
        if grid.sample(i) >= t_max {
            break;
        }
        if values[i] >= eta && values[i + 1] < eta {
            let t_prev = grid.sample(i);
            let frac = (values[i] - eta) / (values[i] - values[i + 1]);
            let t_cross = t_prev + frac * (t_next - t_prev);
            if t_cross <= t_max {
                return RetentionTime::Crossed(t_cross);
            }
            return RetentionTime::Capped(t_max);
        }
    }
    RetentionTime::Capped(t_max)
}

/// Post-transient useful-window duration: the total measure of
/// { t in [t_cut, t_end] : F(t) >= eta }, summing sub-intervals with
/// linear interpolation at the threshold crossings.
pub fn useful_window(f: &QfiTrace, eta: f64, t_cut: f64, t_end: f64) -> Result<f64> {
    f.check_covers(t_cut, t_end)?;
    let grid = f.grid();
    let n = f.values().len();
    let mut duration = 0.0;
    for i in 0..n - 1 {
        let (a, b) = (grid.sample(i), grid.sample(i + 1));
        let lo = a.max(t_cut);
        let hi = b.min(t_end);
        if hi <= lo {
            continue;
        }
        let fa = f.value_at(lo);
        let fb = f.value_at(hi);
        duration += match (fa >= eta, fb >= eta) {
            (true, true) => hi - lo,
            (false, false) => 0.0,
            (true, false) => {
                // Leaves the target band inside this panel.
                (hi - lo) * (fa - eta) / (fa - fb)
            }
            (false, true) => (hi - lo) * (fb - eta) / (fb - fa),
        };
    }
    Ok(duration)
}

/// Bound-state diagnostics extracted from a finite-chain spectrum.
#[derive(Debug, Clone, Copy)]
pub struct NumericalBoundState {
    /// In-gap pole summary; `z_bs` is the total in-gap emitter weight and
    /// `omega_bs` the in-gap energy with the largest single weight.
    pub info: BoundStateInfo,
    /// Total emitter weight of discrete states outside the outer band
    /// edges (reported, not bounded).
    pub outer_weight: f64,
    /// Number of eigenvalues classified as in-gap.
    pub in_gap_count: usize,
}

/// Classify an exact spectrum against the band structure: eigenvalues with
/// |E| < inner_edge - margin are in-gap, their summed emitter weight is
/// the numerical residue, and the in-gap energy with the largest single
/// weight defines the band-edge distance. States with |E| beyond the
/// outer edge are reported separately.
///
/// Expects a spectrum carrying weights for all eigenstates (exact
/// diagonalization); a truncated Krylov spectrum would misclassify.
pub fn numerical_bound_state(
    spec: &SpectralData,
    bands: &BandStructure,
    edge_margin: f64,
) -> Result<NumericalBoundState> {
    if bands.gap_width <= 0.0 {
        return Err(Error::NoBoundState(
            "uniform chain (d = 0) has no gap window".into(),
        ));
    }
    let inner = bands.inner_edge - edge_margin;
    let outer = bands.outer_edge + edge_margin;
    let mut z_total = 0.0;
    let mut best: Option<(f64, f64)> = None;
    let mut outer_weight = 0.0;
    let mut in_gap_count = 0;
    for &(e, w) in spec.pairs() {
        if e.abs() < inner {
            z_total += w;
            in_gap_count += 1;
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((e, w));
            }
        } else if e.abs() > outer {
            outer_weight += w;
        }
    }
    let Some((e_bs, _)) = best else {
        return Err(Error::NoBoundState(
            "no eigenvalue inside the gap window".into(),
        ));
    };
    Ok(NumericalBoundState {
        info: BoundStateInfo {
            omega_bs: e_bs,
            z_bs: z_total,
            delta_edge: bands.inner_edge - e_bs.abs(),
            f_bs: z_total * z_total,
        },
        outer_weight,
        in_gap_count,
    })
}

/// Late-time diagnostics for one parameter point, serialized as one CSV
/// row of the sweep output.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsReport {
    pub dimerization: f64,
    pub coupling: f64,
    pub detuning: f64,
    /// detuning / (2J|d|); NaN when d = 0.
    pub delta_norm: f64,
    pub f_bar: f64,
    pub t_eta: RetentionTime,
    pub w_eta: f64,
    /// Numerical in-gap emitter weight; NaN when no exact spectrum was
    /// available or no state fell inside the gap window.
    pub z_bs_num: f64,
    /// Analytic residue from the pole equation; NaN when d = 0.
    pub z_bs_analytic: f64,
    /// Bound-state energy: the numerical in-gap eigenvalue when an exact
    /// spectrum was classified, otherwise the analytic pole.
    pub omega_bs: f64,
    /// Distance of the bound state from the nearest band edge, from the
    /// same source as `omega_bs`.
    pub delta_edge: f64,
    /// Total emitter weight outside the outer band edges; NaN without an
    /// exact spectrum.
    pub outer_weight: f64,
    // Echoed window parameters.
    pub eta_retention: f64,
    pub eta_window: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_cut: f64,
    pub t_max: f64,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str = "d,g,delta,delta_norm,f_bar,t_eta,t_eta_capped,w_eta,\
                                          z_bs_num,z_bs_analytic,omega_bs,delta_edge,outer_weight";

    /// One CSV row; numbers use the shortest round-trip decimal form.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.dimerization,
            self.coupling,
            self.detuning,
            self.delta_norm,
            self.f_bar,
            self.t_eta.time(),
            u8::from(self.t_eta.is_capped()),
            self.w_eta,
            self.z_bs_num,
            self.z_bs_analytic,
            self.omega_bs,
            self.delta_edge,
            self.outer_weight
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{eigendecompose, survival_amplitude, SpectralMethod};
    use crate::lattice::{band_edges, build_hamiltonian, ModelParams};

    fn synthetic_qfi(grid: TimeGrid, f: impl Fn(f64) -> f64) -> QfiTrace {
        QfiTrace {
            f: grid.samples().map(f).collect(),
            grid,
        }
    }

    #[test]
    fn qfi_is_squared_modulus() {
        let spec = SpectralData::new(vec![(0.4, 1.0)], SpectralMethod::Exact).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 50).unwrap();
        let f = qfi_trace(&survival_amplitude(&spec, &grid));
        for &v in f.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((0.8823529_f64.powi(2) - 0.7785467).abs() < 1e-6);
    }

    #[test]
    fn reduced_state_trivial_points() {
        let s = reduced_state(Complex64::new(1.0, 0.0), 0.0).unwrap();
        assert_eq!(s.bloch, [1.0, 0.0, 0.0]);
        assert!((s.qfi() - 1.0).abs() < 1e-15);

        let s = reduced_state(Complex64::new(0.0, 0.0), 1.3).unwrap();
        assert_eq!(s.bloch, [0.0, 0.0, -1.0]);
        assert_eq!(s.qfi(), 0.0);
    }

    #[test]
    fn reduced_state_frozen_example() {
        // u = 0.6i, phi = pi/2: u e^{i phi} = -0.6.
        let s = reduced_state(Complex64::new(0.0, 0.6), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((s.bloch[0] + 0.6).abs() < 1e-15);
        assert!(s.bloch[1].abs() < 1e-15);
        assert!((s.bloch[2] + 0.64).abs() < 1e-15);
        assert!((s.qfi() - 0.36).abs() < 1e-15);
    }

    #[test]
    fn reduced_state_rejects_unphysical_amplitude() {
        assert!(reduced_state(Complex64::new(1.1, 0.0), 0.0).is_err());
    }

    /// Brute-force oracle: build the 2x2 reduced density matrix
    /// explicitly, read the Bloch vector from Pauli traces, and
    /// differentiate in phi numerically.
    fn bloch_from_density(u: Complex64, phi: f64) -> [f64; 3] {
        // rho_gg = 1 - |u|^2/2, rho_ge = u* e^{-i phi}/2, rho_ee = |u|^2/2,
        // with Pauli axes oriented so the excited state is the north pole:
        // r_x = rho_eg + rho_ge, r_y = i (rho_ge - rho_eg), r_z = rho_ee - rho_gg.
        let rho_eg = 0.5 * u * Complex64::from_polar(1.0, phi);
        let rho_ge = rho_eg.conj();
        let rho_ee = 0.5 * u.norm_sqr();
        let rho_gg = 1.0 - rho_ee;
        [
            (rho_eg + rho_ge).re,
            (Complex64::i() * (rho_ge - rho_eg)).re,
            rho_ee - rho_gg,
        ]
    }

    #[test]
    fn bloch_vector_matches_density_matrix_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for _ in 0..200 {
            let r: f64 = rng.random_range(0.0..1.0);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.random_range(-3.0..3.0);
            let u = Complex64::from_polar(r, theta);
            let s = reduced_state(u, phi).unwrap();
            let oracle = bloch_from_density(u, phi);
            for (got, want) in s.bloch.iter().zip(oracle) {
                assert!((got - want).abs() < 1e-13, "{got} vs {want}");
            }
            // QFI via numerically differentiated Bloch vector.
            let h = 1e-6;
            let plus = bloch_from_density(u, phi + h);
            let minus = bloch_from_density(u, phi - h);
            let deriv_sq: f64 = plus
                .iter()
                .zip(minus)
                .map(|(p, m)| ((p - m) / (2.0 * h)).powi(2))
                .sum();
            assert!((deriv_sq - s.qfi()).abs() < 1e-6);
            // Closed-form identities.
            assert!((s.qfi() - u.norm_sqr()).abs() < 1e-12);
            let n2 = 1.0 - u.norm_sqr() + u.norm_sqr().powi(2);
            assert!((s.bloch_norm_sq() - n2).abs() < 1e-12);
            let dphi = s.phi_derivative();
            let dot: f64 = s.bloch.iter().zip(dphi).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn average_of_constant_is_exact() {
        let grid = TimeGrid::new(0.0, 100.0, 2000).unwrap();
        let f = synthetic_qfi(grid, |_| 0.37);
        let mean = late_time_average(&f, 40.0, 100.0).unwrap();
        assert!((mean - 0.37).abs() < 1e-14);
    }

    #[test]
    fn average_handles_offgrid_endpoints() {
        // f(t) = t: the window mean is the midpoint value, for any
        // endpoint alignment.
        let grid = TimeGrid::new(0.0, 10.0, 400).unwrap();
        let f = synthetic_qfi(grid, |t| t * 0.05);
        let mean = late_time_average(&f, 1.234, 8.777).unwrap();
        assert!((mean - 0.05 * 0.5 * (1.234 + 8.777)).abs() < 1e-12);
    }

    #[test]
    fn average_range_errors() {
        let grid = TimeGrid::new(0.0, 50.0, 500).unwrap();
        let f = synthetic_qfi(grid, |_| 1.0);
        assert!(late_time_average(&f, 40.0, 100.0).is_err());
        assert!(late_time_average(&f, 30.0, 20.0).is_err());
    }

    #[test]
    fn spectral_average_matches_trace_average() {
        let h = build_hamiltonian(&ModelParams::new(1.0, 0.3, 0.4, 0.1, 40).unwrap()).unwrap();
        let spec = eigendecompose(&h).unwrap();
        let grid = TimeGrid::new(0.0, 60.0, 2400).unwrap();
        let f = qfi_trace(&survival_amplitude(&spec, &grid));
        let direct = late_time_average(&f, 20.0, 60.0).unwrap();
        let kernel = late_time_average_spectral(&spec, 20.0, 60.0);
        assert!(
            (direct - kernel).abs() < 1e-5,
            "trace {direct} vs kernel {kernel}"
        );
    }

    #[test]
    fn retention_of_exponential_decay() {
        let grid = TimeGrid::new(0.0, 10.0, 200).unwrap();
        let f = synthetic_qfi(grid, |t| (-t).exp());
        let t = retention_time(&f, 0.2, 10.0);
        assert!(!t.is_capped());
        assert!((t.time() - 5.0_f64.ln()).abs() < 1e-4, "t = {}", t.time());
    }

    #[test]
    fn retention_caps_when_never_crossed() {
        let grid = TimeGrid::new(0.0, 100.0, 1000).unwrap();
        let f = synthetic_qfi(grid, |_| 1.0);
        let t = retention_time(&f, 0.2, 100.0);
        assert!(t.is_capped());
        assert_eq!(t.time(), 100.0);
    }

    #[test]
    fn useful_window_of_synthetic_pulse() {
        // F = 1 for t < 30, then linear drop to 0 at t = 50: crosses 0.4
        // at t = 42, so the measure of [20, 100] above threshold is 22.
        let grid = TimeGrid::new(0.0, 100.0, 4000).unwrap();
        let f = synthetic_qfi(grid, |t| {
            if t < 30.0 {
                1.0
            } else {
                (1.0 - (t - 30.0) / 20.0).max(0.0)
            }
        });
        let w = useful_window(&f, 0.4, 20.0, 100.0).unwrap();
        assert!((w - 22.0).abs() < 1e-9, "w = {w}");
        // Entirely below threshold: exactly zero.
        let dead = synthetic_qfi(grid, |_| 0.1);
        assert_eq!(useful_window(&dead, 0.4, 20.0, 100.0).unwrap(), 0.0);
        assert!(useful_window(&f, 0.4, 20.0, 120.0).is_err());
    }

    #[test]
    fn decoupled_bound_state_classification() {
        let h = build_hamiltonian(&ModelParams::new(1.0, 0.3, 0.0, 0.0, 30).unwrap()).unwrap();
        let spec = eigendecompose(&h).unwrap();
        let nbs =
            numerical_bound_state(&spec, &band_edges(1.0, 0.3), EDGE_MARGIN_DEFAULT).unwrap();
        assert!((nbs.info.z_bs - 1.0).abs() < 1e-10);
        assert!(nbs.info.omega_bs.abs() < 1e-10);
        assert!((nbs.info.delta_edge - 0.6).abs() < 1e-10);
        assert!(nbs.outer_weight < 1e-12);
    }

    #[test]
    fn gapless_chain_has_no_bound_state() {
        let h = build_hamiltonian(&ModelParams::new(1.0, 0.0, 0.4, 0.0, 20).unwrap()).unwrap();
        let spec = eigendecompose(&h).unwrap();
        assert!(matches!(
            numerical_bound_state(&spec, &band_edges(1.0, 0.0), EDGE_MARGIN_DEFAULT),
            Err(Error::NoBoundState(_))
        ));
    }

    #[test]
    fn csv_row_shape() {
        let report = DiagnosticsReport {
            dimerization: 0.3,
            coupling: 0.4,
            detuning: 0.0,
            delta_norm: 0.0,
            f_bar: 0.75,
            t_eta: RetentionTime::Capped(100.0),
            w_eta: 80.0,
            z_bs_num: f64::NAN,
            z_bs_analytic: 0.88,
            omega_bs: 0.0,
            delta_edge: 0.6,
            outer_weight: f64::NAN,
            eta_retention: 0.2,
            eta_window: 0.4,
            t1: 40.0,
            t2: 100.0,
            t_cut: 20.0,
            t_max: 100.0,
        };
        let row = report.csv_row();
        assert_eq!(row.split(',').count(), DiagnosticsReport::CSV_HEADER.split(',').count());
        assert!(row.contains(",100,1,80,"));
        assert!(row.contains("NaN"));
    }
}
