//! Survival-amplitude dynamics from the microscopic Hamiltonian.
//!
//! Two equivalent strategies, chosen by chain size: full spectral
//! decomposition of the sparse single-excitation Hamiltonian, or Lanczos
//! tridiagonalization seeded with the emitter state followed by
//! diagonalization of the tridiagonal representation. Both reduce the
//! dynamics to
//!
//! ```text
//! u(t) = sum_a w_a exp(-i E_a t),   w_a = |<e|psi_a>|^2
//! ```
//!
//! where only eigenpairs with emitter weight contribute. The Lanczos
//! recursion uses full reorthogonalization against all previous Krylov
//! vectors, which removes the ghost eigenvalues that would otherwise
//! corrupt the weights at the truncation dimensions used here.

use crate::error::{Error, Result};
use crate::lattice::HamiltonianMatrix;
use num_complex::Complex64;
use serde::Serialize;

/// Guard for the dense eigensolve path.
pub const DENSE_SOLVE_LIMIT: usize = 20_000;

/// Residual-norm tolerance below which the Lanczos recursion has found an
/// invariant subspace and stops early.
pub const LANCZOS_BREAKDOWN_TOL: f64 = 1e-12;

/// Completeness tolerance on the emitter weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// How a spectrum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralMethod {
    Exact,
    Krylov {
        /// Requested Krylov dimension m.
        requested: usize,
        /// Steps actually taken (smaller than `requested` on breakdown).
        steps: usize,
        /// True if the recursion terminated on the breakdown tolerance,
        /// i.e. the Krylov space is exactly invariant.
        breakdown: bool,
    },
}

/// Single-excitation spectrum as seen from the emitter: (energy, weight)
/// pairs with weights w_a = |<e|psi_a>|^2 summing to one.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pairs: Vec<(f64, f64)>,
    method: SpectralMethod,
}

impl SpectralData {
    /// Build from raw pairs, enforcing the completeness and positivity
    /// invariants. Pairs are sorted by energy.
    pub fn new(mut pairs: Vec<(f64, f64)>, method: SpectralMethod) -> Result<Self> {
        let mut sum = 0.0;
        for &(e, w) in &pairs {
            if !e.is_finite() || !w.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite spectral pair ({e}, {w})"
                )));
            }
            if w < 0.0 {
                return Err(Error::Numerical(format!("negative emitter weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Numerical(format!(
                "emitter weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { pairs, method })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn method(&self) -> SpectralMethod {
        self.method
    }

    pub fn weight_sum(&self) -> f64 {
        self.pairs.iter().map(|&(_, w)| w).sum()
    }

    pub fn breakdown(&self) -> bool {
        matches!(
            self.method,
            SpectralMethod::Krylov {
                breakdown: true,
                ..
            }
        )
    }
}

/// Uniform time grid on [t_start, t_end] with n_steps panels, inclusive of
/// both endpoints. Times are in units of 1/J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_start < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time grid must have finite bounds with t_start >= 0, got [{t_start}, {t_end}]"
            )));
        }
        if t_end <= t_start {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter(
                "time grid needs at least one step".into(),
            ));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    /// Grid on [0, t_end] with the given spacing; the step count is rounded
    /// to cover t_end.
    pub fn from_spacing(t_end: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {dt}"
            )));
        }
        let n_steps = (t_end / dt).round().max(1.0) as usize;
        Self::new(0.0, t_end, n_steps)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Number of samples (n_steps + 1).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.spacing()
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }
}

/// Time grid plus complex survival-amplitude samples.
#[derive(Debug, Clone)]
pub struct AmplitudeTrace {
    grid: TimeGrid,
    u: Vec<Complex64>,
}

impl AmplitudeTrace {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.u
    }
}

/// Full spectral decomposition of the sparse Hamiltonian, projected on the
/// emitter seed. Guarded against dimensions too large for a dense solve.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<SpectralData> {
    if h.dim() > DENSE_SOLVE_LIMIT {
        return Err(Error::DenseSolveGuard {
            dim: h.dim(),
            limit: DENSE_SOLVE_LIMIT,
        });
    }
    let eig = h
        .to_dense()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolve failed: {e:?}")))?;
    let evals = eig.S();
    let evecs = eig.U();
    let row = h.emitter_index();
    let pairs = (0..h.dim())
        .map(|a| (evals[a], evecs[(row, a)] * evecs[(row, a)]))
        .collect();
    SpectralData::new(pairs, SpectralMethod::Exact)
}

/// Lanczos-tridiagonalize H starting from the emitter basis state, then
/// diagonalize the tridiagonal representation. Ritz values carry weights
/// equal to the squared first components of the tridiagonal eigenvectors.
///
/// Runs at most `m` steps with full reorthogonalization; stops early if
/// the next residual norm falls below [`LANCZOS_BREAKDOWN_TOL`], in which
/// case the Krylov space is exactly invariant and the truncated spectrum
/// is returned with the breakdown flag set.
pub fn lanczos_spectral(h: &HamiltonianMatrix, m: usize) -> Result<SpectralData> {
    let dim = h.dim();
    if m < 1 || m > dim {
        return Err(Error::InvalidParameter(format!(
            "Krylov dimension must satisfy 1 <= m <= dim, got m={m}, dim={dim}"
        )));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut seed = vec![0.0; dim];
    seed[h.emitter_index()] = 1.0;
    basis.push(seed);

    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m.saturating_sub(1));
    let mut w = vec![0.0; dim];
    let mut breakdown = false;

    for step in 0..m {
        h.matvec(&basis[step], &mut w);
        let alpha = dot(&basis[step], &w);
        alphas.push(alpha);
        if step + 1 == m {
            break;
        }
        axpy(&mut w, -alpha, &basis[step]);
        if step > 0 {
            axpy(&mut w, -betas[step - 1], &basis[step - 1]);
        }
        // Full reorthogonalization; two classical Gram-Schmidt passes keep
        // the basis orthonormal to working precision.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(&mut w, -c, q);
            }
        }
        let beta = norm(&w);
        if beta < LANCZOS_BREAKDOWN_TOL {
            breakdown = true;
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }

    let steps = alphas.len();
    let mut tri = faer::Mat::zeros(steps, steps);
    for (i, &a) in alphas.iter().enumerate() {
        tri[(i, i)] = a;
    }
    for (i, &b) in betas.iter().enumerate() {
        tri[(i, i + 1)] = b;
        tri[(i + 1, i)] = b;
    }
    let eig = tri
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("tridiagonal eigensolve failed: {e:?}")))?;
    let theta = eig.S();
    let s = eig.U();
    let pairs = (0..steps).map(|a| (theta[a], s[(0, a)] * s[(0, a)])).collect();
    SpectralData::new(
        pairs,
        SpectralMethod::Krylov {
            requested: m,
            steps,
            breakdown,
        },
    )
}

/// u(t) = sum_a w_a exp(-i E_a t) on every grid sample.
pub fn survival_amplitude(spec: &SpectralData, grid: &TimeGrid) -> AmplitudeTrace {
    let u: Vec<Complex64> = grid
        .samples()
        .map(|t| {
            let mut re = 0.0;
            let mut im = 0.0;
            for &(e, w) in spec.pairs() {
                let (s, c) = (-e * t).sin_cos();
                re += w * c;
                im += w * s;
            }
            Complex64::new(re, im)
        })
        .collect();
    debug_assert!(u.iter().all(|z| z.norm() <= 1.0 + 1e-9));
    AmplitudeTrace { grid: *grid, u }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, ModelParams};

    fn model(d: f64, g: f64, delta: f64, l: usize) -> HamiltonianMatrix {
        build_hamiltonian(&ModelParams::new(1.0, d, g, delta, l).unwrap()).unwrap()
    }

    #[test]
    fn decoupled_emitter_spectrum() {
        // g = 0: unit weight on the bare emitter level, none on the bath.
        let spec = eigendecompose(&model(0.3, 0.0, 0.0, 0)).unwrap();
        let pairs = spec.pairs();
        assert_eq!(pairs.len(), 3);
        assert!((pairs[0].0 + 1.3).abs() < 1e-12 && pairs[0].1 < 1e-20);
        assert!(pairs[1].0.abs() < 1e-12 && (pairs[1].1 - 1.0).abs() < 1e-12);
        assert!((pairs[2].0 - 1.3).abs() < 1e-12 && pairs[2].1 < 1e-20);
    }

    #[test]
    fn three_site_oracle() {
        // Single cell with g = J1 = 1: eigenvalues {-sqrt2, 0, +sqrt2} and
        // emitter weights {1/4, 1/2, 1/4} from hand diagonalization.
        let spec = eigendecompose(&model(0.0, 1.0, 0.0, 0)).unwrap();
        let pairs = spec.pairs();
        let r2 = 2.0_f64.sqrt();
        assert!((pairs[0].0 + r2).abs() < 1e-12);
        assert!(pairs[1].0.abs() < 1e-12);
        assert!((pairs[2].0 - r2).abs() < 1e-12);
        assert!((pairs[0].1 - 0.25).abs() < 1e-12);
        assert!((pairs[1].1 - 0.5).abs() < 1e-12);
        assert!((pairs[2].1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn weights_are_complete() {
        for (d, g, delta, l) in [(0.3, 0.4, 0.0, 25), (0.0, 0.8, 0.5, 40), (0.7, 0.1, -0.2, 10)] {
            let spec = eigendecompose(&model(d, g, delta, l)).unwrap();
            assert!((spec.weight_sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_guard_trips() {
        let h = model(0.3, 0.4, 0.0, 5000); // dim 20003
        match eigendecompose(&h) {
            Err(crate::Error::DenseSolveGuard { dim, .. }) => assert_eq!(dim, 20003),
            other => panic!("expected dense-solve guard, got {other:?}"),
        }
    }

    #[test]
    fn lanczos_breakdown_on_eigenvector_seed() {
        // g = 0 makes the emitter state an eigenvector: the Krylov space is
        // one-dimensional and the recursion stops after a single step.
        let spec = lanczos_spectral(&model(0.3, 0.0, 0.5, 3), 10).unwrap();
        assert_eq!(spec.len(), 1);
        assert!(spec.breakdown());
        assert!((spec.pairs()[0].0 - 0.5).abs() < 1e-12);
        assert!((spec.pairs()[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_rejects_bad_dimension() {
        let h = model(0.3, 0.4, 0.0, 2);
        assert!(lanczos_spectral(&h, 0).is_err());
        assert!(lanczos_spectral(&h, h.dim() + 1).is_err());
        assert!(lanczos_spectral(&h, h.dim()).is_ok());
    }

    #[test]
    fn lanczos_full_space_recovers_exact_eigenvalues() {
        let h = model(0.3, 0.4, 0.2, 5);
        let exact = eigendecompose(&h).unwrap();
        let krylov = lanczos_spectral(&h, h.dim()).unwrap();
        // Pair Ritz values with exact eigenvalues carrying nonzero weight.
        let visible: Vec<&(f64, f64)> = exact
            .pairs()
            .iter()
            .filter(|&&(_, w)| w > 1e-14)
            .collect();
        assert_eq!(visible.len(), krylov.len());
        for (ritz, exact_pair) in krylov.pairs().iter().zip(visible) {
            assert!(
                (ritz.0 - exact_pair.0).abs() < 1e-9,
                "ritz {} vs exact {}",
                ritz.0,
                exact_pair.0
            );
        }
    }

    #[test]
    fn krylov_matches_exact_dynamics() {
        let h = model(0.3, 0.4, 0.0, 100);
        let grid = TimeGrid::new(0.0, 100.0, 2000).unwrap();
        let exact = survival_amplitude(&eigendecompose(&h).unwrap(), &grid);
        let krylov = survival_amplitude(&lanczos_spectral(&h, 350).unwrap(), &grid);
        let max_dev = exact
            .values()
            .iter()
            .zip(krylov.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        assert!(max_dev < 1e-8, "max deviation {max_dev:e}");
    }

    #[test]
    fn survival_amplitude_at_zero_is_one() {
        let spec = eigendecompose(&model(0.3, 0.4, 0.1, 30)).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 100).unwrap();
        let trace = survival_amplitude(&spec, &grid);
        assert!((trace.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn decoupled_emitter_pure_phase() {
        let spec = eigendecompose(&model(0.3, 0.0, 0.8, 10)).unwrap();
        let grid = TimeGrid::new(0.0, 20.0, 400).unwrap();
        let trace = survival_amplitude(&spec, &grid);
        for (i, z) in trace.values().iter().enumerate() {
            let t = grid.sample(i);
            let expect = Complex64::from_polar(1.0, -0.8 * t);
            assert!((z - expect).norm() < 1e-10, "t = {t}");
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn synthetic_spectrum_reproduces_cosine() {
        let r2 = 2.0_f64.sqrt();
        let spec = SpectralData::new(
            vec![(-r2, 0.25), (0.0, 0.5), (r2, 0.25)],
            SpectralMethod::Exact,
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 8.0, 160).unwrap();
        let trace = survival_amplitude(&spec, &grid);
        for (i, z) in trace.values().iter().enumerate() {
            let t = grid.sample(i);
            let expect = 0.5 + 0.5 * (r2 * t).cos();
            assert!((z.re - expect).abs() < 1e-12);
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn norm_stays_bounded() {
        let spec = eigendecompose(&model(0.5, 0.8, 0.3, 60)).unwrap();
        let grid = TimeGrid::new(0.0, 50.0, 1000).unwrap();
        let trace = survival_amplitude(&spec, &grid);
        for z in trace.values() {
            assert!(z.norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn dimerization_parity_of_amplitude() {
        // Pre-recurrence, the dynamics only sees the local spectral measure
        // at the emitter site, which is even in d.
        let grid = TimeGrid::new(0.0, 40.0, 800).unwrap();
        let up = survival_amplitude(&eigendecompose(&model(0.3, 0.4, 0.2, 80)).unwrap(), &grid);
        let dn = survival_amplitude(&eigendecompose(&model(-0.3, 0.4, 0.2, 80)).unwrap(), &grid);
        let max_dev = up
            .values()
            .iter()
            .zip(dn.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        assert!(max_dev < 1e-12, "max deviation {max_dev:e}");
    }

    #[test]
    fn detuning_parity_of_modulus() {
        let grid = TimeGrid::new(0.0, 40.0, 800).unwrap();
        let plus = survival_amplitude(&eigendecompose(&model(0.3, 0.4, 0.35, 80)).unwrap(), &grid);
        let minus =
            survival_amplitude(&eigendecompose(&model(0.3, 0.4, -0.35, 80)).unwrap(), &grid);
        for (a, b) in plus.values().iter().zip(minus.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 5.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 5.0, 0).is_err());
        let g = TimeGrid::from_spacing(100.0, 0.05).unwrap();
        assert_eq!(g.len(), 2001);
        assert!((g.spacing() - 0.05).abs() < 1e-12);
    }
}
