//! Single-excitation lattice model: a two-level emitter locally coupled to
//! a finite open dimerized (SSH) chain.
//!
//! The chain has two sites (A, B) per unit cell and alternating
//! nearest-neighbor hoppings J(1+d) within a cell and J(1-d) between
//! cells. The emitter couples with strength g to the A site of the central
//! cell n = 0 and is detuned by `delta` from the gap center. The
//! single-excitation basis is ordered
//!
//! ```text
//! { emitter, A_{-L}, B_{-L}, ..., A_0, B_0, ..., A_L, B_L }
//! ```
//!
//! so a chain of 2L+1 unit cells gives Hilbert-space dimension 4L+3. The
//! chain is open and terminates with a complete (A, B) unit cell at both
//! ends, keeping the bulk geometry symmetric about the emitter cell.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Write;

/// Physical parameters of one emitter-chain instance.
///
/// All energies are expressed in units of the hopping scale J and times in
/// units of 1/J; the CLI fixes J = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Hopping energy scale J > 0.
    #[serde(rename = "J")]
    pub hopping: f64,
    /// Dimerization d with |d| <= 1; controls the central gap 4J|d|.
    #[serde(rename = "d")]
    pub dimerization: f64,
    /// Emitter-bath coupling g >= 0.
    #[serde(rename = "g")]
    pub coupling: f64,
    /// Emitter detuning from the gap center.
    #[serde(rename = "delta")]
    pub detuning: f64,
    /// Half-length L; the chain has 2L+1 unit cells.
    #[serde(rename = "L")]
    pub half_length: usize,
}

impl ModelParams {
    pub fn new(
        hopping: f64,
        dimerization: f64,
        coupling: f64,
        detuning: f64,
        half_length: usize,
    ) -> Result<Self> {
        let params = Self {
            hopping,
            dimerization,
            coupling,
            detuning,
            half_length,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.hopping.is_finite() || self.hopping <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hopping J must be positive and finite, got {}",
                self.hopping
            )));
        }
        if !self.dimerization.is_finite() || self.dimerization.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "dimerization d must satisfy |d| <= 1, got {}",
                self.dimerization
            )));
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling g must be nonnegative and finite, got {}",
                self.coupling
            )));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "detuning must be finite, got {}",
                self.detuning
            )));
        }
        Ok(())
    }

    /// Hilbert-space dimension 4L+3: one emitter level plus two sites per
    /// unit cell for 2L+1 cells.
    pub fn dim(&self) -> usize {
        4 * self.half_length + 3
    }

    /// Intracell hopping J1 = J(1+d).
    pub fn intracell_hopping(&self) -> f64 {
        self.hopping * (1.0 + self.dimerization)
    }

    /// Intercell hopping J2 = J(1-d).
    pub fn intercell_hopping(&self) -> f64 {
        self.hopping * (1.0 - self.dimerization)
    }
}

/// One stored off-diagonal matrix element (upper triangle, i < j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Sparse symmetric Hamiltonian in the fixed basis ordering
/// {emitter, A_{-L}, B_{-L}, ..., A_L, B_L}.
///
/// Only the diagonal and the upper-triangle bonds are stored; the matrix
/// is symmetric by construction.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    dim: usize,
    emitter_index: usize,
    diagonal: Vec<f64>,
    bonds: Vec<Bond>,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Position of the emitter level in the basis (always 0).
    pub fn emitter_index(&self) -> usize {
        self.emitter_index
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Matrix element H[i, j], resolving the symmetric storage.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.bonds
            .iter()
            .find(|b| b.i == lo && b.j == hi)
            .map_or(0.0, |b| b.value)
    }

    /// y = H x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for ((yi, &di), &xi) in y.iter_mut().zip(&self.diagonal).zip(x) {
            *yi = di * xi;
        }
        for b in &self.bonds {
            y[b.i] += b.value * x[b.j];
            y[b.j] += b.value * x[b.i];
        }
    }

    /// Densify for the full spectral decomposition.
    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::zeros(self.dim, self.dim);
        for (i, &di) in self.diagonal.iter().enumerate() {
            m[(i, i)] = di;
        }
        for b in &self.bonds {
            m[(b.i, b.j)] = b.value;
            m[(b.j, b.i)] = b.value;
        }
        m
    }

    /// Dump the nonzero entries in coordinate format: a header line
    /// `# dim=<N>` followed by `i j value` triples (0-based, upper triangle
    /// including the diagonal, 17 significant digits), sorted by (i, j).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dim={}", self.dim)?;
        let mut entries: Vec<(usize, usize, f64)> = self
            .diagonal
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, i, v))
            .chain(
                self.bonds
                    .iter()
                    .filter(|b| b.value != 0.0)
                    .map(|b| (b.i, b.j, b.value)),
            )
            .collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for (i, j, v) in entries {
            writeln!(w, "{} {} {:.16e}", i, j, v)?;
        }
        Ok(())
    }
}

/// Spectral scales of the infinite chain: band edges at +/-2J|d| (inner)
/// and +/-2J (outer), central gap of width 4J|d|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandStructure {
    pub inner_edge: f64,
    pub outer_edge: f64,
    pub gap_width: f64,
}

/// Assemble the single-excitation Hamiltonian.
///
/// Nonzeros: `delta` on the emitter diagonal, g between the emitter and
/// A_0, J(1+d) on every intracell bond and J(1-d) on every intercell bond.
pub fn build_hamiltonian(params: &ModelParams) -> Result<HamiltonianMatrix> {
    params.validate()?;
    let l = params.half_length;
    let cells = 2 * l + 1;
    let dim = 4 * l + 3;

    // Site indices within the fixed ordering; `cell` counts from the left
    // end, so the emitter cell n = 0 is cell index L.
    let a_site = |cell: usize| 1 + 2 * cell;
    let b_site = |cell: usize| 2 + 2 * cell;

    let mut diagonal = vec![0.0; dim];
    diagonal[0] = params.detuning;

    let j1 = params.intracell_hopping();
    let j2 = params.intercell_hopping();

    let mut bonds = Vec::with_capacity(2 * cells);
    bonds.push(Bond {
        i: 0,
        j: a_site(l),
        value: params.coupling,
    });
    for cell in 0..cells {
        bonds.push(Bond {
            i: a_site(cell),
            j: b_site(cell),
            value: j1,
        });
        if cell + 1 < cells {
            bonds.push(Bond {
                i: b_site(cell),
                j: a_site(cell + 1),
                value: j2,
            });
        }
    }

    Ok(HamiltonianMatrix {
        dim,
        emitter_index: 0,
        diagonal,
        bonds,
    })
}

/// Band energies (w_+, w_-) at wavenumber k:
/// w_+ = 2J sqrt(cos^2(k/2) + d^2 sin^2(k/2)), w_- = -w_+.
pub fn dispersion(k: f64, hopping: f64, dimerization: f64) -> (f64, f64) {
    let c = (0.5 * k).cos();
    let s = (0.5 * k).sin();
    let upper = 2.0 * hopping * (c * c + dimerization * dimerization * s * s).sqrt();
    (upper, -upper)
}

pub fn band_edges(hopping: f64, dimerization: f64) -> BandStructure {
    debug_assert!(hopping > 0.0);
    let inner = 2.0 * hopping * dimerization.abs();
    BandStructure {
        inner_edge: inner,
        outer_edge: 2.0 * hopping,
        gap_width: 2.0 * inner,
    }
}

// Grid size for the numerical group-velocity maximum; >= 1e4 points.
const VELOCITY_GRID: usize = 20_000;

/// Maximum group velocity |dw_+/dk| of the upper band, obtained by
/// centered differences on a dense k-grid. Done numerically so that the
/// uniform-chain limit |d| -> 0, where the analytic slope expression
/// degenerates at the zone boundary, needs no special casing.
pub fn max_group_velocity(hopping: f64, dimerization: f64) -> f64 {
    let n = VELOCITY_GRID;
    let dk = 2.0 * std::f64::consts::PI / n as f64;
    let omega = |i: usize| dispersion(-std::f64::consts::PI + i as f64 * dk, hopping, dimerization).0;
    let mut v_max = 0.0_f64;
    let mut prev = omega(0);
    let mut curr = omega(1);
    for i in 1..n {
        let next = omega(i + 1);
        v_max = v_max.max(((next - prev) / (2.0 * dk)).abs());
        prev = curr;
        curr = next;
    }
    v_max
}

/// Conservative pre-recurrence horizon T_rec = 0.9 L / v_max. Observables
/// sampled beyond this time can contain reflections from the open chain
/// ends; callers requesting later times should warn.
pub fn recurrence_horizon(params: &ModelParams) -> f64 {
    0.9 * params.half_length as f64 / max_group_velocity(params.hopping, params.dimerization)
}
