//! Exact dense simulation of small driven Ising chains.
//!
//! States live in the σᶻ product basis with site 0 as the least significant
//! bit; bit value `0` is spin up (`Sᶻ = +½`). Evolution is matrix-free, so
//! only explicit requests for `H₀` build a `2^N × 2^N` matrix.

mod evolve;
mod observables;
mod ramp;
mod spectrum;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DisorderRealization;

pub use evolve::{apply_pulse, apply_z_phase, evolve, Clock, EvolutionSegment, FieldProfile, NORM_TOLERANCE};
pub use observables::{
    excitation_distribution, excitation_number, ghz_fidelity, magnetization_variance, parity_expectation,
    spin_x_expectations, walsh_hadamard, zz_correlator,
};
pub use ramp::{run_adiabatic_ramp, RampOutcome};
pub use spectrum::{ground_state, sector_ground_state, sector_hamiltonian, sector_spectrum, Parity};

/// Default largest chain simulated with dense state vectors.
pub const DEFAULT_CAP: usize = 14;
/// Largest chain for which a full `2^N × 2^N` matrix is assembled.
pub const DENSE_MATRIX_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n {
            return Err(Error::invalid(
                "amplitudes",
                format!(
                    "expected {} amplitudes for {n} spins, got {}",
                    1usize << n,
                    amplitudes.len()
                ),
            ));
        }
        Ok(Self { n, amplitudes })
    }

    /// Computational basis state `index`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n, amplitudes }
    }

    /// All spins polarized along +x.
    pub fn x_polarized(n: usize) -> Self {
        let dim = 1usize << n;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self {
            n,
            amplitudes: vec![a; dim],
        }
    }

    /// `(|↑…↑⟩ + sign·|↓…↓⟩)/√2`.
    pub fn ghz(n: usize, sign: f64) -> Self {
        let dim = 1usize << n;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        amplitudes[0] = Complex64::new(s, 0.0);
        amplitudes[dim - 1] = Complex64::new(sign * s, 0.0);
        Self { n, amplitudes }
    }

    /// Product of single-spin states given as `(up, down)` amplitudes.
    pub fn product(spins: &[(Complex64, Complex64)]) -> Self {
        let n = spins.len();
        let amplitudes = (0..1usize << n)
            .map(|c| {
                spins
                    .iter()
                    .enumerate()
                    .map(|(i, (up, down))| if c >> i & 1 == 0 { *up } else { *down })
                    .product()
            })
            .collect();
        Self { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// A realization prepared for dense simulation: diagonal Ising energies and
/// magnetizations are tabulated once per basis state.
#[derive(Debug, Clone)]
pub struct IsingSystem {
    realization: DisorderRealization,
    ising_diagonal: Vec<f64>,
}

impl IsingSystem {
    pub fn new(realization: DisorderRealization) -> Result<Self> {
        Self::with_cap(realization, DEFAULT_CAP)
    }

    pub fn with_cap(realization: DisorderRealization, cap: usize) -> Result<Self> {
        let n = realization.n;
        if n > cap || n > 30 {
            return Err(Error::SystemTooLarge { n, cap });
        }
        let ising_diagonal = (0..1usize << n)
            .map(|c| {
                realization
                    .bonds
                    .iter()
                    .map(|b| -b.strength * spin_z(c, b.i) * spin_z(c, b.j))
                    .sum()
            })
            .collect();
        Ok(Self {
            realization,
            ising_diagonal,
        })
    }

    pub fn n(&self) -> usize {
        self.realization.n
    }

    pub fn dim(&self) -> usize {
        1 << self.realization.n
    }

    pub fn realization(&self) -> &DisorderRealization {
        &self.realization
    }

    pub(crate) fn ising_diagonal(&self) -> &[f64] {
        &self.ising_diagonal
    }

    /// `⟨ψ|H₀(Ω)|ψ⟩`.
    pub fn energy(&self, state: &QuantumState, omega: f64) -> f64 {
        let diag: f64 = state
            .amplitudes
            .iter()
            .zip(&self.ising_diagonal)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum();
        let sx = spin_x_expectations(state);
        let fields = self.realization.fields(omega);
        diag - fields.iter().zip(&sx).map(|(f, s)| f * s).sum::<f64>()
    }
}

/// `Sᶻ` eigenvalue of site `i` in basis state `c`.
#[inline]
pub(crate) fn spin_z(c: usize, i: usize) -> f64 {
    if c >> i & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Total `ΣSᶻ` of basis state `c` on `n` sites.
#[inline]
pub(crate) fn magnetization(c: usize, n: usize) -> f64 {
    0.5 * n as f64 - c.count_ones() as f64
}

/// Dense `H₀ = −Σ J_b Sᶻ_i Sᶻ_j − Σ Ωᵢ Sˣᵢ` in the σᶻ basis (real symmetric).
pub fn build_h0(realization: &DisorderRealization, omega: f64) -> Result<Mat<f64>> {
    let n = realization.n;
    if n > DENSE_MATRIX_CAP {
        return Err(Error::SystemTooLarge {
            n,
            cap: DENSE_MATRIX_CAP,
        });
    }
    let system = IsingSystem::with_cap(realization.clone(), DENSE_MATRIX_CAP)?;
    let fields = realization.fields(omega);
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for c in 0..dim {
        h[(c, c)] = system.ising_diagonal[c];
        for (i, f) in fields.iter().enumerate() {
            h[(c ^ (1 << i), c)] += -0.5 * f;
        }
    }
    Ok(h)
}

/// Sorted eigenvalues of a real symmetric matrix.
pub(crate) fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    let eig = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let mut values = eig;
    values.sort_by(f64::total_cmp);
    Ok(values)
}
