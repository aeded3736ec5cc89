//! Exact diagonalization inside the two `Π(2Sˣ)` parity sectors.
//!
//! In the σˣ product basis the transverse field is diagonal and every bond
//! flips two spins, so each parity sector is closed. With non-negative
//! couplings all off-diagonal elements are `≤ 0`, which makes the sector
//! ground state unique and positive (Perron–Frobenius).

use faer::Mat;
use num_complex::Complex64;

use super::{walsh_hadamard, QuantumState, DEFAULT_CAP, DENSE_MATRIX_CAP};
use crate::error::{Error, Result};
use crate::model::DisorderRealization;

/// Eigenvalue of `Πᵢ 2Sˣᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn contains(self, config: usize) -> bool {
        config.count_ones().is_multiple_of(2) == (self == Parity::Even)
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Sector basis and the sparse action of `H₀` on it.
struct Sector {
    configs: Vec<usize>,
    lookup: Vec<u32>,
    diagonal: Vec<f64>,
    /// `(bit mask, −J_b/4)` for every bond.
    flips: Vec<(usize, f64)>,
}

impl Sector {
    fn new(realization: &DisorderRealization, omega: f64, parity: Parity) -> Self {
        let n = realization.n;
        let dim = 1usize << n;
        let fields = realization.fields(omega);
        let configs: Vec<usize> = (0..dim).filter(|&c| parity.contains(c)).collect();
        let mut lookup = vec![u32::MAX; dim];
        for (k, &c) in configs.iter().enumerate() {
            lookup[c] = k as u32;
        }
        let diagonal = configs
            .iter()
            .map(|&c| {
                fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| if c >> i & 1 == 0 { -0.5 * f } else { 0.5 * f })
                    .sum()
            })
            .collect();
        let flips = realization
            .bonds
            .iter()
            .map(|b| ((1usize << b.i) | (1usize << b.j), -0.25 * b.strength))
            .collect();
        Self {
            configs,
            lookup,
            diagonal,
            flips,
        }
    }

    fn dim(&self) -> usize {
        self.configs.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, &c) in self.configs.iter().enumerate() {
            let mut acc = self.diagonal[k] * x[k];
            for &(mask, amp) in &self.flips {
                acc += amp * x[self.lookup[c ^ mask] as usize];
            }
            y[k] = acc;
        }
    }

    fn dense(&self) -> Mat<f64> {
        let d = self.dim();
        let mut h = Mat::<f64>::zeros(d, d);
        for (k, &c) in self.configs.iter().enumerate() {
            h[(k, k)] = self.diagonal[k];
            for &(mask, amp) in &self.flips {
                h[(self.lookup[c ^ mask] as usize, k)] += amp;
            }
        }
        h
    }

    /// Embeds sector amplitudes into a full σᶻ-basis state.
    fn to_state(&self, n: usize, vector: &[f64]) -> QuantumState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (&c, &v) in self.configs.iter().zip(vector) {
            amps[c] = Complex64::new(v, 0.0);
        }
        walsh_hadamard(&mut amps);
        let mut state = QuantumState::from_amplitudes(n, amps).expect("dimension matches");
        state.normalize();
        state
    }
}

/// Dense `H₀` restricted to one parity sector, in the σˣ product basis
/// (sector states ordered by configuration index).
pub fn sector_hamiltonian(realization: &DisorderRealization, omega: f64, parity: Parity) -> Result<Mat<f64>> {
    check_size(realization.n, DENSE_MATRIX_CAP)?;
    Ok(Sector::new(realization, omega, parity).dense())
}

/// All sector eigenvalues, ascending.
pub fn sector_spectrum(realization: &DisorderRealization, omega: f64, parity: Parity) -> Result<Vec<f64>> {
    super::symmetric_eigenvalues(&sector_hamiltonian(realization, omega, parity)?)
}

/// Ground state of `H₀` in the even sector and its energy.
///
/// For `Ω > 0` this is the global ground state; at `Ω = 0` the twofold
/// degeneracy is resolved by the parity projection, giving `|G₊⟩`.
pub fn ground_state(realization: &DisorderRealization, omega: f64) -> Result<(QuantumState, f64)> {
    sector_ground_state(realization, omega, Parity::Even)
}

/// Lowest eigenpair inside `parity`.
pub fn sector_ground_state(
    realization: &DisorderRealization,
    omega: f64,
    parity: Parity,
) -> Result<(QuantumState, f64)> {
    check_size(realization.n, DEFAULT_CAP)?;
    if realization.n == 0 {
        return Err(Error::invalid("n", "need at least one spin"));
    }
    let sector = Sector::new(realization, omega, parity);
    let (energy, mut vector) = if sector.dim() <= 1024 {
        let eig = sector
            .dense()
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        let k = (0..sector.dim())
            .min_by(|&a, &b| s[a].total_cmp(&s[b]))
            .expect("non-empty sector");
        (s[k], (0..sector.dim()).map(|i| u[(i, k)]).collect::<Vec<_>>())
    } else {
        lanczos_ground(&sector)?
    };
    if vector.iter().sum::<f64>() < 0.0 {
        vector.iter_mut().for_each(|v| *v = -*v);
    }
    Ok((sector.to_state(realization.n, &vector), energy))
}

fn check_size(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::SystemTooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// Lanczos with full reorthogonalization, started from the uniform vector
/// (which overlaps the positive ground state).
fn lanczos_ground(sector: &Sector) -> Result<(f64, Vec<f64>)> {
    let dim = sector.dim();
    let max_iter = dim.min(400);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut w = vec![0.0; dim];
    let mut last = None;
    for it in 0..max_iter {
        sector.apply(&v, &mut w);
        let a = dot(&v, &w);
        alphas.push(a);
        basis.push(v.clone());
        for q in &basis {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
        }
        // Second pass keeps the basis orthogonal to machine precision.
        for q in &basis {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
        }
        let b = dot(&w, &w).sqrt();
        if it >= 4 || b < 1e-14 {
            let (e, y) = tridiagonal_ground(&alphas, &betas)?;
            let residual = b * y.last().copied().unwrap_or(0.0).abs();
            last = Some((e, y));
            if residual < 1e-11 || b < 1e-14 {
                break;
            }
        }
        betas.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    let (energy, y) = last.ok_or_else(|| Error::Internal("Lanczos produced no iterate".into()))?;
    let mut vector = vec![0.0; dim];
    for (c, q) in y.iter().zip(&basis) {
        axpy(*c, q, &mut vector);
    }
    let norm = dot(&vector, &vector).sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    Ok((energy, vector))
}

fn tridiagonal_ground(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = alphas.len();
    let mut t = Mat::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i + 1, i)] = betas[i];
            t[(i, i + 1)] = betas[i];
        }
    }
    let eig = t
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let idx = (0..k).min_by(|&a, &b| s[a].total_cmp(&s[b])).expect("non-empty");
    Ok((s[idx], (0..k).map(|i| eig.U()[(i, idx)]).collect()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += c * x);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_disorder, Boundary, DisorderSpec, SpinEnsembleSpec};
    use crate::statevector::{build_h0, ghz_fidelity, parity_expectation, symmetric_eigenvalues, IsingSystem};

    fn chain(n: usize) -> DisorderRealization {
        sample_disorder(&SpinEnsembleSpec::chain(n, 1.0, Boundary::Periodic)).unwrap()
    }

    #[test]
    fn sectors_partition_the_full_spectrum() {
        let r = sample_disorder(
            &SpinEnsembleSpec::chain(6, 1.0, Boundary::Periodic).with_disorder(DisorderSpec::uniform(0.3, 4)),
        )
        .unwrap();
        let mut both = sector_spectrum(&r, 0.7, Parity::Even).unwrap();
        both.extend(sector_spectrum(&r, 0.7, Parity::Odd).unwrap());
        both.sort_by(f64::total_cmp);
        let full = symmetric_eigenvalues(&build_h0(&r, 0.7).unwrap()).unwrap();
        for (a, b) in both.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn paramagnetic_limit() {
        let (psi, _) = ground_state(&chain(6), 50.0).unwrap();
        assert!(psi.fidelity(&QuantumState::x_polarized(6)) >= 0.999);
    }

    #[test]
    fn zero_field_gives_even_ghz() {
        let (psi, e) = ground_state(&chain(6), 0.0).unwrap();
        assert!((ghz_fidelity(&psi) - 1.0).abs() < 1e-10);
        assert!((e + 6.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_is_an_eigenvector() {
        let r = chain(7);
        let (psi, e) = ground_state(&r, 0.5).unwrap();
        let sys = IsingSystem::new(r).unwrap();
        assert!((sys.energy(&psi, 0.5) - e).abs() < 1e-10);
        assert!((parity_expectation(&psi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        // N = 12 even sector has 2048 states: Lanczos path vs dense eigenvalues.
        let r = sample_disorder(
            &SpinEnsembleSpec::chain(12, 1.0, Boundary::Periodic).with_disorder(DisorderSpec::uniform(0.5, 2)),
        )
        .unwrap();
        let (psi, e) = ground_state(&r, 0.5).unwrap();
        let dense = sector_spectrum(&r, 0.5, Parity::Even).unwrap()[0];
        assert!((e - dense).abs() < 1e-9, "{e} vs {dense}");
        let sys = IsingSystem::new(r).unwrap();
        assert!((sys.energy(&psi, 0.5) - e).abs() < 1e-9);
    }
}
