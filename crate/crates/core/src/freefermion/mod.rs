//! Jordan–Wigner / Bogoliubov–de Gennes treatment of the nearest-neighbour
//! chain.
//!
//! With `c†ᵢ = (Πⱼ<ᵢ 2Sˣⱼ)(Sᶻᵢ − iSʸᵢ)` the Hamiltonian becomes
//! `Ψ† H Ψ` with `Ψ = (c₁…c_N, c₁†…c_N†)` and
//!
//! ```text
//!     H = [[ A,  B],      A_ii = −Ωᵢ/2,  A_{i,i+1} = A_{i+1,i} = Jᵢ/8,
//!          [−B, −A]]      B_{i,i+1} = Jᵢ/8,  B_{i+1,i} = −Jᵢ/8.
//! ```
//!
//! Periodic spin chains map to antiperiodic fermions (`c_{N+1} = −c₁`) in the
//! even-parity sector and to periodic fermions in the odd one. Writing an
//! eigenvector as `(u, v)`, the combinations `φ = u + v`, `ψ = u − v` are the
//! left and right singular vectors of `M = A − B` (a cyclic lower-bidiagonal
//! matrix), so the `N` positive eigenvalues are its singular values. Most
//! routines use that reduction; [`BdgMatrix::dense`] keeps the full form.
//!
//! A BdG eigenvalue `E` corresponds to a quasiparticle of energy `2E` and the
//! fermionic vacuum has energy `−ΣE`.

mod dispersion;
mod ipr;
mod kz;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Boundary, DisorderRealization};

pub use dispersion::{dispersion, momenta, MomentumMode};
pub use ipr::{ipr_average, mode_iprs, IprStatistics};
pub use kz::{kz_ramp, sudden_quench_density, KzOutcome, RampPath};

/// Boundary condition seen by the fermions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// `c_{N+1} = −c₁`: periodic spins, even sector.
    Antiperiodic,
    /// `c_{N+1} = c₁`: periodic spins, odd sector.
    Periodic,
    Open,
}

impl Closure {
    /// Even-sector closure for a spin boundary condition.
    pub fn even_sector(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => Closure::Antiperiodic,
            Boundary::Open => Closure::Open,
        }
    }

    /// Odd-sector closure for a spin boundary condition.
    pub fn odd_sector(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => Closure::Periodic,
            Boundary::Open => Closure::Open,
        }
    }

    fn corner_sign(self) -> f64 {
        match self {
            Closure::Antiperiodic => -1.0,
            Closure::Periodic => 1.0,
            Closure::Open => 0.0,
        }
    }
}

/// Single-particle data of one chain at fixed field.
#[derive(Debug, Clone, PartialEq)]
pub struct BdgMatrix {
    /// On-site fields `Ωᵢ`.
    pub fields: Vec<f64>,
    /// `Jᵢ` on bond `(i, i+1)`; the last entry closes the ring (zero when open).
    pub couplings: Vec<f64>,
    pub closure: Closure,
}

/// Extracts the nearest-neighbour structure required by the fermion mapping.
fn chain_couplings(realization: &DisorderRealization) -> Result<Vec<f64>> {
    if !realization.nearest_neighbor {
        return Err(Error::UnsupportedModel(
            "free-fermion mapping needs nearest-neighbour couplings".into(),
        ));
    }
    let n = realization.n;
    let mut couplings = vec![0.0; n];
    for b in &realization.bonds {
        if b.j == (b.i + 1) % n && (b.j != 0 || realization.boundary == Boundary::Periodic) {
            couplings[b.i] = b.strength;
        } else if b.i == (b.j + 1) % n {
            couplings[b.j] = b.strength;
        } else {
            return Err(Error::UnsupportedModel(format!(
                "bond ({}, {}) is not nearest-neighbour",
                b.i, b.j
            )));
        }
    }
    Ok(couplings)
}

/// Assembles the BdG problem for `realization` at mean field `omega` in the
/// even-parity sector.
pub fn build_bdg(realization: &DisorderRealization, omega: f64) -> Result<BdgMatrix> {
    build_bdg_with(realization, omega, Closure::even_sector(realization.boundary))
}

/// As [`build_bdg`] with an explicit fermionic closure.
pub fn build_bdg_with(realization: &DisorderRealization, omega: f64, closure: Closure) -> Result<BdgMatrix> {
    let n = realization.n;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "n",
            format!("free-fermion chain needs an even N >= 2, got {n}"),
        ));
    }
    let mut couplings = chain_couplings(realization)?;
    if closure == Closure::Open {
        couplings[n - 1] = 0.0;
    }
    Ok(BdgMatrix {
        fields: realization.fields(omega),
        couplings,
        closure,
    })
}

impl BdgMatrix {
    pub fn n(&self) -> usize {
        self.fields.len()
    }

    /// The `2N × 2N` matrix in `(c, c†)` ordering.
    pub fn dense(&self) -> Mat<f64> {
        let n = self.n();
        let mut h = Mat::<f64>::zeros(2 * n, 2 * n);
        let corner = self.closure.corner_sign();
        for i in 0..n {
            h[(i, i)] = -0.5 * self.fields[i];
            h[(n + i, n + i)] = 0.5 * self.fields[i];
            let (j, sign) = if i + 1 < n { (i + 1, 1.0) } else { (0, corner) };
            let t = sign * self.couplings[i] / 8.0;
            if t == 0.0 {
                continue;
            }
            // A block and its negative.
            h[(i, j)] += t;
            h[(j, i)] += t;
            h[(n + i, n + j)] -= t;
            h[(n + j, n + i)] -= t;
            // B = antisymmetric pairing, lower-left is −B.
            h[(i, n + j)] += t;
            h[(j, n + i)] -= t;
            h[(n + i, j)] -= t;
            h[(n + j, i)] += t;
        }
        h
    }

    /// `M = A − B`: diagonal `−Ωᵢ/2`, sub-diagonal `Jᵢ/4`, corner
    /// `M_{1,N} = ±J_N/4`.
    pub fn reduced(&self) -> Mat<f64> {
        let n = self.n();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = -0.5 * self.fields[i];
        }
        for i in 0..n - 1 {
            m[(i + 1, i)] = 0.25 * self.couplings[i];
        }
        m[(0, n - 1)] += self.closure.corner_sign() * 0.25 * self.couplings[n - 1];
        m
    }

    /// Fermion parity of the BdG vacuum: `sign det M` (`+1` even).
    pub fn vacuum_parity(&self) -> f64 {
        let n = self.n();
        // det M = Πd + (−1)^{N+1}·c·Πs for the cyclic bidiagonal form.
        let diag = self.fields.iter().map(|f| -0.5 * f);
        let (s1, l1) = signed_log_product(diag);
        let c = self.closure.corner_sign() * 0.25 * self.couplings[n - 1];
        let sub = self.couplings[..n - 1].iter().map(|j| 0.25 * j);
        let (s2, l2) = signed_log_product(sub.chain(std::iter::once(c)));
        let s2 = if n.is_multiple_of(2) { -s2 } else { s2 };
        let sign = if s1 == s2 || s2 == 0.0 {
            s1
        } else if s1 == 0.0 || l2 > l1 {
            s2
        } else {
            s1
        };
        if sign < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Positive BdG eigenvalues `E_k`, ascending.
    pub fn energies(&self) -> Result<Vec<f64>> {
        let mut s = self
            .reduced()
            .singular_values()
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        s.sort_by(f64::total_cmp);
        Ok(s)
    }

    /// Full diagonalization of [`BdgMatrix::dense`].
    pub fn solve(&self) -> Result<BdgSolution> {
        let eig = self
            .dense()
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        let dim = 2 * self.n();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let eigenvalues = order.iter().map(|&k| s[k]).collect();
        let mut eigenvectors = Mat::<f64>::zeros(dim, dim);
        for (col, &k) in order.iter().enumerate() {
            for row in 0..dim {
                eigenvectors[(row, col)] = u[(row, k)];
            }
        }
        Ok(BdgSolution {
            eigenvalues,
            eigenvectors,
            even_sector: self.closure != Closure::Periodic,
        })
    }

    /// Many-body ground energy `−ΣE_k` of the BdG vacuum.
    pub fn vacuum_energy(&self) -> Result<f64> {
        Ok(-self.energies()?.iter().sum::<f64>())
    }

    /// Every many-body energy whose fermion parity equals `parity` (`±1`),
    /// ascending. Exhaustive, so limited to `N ≤ 20`.
    pub fn sector_energies(&self, parity: f64) -> Result<Vec<f64>> {
        let n = self.n();
        if n > 20 {
            return Err(Error::SystemTooLarge { n, cap: 20 });
        }
        let e = self.energies()?;
        let e0 = -e.iter().sum::<f64>();
        let vacuum = self.vacuum_parity();
        let mut out: Vec<f64> = (0..1usize << n)
            .filter(|occ| {
                let p = if occ.count_ones() % 2 == 0 { vacuum } else { -vacuum };
                p == parity.signum()
            })
            .map(|occ| e0 + (0..n).filter(|k| occ >> k & 1 == 1).map(|k| 2.0 * e[k]).sum::<f64>())
            .collect();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// Lowest many-body energy with fermion parity `parity`.
    pub fn sector_ground_energy(&self, parity: f64) -> Result<f64> {
        let e = self.energies()?;
        let e0 = -e.iter().sum::<f64>();
        if self.vacuum_parity() == parity.signum() {
            Ok(e0)
        } else {
            Ok(e0 + 2.0 * e[0])
        }
    }
}

/// `(sign, ln|Π x|)` without overflow.
fn signed_log_product(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut sign = 1.0;
    let mut log = 0.0;
    for x in xs {
        if x == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if x < 0.0 {
            sign = -sign;
        }
        log += x.abs().ln();
    }
    (sign, log)
}

/// Eigen-decomposition of a dense BdG matrix.
#[derive(Debug, Clone)]
pub struct BdgSolution {
    /// All `2N` eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]` in `(u, v)` layout.
    pub eigenvectors: Mat<f64>,
    pub even_sector: bool,
}

impl BdgSolution {
    pub fn n(&self) -> usize {
        self.eigenvalues.len() / 2
    }

    /// `|uᵢ|² + |vᵢ|²` of mode `k`.
    pub fn site_weights(&self, k: usize) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| self.eigenvectors[(i, k)].powi(2) + self.eigenvectors[(n + i, k)].powi(2))
            .collect()
    }

    /// Inverse participation ratio `Σᵢ wᵢ²` of mode `k`.
    pub fn ipr(&self, k: usize) -> f64 {
        self.site_weights(k).iter().map(|w| w * w).sum()
    }

    /// Largest `|E + E'|` over the pairing `E_k ↔ E_{2N−1−k}`.
    pub fn particle_hole_asymmetry(&self) -> f64 {
        let m = self.eigenvalues.len();
        (0..m / 2)
            .map(|k| (self.eigenvalues[k] + self.eigenvalues[m - 1 - k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Odd-sector minus even-sector ground energy of a periodic chain. This is
/// the smallest parity-changing excitation gap.
pub fn parity_gap(realization: &DisorderRealization, omega: f64) -> Result<f64> {
    let even = build_bdg_with(realization, omega, Closure::even_sector(realization.boundary))?;
    let odd = build_bdg_with(realization, omega, Closure::odd_sector(realization.boundary))?;
    Ok(odd.sector_ground_energy(-1.0)? - even.sector_ground_energy(1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_disorder, DisorderSpec, SpinEnsembleSpec};
    use crate::statevector::{sector_spectrum, Parity};

    fn chain(n: usize, w: f64, seed: u64) -> DisorderRealization {
        let spec = SpinEnsembleSpec::chain(n, 1.0, Boundary::Periodic);
        let spec = if w > 0.0 {
            spec.with_disorder(DisorderSpec::uniform(w, seed))
        } else {
            spec
        };
        sample_disorder(&spec).unwrap()
    }

    #[test]
    fn two_site_matrix_is_particle_hole_symmetric() {
        let bdg = build_bdg(&chain(2, 0.0, 0), 0.7).unwrap();
        let sol = bdg.solve().unwrap();
        assert_eq!(sol.eigenvalues.len(), 4);
        assert!(sol.particle_hole_asymmetry() < 1e-10);
        let h = bdg.dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn disordered_spectrum_is_particle_hole_symmetric() {
        let sol = build_bdg(&chain(40, 0.4, 7), 0.5).unwrap().solve().unwrap();
        assert!(sol.particle_hole_asymmetry() < 1e-10);
    }

    #[test]
    fn reduced_singular_values_match_dense_eigenvalues() {
        let bdg = build_bdg(&chain(30, 0.3, 3), 0.45).unwrap();
        let sol = bdg.solve().unwrap();
        let e = bdg.energies().unwrap();
        for (k, ek) in e.iter().enumerate() {
            assert!((sol.eigenvalues[30 + k] - ek).abs() < 1e-10);
        }
    }

    #[test]
    fn mode_weights_are_normalized() {
        let sol = build_bdg(&chain(16, 0.5, 1), 0.5).unwrap().solve().unwrap();
        for k in 0..32 {
            let total: f64 = sol.site_weights(k).iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            let ipr = sol.ipr(k);
            assert!((1.0 / 16.0 - 1e-12..=1.0 + 1e-12).contains(&ipr));
        }
    }

    #[test]
    fn critical_chain_is_nearly_gapless() {
        let e = build_bdg(&chain(1000, 0.0, 0), 0.5).unwrap().energies().unwrap();
        assert!(e[0] < 1e-2);
    }

    #[test]
    fn even_sector_matches_dense_diagonalization() {
        for (w, seed) in [(0.0, 0), (0.4, 11)] {
            let r = chain(8, w, seed);
            for omega in [0.0, 0.3, 0.5, 1.2] {
                let ff = build_bdg(&r, omega).unwrap().sector_energies(1.0).unwrap();
                let dense = sector_spectrum(&r, omega, Parity::Even).unwrap();
                assert_eq!(ff.len(), dense.len());
                for (a, b) in ff.iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-8, "omega {omega}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn odd_sector_matches_dense_diagonalization() {
        for (w, seed) in [(0.0, 0), (0.4, 5)] {
            let r = chain(6, w, seed);
            for omega in [0.1, 0.5, 2.0] {
                let bdg = build_bdg_with(&r, omega, Closure::Periodic).unwrap();
                let ff = bdg.sector_energies(-1.0).unwrap();
                let dense = sector_spectrum(&r, omega, Parity::Odd).unwrap();
                for (a, b) in ff.iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-8, "omega {omega}: {a} vs {b}");
                }
                let gap = parity_gap(&r, omega).unwrap();
                let even = sector_spectrum(&r, omega, Parity::Even).unwrap();
                assert!((gap - (dense[0] - even[0])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn open_chain_matches_dense_diagonalization() {
        let r = sample_disorder(&SpinEnsembleSpec::chain(6, 1.0, Boundary::Open)).unwrap();
        let ff = build_bdg(&r, 0.8).unwrap().sector_energies(1.0).unwrap();
        let dense = sector_spectrum(&r, 0.8, Parity::Even).unwrap();
        for (a, b) in ff.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_unsupported_chains() {
        assert!(build_bdg(&chain(5, 0.0, 0), 0.5).is_err());
        let mut r = chain(6, 0.0, 0);
        r.nearest_neighbor = false;
        assert!(matches!(build_bdg(&r, 0.5), Err(Error::UnsupportedModel(_))));
    }
}
