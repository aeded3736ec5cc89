use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One momentum sector `k` of the clean chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumMode {
    pub k: f64,
    /// BdG eigenvalue `E_k = |−Ω/2 + (J/4)e^{−ik}|`.
    pub bdg_energy: f64,
    /// Quasiparticle excitation energy `ε_k = 2E_k = √(Ω² + J²/4 − ΩJ cos k)`.
    pub quasiparticle_energy: f64,
    /// `h(k)` in the `(c_k, c†_{−k})` basis; eigenvalues `±E_k`.
    pub bloch: [[Complex64; 2]; 2],
}

impl MomentumMode {
    pub fn new(k: f64, omega: f64, coupling: f64) -> Self {
        let a = -0.5 * omega + 0.25 * coupling * k.cos();
        let b = 0.25 * coupling * k.sin();
        let e = a.hypot(b);
        Self {
            k,
            bdg_energy: e,
            quasiparticle_energy: 2.0 * e,
            bloch: [
                [Complex64::new(a, 0.0), Complex64::new(0.0, b)],
                [Complex64::new(0.0, -b), Complex64::new(-a, 0.0)],
            ],
        }
    }
}

/// Allowed momenta of an `N`-site ring in the even sector,
/// `k = (2m + 1)π/N` mapped into `(−π, π]`.
pub fn momenta(n: usize) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let k = (2 * m + 1) as f64 * PI / n as f64;
            if k > PI {
                k - 2.0 * PI
            } else {
                k
            }
        })
        .collect()
}

/// Fourier-diagonalized single-particle spectrum of the clean periodic
/// chain, ordered by `k`.
pub fn dispersion(omega: f64, coupling: f64, n: usize) -> Result<Vec<MomentumMode>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid("n", format!("need an even N >= 2, got {n}")));
    }
    if !(omega.is_finite() && coupling.is_finite()) {
        return Err(Error::invalid("omega", "fields must be finite"));
    }
    let mut modes: Vec<MomentumMode> = momenta(n)
        .into_iter()
        .map(|k| MomentumMode::new(k, omega, coupling))
        .collect();
    modes.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freefermion::build_bdg;
    use crate::model::{sample_disorder, Boundary, SpinEnsembleSpec};

    #[test]
    fn matches_direct_diagonalization() {
        let r = sample_disorder(&SpinEnsembleSpec::chain(100, 1.0, Boundary::Periodic)).unwrap();
        for omega in [0.2, 0.5, 1.7] {
            let mut fourier: Vec<f64> = dispersion(omega, 1.0, 100)
                .unwrap()
                .iter()
                .map(|m| m.bdg_energy)
                .collect();
            fourier.sort_by(f64::total_cmp);
            let sol = build_bdg(&r, omega).unwrap().solve().unwrap();
            for (k, e) in fourier.iter().enumerate() {
                assert!((sol.eigenvalues[100 + k] - e).abs() < 1e-10);
                assert!((sol.eigenvalues[99 - k] + e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bloch_matrix_eigenvalues() {
        let m = MomentumMode::new(0.7, 0.9, 1.0);
        let h = m.bloch;
        // Traceless Hermitian: eigenvalues ±√(h00² + |h01|²).
        assert!((h[0][1] - h[1][0].conj()).norm() < 1e-15);
        assert!((h[0][0].re.hypot(h[0][1].norm()) - m.bdg_energy).abs() < 1e-15);
        let closed = (0.81f64 + 0.25 - 0.9 * 0.7f64.cos()).sqrt();
        assert!((m.quasiparticle_energy - closed).abs() < 1e-14);
    }

    #[test]
    fn critical_gap_closes_like_one_over_n() {
        for n in [10usize, 100, 1000, 4000] {
            let min = dispersion(0.5, 1.0, n)
                .unwrap()
                .iter()
                .map(|m| m.quasiparticle_energy)
                .fold(f64::INFINITY, f64::min);
            assert!(min <= PI / (2.0 * n as f64) + 1e-15, "n = {n}");
            assert!(min > 0.0);
        }
    }

    #[test]
    fn paramagnetic_limit() {
        for m in dispersion(40.0, 1.0, 50).unwrap() {
            assert!((m.quasiparticle_energy / 40.0 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn momenta_are_symmetric() {
        let mut ks = momenta(8);
        ks.sort_by(f64::total_cmp);
        for i in 0..4 {
            assert!((ks[i] + ks[7 - i]).abs() < 1e-14);
        }
    }
}
