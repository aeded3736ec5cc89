use num_complex::Complex64;

use super::{magnetization, spin_z, QuantumState};

/// In-place normalized Walsh–Hadamard transform, i.e. `H^{⊗N}`. Maps σˣ
/// basis amplitudes (bit 0 = +x) to σᶻ amplitudes and back.
pub fn walsh_hadamard(amps: &mut [Complex64]) {
    let dim = amps.len();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut stride = 1;
    while stride < dim {
        for block in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * scale;
                *b = (x - y) * scale;
            }
        }
        stride *= 2;
    }
}

/// Probabilities in the σˣ product basis.
fn x_basis_probabilities(state: &QuantumState) -> Vec<f64> {
    let mut amps = state.amplitudes().to_vec();
    walsh_hadamard(&mut amps);
    amps.iter().map(|a| a.norm_sqr()).collect()
}

/// `⟨Πᵢ 2Sˣᵢ⟩ ∈ [−1, 1]`.
pub fn parity_expectation(state: &QuantumState) -> f64 {
    x_basis_probabilities(state)
        .iter()
        .enumerate()
        .map(|(c, p)| if c.count_ones() % 2 == 0 { *p } else { -p })
        .sum()
}

/// Distribution of the number of spins along −x (`P(N_e = k)`, `k = 0..=N`).
pub fn excitation_distribution(state: &QuantumState) -> Vec<f64> {
    let mut dist = vec![0.0; state.n() + 1];
    for (c, p) in x_basis_probabilities(state).into_iter().enumerate() {
        dist[c.count_ones() as usize] += p;
    }
    dist
}

/// `N/2 − ⟨ΣSˣᵢ⟩`: spin flips relative to the x-polarized paramagnet.
pub fn excitation_number(state: &QuantumState) -> f64 {
    excitation_distribution(state)
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum()
}

/// `⟨Sˣᵢ⟩` for every site.
pub fn spin_x_expectations(state: &QuantumState) -> Vec<f64> {
    let amps = state.amplitudes();
    (0..state.n())
        .map(|i| {
            let m = 1usize << i;
            0.5 * amps
                .iter()
                .enumerate()
                .map(|(c, a)| (a.conj() * amps[c ^ m]).re)
                .sum::<f64>()
        })
        .collect()
}

/// Connected correlator `⟨Sᶻᵢ Sᶻⱼ⟩ − ⟨Sᶻᵢ⟩⟨Sᶻⱼ⟩`.
pub fn zz_correlator(state: &QuantumState, i: usize, j: usize) -> f64 {
    assert!(i < state.n() && j < state.n(), "site index out of range");
    let (mut zz, mut zi, mut zj) = (0.0, 0.0, 0.0);
    for (c, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let (si, sj) = (spin_z(c, i), spin_z(c, j));
        zz += p * si * sj;
        zi += p * si;
        zj += p * sj;
    }
    zz - zi * zj
}

/// `⟨(ΣSᶻ)²⟩ − ⟨ΣSᶻ⟩²`.
pub fn magnetization_variance(state: &QuantumState) -> f64 {
    let n = state.n();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (c, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let m = magnetization(c, n);
        m1 += p * m;
        m2 += p * m * m;
    }
    m2 - m1 * m1
}

/// `|⟨G₊|ψ⟩|²` with `|G₊⟩ = (|↑…↑⟩ + |↓…↓⟩)/√2`.
pub fn ghz_fidelity(state: &QuantumState) -> f64 {
    let amps = state.amplitudes();
    (amps[0] + amps[amps.len() - 1]).norm_sqr() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn x_polarized_state() {
        let psi = QuantumState::x_polarized(6);
        assert!((parity_expectation(&psi) - 1.0).abs() < 1e-12);
        assert!(excitation_number(&psi).abs() < 1e-12);
        assert!(spin_x_expectations(&psi).iter().all(|s| (s - 0.5).abs() < 1e-12));
    }

    #[test]
    fn one_flipped_spin() {
        let plus = (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0));
        let minus = (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(-FRAC_1_SQRT_2, 0.0));
        let psi = QuantumState::product(&[plus, minus, plus, plus]);
        assert!((excitation_number(&psi) - 1.0).abs() < 1e-12);
        assert!((parity_expectation(&psi) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_parities() {
        assert!((parity_expectation(&QuantumState::ghz(5, 1.0)) - 1.0).abs() < 1e-12);
        assert!((parity_expectation(&QuantumState::ghz(5, -1.0)) + 1.0).abs() < 1e-12);
        let plus = QuantumState::ghz(4, 1.0);
        let minus = QuantumState::ghz(4, -1.0);
        let amps: Vec<_> = plus
            .amplitudes()
            .iter()
            .zip(minus.amplitudes())
            .map(|(a, b)| (a - Complex64::i() * b) * FRAC_1_SQRT_2)
            .collect();
        let mix = QuantumState::from_amplitudes(4, amps).unwrap();
        assert!(parity_expectation(&mix).abs() < 1e-10);
    }

    #[test]
    fn correlators() {
        let up = QuantumState::basis(5, 0);
        assert_eq!(zz_correlator(&up, 0, 3), 0.0);
        let ghz = QuantumState::ghz(5, 1.0);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!((zz_correlator(&ghz, i, j) - 0.25).abs() < 1e-12);
                }
            }
        }
        assert!((magnetization_variance(&ghz) - 6.25).abs() < 1e-12);
        assert!((ghz_fidelity(&ghz) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let psi = QuantumState::ghz(3, -1.0);
        let mut amps = psi.amplitudes().to_vec();
        walsh_hadamard(&mut amps);
        walsh_hadamard(&mut amps);
        for (a, b) in amps.iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
