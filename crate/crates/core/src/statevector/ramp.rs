use super::{
    evolve, ghz_fidelity, parity_expectation, spin_z, Clock, EvolutionSegment, FieldProfile, IsingSystem, QuantumState,
};
use crate::error::Result;
use crate::model::{DisorderRealization, ProtocolSchedule, SignalSpec};

/// State and diagnostics after the initialization ramp.
#[derive(Debug, Clone)]
pub struct RampOutcome {
    pub state: QuantumState,
    pub clock: Clock,
    /// `|⟨G₊|ψ⟩|²`.
    pub ghz_fidelity: f64,
    /// Fraction of bonds carrying a domain wall, `⟨½ − 2Sᶻᵢ Sᶻⱼ⟩` averaged.
    pub kink_density: f64,
    pub parity: f64,
    pub warnings: Vec<String>,
}

/// Expected domain-wall fraction over the realization's bonds.
pub(crate) fn kink_density(state: &QuantumState, realization: &DisorderRealization) -> f64 {
    if realization.bonds.is_empty() {
        return 0.0;
    }
    let total: f64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(c, a)| {
            let walls = realization
                .bonds
                .iter()
                .filter(|b| spin_z(c, b.i) != spin_z(c, b.j))
                .count();
            a.norm_sqr() * walls as f64
        })
        .sum();
    total / realization.bonds.len() as f64
}

/// Ramps `⊗|+x⟩` from `omega_init` to `omega_stop` over `prep_time` with the
/// initialization drive's π-train active.
pub fn run_adiabatic_ramp(
    realization: &DisorderRealization,
    schedule: &ProtocolSchedule,
    signal: Option<&SignalSpec>,
) -> Result<RampOutcome> {
    schedule.validate()?;
    let system = IsingSystem::new(realization.clone())?;
    let mut state = QuantumState::x_polarized(realization.n);
    let mut clock = Clock::default();
    let segment = EvolutionSegment::new(
        schedule.prep_time,
        FieldProfile::Ramp {
            from: schedule.omega_init,
            to: schedule.omega_stop,
            shape: schedule.ramp_shape,
        },
        schedule.max_step,
    )
    .with_signal(signal.copied());
    evolve(&system, &mut state, &segment, Some(&schedule.prep_drive), &mut clock)?;
    let warnings = signal
        .map(|s| schedule.detuning_warnings(s, realization.coupling))
        .unwrap_or_default();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(RampOutcome {
        ghz_fidelity: ghz_fidelity(&state),
        kink_density: kink_density(&state, realization),
        parity: parity_expectation(&state),
        state,
        clock,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_disorder, Boundary, DriveSpec, RampShape, SpinEnsembleSpec};
    use crate::statevector::zz_correlator;

    fn schedule(prep: f64, omega_init: f64) -> ProtocolSchedule {
        let signal = SignalSpec::new(0.0, 1.0);
        ProtocolSchedule::parity(prep, 0.0, omega_init, &signal, DriveSpec::new(200.0)).with_max_step(0.005)
    }

    fn chain(n: usize) -> DisorderRealization {
        sample_disorder(&SpinEnsembleSpec::chain(n, 1.0, Boundary::Periodic)).unwrap()
    }

    #[test]
    fn slow_two_spin_ramp_reaches_ghz() {
        let out = run_adiabatic_ramp(&chain(2), &schedule(100.0, 5.0), None).unwrap();
        assert!(out.ghz_fidelity > 0.99, "{}", out.ghz_fidelity);
    }

    #[test]
    fn sudden_ramp_keeps_initial_overlap() {
        // |⟨G₊|+x⟩^⊗N|² = (2·2^{−N/2}/√2)² = 2^{1−N}.
        for n in [2usize, 4, 6] {
            let out = run_adiabatic_ramp(&chain(n), &schedule(0.0, 5.0), None).unwrap();
            let expected = 2f64.powi(1 - n as i32);
            assert!((out.ghz_fidelity - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_conserves_parity() {
        for prep in [3.0, 17.0] {
            let mut s = schedule(prep, 4.0);
            s.ramp_shape = RampShape::Linear;
            let out = run_adiabatic_ramp(&chain(6), &s, None).unwrap();
            assert!((out.parity - 1.0).abs() < 1e-8);
            assert!(out.warnings.is_empty());
        }
    }

    #[test]
    fn slower_ramps_leave_fewer_kinks_and_longer_correlations() {
        let r = chain(8);
        let fast = run_adiabatic_ramp(&r, &schedule(4.0, 4.0), None).unwrap();
        let slow = run_adiabatic_ramp(&r, &schedule(25.0, 4.0), None).unwrap();
        assert!(slow.kink_density < fast.kink_density);
        assert!(zz_correlator(&slow.state, 0, 4) > zz_correlator(&fast.state, 0, 4));
    }

    #[test]
    fn near_resonant_ramp_drive_warns() {
        let signal = SignalSpec::new(0.01, 5.0);
        let s = ProtocolSchedule::parity(1.0, 0.0, 4.0, &signal, DriveSpec::new(10.5));
        let out = run_adiabatic_ramp(&chain(4), &s, Some(&signal)).unwrap();
        assert!(!out.warnings.is_empty());
    }
}
