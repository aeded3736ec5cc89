//! End-to-end sensing sequences on the exact state-vector engine.
//!
//! Both protocols share three stages: ramp the transverse field down with a
//! far-detuned π-train, sense at fixed field with the sensing drive, ramp
//! back up. The parity protocol stops at `Ω = 0` and reads `Π(2Sˣ)`; the
//! excitation protocol stops above the critical field and counts spin flips.

mod calibrate;
mod estimate;
mod shots;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    effective_signal_average, sample_disorder, CouplingProfile, DisorderRealization, ProtocolSchedule, SignalSpec,
    SpinEnsembleSpec,
};
use crate::statevector::{
    apply_z_phase, evolve, excitation_distribution, ghz_fidelity, parity_expectation, spin_x_expectations, Clock,
    EvolutionSegment, FieldProfile, IsingSystem, QuantumState,
};

pub use calibrate::{calibrate_detuning, gap_estimate, Calibration};
pub use estimate::{estimate_signal, quarter_fringe_bias, Fringe, SignalEstimate};
pub use shots::{simulate_shots, MeasurementRecord};

/// Observable read out at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    /// Global parity `Π(2Sˣ)`, one `±1` outcome per shot.
    Parity,
    /// Number of spins along `−x`, one count per shot.
    Excitations,
    /// Every spin's `2Sˣ` separately (`N` outcomes per shot); the
    /// uncorrelated-sensor baseline.
    SpinX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostic {
    pub stage: String,
    pub duration: f64,
    /// π-pulses applied during the stage.
    pub pulses: u64,
    pub norm_drift: f64,
    pub parity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub n: usize,
    pub readout: Readout,
    /// `⟨Π(2Sˣ)⟩` at the end of the sequence.
    pub parity: f64,
    /// `⟨N_e⟩` at the end of the sequence.
    pub excitations: f64,
    pub excitation_variance: f64,
    /// `P(N_e = k)` for `k = 0..=N`.
    pub excitation_distribution: Vec<f64>,
    /// `⟨2Sˣᵢ⟩` per site.
    pub spin_x: Vec<f64>,
    /// `|⟨G₊|ψ⟩|²` after the down-ramp.
    pub ghz_fidelity: f64,
    /// Time-averaged toggling-frame field during sensing.
    pub effective_signal: f64,
    /// `φ = N·B̄_eff·T_s/2`, so that an ideal GHZ state reads `cos 2φ`.
    pub phase: f64,
    pub stages: Vec<StageDiagnostic>,
    pub warnings: Vec<String>,
}

impl ProtocolResult {
    /// Expectation of a single-shot outcome for [`ProtocolResult::readout`].
    pub fn expectation(&self) -> f64 {
        match self.readout {
            Readout::Parity => self.parity,
            Readout::Excitations => self.excitations,
            Readout::SpinX => self.spin_x.iter().sum::<f64>() / self.n as f64,
        }
    }
}

/// Runs ramp → sense → ramp on `realization`, with the known readout bias
/// imprinted between sensing and the up-ramp.
fn run_sequence(
    realization: &DisorderRealization,
    schedule: &ProtocolSchedule,
    signal: &SignalSpec,
    readout: Readout,
) -> Result<ProtocolResult> {
    schedule.validate()?;
    signal.validate()?;
    let system = IsingSystem::new(realization.clone())?;
    let n = realization.n;
    let mut state = QuantumState::x_polarized(n);
    let mut clock = Clock::default();
    let mut stages = Vec::with_capacity(3);

    let mut stage =
        |name: &str, state: &mut QuantumState, clock: &mut Clock, segment: EvolutionSegment, drive| -> Result<()> {
            let before = clock.pulses;
            evolve(&system, state, &segment, Some(drive), clock)?;
            stages.push(StageDiagnostic {
                stage: name.to_string(),
                duration: segment.duration,
                pulses: clock.pulses - before,
                norm_drift: (state.norm() - 1.0).abs(),
                parity: parity_expectation(state),
            });
            Ok(())
        };

    let ramp_down = EvolutionSegment::new(
        schedule.prep_time,
        FieldProfile::Ramp {
            from: schedule.omega_init,
            to: schedule.omega_stop,
            shape: schedule.ramp_shape,
        },
        schedule.max_step,
    )
    .with_signal(Some(*signal));
    stage(
        "initialization",
        &mut state,
        &mut clock,
        ramp_down,
        &schedule.prep_drive,
    )?;
    let fidelity = ghz_fidelity(&state);

    let sense = EvolutionSegment::new(
        schedule.sense_time,
        FieldProfile::Constant(schedule.omega_stop),
        schedule.max_step,
    )
    .with_signal(Some(*signal));
    stage("measurement", &mut state, &mut clock, sense, &schedule.sense_drive)?;

    if schedule.readout_bias != 0.0 {
        // A toggling-frame rotation exp(−iθΣSᶻ) is exp(−i s θΣSᶻ) in the lab
        // frame, s = (−1)^pulses.
        apply_z_phase(&mut state, clock.toggling_sign() * schedule.readout_bias);
    }

    let ramp_up = EvolutionSegment::new(
        schedule.readout_time,
        FieldProfile::Ramp {
            from: schedule.omega_stop,
            to: schedule.omega_init,
            shape: schedule.ramp_shape,
        },
        schedule.max_step,
    )
    .with_signal(Some(*signal));
    stage("read-out", &mut state, &mut clock, ramp_up, &schedule.readout_drive)?;

    let dist = excitation_distribution(&state);
    let excitations: f64 = dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let second: f64 = dist.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
    let effective_signal = effective_signal_average(signal, &schedule.sense_drive).mean;
    let mut warnings = schedule.detuning_warnings(signal, realization.coupling);
    for w in &warnings {
        log::warn!("{w}");
    }
    warnings.sort();
    Ok(ProtocolResult {
        n,
        readout,
        parity: parity_expectation(&state),
        excitations,
        excitation_variance: (second - excitations * excitations).max(0.0),
        excitation_distribution: dist,
        spin_x: spin_x_expectations(&state).iter().map(|s| 2.0 * s).collect(),
        ghz_fidelity: fidelity,
        effective_signal,
        phase: 0.5 * n as f64 * effective_signal * schedule.sense_time,
        stages,
        warnings,
    })
}

/// Parity protocol: GHZ preparation by ramping to `Ω = 0`, resonant
/// sensing, reversed ramp, parity readout.
pub fn run_parity_protocol(
    spec: &SpinEnsembleSpec,
    schedule: &ProtocolSchedule,
    signal: &SignalSpec,
) -> Result<ProtocolResult> {
    run_parity_protocol_on(&sample_disorder(spec)?, schedule, signal)
}

/// [`run_parity_protocol`] on a fixed realization.
pub fn run_parity_protocol_on(
    realization: &DisorderRealization,
    schedule: &ProtocolSchedule,
    signal: &SignalSpec,
) -> Result<ProtocolResult> {
    let readout = if realization.bonds.iter().all(|b| b.strength == 0.0) {
        Readout::SpinX
    } else {
        Readout::Parity
    };
    run_sequence(realization, schedule, signal, readout)
}

/// The same ensemble with every coupling switched off: `N` independent
/// spins read out one by one, the uncorrelated-sensor reference.
pub fn uncoupled_reference(spec: &SpinEnsembleSpec) -> SpinEnsembleSpec {
    SpinEnsembleSpec {
        profile: CouplingProfile::Explicit(vec![vec![0.0; spec.n]; spec.n]),
        ..spec.clone()
    }
}

/// Excitation-counting protocol: the field stays above `Ω_c`, the detuned
/// sensing drive resonantly creates quasiparticles, and the reversed ramp
/// maps each to a spin flip.
pub fn run_excitation_protocol(
    spec: &SpinEnsembleSpec,
    schedule: &ProtocolSchedule,
    signal: &SignalSpec,
) -> Result<ProtocolResult> {
    let critical = spec.critical_field();
    check_excitation_schedule(schedule, critical)?;
    let realization = sample_disorder(spec)?;
    let mut result = run_sequence(&realization, schedule, signal, Readout::Excitations)?;
    if let Some(w) = freezing_warning(schedule, critical, spec.coupling) {
        log::warn!("{w}");
        result.warnings.push(w);
    }
    Ok(result)
}

fn check_excitation_schedule(schedule: &ProtocolSchedule, critical: f64) -> Result<()> {
    if schedule.omega_stop <= critical || schedule.omega_init <= critical {
        return Err(Error::ProtocolViolation(format!(
            "excitation protocol must stay above the critical field {critical}: ramp {} -> {}",
            schedule.omega_init, schedule.omega_stop
        )));
    }
    Ok(())
}

/// Warns when `ΔΩ = Ω_stop − Ω_c` is below the freezing scale
/// `Ω_c (J T_p)^{−1/(zν+1)}` of the 1D Ising class (`zν = 1`).
fn freezing_warning(schedule: &ProtocolSchedule, critical: f64, coupling: f64) -> Option<String> {
    let detuning = schedule.omega_stop - critical;
    let jt = (coupling * schedule.prep_time).max(1.0);
    let bound = critical * jt.powf(-0.5);
    (detuning < bound).then(|| {
        format!("ΔΩ = {detuning:.4} is below the freezing scale {bound:.4}; the ramp is not adiabatic at its end point")
    })
}

/// Total protocol time against the correlated-state coherence time `T̄₂`.
pub fn check_coherence_budget(schedule: &ProtocolSchedule, t2_eff: f64) -> Result<()> {
    let total = schedule.total_time();
    if total > t2_eff {
        return Err(Error::ProtocolViolation(format!(
            "T_p + T_s + T_r = {total} exceeds the coherence time {t2_eff}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, DriveSpec};

    fn parity_schedule(prep: f64, sense: f64, signal: &SignalSpec) -> ProtocolSchedule {
        ProtocolSchedule::parity(prep, sense, 6.0, signal, DriveSpec::new(2.0 * signal.frequency + 120.0))
            .with_max_step(0.01)
    }

    #[test]
    fn zero_signal_conserves_parity() {
        let spec = SpinEnsembleSpec::chain(6, 1.0, Boundary::Periodic);
        let signal = SignalSpec::new(0.0, 5.0);
        let r = run_parity_protocol(&spec, &parity_schedule(20.0, 3.0, &signal), &signal).unwrap();
        assert!((r.parity - 1.0).abs() < 1e-6);
        assert_eq!(r.stages.len(), 3);
        assert!(r.stages.iter().all(|s| s.norm_drift < 1e-8));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn stage_pulse_counts_follow_drives() {
        let spec = SpinEnsembleSpec::chain(4, 1.0, Boundary::Periodic);
        let signal = SignalSpec::new(0.01, 5.0);
        let s = parity_schedule(2.0, 2.0 * std::f64::consts::PI, &signal);
        let r = run_parity_protocol(&spec, &s, &signal).unwrap();
        // Resonant drive ω₀ = 10: τ = π/5, so T_s = 2π holds 10 pulses.
        assert_eq!(r.stages[1].pulses, 10);
    }

    #[test]
    fn excitation_protocol_rejects_crossing() {
        let spec = SpinEnsembleSpec::chain(4, 1.0, Boundary::Periodic);
        let signal = SignalSpec::new(0.01, 5.0);
        let s = ProtocolSchedule::excitation(10.0, 5.0, 20.0, 0.3, 0.1, &signal, DriveSpec::new(130.0));
        assert!(matches!(
            run_excitation_protocol(&spec, &s, &signal),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn freezing_bound_warns_for_short_ramps() {
        let signal = SignalSpec::new(0.0, 5.0);
        let s = ProtocolSchedule::excitation(4.0, 1.0, 20.0, 0.6, 0.1, &signal, DriveSpec::new(130.0));
        assert!(freezing_warning(&s, 0.5, 1.0).is_some());
        let s = ProtocolSchedule::excitation(100.0, 1.0, 20.0, 0.8, 0.3, &signal, DriveSpec::new(130.0));
        assert!(freezing_warning(&s, 0.5, 1.0).is_none());
    }

    #[test]
    fn coherence_budget() {
        let signal = SignalSpec::new(0.0, 5.0);
        let s = parity_schedule(10.0, 5.0, &signal);
        assert!(check_coherence_budget(&s, 30.0).is_ok());
        assert!(matches!(
            check_coherence_budget(&s, 20.0),
            Err(Error::ProtocolViolation(_))
        ));
    }
}
