use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{run_sequence, MeasurementRecord, Readout};
use crate::error::{Error, Result};
use crate::model::{effective_signal_average, DisorderRealization, ProtocolSchedule, SignalSpec};

/// Readout model `⟨O⟩(B) = C cos(κB + ψ)` around the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fringe {
    pub readout: Readout,
    pub contrast: f64,
    /// `κ`: accumulated fringe phase per unit signal amplitude.
    pub phase_per_field: f64,
    /// `ψ`: fringe phase at zero signal, including the readout bias.
    pub offset: f64,
    /// Outcomes recorded per shot (`N` for spin readout, else 1).
    pub outcomes_per_shot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalEstimate {
    pub amplitude: f64,
    /// Propagated one-sigma uncertainty.
    pub std_error: f64,
    pub mean: f64,
    pub outcomes: usize,
}

/// Phase multiplier of the readout: `N` for global parity, 1 per spin.
fn phase_multiplier(readout: Readout, n: usize) -> Result<(f64, usize)> {
    match readout {
        Readout::Parity => Ok((n as f64, 1)),
        Readout::SpinX => Ok((1.0, n)),
        Readout::Excitations => Err(Error::Domain(
            "excitation counts have no cosine fringe; use the parity or spin readout".into(),
        )),
    }
}

/// Bias per unit `ΣSᶻ` putting the readout at the steepest point of the
/// fringe (`2φ = π/2` for parity, `π/2` per spin).
pub fn quarter_fringe_bias(readout: Readout, n: usize) -> Result<f64> {
    Ok(FRAC_PI_2 / phase_multiplier(readout, n)?.0)
}

impl Fringe {
    /// Unit-contrast fringe of an ideal sensor state.
    pub fn ideal(readout: Readout, n: usize, schedule: &ProtocolSchedule, signal: &SignalSpec) -> Result<Self> {
        let (mult, outcomes_per_shot) = phase_multiplier(readout, n)?;
        let unit = effective_signal_average(&signal.with_amplitude(1.0), &schedule.sense_drive).mean;
        Ok(Self {
            readout,
            contrast: 1.0,
            phase_per_field: mult * unit * schedule.sense_time,
            offset: mult * schedule.readout_bias,
            outcomes_per_shot,
        })
    }

    /// Measures contrast and zero-signal phase with two exact noiseless
    /// runs at `B = 0`, the second with an extra quarter-fringe bias.
    pub fn calibrate(
        realization: &DisorderRealization,
        schedule: &ProtocolSchedule,
        signal: &SignalSpec,
        readout: Readout,
    ) -> Result<Self> {
        let mut fringe = Self::ideal(readout, realization.n, schedule, signal)?;
        let silent = signal.with_amplitude(0.0);
        let quarter = quarter_fringe_bias(readout, realization.n)?;
        let m1 = run_sequence(realization, schedule, &silent, readout)?.expectation();
        let shifted = schedule.clone().with_readout_bias(schedule.readout_bias + quarter);
        let m2 = run_sequence(realization, &shifted, &silent, readout)?.expectation();
        fringe.contrast = m1.hypot(m2);
        fringe.offset = (-m2).atan2(m1);
        Ok(fringe)
    }

    pub fn expectation(&self, amplitude: f64) -> f64 {
        self.contrast * (self.phase_per_field * amplitude + self.offset).cos()
    }

    /// `d⟨O⟩/dB`.
    pub fn slope(&self, amplitude: f64) -> f64 {
        -self.contrast * self.phase_per_field * (self.phase_per_field * amplitude + self.offset).sin()
    }

    /// Inverts a sample mean over `outcomes` single outcomes on the monotone
    /// branch containing the operating point.
    pub fn invert(&self, mean: f64, outcomes: usize) -> Result<SignalEstimate> {
        let psi = (self.offset + PI).rem_euclid(2.0 * PI) - PI;
        let slope0 = self.contrast * self.phase_per_field * psi.sin();
        if !(self.contrast > 0.0) || slope0.abs() < 1e-9 * self.phase_per_field.abs().max(1.0) {
            return Err(Error::Unidentifiable(format!(
                "fringe slope vanishes at the operating point (ψ = {psi:.3e}, C = {:.3e}, κ = {:.3e})",
                self.contrast, self.phase_per_field
            )));
        }
        if outcomes == 0 {
            return Err(Error::invalid("outcomes", "need at least one outcome"));
        }
        let ratio = (mean / self.contrast).clamp(-1.0, 1.0);
        let angle = if psi > 0.0 { ratio.acos() } else { -ratio.acos() };
        let amplitude = (angle - psi) / self.phase_per_field;
        let model = self.expectation(amplitude);
        let slope = self.slope(amplitude);
        let per_outcome = (1.0 - model * model).max(0.0);
        let std_error = if slope == 0.0 {
            f64::INFINITY
        } else {
            (per_outcome / outcomes as f64).sqrt() / slope.abs()
        };
        Ok(SignalEstimate {
            amplitude,
            std_error,
            mean,
            outcomes,
        })
    }
}

/// Signal amplitude inferred from a shot record through `fringe`.
pub fn estimate_signal(record: &MeasurementRecord, fringe: &Fringe) -> Result<SignalEstimate> {
    if record.readout != fringe.readout {
        return Err(Error::invalid("record", "readout of the record and the fringe differ"));
    }
    fringe.invert(record.mean(), record.outcomes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DriveSpec;

    fn fringe(n: usize, bias: f64) -> Fringe {
        let signal = SignalSpec::new(1.0, 5.0);
        let schedule = ProtocolSchedule::parity(10.0, 2.0, 6.0, &signal, DriveSpec::new(130.0)).with_readout_bias(bias);
        Fringe::ideal(Readout::Parity, n, &schedule, &signal).unwrap()
    }

    #[test]
    fn noiseless_inversion() {
        let f = fringe(8, quarter_fringe_bias(Readout::Parity, 8).unwrap());
        for b in [-0.05, -0.01, 0.0, 0.003, 0.04] {
            let est = f.invert(f.expectation(b), 1).unwrap();
            assert!((est.amplitude - b).abs() < 1e-6, "{b}");
        }
    }

    #[test]
    fn negative_bias_branch() {
        let f = fringe(4, -quarter_fringe_bias(Readout::Parity, 4).unwrap());
        let est = f.invert(f.expectation(0.02), 1).unwrap();
        assert!((est.amplitude - 0.02).abs() < 1e-9);
    }

    #[test]
    fn extremum_is_unidentifiable() {
        let f = fringe(8, 0.0);
        assert!(matches!(f.invert(1.0, 100), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn quadrupled_shots_halve_the_error() {
        let f = fringe(6, quarter_fringe_bias(Readout::Parity, 6).unwrap());
        let a = f.invert(f.expectation(0.01), 1000).unwrap();
        let b = f.invert(f.expectation(0.01), 4000).unwrap();
        assert!((a.std_error / b.std_error - 2.0).abs() < 1e-9);
    }

    #[test]
    fn excitation_readout_has_no_fringe() {
        assert!(quarter_fringe_bias(Readout::Excitations, 4).is_err());
    }
}
