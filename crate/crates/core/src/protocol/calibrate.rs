use serde::{Deserialize, Serialize};

use super::{check_excitation_schedule, run_sequence, Readout};
use crate::error::{Error, Result};
use crate::freefermion::parity_gap;
use crate::model::{sample_disorder, DisorderRealization, DriveSpec, ProtocolSchedule, SignalSpec, SpinEnsembleSpec};
use crate::statevector::{sector_spectrum, Parity};

/// Outcome of the resonance search for the excitation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `Δω = ω_s − ω₀/2` maximizing the response.
    pub detuning: f64,
    pub excitations: f64,
    /// Lowest parity-odd excitation energy used to bracket the search.
    pub gap: f64,
    pub evaluations: usize,
}

/// Lowest excitation reachable by `ΣSᶻ` from the even ground state:
/// `E₀(odd) − E₀(even)`. Uses the free-fermion solver when the chain allows
/// it, exact sector diagonalization otherwise.
pub fn gap_estimate(realization: &DisorderRealization, omega: f64) -> Result<f64> {
    match parity_gap(realization, omega) {
        Ok(g) => Ok(g),
        Err(Error::UnsupportedModel(_)) => {
            let min = |p| -> Result<f64> {
                Ok(sector_spectrum(realization, omega, p)?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min))
            };
            Ok(min(Parity::Odd)? - min(Parity::Even)?)
        }
        Err(e) => Err(e),
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the sensing detuning that maximizes `⟨N_e⟩`,
/// over `[gap/2, 3·gap/2]`.
pub fn calibrate_detuning(
    spec: &SpinEnsembleSpec,
    schedule: &ProtocolSchedule,
    signal: &SignalSpec,
    iterations: usize,
) -> Result<Calibration> {
    check_excitation_schedule(schedule, spec.critical_field())?;
    if signal.amplitude == 0.0 {
        return Err(Error::Unidentifiable("calibration needs a nonzero signal".into()));
    }
    let realization = sample_disorder(spec)?;
    let gap = gap_estimate(&realization, schedule.omega_stop)?;
    if !(gap > 0.0) || gap >= 2.0 * signal.frequency {
        return Err(Error::Domain(format!(
            "gap {gap} cannot be matched by a drive below 2ω_s = {}",
            2.0 * signal.frequency
        )));
    }
    let mut evaluations = 0;
    let mut response = |dw: f64| -> Result<f64> {
        evaluations += 1;
        let s = ProtocolSchedule {
            sense_drive: DriveSpec::new(2.0 * (signal.frequency - dw)),
            ..schedule.clone()
        };
        Ok(run_sequence(&realization, &s, signal, Readout::Excitations)?.excitations)
    };
    let (mut lo, mut hi) = (0.5 * gap, (1.5 * gap).min(signal.frequency * 0.999));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = response(x1)?;
    let mut f2 = response(x2)?;
    for _ in 0..iterations {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = response(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = response(x2)?;
        }
    }
    let (detuning, excitations) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(Calibration {
        detuning,
        excitations,
        gap,
        evaluations,
    })
}
