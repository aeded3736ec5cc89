use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::self_consistent_chi;
use crate::error::{Error, Result};
use crate::model::CriticalExponents;

/// NV–NV dipolar coupling constant, rad·s⁻¹·nm³ (`J_dd = J₀/r³`).
pub const NV_DIPOLAR_J0: f64 = 2.0 * PI * 52.0e6;
/// Optical readout wavelength, nm.
pub const DIFFRACTION_WAVELENGTH_NM: f64 = 500.0;

/// Converts between SI and the simulator's frame, where the Ising scale
/// `J` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationUnits {
    /// `J` in rad/s.
    pub coupling: f64,
}

impl SimulationUnits {
    pub fn new(coupling: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::invalid("coupling", "must be > 0"));
        }
        Ok(Self { coupling })
    }

    /// Dipolar units at spacing `r` (nm).
    pub fn dipolar(j0: f64, spacing_nm: f64) -> Result<Self> {
        Self::new(j0 / spacing_nm.powi(3))
    }

    pub fn time_to_sim(&self, seconds: f64) -> f64 {
        seconds * self.coupling
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t / self.coupling
    }

    pub fn frequency_to_sim(&self, rad_per_s: f64) -> f64 {
        rad_per_s / self.coupling
    }

    pub fn frequency_to_si(&self, w: f64) -> f64 {
        w * self.coupling
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImagerRegime {
    /// Fewer than one sensor per diffraction-limited spot.
    I,
    /// Diffraction limited, interactions slower than `1/T₂`.
    II,
    /// Diffraction limited, interactions faster than `1/T₂`.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagerPoint {
    /// Sensors per nm².
    pub density: f64,
    pub spacing_nm: f64,
    /// Sensors in one `(λ/2)²` probe area.
    pub probe_spins: f64,
    /// `J_dd = J₀/r³` at the mean spacing, rad/s.
    pub coupling: f64,
    pub regime: ImagerRegime,
    /// Conventional readout, `δB⁻¹` relative to one sensor at the same `T`:
    /// `√(N T₂'/T₂)` with `T₂' = min(T₂, 1/J_dd)`.
    pub conventional_gain: f64,
    /// Correlated protocol, `√N χ^{1/4}` relative to one sensor.
    pub protocol_gain: f64,
    pub chi: f64,
}

/// Smallest spacing at which dipolar dephasing is still slower than `T₂`:
/// `r_min = (J₀ T₂)^{1/3}`.
pub fn interaction_limited_spacing(j0: f64, t2_single: f64) -> f64 {
    (j0 * t2_single).cbrt()
}

/// Sensitivity gains of a 2D NV layer against sensor density.
pub fn imager_budget(densities: &[f64], wavelength_nm: f64, t2_single: f64, j0: f64) -> Result<Vec<ImagerPoint>> {
    for (name, x) in [("wavelength", wavelength_nm), ("t2_single", t2_single), ("j0", j0)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::invalid(name, format!("must be > 0, got {x}")));
        }
    }
    let probe = 0.5 * wavelength_nm;
    let r_min = interaction_limited_spacing(j0, t2_single);
    let exponents = CriticalExponents::dipolar_2d();
    densities
        .iter()
        .map(|&density| {
            if !(density.is_finite() && density > 0.0) {
                return Err(Error::invalid("density", format!("must be > 0, got {density}")));
            }
            let spacing = density.powf(-0.5);
            let coupling = j0 / spacing.powi(3);
            let probe_spins = (probe / spacing).powi(2).max(1.0);
            let regime = if spacing > probe {
                ImagerRegime::I
            } else if spacing >= r_min {
                ImagerRegime::II
            } else {
                ImagerRegime::III
            };
            let jt = coupling * t2_single;
            let conventional_gain = (probe_spins * jt.recip().min(1.0)).sqrt();
            let chi = if jt > 1.0 {
                self_consistent_chi(coupling, t2_single, &exponents, 2)?
            } else {
                1.0
            };
            Ok(ImagerPoint {
                density,
                spacing_nm: spacing,
                probe_spins,
                coupling,
                regime,
                conventional_gain,
                protocol_gain: probe_spins.sqrt() * chi.powf(0.25),
                chi,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diffraction_limited_coupling() {
        let j = NV_DIPOLAR_J0 / 250f64.powi(3);
        assert!((j / (2.0 * PI) - 3.3).abs() < 0.05, "{}", j / (2.0 * PI));
        let u = SimulationUnits::dipolar(NV_DIPOLAR_J0, 250.0).unwrap();
        assert_relative_eq!(u.time_to_si(u.time_to_sim(0.5)), 0.5);
        assert_relative_eq!(u.frequency_to_sim(j), 1.0);
    }

    #[test]
    fn room_temperature_spacing_and_count() {
        let r_min = interaction_limited_spacing(NV_DIPOLAR_J0, 3e-3);
        assert!((r_min - 100.0).abs() < 5.0, "{r_min}");
        let p = imager_budget(&[r_min.powi(-2)], DIFFRACTION_WAVELENGTH_NM, 3e-3, NV_DIPOLAR_J0).unwrap()[0];
        assert!((p.probe_spins - 6.0).abs() < 0.5);
        assert!((p.conventional_gain - 2.5).abs() < 0.1);
    }

    #[test]
    fn dense_layer() {
        let p = imager_budget(&[1.0 / 25.0], DIFFRACTION_WAVELENGTH_NM, 0.5, NV_DIPOLAR_J0).unwrap()[0];
        assert_relative_eq!(p.probe_spins, 2500.0, max_relative = 1e-12);
        assert_eq!(p.regime, ImagerRegime::III);
        assert_relative_eq!(p.protocol_gain / p.chi.powf(0.25), 50.0, max_relative = 1e-12);
        assert!(p.conventional_gain < 50.0);
    }

    #[test]
    fn regimes_in_order() {
        let ds = [1e-6, 1e-4, 1e-2];
        let pts = imager_budget(&ds, DIFFRACTION_WAVELENGTH_NM, 3e-3, NV_DIPOLAR_J0).unwrap();
        let regimes: Vec<_> = pts.iter().map(|p| p.regime).collect();
        assert_eq!(regimes, [ImagerRegime::I, ImagerRegime::II, ImagerRegime::III]);
        assert!(pts.iter().all(|p| p.protocol_gain >= p.conventional_gain));
    }
}
