//! Numerical laboratory for Floquet-enhanced AC magnetometry with driven
//! Ising spin ensembles.
//!
//! The crate is split along the two simulation engines and the layers that
//! sit on top of them:
//!
//! * [`model`] – system, disorder, drive and signal descriptions shared by
//!   everything else, plus the toggling-frame signal algebra.
//! * [`statevector`] – exact dense dynamics of small chains (N ≤ 14) with an
//!   interleaved π-pulse train.
//! * [`freefermion`] – Jordan–Wigner / Bogoliubov–de Gennes solver for long
//!   nearest-neighbour chains: spectra, localization (IPR), dispersion and
//!   Kibble–Zurek ramps.
//! * [`protocol`] – the two end-to-end sensing sequences (parity readout and
//!   excitation counting), shot simulation and signal estimation.
//! * [`scaling`] – closed-form sensitivity, correlation-length, bandwidth and
//!   dipolar-noise laws, and the NV field-imager budget.
//!
//! Units: ħ = 1, energies are angular frequencies and the Ising coupling
//! `J = 1` sets the scale unless stated otherwise.

pub mod error;
pub mod fit;
pub mod freefermion;
pub mod model;
pub mod protocol;
pub mod quad;
pub mod scaling;
pub mod statevector;

pub use error::{Error, Result};
pub use fit::{fit_power_law, PowerLawFit};
pub use model::{
    derive_seed, sample_disorder, Boundary, CouplingProfile, CriticalExponents, DisorderRealization, DisorderSpec,
    DriveSpec, NoiseSpec, ProtocolSchedule, RampShape, SignalSpec, SpinEnsembleSpec,
};
pub use statevector::QuantumState;
