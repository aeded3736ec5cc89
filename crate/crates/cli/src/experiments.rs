//! Parameter blocks of each experiment kind and the per-task kernels.

use std::fmt;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use sense_core::freefermion::{dispersion, kz_ramp, mode_iprs, RampPath};
use sense_core::model::{
    derive_seed, sample_disorder, Boundary, CriticalExponents, DisorderSpec, DriveSpec, ProtocolSchedule, RampShape,
    SignalSpec, SpinEnsembleSpec,
};
use sense_core::protocol::{
    calibrate_detuning, estimate_signal, quarter_fringe_bias, run_excitation_protocol, run_parity_protocol_on,
    simulate_shots, uncoupled_reference, Fringe,
};
use sense_core::scaling::{imager_budget, sensitivity, Regime, SensitivityInput, NV_DIPOLAR_J0};

use crate::config::ExperimentKind;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// Output columns of one kind: `(name, unit)`.
pub type Columns = &'static [(&'static str, &'static str)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RampChoice {
    Linear,
    #[default]
    Smooth,
    Adiabatic,
}

impl RampChoice {
    fn shape(self, spec: &SpinEnsembleSpec) -> RampShape {
        match self {
            RampChoice::Linear => RampShape::Linear,
            RampChoice::Smooth => RampShape::Smooth,
            RampChoice::Adiabatic => RampShape::adiabatic_for(spec),
        }
    }
}

/// Accepts `8` as well as `8.0`, so integer parameters can be swept.
fn count<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let x = f64::deserialize(d)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(serde::de::Error::custom(format!(
            "expected a non-negative integer, got {x}"
        )))
    }
}

fn chain(n: usize, coupling: f64, boundary: Boundary, disorder: DisorderSpec) -> Result<SpinEnsembleSpec> {
    let spec = SpinEnsembleSpec::chain(n, coupling, boundary).with_disorder(disorder);
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParityParams {
    #[serde(deserialize_with = "count")]
    pub n: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    pub prep_time: f64,
    pub sense_time: f64,
    pub omega_init: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    /// Drive during both ramps; defaults to `2ω_s + 15 max(Ω_init, J)`.
    pub ramp_drive: Option<f64>,
    /// Drive while sensing; defaults to resonance `2ω_s`.
    pub sense_drive: Option<f64>,
    pub ramp: RampChoice,
    pub readout_bias: f64,
    /// Replaces `readout_bias` by the quarter-fringe point.
    pub quarter_fringe: bool,
    pub max_step: f64,
    pub w_omega: f64,
    pub w_j: f64,
    pub w_theta: f64,
    /// Run the uncoupled product-state reference with per-spin readout.
    pub product_reference: bool,
    #[serde(deserialize_with = "count")]
    pub shots: usize,
}

impl Default for ParityParams {
    fn default() -> Self {
        Self {
            n: 8,
            coupling: 1.0,
            boundary: Boundary::Periodic,
            prep_time: 100.0,
            sense_time: 10.0,
            omega_init: 8.0,
            amplitude: 0.0,
            frequency: 5.0,
            phase: 0.0,
            ramp_drive: None,
            sense_drive: None,
            ramp: RampChoice::Adiabatic,
            readout_bias: 0.0,
            quarter_fringe: false,
            max_step: 0.01,
            w_omega: 0.0,
            w_j: 0.0,
            w_theta: 0.0,
            product_reference: false,
            shots: 0,
        }
    }
}

impl ParityParams {
    const COLUMNS: Columns = &[
        ("readout", "-"),
        ("parity", "-"),
        ("expectation", "-"),
        ("ghz_fidelity", "-"),
        ("phase", "rad"),
        ("excitations", "-"),
        ("shot_mean", "-"),
        ("estimate", "J"),
        ("std_error", "J"),
    ];

    fn run(&self, seed: u64) -> Result<Vec<Vec<Cell>>> {
        let disorder = DisorderSpec {
            w_omega: self.w_omega,
            w_j: self.w_j,
            w_theta: self.w_theta,
            seed,
        };
        let mut spec = chain(self.n, self.coupling, self.boundary, disorder)?;
        let shape = self.ramp.shape(&spec);
        if self.product_reference {
            spec = uncoupled_reference(&spec);
        }
        let signal = SignalSpec {
            phase: self.phase,
            ..SignalSpec::new(self.amplitude, self.frequency)
        };
        let ramp_drive = self
            .ramp_drive
            .unwrap_or(2.0 * self.frequency + 15.0 * self.omega_init.max(self.coupling));
        let mut schedule = ProtocolSchedule::parity(
            self.prep_time,
            self.sense_time,
            self.omega_init,
            &signal,
            DriveSpec::new(ramp_drive),
        )
        .with_max_step(self.max_step);
        schedule.ramp_shape = shape;
        if let Some(w) = self.sense_drive {
            schedule.sense_drive = DriveSpec::new(w);
        }
        let realization = sample_disorder(&spec)?;
        let readout = if self.product_reference {
            sense_core::protocol::Readout::SpinX
        } else {
            sense_core::protocol::Readout::Parity
        };
        let bias = if self.quarter_fringe {
            quarter_fringe_bias(readout, self.n)?
        } else {
            self.readout_bias
        };
        schedule = schedule.with_readout_bias(bias);
        let r = run_parity_protocol_on(&realization, &schedule, &signal)?;
        for w in &r.warnings {
            log::warn!("{w}");
        }
        let (shot_mean, estimate, std_error) = if self.shots > 0 {
            let record = simulate_shots(&r, self.shots, derive_seed(seed, 1))?;
            let fringe = Fringe::calibrate(&realization, &schedule, &signal, r.readout)?;
            let est = estimate_signal(&record, &fringe)?;
            (Some(record.mean()), Some(est.amplitude), Some(est.std_error))
        } else {
            (None, None, None)
        };
        Ok(vec![vec![
            Cell::Text(format!("{:?}", r.readout).to_lowercase()),
            r.parity.into(),
            r.expectation().into(),
            r.ghz_fidelity.into(),
            r.phase.into(),
            r.excitations.into(),
            shot_mean.into(),
            estimate.into(),
            std_error.into(),
        ]])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationParams {
    #[serde(deserialize_with = "count")]
    pub n: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    pub prep_time: f64,
    pub sense_time: f64,
    pub omega_init: f64,
    pub omega_stop: f64,
    /// `Δω = ω_s − ω₀/2`; calibrated when absent.
    pub detuning: Option<f64>,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    /// Defaults to `2ω_s + 12 Ω_init`.
    pub ramp_drive: Option<f64>,
    pub ramp: RampChoice,
    pub max_step: f64,
    pub w_omega: f64,
    pub w_j: f64,
    pub w_theta: f64,
    #[serde(deserialize_with = "count")]
    pub calibration_iterations: usize,
}

impl Default for ExcitationParams {
    fn default() -> Self {
        Self {
            n: 10,
            coupling: 1.0,
            boundary: Boundary::Periodic,
            prep_time: 200.0,
            sense_time: 20.0,
            omega_init: 40.0,
            omega_stop: 1.0,
            detuning: None,
            amplitude: 0.005,
            frequency: 10.0,
            phase: 0.0,
            ramp_drive: None,
            ramp: RampChoice::Smooth,
            max_step: 0.01,
            w_omega: 0.0,
            w_j: 0.0,
            w_theta: 0.0,
            calibration_iterations: 10,
        }
    }
}

impl ExcitationParams {
    const COLUMNS: Columns = &[
        ("detuning", "J"),
        ("gap", "J"),
        ("excitations", "-"),
        ("excitation_variance", "-"),
        ("warnings", "-"),
    ];

    fn run(&self, seed: u64) -> Result<Vec<Vec<Cell>>> {
        let disorder = DisorderSpec {
            w_omega: self.w_omega,
            w_j: self.w_j,
            w_theta: self.w_theta,
            seed,
        };
        let spec = chain(self.n, self.coupling, self.boundary, disorder)?;
        let signal = SignalSpec {
            phase: self.phase,
            ..SignalSpec::new(self.amplitude, self.frequency)
        };
        let ramp_drive = self.ramp_drive.unwrap_or(2.0 * self.frequency + 12.0 * self.omega_init);
        let schedule = |detuning: f64| {
            let mut s = ProtocolSchedule::excitation(
                self.prep_time,
                self.sense_time,
                self.omega_init,
                self.omega_stop,
                detuning,
                &signal,
                DriveSpec::new(ramp_drive),
            )
            .with_max_step(self.max_step);
            s.ramp_shape = self.ramp.shape(&spec);
            s
        };
        let (detuning, gap) = match self.detuning {
            Some(d) => (d, None),
            None => {
                let cal = calibrate_detuning(&spec, &schedule(0.0), &signal, self.calibration_iterations)?;
                (cal.detuning, Some(cal.gap))
            }
        };
        let r = run_excitation_protocol(&spec, &schedule(detuning), &signal)?;
        for w in &r.warnings {
            log::warn!("{w}");
        }
        Ok(vec![vec![
            detuning.into(),
            gap.into(),
            r.excitations.into(),
            r.excitation_variance.into(),
            Cell::Int(r.warnings.len() as u64),
        ]])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IprParams {
    #[serde(deserialize_with = "count")]
    pub n: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    /// Transverse field; defaults to the critical point `J/2`.
    pub omega: Option<f64>,
    /// Disorder strength: fields uniform in `±W/2`, bonds in `±W`.
    pub w: f64,
    #[serde(deserialize_with = "count")]
    pub n_states: usize,
}

impl Default for IprParams {
    fn default() -> Self {
        Self {
            n: 1000,
            coupling: 1.0,
            boundary: Boundary::Periodic,
            omega: None,
            w: 0.1,
            n_states: 50,
        }
    }
}

impl IprParams {
    const COLUMNS: Columns = &[("ipr", "-")];

    fn run(&self, seed: u64) -> Result<Vec<Vec<Cell>>> {
        let spec = chain(
            self.n,
            self.coupling,
            self.boundary,
            DisorderSpec::uniform(self.w, seed),
        )?;
        let omega = self.omega.unwrap_or(spec.critical_field());
        let iprs = mode_iprs(&sample_disorder(&spec)?, omega, self.n_states)?;
        Ok(vec![vec![(iprs.iter().sum::<f64>() / iprs.len() as f64).into()]])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KzParams {
    #[serde(deserialize_with = "count")]
    pub n: usize,
    pub coupling: f64,
    pub prep_time: f64,
    /// Defaults to `2Ω_c = J`.
    pub omega_from: Option<f64>,
    pub omega_to: f64,
    pub ramp: RampChoice,
}

impl Default for KzParams {
    fn default() -> Self {
        Self {
            n: 400,
            coupling: 1.0,
            prep_time: 100.0,
            omega_from: None,
            omega_to: 0.0,
            ramp: RampChoice::Linear,
        }
    }
}

impl KzParams {
    const COLUMNS: Columns = &[("defect_density", "1/site"), ("xi", "sites")];

    fn run(&self, _seed: u64) -> Result<Vec<Vec<Cell>>> {
        let spec = chain(self.n, self.coupling, Boundary::Periodic, DisorderSpec::clean())?;
        let path = RampPath {
            from: self.omega_from.unwrap_or(self.coupling),
            to: self.omega_to,
            shape: self.ramp.shape(&spec),
        };
        let out = kz_ramp(&spec, self.prep_time, path)?;
        Ok(vec![vec![out.defect_density.into(), out.xi.into()]])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionParams {
    #[serde(deserialize_with = "count")]
    pub n: usize,
    pub coupling: f64,
    pub omega: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self {
            n: 64,
            coupling: 1.0,
            omega: 0.5,
        }
    }
}

impl DispersionParams {
    const COLUMNS: Columns = &[
        ("mode", "-"),
        ("k", "rad/site"),
        ("bdg_energy", "J"),
        ("quasiparticle_energy", "J"),
    ];

    fn run(&self, _seed: u64) -> Result<Vec<Vec<Cell>>> {
        Ok(dispersion(self.omega, self.coupling, self.n)?
            .iter()
            .enumerate()
            .map(|(i, m)| {
                vec![
                    Cell::Int(i as u64),
                    m.k.into(),
                    m.bdg_energy.into(),
                    m.quasiparticle_energy.into(),
                ]
            })
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityParams {
    /// `sql`, `correlated`, `heisenberg` or `no-parity`.
    pub regime: String,
    pub n: f64,
    pub total_time: f64,
    pub t2_eff: f64,
    pub coupling: f64,
    pub nu: f64,
    pub z: f64,
    pub eta: Option<f64>,
    #[serde(deserialize_with = "count")]
    pub dimension: usize,
}

impl Default for SensitivityParams {
    fn default() -> Self {
        let e = CriticalExponents::ising_1d();
        Self {
            regime: "correlated".into(),
            n: 100.0,
            total_time: 1e4,
            t2_eff: 100.0,
            coupling: 1.0,
            nu: e.nu,
            z: e.z,
            eta: e.eta,
            dimension: 1,
        }
    }
}

impl SensitivityParams {
    const COLUMNS: Columns = &[
        ("delta_b_inv", "1/J"),
        ("xi", "sites"),
        ("chi_cluster", "spins"),
        ("beta", "-"),
        ("prep_time", "1/J"),
        ("sense_time", "1/J"),
        ("bandwidth", "J"),
    ];

    fn run(&self, _seed: u64) -> Result<Vec<Vec<Cell>>> {
        let regime: Regime = self.regime.parse()?;
        let exponents = CriticalExponents {
            nu: self.nu,
            z: self.z,
            eta: self.eta,
            mu: None,
        };
        let r = sensitivity(
            regime,
            &SensitivityInput {
                n: self.n,
                total_time: self.total_time,
                t2_eff: self.t2_eff,
                coupling: self.coupling,
                exponents,
                dimension: self.dimension,
            },
        )?;
        let budget = r.stage_budget;
        Ok(vec![vec![
            r.delta_b_inv.into(),
            r.xi.into(),
            r.chi_cluster.into(),
            budget.map(|b| b.beta).into(),
            budget.map(|b| b.prep_time).into(),
            budget.map(|b| b.sense_time).into(),
            r.bandwidth.into(),
        ]])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagerParams {
    /// Sensors per nm².
    pub density: f64,
    pub wavelength: f64,
    /// Single-sensor coherence time, s.
    pub t2: f64,
    /// Dipolar constant, rad·s⁻¹·nm³.
    pub j0: f64,
}

impl Default for ImagerParams {
    fn default() -> Self {
        Self {
            density: 1e-4,
            wavelength: 500.0,
            t2: 3e-3,
            j0: NV_DIPOLAR_J0,
        }
    }
}

impl ImagerParams {
    const COLUMNS: Columns = &[
        ("spacing", "nm"),
        ("probe_spins", "-"),
        ("coupling", "rad/s"),
        ("regime", "-"),
        ("conventional_gain", "-"),
        ("protocol_gain", "-"),
        ("chi", "spins"),
    ];

    fn run(&self, _seed: u64) -> Result<Vec<Vec<Cell>>> {
        let p = imager_budget(&[self.density], self.wavelength, self.t2, self.j0)?[0];
        Ok(vec![vec![
            p.spacing_nm.into(),
            p.probe_spins.into(),
            p.coupling.into(),
            Cell::Text(format!("{:?}", p.regime)),
            p.conventional_gain.into(),
            p.protocol_gain.into(),
            p.chi.into(),
        ]])
    }
}

/// Fully resolved parameters of one grid point.
#[derive(Debug, Clone)]
pub enum Plan {
    Parity(ParityParams),
    Excitation(ExcitationParams),
    Ipr(IprParams),
    Kz(KzParams),
    Dispersion(DispersionParams),
    Sensitivity(SensitivityParams),
    Imager(ImagerParams),
}

fn typed<T: DeserializeOwned>(table: toml::Table) -> Result<T> {
    table.try_into().context("[params]")
}

impl Plan {
    pub fn new(kind: ExperimentKind, params: toml::Table) -> Result<Self> {
        Ok(match kind {
            ExperimentKind::ParityProtocol => Plan::Parity(typed(params)?),
            ExperimentKind::ExcitationProtocol => Plan::Excitation(typed(params)?),
            ExperimentKind::Ipr => Plan::Ipr(typed(params)?),
            ExperimentKind::Kz => Plan::Kz(typed(params)?),
            ExperimentKind::Dispersion => Plan::Dispersion(typed(params)?),
            ExperimentKind::Sensitivity => {
                let p: SensitivityParams = typed(params)?;
                p.regime.parse::<Regime>()?;
                Plan::Sensitivity(p)
            }
            ExperimentKind::Imager => Plan::Imager(typed(params)?),
        })
    }

    pub fn columns(kind: ExperimentKind) -> Columns {
        match kind {
            ExperimentKind::ParityProtocol => ParityParams::COLUMNS,
            ExperimentKind::ExcitationProtocol => ExcitationParams::COLUMNS,
            ExperimentKind::Ipr => IprParams::COLUMNS,
            ExperimentKind::Kz => KzParams::COLUMNS,
            ExperimentKind::Dispersion => DispersionParams::COLUMNS,
            ExperimentKind::Sensitivity => SensitivityParams::COLUMNS,
            ExperimentKind::Imager => ImagerParams::COLUMNS,
        }
    }

    /// Runs one task; returns one or more rows of `columns()` cells.
    pub fn run(&self, seed: u64) -> Result<Vec<Vec<Cell>>> {
        match self {
            Plan::Parity(p) => p.run(seed),
            Plan::Excitation(p) => p.run(seed),
            Plan::Ipr(p) => p.run(seed),
            Plan::Kz(p) => p.run(seed),
            Plan::Dispersion(p) => p.run(seed),
            Plan::Sensitivity(p) => p.run(seed),
            Plan::Imager(p) => p.run(seed),
        }
    }
}
