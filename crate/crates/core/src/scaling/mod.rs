//! Closed-form scaling laws: correlation length after a ramp, the optimal
//! split of the coherence time, sensitivity in each readout regime,
//! coherence under correlated noise, bandwidth, disorder caps and the NV
//! imager budget.
//!
//! Every `∼` relation is evaluated with prefactor 1; only exponents and
//! ratios carry meaning.

mod dipole;
mod imager;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CriticalExponents, NoiseCorrelation};

pub use dipole::{
    dipole_effective_field, noise_density_ratio, noise_density_ratio_with, DipoleNoiseGeometry, NoiseDensities, MU_0,
};
pub use imager::{
    imager_budget, interaction_limited_spacing, ImagerPoint, ImagerRegime, SimulationUnits, DIFFRACTION_WAVELENGTH_NM,
    NV_DIPOLAR_J0,
};

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid("dimension", format!("must be 1, 2 or 3, got {d}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi: f64,
    /// `J T_p < 1`: the law does not apply and `ξ = 1` is returned.
    pub clamped: bool,
    /// Limited by the linear system size.
    pub capped: bool,
}

/// `ξ = (J T_p)^{ν/(1+zν)}` in lattice units.
pub fn kibble_zurek_xi(
    coupling: f64,
    prep_time: f64,
    exponents: &CriticalExponents,
    linear_size: Option<f64>,
) -> Result<XiEstimate> {
    check_positive("coupling", coupling)?;
    check_positive("prep_time", prep_time)?;
    exponents.validate()?;
    let jt = coupling * prep_time;
    let (mut xi, clamped) = if jt < 1.0 {
        (1.0, true)
    } else {
        (jt.powf(exponents.kz_exponent()), false)
    };
    let mut capped = false;
    if let Some(l) = linear_size {
        check_positive("linear_size", l)?;
        if xi > l {
            xi = l.max(1.0);
            capped = true;
        }
    }
    Ok(XiEstimate { xi, clamped, capped })
}

/// Durations of the three protocol stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageBudget {
    pub prep_time: f64,
    pub sense_time: f64,
    /// The optimization covers preparation and sensing only; the readout
    /// ramp is budgeted as instantaneous.
    pub readout_time: f64,
    /// Fraction of `T̄₂` spent preparing.
    pub beta: f64,
}

/// `β = (1 + 2(νz + 1)/(dν))⁻¹`, the preparation fraction maximizing
/// `ξ^{d/2} T_s` at fixed `T_p + T_s`.
pub fn optimal_stage_split(exponents: &CriticalExponents, dimension: usize) -> Result<f64> {
    exponents.validate()?;
    check_dimension(dimension)?;
    let (nu, z, d) = (exponents.nu, exponents.z, dimension as f64);
    Ok(1.0 / (1.0 + 2.0 * (nu * z + 1.0) / (d * nu)))
}

/// [`optimal_stage_split`] applied to a coherence time.
pub fn stage_budget(exponents: &CriticalExponents, dimension: usize, t2_eff: f64) -> Result<StageBudget> {
    check_positive("t2_eff", t2_eff)?;
    let beta = optimal_stage_split(exponents, dimension)?;
    Ok(StageBudget {
        prep_time: beta * t2_eff,
        sense_time: (1.0 - beta) * t2_eff,
        readout_time: 0.0,
        beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Uncorrelated spins: `√(N T T̄₂)`.
    Sql,
    /// Finite-ξ clusters from a ramp of optimal length: `√(ξ^d N) T_s √(T/T̄₂)`.
    Correlated,
    /// Full GHZ state: `N √(T̄₂ T)`.
    Heisenberg,
    /// Excitation counting: `√(N T T̄₂) (J T̄₂)^{η/(zν+1)}`.
    NoParity,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sql" => Ok(Regime::Sql),
            "correlated" => Ok(Regime::Correlated),
            "heisenberg" => Ok(Regime::Heisenberg),
            "no-parity" | "no_parity" | "noparity" => Ok(Regime::NoParity),
            other => Err(Error::invalid(
                "regime",
                format!("unknown regime `{other}` (expected sql, correlated, heisenberg or no-parity)"),
            )),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Sql => "sql",
            Regime::Correlated => "correlated",
            Regime::Heisenberg => "heisenberg",
            Regime::NoParity => "no-parity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInput {
    /// Number of sensing spins (real-valued so macroscopic ensembles fit).
    pub n: f64,
    pub total_time: f64,
    pub t2_eff: f64,
    pub coupling: f64,
    pub exponents: CriticalExponents,
    pub dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// `δB⁻¹`.
    pub delta_b_inv: f64,
    pub regime: Regime,
    /// Optimal preparation/sensing split; `None` for regimes without a
    /// preparation ramp.
    pub stage_budget: Option<StageBudget>,
    pub xi: f64,
    /// Spins per correlated cluster, `ξ^d`.
    pub chi_cluster: f64,
    pub t2_eff: f64,
    /// `δω ∼ 1/T̄₂`.
    pub bandwidth: f64,
}

/// Cluster-limited law for a given cluster size and sensing window:
/// `√(ξ^d N) · T_s · √(T/T̄₂)`.
pub fn correlated_sensitivity(n: f64, cluster: f64, sense_time: f64, total_time: f64, t2_eff: f64) -> Result<f64> {
    for (name, x) in [
        ("n", n),
        ("cluster", cluster),
        ("sense_time", sense_time),
        ("total_time", total_time),
        ("t2_eff", t2_eff),
    ] {
        check_positive(name, x)?;
    }
    Ok((cluster * n).sqrt() * sense_time * (total_time / t2_eff).sqrt())
}

/// `η/(zν + 1)`: gain exponent of the excitation-counting readout.
pub fn no_parity_exponent(exponents: &CriticalExponents) -> Result<f64> {
    exponents.validate()?;
    let eta = exponents
        .eta
        .ok_or_else(|| Error::UnsupportedModel("the scaling dimension η is not known for these exponents".into()))?;
    Ok(eta / (exponents.z * exponents.nu + 1.0))
}

pub fn sensitivity(regime: Regime, input: &SensitivityInput) -> Result<SensitivityReport> {
    let SensitivityInput {
        n,
        total_time,
        t2_eff,
        coupling,
        exponents,
        dimension,
    } = *input;
    for (name, x) in [
        ("n", n),
        ("total_time", total_time),
        ("t2_eff", t2_eff),
        ("coupling", coupling),
    ] {
        check_positive(name, x)?;
    }
    exponents.validate()?;
    check_dimension(dimension)?;
    let d = dimension as f64;
    let sql = (n * total_time * t2_eff).sqrt();
    let (delta_b_inv, budget, xi) = match regime {
        Regime::Sql => (sql, None, 1.0),
        Regime::Heisenberg => (n * (t2_eff * total_time).sqrt(), None, n.powf(1.0 / d)),
        Regime::NoParity => {
            let gain = (coupling * t2_eff).powf(no_parity_exponent(&exponents)?);
            (sql * gain, None, 1.0)
        }
        Regime::Correlated => {
            let budget = stage_budget(&exponents, dimension, t2_eff)?;
            let xi = kibble_zurek_xi(coupling, budget.prep_time, &exponents, Some(n.powf(1.0 / d)))?.xi;
            let value = correlated_sensitivity(n, xi.powf(d), budget.sense_time, total_time, t2_eff)?;
            (value, Some(budget), xi)
        }
    };
    Ok(SensitivityReport {
        delta_b_inv,
        regime,
        stage_budget: budget,
        xi,
        chi_cluster: xi.powf(d),
        t2_eff,
        bandwidth: 1.0 / t2_eff,
    })
}

/// Cluster size consistent with its own noise-shortened coherence time,
/// `χ = (J T₂)^{dν/(1+zν+dν)}`.
pub fn self_consistent_chi(
    coupling: f64,
    t2_single: f64,
    exponents: &CriticalExponents,
    dimension: usize,
) -> Result<f64> {
    check_positive("coupling", coupling)?;
    check_positive("t2_single", t2_single)?;
    exponents.validate()?;
    check_dimension(dimension)?;
    let jt = coupling * t2_single;
    if jt <= 1.0 {
        return Err(Error::Domain(format!("J T₂ = {jt} must exceed 1")));
    }
    let a = dimension as f64 * exponents.nu / (1.0 + exponents.z * exponents.nu);
    Ok(jt.powf(a / (1.0 + a)))
}

/// Iterates `χ ← (J T₂ / χ)^{dν/(1+zν)}` in log space. The bare map is
/// not a contraction once `dν > 1 + zν`, so each step is relaxed by
/// `1/(1+a)`, where `a = dν/(1+zν)`.
pub fn self_consistent_chi_iterated(
    coupling: f64,
    t2_single: f64,
    exponents: &CriticalExponents,
    dimension: usize,
) -> Result<f64> {
    let target = self_consistent_chi(coupling, t2_single, exponents, dimension)?;
    let l = (coupling * t2_single).ln();
    let a = dimension as f64 * exponents.nu / (1.0 + exponents.z * exponents.nu);
    let relax = 0.5 / (1.0 + a);
    let mut x = 0.0_f64;
    for _ in 0..10_000 {
        let next = x + relax * (a * (l - x) - x);
        if (next - x).abs() < 1e-14 * l.abs().max(1.0) {
            let chi = next.exp();
            if (chi / target - 1.0).abs() > 1e-8 {
                return Err(Error::Internal(format!("fixed point {chi} disagrees with {target}")));
            }
            return Ok(chi);
        }
        x = next;
    }
    Err(Error::Internal("self-consistent χ iteration did not converge".into()))
}

/// Coherence time of a correlated cluster: `T₂/ξ^d` under independent
/// noise, `T₂/√χ` (with `χ = ξ²`) under noise from proximal dipoles.
pub fn effective_t2(t2_single: f64, xi: f64, dimension: usize, model: NoiseCorrelation) -> Result<f64> {
    check_positive("t2_single", t2_single)?;
    check_positive("xi", xi)?;
    check_dimension(dimension)?;
    let chi = xi.powi(dimension as i32);
    match model {
        NoiseCorrelation::Independent => Ok(t2_single / chi),
        NoiseCorrelation::DipolarCorrelated if dimension == 2 => Ok(t2_single / chi.sqrt()),
        NoiseCorrelation::DipolarCorrelated => Err(Error::UnsupportedModel(format!(
            "correlated dipolar noise is modelled for 2D arrays only, got d = {dimension}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRegime {
    Conventional,
    Correlated,
}

/// `δω/(δB)²`: `N T` conventionally, `χ N T` with correlated noise.
pub fn bandwidth_product(regime: BandwidthRegime, n: f64, total_time: f64, chi: f64) -> Result<f64> {
    check_positive("n", n)?;
    check_positive("total_time", total_time)?;
    check_positive("chi", chi)?;
    Ok(match regime {
        BandwidthRegime::Conventional => n * total_time,
        BandwidthRegime::Correlated => chi * n * total_time,
    })
}

/// `ξ_loc = (W/J)^{−μ}`.
pub fn localization_length(disorder_ratio: f64, mu: f64) -> Result<f64> {
    check_positive("disorder_ratio", disorder_ratio)?;
    check_positive("mu", mu)?;
    Ok(disorder_ratio.powf(-mu))
}

/// `T_p* = (W/J)^{−2μ}/J`: the ramp time beyond which disorder, not the
/// ramp rate, limits ξ in the clean 1D class.
pub fn disorder_limited_prep_time(disorder_ratio: f64, mu: f64, coupling: f64) -> Result<f64> {
    check_positive("coupling", coupling)?;
    Ok(localization_length(disorder_ratio, mu)?.powi(2) / coupling)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationCap {
    pub prep_time: f64,
    pub xi: f64,
    /// The requested ramp was longer than disorder allows to be useful.
    pub localized: bool,
}

/// Shortens `prep_time` to the point where the Kibble–Zurek length
/// reaches `ξ_loc`, when it would otherwise exceed it.
pub fn capped_preparation(
    coupling: f64,
    prep_time: f64,
    disorder_ratio: f64,
    exponents: &CriticalExponents,
) -> Result<PreparationCap> {
    let mu = exponents
        .mu
        .ok_or_else(|| Error::UnsupportedModel("localization exponent μ is not known for these exponents".into()))?;
    let xi_kz = kibble_zurek_xi(coupling, prep_time, exponents, None)?.xi;
    let xi_loc = localization_length(disorder_ratio, mu)?;
    if xi_loc >= xi_kz {
        return Ok(PreparationCap {
            prep_time,
            xi: xi_kz,
            localized: false,
        });
    }
    Ok(PreparationCap {
        prep_time: xi_loc.max(1.0).powf(1.0 / exponents.kz_exponent()) / coupling,
        xi: xi_loc.max(1.0),
        localized: true,
    })
}
