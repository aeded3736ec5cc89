use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Vacuum permeability, SI.
pub const MU_0: f64 = 4.0e-7 * PI;

/// A fluctuating magnetic dipole below a square sensor array of spacing `a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleNoiseGeometry {
    pub a0: f64,
    /// Distance of the dipole from the sensor plane.
    pub depth: f64,
    pub moment: f64,
    /// Tilt from the plane normal: `m_z = m cos α`, `m_q = m sin α`.
    pub tilt: f64,
    /// Fluctuators per unit depth.
    pub linear_density: f64,
}

impl DipoleNoiseGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.a0.is_finite() && self.a0 > 0.0) {
            return Err(Error::invalid("a0", "sensor spacing must be > 0"));
        }
        if !(self.depth.is_finite() && self.depth >= 0.0) {
            return Err(Error::invalid("depth", "depth must be >= 0"));
        }
        if !(self.moment.is_finite() && self.tilt.is_finite() && self.linear_density.is_finite()) {
            return Err(Error::invalid("moment", "dipole parameters must be finite"));
        }
        Ok(())
    }

    pub fn m_z(&self) -> f64 {
        self.moment * self.tilt.cos()
    }

    pub fn m_q(&self) -> f64 {
        self.moment * self.tilt.sin()
    }
}

/// Field summed over the sensors of a disk-shaped cluster, per sensor area:
/// `(μ₀/4a₀²) ξ²/(z² + ξ²)^{3/2} (2m_z ẑ − m_q q̂)`. Returns `[B_z, B_q]`.
pub fn dipole_effective_field(geom: &DipoleNoiseGeometry, xi: f64) -> Result<[f64; 2]> {
    geom.validate()?;
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::invalid("xi", "correlation length must be > 0"));
    }
    let radial = xi * xi / (geom.depth * geom.depth + xi * xi).powf(1.5);
    let pre = MU_0 / (4.0 * geom.a0 * geom.a0) * radial;
    Ok([2.0 * geom.m_z() * pre, -geom.m_q() * pre])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDensities {
    /// `∫₀^∞ S_corr n_z dz` with `S_corr = (μ₀m/a₀²)² ξ⁴/(z²+ξ²)³`.
    pub correlated: f64,
    /// `∫_{a₀}^∞ S_uncorr n_z dz` with
    /// `S_uncorr = (μ₀m)²/a₀² (1/z⁴ − 1/(z²+ξ²)²)`.
    pub uncorrelated: f64,
    /// `uncorrelated / correlated`, growing like `ξ/a₀`.
    pub ratio: f64,
}

const DEFAULT_PANELS: usize = 16;
const NODES: usize = 20;

/// Depth-integrated noise seen by a cluster of size `ξ`, correlated versus
/// independent per-sensor noise. Fluctuators closer than `a0` to the plane
/// are excluded in the independent case.
pub fn noise_density_ratio(geom: &DipoleNoiseGeometry, xi: f64) -> Result<NoiseDensities> {
    noise_density_ratio_with(geom, xi, DEFAULT_PANELS)
}

/// [`noise_density_ratio`] with an explicit number of quadrature panels.
pub fn noise_density_ratio_with(geom: &DipoleNoiseGeometry, xi: f64, panels: usize) -> Result<NoiseDensities> {
    geom.validate()?;
    if !(xi.is_finite() && xi >= geom.a0) {
        return Err(Error::Domain(format!(
            "correlation length {xi} is below the sensor spacing {}",
            geom.a0
        )));
    }
    if panels == 0 {
        return Err(Error::invalid("panels", "need at least one panel"));
    }
    let a0 = geom.a0;
    let rule = GaussLegendre::new(NODES);
    let scale = (MU_0 * geom.moment).powi(2) * geom.linear_density;

    // z = ξ tan θ maps [0, ∞) to [0, π/2) and removes the algebraic tail.
    let corr = rule.integrate_composite(0.0, 0.5 * PI, panels, |t| {
        let z = xi * t.tan();
        let jac = xi / t.cos().powi(2);
        xi.powi(4) / (z * z + xi * xi).powi(3) * jac
    }) / a0.powi(4);

    // z = a₀/u maps [a₀, ∞) to (0, 1]; the second term turns over at u ≈ a₀/ξ.
    let uncorr_u = |u: f64| a0 * u * u * (1.0 / a0.powi(4) - 1.0 / (a0 * a0 + xi * xi * u * u).powi(2));
    let knee = (4.0 * a0 / xi).min(1.0);
    let mut uncorr = rule.integrate_composite(0.0, knee, panels, uncorr_u);
    if knee < 1.0 {
        uncorr += rule.integrate_composite(knee, 1.0, panels, uncorr_u);
    }
    let uncorr = uncorr / (a0 * a0);

    Ok(NoiseDensities {
        correlated: scale * corr,
        uncorrelated: scale * uncorr,
        ratio: uncorr / corr,
    })
}
