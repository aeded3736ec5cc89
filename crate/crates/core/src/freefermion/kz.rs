use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::momenta;
use crate::error::{Error, Result};
use crate::model::{Boundary, CouplingProfile, RampShape, SpinEnsembleSpec};

/// Transverse-field path `Ω(t)` for `t ∈ [0, T_p]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampPath {
    pub from: f64,
    pub to: f64,
    pub shape: RampShape,
}

impl RampPath {
    /// Linear ramp `2Ω_c → 0`.
    pub fn through_critical(coupling: f64) -> Self {
        Self {
            from: coupling,
            to: 0.0,
            shape: RampShape::Linear,
        }
    }

    fn at(&self, fraction: f64) -> f64 {
        self.shape.interpolate(self.from, self.to, fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KzOutcome {
    /// Quasiparticles per site, `Σ_k p_k / N`. Equals the kink density once
    /// the ramp ends at `Ω = 0`.
    pub defect_density: f64,
    /// `1 / defect_density`.
    pub xi: f64,
    /// `(k, p_k)` for the `N/2` positive momenta.
    pub excitation_probabilities: Vec<(f64, f64)>,
}

/// Local error target for one momentum mode over the whole ramp.
const MODE_TOLERANCE: f64 = 1e-8;

type Spinor = [Complex64; 2];

/// Pauli vector of the pair Hamiltonian `2h(k)` at field `omega`.
fn pair_field(k: f64, omega: f64, coupling: f64) -> [f64; 3] {
    let a = -0.5 * omega + 0.25 * coupling * k.cos();
    let b = 0.25 * coupling * k.sin();
    // h = a σᶻ − b σʸ
    [0.0, -2.0 * b, 2.0 * a]
}

/// Ground state of `n·σ`.
fn ground_spinor(n: [f64; 3]) -> Spinor {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm == 0.0 {
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    let m = [-n[0] / norm, -n[1] / norm, -n[2] / norm];
    let theta = m[2].clamp(-1.0, 1.0).acos();
    let phi = m[1].atan2(m[0]);
    [
        Complex64::new((0.5 * theta).cos(), 0.0),
        Complex64::from_polar((0.5 * theta).sin(), phi),
    ]
}

/// `exp(−i n·σ) ψ`.
fn rotate(n: [f64; 3], psi: Spinor) -> Spinor {
    let a = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if a == 0.0 {
        return psi;
    }
    let (c, s) = (a.cos(), a.sin() / a);
    let i = Complex64::i();
    // (n·σ)ψ
    let up = n[2] * psi[0] + Complex64::new(n[0], -n[1]) * psi[1];
    let down = Complex64::new(n[0], n[1]) * psi[0] - n[2] * psi[1];
    [c * psi[0] - i * s * up, c * psi[1] - i * s * down]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// One fourth-order Magnus step from `t` to `t + h`.
fn magnus_step(field: &impl Fn(f64) -> [f64; 3], t: f64, h: f64, psi: Spinor) -> Spinor {
    let d = h * 3f64.sqrt() / 6.0;
    let mid = t + 0.5 * h;
    let h1 = field(mid - d);
    let h2 = field(mid + d);
    let c = cross(h2, h1);
    let w = 3f64.sqrt() / 6.0 * h * h;
    let n = [
        0.5 * h * (h1[0] + h2[0]) + w * c[0],
        0.5 * h * (h1[1] + h2[1]) + w * c[1],
        0.5 * h * (h1[2] + h2[2]) + w * c[2],
    ];
    rotate(n, psi)
}

/// Integrates `i dψ/dt = (n(t)·σ) ψ` over `[0, duration]` with step doubling.
fn integrate(field: impl Fn(f64) -> [f64; 3], duration: f64, mut psi: Spinor) -> Spinor {
    if duration <= 0.0 {
        return psi;
    }
    let mut t = 0.0;
    let mut h = (duration / 64.0).min(0.1);
    while t < duration {
        h = h.min(duration - t);
        let big = magnus_step(&field, t, h, psi);
        let half = magnus_step(&field, t, 0.5 * h, psi);
        let small = magnus_step(&field, t + 0.5 * h, 0.5 * h, half);
        let err = ((big[0] - small[0]).norm_sqr() + (big[1] - small[1]).norm_sqr()).sqrt() / 15.0;
        let allowed = MODE_TOLERANCE * h / duration;
        if err <= allowed || h < 1e-12 * duration {
            t += h;
            psi = small;
        }
        let factor = if err == 0.0 {
            2.0
        } else {
            (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 2.0)
        };
        h *= factor;
    }
    psi
}

fn check_clean_ring(spec: &SpinEnsembleSpec) -> Result<()> {
    spec.validate()?;
    if spec.n < 2 || !spec.n.is_multiple_of(2) {
        return Err(Error::invalid("n", format!("need an even N >= 2, got {}", spec.n)));
    }
    if spec.disorder.w_omega != 0.0 || spec.disorder.w_j != 0.0 {
        return Err(Error::UnsupportedModel("momentum-mode ramps need a clean chain".into()));
    }
    if spec.profile != CouplingProfile::NearestNeighbor || spec.boundary != Boundary::Periodic {
        return Err(Error::UnsupportedModel(
            "momentum-mode ramps need a periodic nearest-neighbour chain".into(),
        ));
    }
    Ok(())
}

/// Kibble–Zurek ramp of the clean chain: each pair `(k, −k)` evolves under
/// `2h(k, Ω(t))` from its instantaneous ground state, and `p_k` is the final
/// excitation probability.
pub fn kz_ramp(spec: &SpinEnsembleSpec, prep_time: f64, path: RampPath) -> Result<KzOutcome> {
    check_clean_ring(spec)?;
    if !(prep_time.is_finite() && prep_time >= 0.0) {
        return Err(Error::invalid("prep_time", "must be >= 0"));
    }
    let critical = spec.critical_field();
    if (path.from - critical) * (path.to - critical) > 0.0 {
        return Err(Error::Domain(format!(
            "ramp {} -> {} does not cross the critical field {critical}",
            path.from, path.to
        )));
    }
    let j = spec.coupling;
    let ks: Vec<f64> = momenta(spec.n).into_iter().filter(|k| *k > 0.0).collect();
    let excitation_probabilities: Vec<(f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let start = ground_spinor(pair_field(k, path.from, j));
            let field = |t: f64| {
                let fraction = if prep_time > 0.0 { t / prep_time } else { 1.0 };
                pair_field(k, path.at(fraction), j)
            };
            let psi = integrate(field, prep_time, start);
            let end = ground_spinor(pair_field(k, path.to, j));
            let overlap = end[0].conj() * psi[0] + end[1].conj() * psi[1];
            (k, (1.0 - overlap.norm_sqr()).max(0.0))
        })
        .collect();
    let defect_density = 2.0 * excitation_probabilities.iter().map(|(_, p)| p).sum::<f64>() / spec.n as f64;
    Ok(KzOutcome {
        defect_density,
        xi: 1.0 / defect_density,
        excitation_probabilities,
    })
}

/// Defect density of an instantaneous quench `from → to`, from the overlaps
/// of the initial and final mode ground states.
pub fn sudden_quench_density(spec: &SpinEnsembleSpec, from: f64, to: f64) -> Result<f64> {
    check_clean_ring(spec)?;
    let j = spec.coupling;
    let total: f64 = momenta(spec.n)
        .into_iter()
        .filter(|k| *k > 0.0)
        .map(|k| {
            let a = ground_spinor(pair_field(k, from, j));
            let b = ground_spinor(pair_field(k, to, j));
            1.0 - (b[0].conj() * a[0] + b[1].conj() * a[1]).norm_sqr()
        })
        .sum();
    Ok(2.0 * total / spec.n as f64)
}
