use num_complex::Complex64;

use super::{magnetization, IsingSystem, QuantumState};
use crate::error::{Error, Result};
use crate::model::{DriveSpec, RampShape, SignalSpec};

/// Largest tolerated `|‖ψ‖ − 1|` after an evolution segment.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Mean transverse field over one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldProfile {
    Constant(f64),
    Ramp { from: f64, to: f64, shape: RampShape },
}

impl FieldProfile {
    /// Field at `fraction ∈ [0, 1]` of the segment.
    pub fn at(&self, fraction: f64) -> f64 {
        match *self {
            FieldProfile::Constant(v) => v,
            FieldProfile::Ramp { from, to, shape } => shape.interpolate(from, to, fraction),
        }
    }
}

/// Continuous evolution under `H₀(t) + B(t)ΣSᶻ + εΣSᶻ` for `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSegment {
    pub duration: f64,
    pub transverse: FieldProfile,
    pub signal: Option<SignalSpec>,
    /// Static longitudinal field `ε` (a parity-changing perturbation).
    pub static_z: f64,
    pub max_step: f64,
}

impl EvolutionSegment {
    pub fn new(duration: f64, transverse: FieldProfile, max_step: f64) -> Self {
        Self {
            duration,
            transverse,
            signal: None,
            static_z: 0.0,
            max_step,
        }
    }

    pub fn with_signal(self, signal: Option<SignalSpec>) -> Self {
        Self { signal, ..self }
    }

    pub fn with_static_z(self, static_z: f64) -> Self {
        Self { static_z, ..self }
    }
}

/// Global time and the number of π-pulses applied so far.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Clock {
    pub time: f64,
    pub pulses: u64,
}

impl Clock {
    /// `+1` or `−1`: the sign `Sᶻ` picks up in the toggling frame.
    pub fn toggling_sign(&self) -> f64 {
        if self.pulses.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Applies `⊗ᵢ exp(−i(π + δθᵢ)Sˣᵢ)`.
pub fn apply_pulse(state: &mut QuantumState, pulse_errors: &[f64]) {
    let n = state.n();
    let amps = state.amplitudes_mut();
    for i in 0..n {
        let half = 0.5 * (std::f64::consts::PI + pulse_errors.get(i).copied().unwrap_or(0.0));
        rotate_x(amps, i, half.cos(), -half.sin());
    }
}

/// `ψ ← (c·1 + i·s·σˣᵢ) ψ`.
#[inline]
fn rotate_x(amps: &mut [Complex64], site: usize, c: f64, s: f64) {
    let stride = 1usize << site;
    let is = Complex64::new(0.0, s);
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = x0 * c + is * x1;
            *a1 = is * x0 + x1 * c;
        }
    }
}

/// Diagonal propagator cache: `exp(−i E_c h)` for the Ising energies.
struct DiagonalCache {
    step: f64,
    factors: Vec<Complex64>,
}

impl DiagonalCache {
    fn new() -> Self {
        Self {
            step: f64::NAN,
            factors: Vec::new(),
        }
    }

    fn factors(&mut self, diagonal: &[f64], step: f64) -> &[Complex64] {
        if self.step != step {
            self.step = step;
            self.factors = diagonal.iter().map(|e| Complex64::from_polar(1.0, -e * step)).collect();
        }
        &self.factors
    }
}

/// Applies `exp(−i(H_Ising·h + θ·ΣSᶻ))`.
fn apply_diagonal(amps: &mut [Complex64], n: usize, ising: &[Complex64], theta: f64, mag_table: &mut Vec<Complex64>) {
    mag_table.clear();
    mag_table.extend((0..=n).map(|down| Complex64::from_polar(1.0, -theta * (0.5 * n as f64 - down as f64))));
    for (c, (a, f)) in amps.iter_mut().zip(ising).enumerate() {
        *a *= f * mag_table[c.count_ones() as usize];
    }
}

/// Evolves `state` through `segment`, starting at `clock.time`.
///
/// Between pulses the dynamics is integrated with symmetric (Strang)
/// splitting: half a diagonal step (Ising + longitudinal fields, exact),
/// a full transverse rotation with Ω taken at the substep midpoint, and the
/// other diagonal half. The signal enters through its exact integral over
/// each half step. With a drive, ideal-or-faulty π-pulses are applied at
/// every `t = mτ` inside `(start, end]`; a trailing partial period is
/// evolved without a closing pulse.
pub fn evolve(
    system: &IsingSystem,
    state: &mut QuantumState,
    segment: &EvolutionSegment,
    drive: Option<&DriveSpec>,
    clock: &mut Clock,
) -> Result<()> {
    if !(segment.duration.is_finite() && segment.duration >= 0.0) {
        return Err(Error::invalid("duration", "segment duration must be >= 0"));
    }
    if !(segment.max_step.is_finite() && segment.max_step > 0.0) {
        return Err(Error::invalid("max_step", "must be > 0"));
    }
    if state.n() != system.n() {
        return Err(Error::invalid("state", "state and system sizes differ"));
    }
    let start = clock.time;
    let end = start + segment.duration;
    let mut breaks = drive.map(|d| d.pulse_times(start, end)).unwrap_or_default();
    let pulse_count = breaks.len();
    let last_is_pulse = breaks
        .last()
        .is_some_and(|&t| (t - end).abs() <= 1e-9 * end.abs().max(1.0));
    if !last_is_pulse {
        breaks.push(end);
    }

    let n = system.n();
    let offsets = &system.realization().field_offsets;
    let pulse_errors = &system.realization().pulse_errors;
    let mut cache = DiagonalCache::new();
    let mut mag_table = Vec::with_capacity(n + 1);
    let mut fields = vec![0.0; n];
    let fraction = |t: f64| {
        if segment.duration > 0.0 {
            (t - start) / segment.duration
        } else {
            0.0
        }
    };

    let mut t = start;
    for (k, &stop) in breaks.iter().enumerate() {
        let span = stop - t;
        if span > 0.0 {
            let substeps = (span / segment.max_step).ceil().max(1.0) as usize;
            let h = span / substeps as f64;
            for s in 0..substeps {
                let t0 = t + s as f64 * h;
                let tm = t0 + 0.5 * h;
                let t1 = if s + 1 == substeps { stop } else { t0 + h };
                let theta1 = signal_phase(segment, t0, tm);
                let theta2 = signal_phase(segment, tm, t1);
                let omega = segment.transverse.at(fraction(tm));
                for (f, d) in fields.iter_mut().zip(offsets) {
                    *f = omega + d;
                }
                let amps = state.amplitudes_mut();
                let ising = cache.factors(system.ising_diagonal(), 0.5 * h);
                apply_diagonal(amps, n, ising, theta1, &mut mag_table);
                for (i, f) in fields.iter().enumerate() {
                    let a = 0.5 * f * h;
                    if a != 0.0 {
                        rotate_x(amps, i, a.cos(), a.sin());
                    }
                }
                let ising = cache.factors(system.ising_diagonal(), 0.5 * h);
                apply_diagonal(amps, n, ising, theta2, &mut mag_table);
            }
        }
        t = stop;
        if k < pulse_count {
            apply_pulse(state, pulse_errors);
            clock.pulses += 1;
        }
    }
    clock.time = end;

    let drift = (state.norm() - 1.0).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::IntegratorDivergence {
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(())
}

/// Accumulated longitudinal phase `∫ (B(t) + ε) dt` over `[a, b]`.
fn signal_phase(segment: &EvolutionSegment, a: f64, b: f64) -> f64 {
    let signal = segment.signal.map_or(0.0, |s| s.integral(a, b));
    signal + segment.static_z * (b - a)
}

/// Imprints `exp(−i·θ·ΣSᶻ)` (used for the known readout bias).
pub fn apply_z_phase(state: &mut QuantumState, theta: f64) {
    let n = state.n();
    for (c, a) in state.amplitudes_mut().iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, -theta * magnetization(c, n));
    }
}
