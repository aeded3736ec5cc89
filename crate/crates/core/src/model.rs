//! System, disorder, drive and signal descriptions.
//!
//! Spin operators are `S = σ/2`, so a clean nearest-neighbour chain
//! `H₀ = −Σ J Sᶻᵢ Sᶻᵢ₊₁ − Σ Ω Sˣᵢ` is critical at `Ω_c = J/2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingProfile {
    #[default]
    NearestNeighbor,
    /// Full symmetric coupling matrix `J_ij`; the diagonal is ignored.
    Explicit(Vec<Vec<f64>>),
}

/// Disorder widths and the seed that fixes one realization.
///
/// Field offsets are uniform on `[−W_Ω/2, W_Ω/2]`, bond offsets on
/// `[−W_J, W_J]` and pulse-angle errors on `[−W_θ/2, W_θ/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DisorderSpec {
    pub w_omega: f64,
    pub w_j: f64,
    pub w_theta: f64,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn clean() -> Self {
        Self::default()
    }

    /// The disorder convention used for localization studies: one strength
    /// `W` for both the field (`±W/2`) and the bonds (`±W`).
    pub fn uniform(w: f64, seed: u64) -> Self {
        Self {
            w_omega: w,
            w_j: w,
            w_theta: 0.0,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn is_clean(&self) -> bool {
        self.w_omega == 0.0 && self.w_j == 0.0 && self.w_theta == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsembleSpec {
    pub n: usize,
    /// Spatial dimension. Only chains (`1`) are simulated; 2 and 3 enter
    /// the closed-form scaling laws.
    #[serde(default = "one")]
    pub dimension: usize,
    /// Characteristic Ising strength `J`.
    #[serde(default = "unit")]
    pub coupling: f64,
    #[serde(default)]
    pub profile: CouplingProfile,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub disorder: DisorderSpec,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl SpinEnsembleSpec {
    /// Clean nearest-neighbour chain.
    pub fn chain(n: usize, coupling: f64, boundary: Boundary) -> Self {
        Self {
            n,
            dimension: 1,
            coupling,
            profile: CouplingProfile::NearestNeighbor,
            boundary,
            disorder: DisorderSpec::clean(),
        }
    }

    pub fn with_disorder(self, disorder: DisorderSpec) -> Self {
        Self { disorder, ..self }
    }

    /// Transverse field at which the clean nearest-neighbour chain is critical.
    pub fn critical_field(&self) -> f64 {
        0.5 * self.coupling
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 spins, got {}", self.n)));
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::invalid(
                "dimension",
                format!("must be 1, 2 or 3, got {}", self.dimension),
            ));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::invalid("coupling", "must be positive and finite"));
        }
        let d = &self.disorder;
        for (name, w) in [("w_omega", d.w_omega), ("w_j", d.w_j), ("w_theta", d.w_theta)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(name, format!("disorder width must be >= 0, got {w}")));
            }
        }
        if let CouplingProfile::Explicit(m) = &self.profile {
            if m.len() != self.n || m.iter().any(|row| row.len() != self.n) {
                return Err(Error::invalid("profile", "coupling matrix must be n x n"));
            }
            for i in 0..self.n {
                for j in 0..self.n {
                    if i == j {
                        continue;
                    }
                    if m[i][j] < 0.0 || !m[i][j].is_finite() {
                        return Err(Error::invalid(
                            "profile",
                            format!("J[{i}][{j}] = {} is not ferromagnetic", m[i][j]),
                        ));
                    }
                    if (m[i][j] - m[j][i]).abs() > 1e-12 * m[i][j].abs().max(1.0) {
                        return Err(Error::invalid("profile", format!("J[{i}][{j}] != J[{j}][{i}]")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One ferromagnetic bond `−J Sᶻᵢ Sᶻⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// A concrete disorder draw: everything the engines need besides the
/// (time-dependent) mean transverse field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub n: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    pub nearest_neighbor: bool,
    /// For nearest-neighbour chains bond `i` joins sites `i` and `i+1`
    /// (the last one closes the ring when periodic).
    pub bonds: Vec<Bond>,
    /// `δΩᵢ`, added to whatever mean field the schedule prescribes.
    pub field_offsets: Vec<f64>,
    /// `δθᵢ`, the per-site rotation-angle error of every π-pulse.
    pub pulse_errors: Vec<f64>,
}

impl DisorderRealization {
    /// Site fields `Ωᵢ = Ω + δΩᵢ` for mean field `omega`.
    pub fn fields(&self, omega: f64) -> Vec<f64> {
        self.field_offsets.iter().map(|d| omega + d).collect()
    }

    pub fn is_clean(&self) -> bool {
        self.field_offsets.iter().all(|&d| d == 0.0) && self.bonds.iter().all(|b| b.strength == self.coupling)
    }

    /// Same realization with ideal π-pulses.
    pub fn without_pulse_errors(mut self) -> Self {
        self.pulse_errors.iter_mut().for_each(|e| *e = 0.0);
        self
    }
}

/// Seed for work unit `index` of a run seeded with `base` (SplitMix64 of
/// the pair). Independent of scheduling and thread count.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one disorder realization. Identical `(spec, seed)` gives a
/// bit-identical realization on every platform.
pub fn sample_disorder(spec: &SpinEnsembleSpec) -> Result<DisorderRealization> {
    spec.validate()?;
    let d = spec.disorder;
    if d.w_j > 0.0 && d.w_j >= spec.coupling {
        return Err(Error::BondSignFlip {
            width: d.w_j,
            coupling: spec.coupling,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
    let n = spec.n;

    // Draw order is part of the reproducibility contract: fields, bonds, pulses.
    let field_offsets: Vec<f64> = (0..n).map(|_| d.w_omega * (rng.random::<f64>() - 0.5)).collect();

    let (nearest_neighbor, pairs): (bool, Vec<(usize, usize, f64)>) = match &spec.profile {
        CouplingProfile::NearestNeighbor => {
            let mut pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1, spec.coupling)).collect();
            if spec.boundary == Boundary::Periodic && n > 2 {
                pairs.push((n - 1, 0, spec.coupling));
            }
            (true, pairs)
        }
        CouplingProfile::Explicit(m) => {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if m[i][j] != 0.0 {
                        pairs.push((i, j, m[i][j]));
                    }
                }
            }
            (false, pairs)
        }
    };
    let bonds = pairs
        .into_iter()
        .map(|(i, j, strength)| Bond {
            i,
            j,
            strength: strength + d.w_j * (2.0 * rng.random::<f64>() - 1.0),
        })
        .collect();
    let pulse_errors = (0..n).map(|_| d.w_theta * (rng.random::<f64>() - 0.5)).collect();

    Ok(DisorderRealization {
        n,
        coupling: spec.coupling,
        boundary: spec.boundary,
        nearest_neighbor,
        bonds,
        field_offsets,
        pulse_errors,
    })
}

/// AC field `B sin(ω_s t + φ₀)` along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl SignalSpec {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }

    /// Exact `∫ₐᵇ B sin(ω_s t + φ₀) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let w = self.frequency;
        self.amplitude * ((w * a + self.phase).cos() - (w * b + self.phase).cos()) / w
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "signal amplitude must be >= 0"));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid("frequency", "signal frequency must be > 0"));
        }
        Ok(())
    }
}

/// Global π-pulse train about x with Floquet frequency `ω₀ = 2π/τ`.
///
/// Pulses sit on the global time grid `t = mτ`, `m = 1, 2, …`, so the
/// toggling-frame sign is `+1` on `[0, τ)` and flips at every pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub omega_0: f64,
}

impl DriveSpec {
    pub fn new(omega_0: f64) -> Self {
        Self { omega_0 }
    }

    /// Drive resonant with a signal: `ω₀ = 2ω_s`.
    pub fn resonant(signal: &SignalSpec) -> Self {
        Self::new(2.0 * signal.frequency)
    }

    /// Pulse spacing `τ`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_0
    }

    /// Toggling-frame sign `(−1)^⌊t/τ⌋`.
    pub fn square_wave(&self, t: f64) -> f64 {
        if (t / self.period()).floor().rem_euclid(2.0) == 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Pulse times in `(start, end]`. A pulse that lands within a relative
    /// `1e-9` of `start` is taken to belong to the previous interval.
    pub fn pulse_times(&self, start: f64, end: f64) -> Vec<f64> {
        let tau = self.period();
        let eps = 1e-9 * tau;
        let first = ((start + eps) / tau).floor() as i64 + 1;
        let mut times = Vec::new();
        let mut m = first.max(1);
        loop {
            let t = m as f64 * tau;
            if t > end + eps {
                break;
            }
            times.push(t.min(end));
            m += 1;
        }
        times
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_0.is_finite() && self.omega_0 > 0.0) {
            return Err(Error::invalid("omega_0", "Floquet frequency must be > 0"));
        }
        Ok(())
    }
}

/// Signal seen in the toggling frame: `B sin(ω_s t + φ₀)` times the square
/// wave that flips sign at every π-pulse.
pub fn toggling_signal(signal: &SignalSpec, drive: &DriveSpec, t: f64) -> f64 {
    signal.value(t) * drive.square_wave(t)
}

/// Exact `∫ₐᵇ` of [`toggling_signal`], summed piecewise between pulses.
pub fn toggling_integral(signal: &SignalSpec, drive: &DriveSpec, a: f64, b: f64) -> f64 {
    if signal.amplitude == 0.0 || b <= a {
        return 0.0;
    }
    let tau = drive.period();
    let mut total = 0.0;
    let mut lo = a;
    let mut m = (a / tau).floor();
    while lo < b {
        let hi = ((m + 1.0) * tau).min(b);
        let sign = if m.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
        if hi > lo {
            total += sign * signal.integral(lo, hi);
        }
        lo = hi;
        m += 1.0;
    }
    total
}

/// Time-averaged toggling-frame field `B̄_eff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSignal {
    pub mean: f64,
    /// Bound on `|mean − true average|` from a finite averaging window
    /// (zero when the drive and signal are commensurate).
    pub truncation_bound: f64,
    /// Averaging window actually used.
    pub window: f64,
}

/// Largest denominator tried when looking for a common period of the
/// square wave and the signal.
const MAX_COMMENSURATE_DENOMINATOR: u64 = 10_000;
/// Half-periods averaged over when no common period exists.
const INCOMMENSURATE_HALF_PERIODS: u64 = 1_000_000;

/// Time average of [`toggling_signal`].
///
/// At resonance (`ω₀ = 2ω_s`) this is the closed form `(2/π) B cos φ₀`.
/// For commensurate frequencies the exact piecewise integral over the
/// common period is used; otherwise the average runs over 10⁶ pulse
/// intervals and reports an a-posteriori truncation bound.
pub fn effective_signal_average(signal: &SignalSpec, drive: &DriveSpec) -> EffectiveSignal {
    let tau = drive.period();
    if signal.amplitude == 0.0 {
        return EffectiveSignal {
            mean: 0.0,
            truncation_bound: 0.0,
            window: 2.0 * tau,
        };
    }
    if (drive.omega_0 - 2.0 * signal.frequency).abs() <= 1e-12 * drive.omega_0 {
        return EffectiveSignal {
            mean: 2.0 / PI * signal.amplitude * signal.phase.cos(),
            truncation_bound: 0.0,
            window: 2.0 * tau,
        };
    }
    // Common period p·(2τ) = q·(2π/ω_s)  ⇔  p/q = ω₀ / 2ω_s.
    let ratio = drive.omega_0 / (2.0 * signal.frequency);
    if let Some((p, _q)) = rational_approximation(ratio, MAX_COMMENSURATE_DENOMINATOR, 1e-13) {
        let window = p as f64 * 2.0 * tau;
        let mean = toggling_integral(signal, drive, 0.0, window) / window;
        return EffectiveSignal {
            mean,
            truncation_bound: 0.0,
            window,
        };
    }
    let half_periods = INCOMMENSURATE_HALF_PERIODS;
    let window = half_periods as f64 * tau;
    let mut running = 0.0;
    let mut partial = Vec::with_capacity(half_periods as usize);
    for m in 0..half_periods {
        let lo = m as f64 * tau;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        running += sign * signal.integral(lo, lo + tau);
        partial.push(running);
    }
    let mean = running / window;
    // Remainder of the running integral around the linear trend.
    let sup_remainder = partial
        .iter()
        .enumerate()
        .map(|(m, &acc)| (acc - mean * (m + 1) as f64 * tau).abs())
        .fold(0.0_f64, f64::max)
        + signal.amplitude * tau;
    EffectiveSignal {
        mean,
        truncation_bound: 2.0 * sup_remainder / window,
        window,
    }
}

/// Best rational `p/q` with `q ≤ max_den` matching `x` to a relative
/// tolerance, by continued fractions.
fn rational_approximation(x: f64, max_den: u64, rel_tol: f64) -> Option<(u64, u64)> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut frac = x;
    for _ in 0..64 {
        let a = frac.floor();
        if a > u32::MAX as f64 {
            return None;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if ((h2 as f64 / k2 as f64) - x).abs() <= rel_tol * x {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let rem = frac - a as f64;
        if rem < 1e-15 {
            return None;
        }
        frac = 1.0 / rem;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    Linear,
    /// Cosine ramp with vanishing slope at both ends.
    #[default]
    Smooth,
    /// Locally adiabatic ramp, `dΩ/dt ∝ (Ω − critical)² + gap²`: slowest
    /// where the gap closes.
    Adiabatic {
        critical: f64,
        gap: f64,
    },
}

impl RampShape {
    /// Value at `fraction ∈ [0, 1]` of a ramp from `from` to `to`.
    pub fn interpolate(&self, from: f64, to: f64, fraction: f64) -> f64 {
        let s = fraction.clamp(0.0, 1.0);
        let w = match self {
            RampShape::Linear => s,
            RampShape::Smooth => 0.5 * (1.0 - (PI * s).cos()),
            RampShape::Adiabatic { critical, gap } => {
                // ∫ dΩ / ((Ω − Ω_c)² + g²) is an arctangent, so equal time
                // steps are equal steps in atan((Ω − Ω_c)/g).
                let a = ((from - critical) / gap).atan();
                let b = ((to - critical) / gap).atan();
                return critical + gap * (a + s * (b - a)).tan();
            }
        };
        from + (to - from) * w
    }

    /// [`RampShape::Adiabatic`] tuned to a clean chain of `n` spins: the
    /// gap floor is the smallest two-quasiparticle scale `J sin(π/2N)`.
    pub fn adiabatic_for(spec: &SpinEnsembleSpec) -> Self {
        RampShape::Adiabatic {
            critical: spec.critical_field(),
            gap: spec.coupling * (PI / (2.0 * spec.n as f64)).sin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let RampShape::Adiabatic { critical, gap } = self {
            if !(critical.is_finite() && gap.is_finite() && *gap > 0.0) {
                return Err(Error::invalid(
                    "ramp_shape",
                    "adiabatic ramp needs a finite critical field and gap > 0",
                ));
            }
        }
        Ok(())
    }
}

/// The three-stage experiment program: ramp down (`prep_time`), sense at
/// fixed field (`sense_time`), ramp back up (`readout_time`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub prep_time: f64,
    pub sense_time: f64,
    pub readout_time: f64,
    #[serde(default)]
    pub ramp_shape: RampShape,
    /// Transverse field at the start (and end) of the sequence, `Ω ≫ J`.
    pub omega_init: f64,
    /// Field held during sensing: `0` for the parity protocol, `Ω_c + ΔΩ`
    /// for the excitation protocol.
    pub omega_stop: f64,
    pub prep_drive: DriveSpec,
    pub sense_drive: DriveSpec,
    pub readout_drive: DriveSpec,
    /// Known toggling-frame phase (per unit `ΣSᶻ`) imprinted after sensing
    /// to move the readout off the fringe extremum. Zero means unbiased.
    #[serde(default)]
    pub readout_bias: f64,
    /// Upper bound on the integrator substep.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_max_step() -> f64 {
    0.01
}

/// Factor used to read "≫" in the off-resonance requirement
/// `|ω₀ − 2ω_s| ≫ Ω, J` for the ramp stages.
pub const DETUNING_MARGIN: f64 = 10.0;

impl ProtocolSchedule {
    /// Parity protocol: ramp `omega_init → 0` with a far-detuned drive,
    /// sense at `ω₀ = 2ω_s`, reverse the ramp.
    pub fn parity(
        prep_time: f64,
        sense_time: f64,
        omega_init: f64,
        signal: &SignalSpec,
        ramp_drive: DriveSpec,
    ) -> Self {
        Self {
            prep_time,
            sense_time,
            readout_time: prep_time,
            ramp_shape: RampShape::Smooth,
            omega_init,
            omega_stop: 0.0,
            prep_drive: ramp_drive,
            sense_drive: DriveSpec::resonant(signal),
            readout_drive: ramp_drive,
            readout_bias: 0.0,
            max_step: default_max_step(),
        }
    }

    /// Excitation-counting protocol: stop at `Ω_c + ΔΩ` and sense with the
    /// drive detuned by `Δω = ω_s − ω₀/2`.
    #[allow(clippy::too_many_arguments)]
    pub fn excitation(
        prep_time: f64,
        sense_time: f64,
        omega_init: f64,
        omega_stop: f64,
        detuning: f64,
        signal: &SignalSpec,
        ramp_drive: DriveSpec,
    ) -> Self {
        Self {
            prep_time,
            sense_time,
            readout_time: prep_time,
            ramp_shape: RampShape::Smooth,
            omega_init,
            omega_stop,
            prep_drive: ramp_drive,
            sense_drive: DriveSpec::new(2.0 * (signal.frequency - detuning)),
            readout_drive: ramp_drive,
            readout_bias: 0.0,
            max_step: default_max_step(),
        }
    }

    /// `Δω = ω_s − ω₀/2` of the sensing stage.
    pub fn detuning(&self, signal: &SignalSpec) -> f64 {
        signal.frequency - 0.5 * self.sense_drive.omega_0
    }

    pub fn total_time(&self) -> f64 {
        self.prep_time + self.sense_time + self.readout_time
    }

    pub fn with_max_step(self, max_step: f64) -> Self {
        Self { max_step, ..self }
    }

    pub fn with_readout_bias(self, readout_bias: f64) -> Self {
        Self { readout_bias, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prep_time", self.prep_time),
            ("sense_time", self.sense_time),
            ("readout_time", self.readout_time),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("stage duration must be >= 0, got {v}")));
            }
        }
        if !(self.max_step.is_finite() && self.max_step > 0.0) {
            return Err(Error::invalid("max_step", "must be > 0"));
        }
        self.ramp_shape.validate()?;
        if !(self.omega_init.is_finite() && self.omega_stop.is_finite() && self.omega_stop >= 0.0) {
            return Err(Error::invalid(
                "omega_stop",
                "transverse fields must be finite and >= 0",
            ));
        }
        self.prep_drive.validate()?;
        self.sense_drive.validate()?;
        self.readout_drive.validate()
    }

    /// Warnings for ramp stages whose drive is not far from resonance,
    /// i.e. `|ω₀ − 2ω_s| < 10·max(Ω_init, J)`.
    pub fn detuning_warnings(&self, signal: &SignalSpec, coupling: f64) -> Vec<String> {
        let scale = self.omega_init.abs().max(self.omega_stop.abs()).max(coupling);
        let mut warnings = Vec::new();
        for (stage, drive) in [("initialization", &self.prep_drive), ("read-out", &self.readout_drive)] {
            let off = (drive.omega_0 - 2.0 * signal.frequency).abs();
            if off < DETUNING_MARGIN * scale {
                warnings.push(format!(
                    "{stage} drive detuning |ω₀ − 2ω_s| = {off:.4} is not ≫ max(Ω, J) = {scale:.4}"
                ));
            }
        }
        warnings
    }
}

/// Critical exponents of the ordering transition crossed by the ramp.
///
/// `eta` (scaling dimension of `Sᶻ`) and `mu` (localization-length
/// exponent) are only known for some universality classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub nu: f64,
    pub z: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
}

impl CriticalExponents {
    /// 1D nearest-neighbour transverse-field Ising chain.
    pub fn ising_1d() -> Self {
        Self {
            nu: 1.0,
            z: 1.0,
            eta: Some(0.375),
            mu: Some(1.49),
        }
    }

    /// 2D dipolar array, mean-field exponents.
    pub fn dipolar_2d() -> Self {
        Self {
            nu: 1.0,
            z: 0.5,
            eta: None,
            mu: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.nu) || !positive(self.z) {
            return Err(Error::invalid("exponents", "nu and z must be > 0"));
        }
        if self.eta.is_some_and(|e| !positive(e)) || self.mu.is_some_and(|m| !positive(m)) {
            return Err(Error::invalid("exponents", "eta and mu must be > 0 when given"));
        }
        Ok(())
    }

    /// Kibble–Zurek exponent `ν/(1+zν)` of `ξ ∼ (JT_p)^{…}`.
    pub fn kz_exponent(&self) -> f64 {
        self.nu / (1.0 + self.z * self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCorrelation {
    #[default]
    Independent,
    DipolarCorrelated,
}

/// External noise `S(ω) ∼ A₀^{1+α}/ω^α`. Only `t2_single` enters the
/// scaling laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub alpha: f64,
    pub t2_single: f64,
    #[serde(default)]
    pub correlation: NoiseCorrelation,
}

impl NoiseSpec {
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.amplitude.powf(1.0 + self.alpha) / omega.abs().powf(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t2_single.is_finite() && self.t2_single > 0.0) {
            return Err(Error::invalid("t2_single", "coherence time must be > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_width_disorder_is_clean() {
        let spec = SpinEnsembleSpec::chain(8, 1.0, Boundary::Periodic);
        let r = sample_disorder(&spec).unwrap();
        assert!(r.fields(0.7).iter().all(|&o| o == 0.7));
        assert!(r.bonds.iter().all(|b| b.strength == 1.0));
        assert_eq!(r.bonds.len(), 8);
        assert!(r.is_clean());
    }

    #[test]
    fn disorder_is_reproducible() {
        let spec = SpinEnsembleSpec::chain(64, 1.0, Boundary::Open).with_disorder(DisorderSpec {
            w_omega: 0.3,
            w_j: 0.2,
            w_theta: 0.05,
            seed: 42,
        });
        let a = sample_disorder(&spec).unwrap();
        let b = sample_disorder(&spec).unwrap();
        assert_eq!(a, b);
        let c = sample_disorder(&spec.clone().with_disorder(spec.disorder.with_seed(43))).unwrap();
        assert_ne!(a.field_offsets, c.field_offsets);
    }

    #[test]
    fn bond_disorder_statistics() {
        let w = 0.1;
        let spec = SpinEnsembleSpec::chain(100_000, 1.0, Boundary::Open).with_disorder(DisorderSpec {
            w_j: w,
            seed: 7,
            ..Default::default()
        });
        let r = sample_disorder(&spec).unwrap();
        let dj: Vec<f64> = r.bonds.iter().map(|b| b.strength - 1.0).collect();
        let n = dj.len() as f64;
        let mean = dj.iter().sum::<f64>() / n;
        // Uniform on [−w, w]: σ = w/√3, standard error σ/√n.
        let sigma_mean = w / 3f64.sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "mean {mean}");
        assert!(dj.iter().all(|&x| (-w..=w).contains(&x)));
    }

    #[test]
    fn wide_bond_disorder_is_rejected() {
        let spec = SpinEnsembleSpec::chain(4, 1.0, Boundary::Open).with_disorder(DisorderSpec {
            w_j: 1.0,
            ..Default::default()
        });
        assert!(matches!(sample_disorder(&spec), Err(Error::BondSignFlip { .. })));
    }

    #[test]
    fn explicit_profile_must_be_symmetric_ferromagnet() {
        let mut spec = SpinEnsembleSpec::chain(3, 1.0, Boundary::Open);
        spec.profile = CouplingProfile::Explicit(vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 1.0], vec![0.4, 1.0, 0.0]]);
        assert!(spec.validate().is_err());
        spec.profile = CouplingProfile::Explicit(vec![vec![0.0, -1.0, 0.0], vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        assert!(spec.validate().is_err());
        spec.profile = CouplingProfile::Explicit(vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 1.0], vec![0.5, 1.0, 0.0]]);
        let r = sample_disorder(&spec).unwrap();
        assert_eq!(r.bonds.len(), 3);
        assert!(!r.nearest_neighbor);
    }

    #[test]
    fn square_wave_flips_at_each_pulse() {
        let drive = DriveSpec::new(3.0);
        let tau = drive.period();
        let s = SignalSpec::new(1.0, 1.0);
        let before = toggling_signal(&s, &drive, tau - 1e-9);
        let after = toggling_signal(&s, &drive, tau + 1e-9);
        assert!(before > 0.0 && after < 0.0);
        assert_eq!(drive.square_wave(0.0), 1.0);
        assert_eq!(drive.square_wave(1.5 * tau), -1.0);
        assert_eq!(drive.square_wave(2.5 * tau), 1.0);
    }

    #[test]
    fn zero_amplitude_signal_vanishes() {
        let drive = DriveSpec::new(3.0);
        let s = SignalSpec::new(0.0, 1.3);
        for i in 0..100 {
            assert_eq!(toggling_signal(&s, &drive, 0.37 * i as f64), 0.0);
        }
        assert_eq!(effective_signal_average(&s, &drive).mean, 0.0);
    }

    #[test]
    fn resonant_average_is_two_over_pi() {
        for b in [1e-3, 0.2, 1.0, 17.0] {
            let s = SignalSpec::new(b, 1.7);
            let avg = effective_signal_average(&s, &DriveSpec::resonant(&s));
            assert_relative_eq!(avg.mean, 2.0 / PI * b, max_relative = 1e-12);
        }
    }

    #[test]
    fn resonant_average_matches_midpoint_quadrature() {
        // Independent oracle: brute-force midpoint sum over one common period.
        let s = SignalSpec::new(1.0, 1.0);
        let drive = DriveSpec::resonant(&s);
        let period = 2.0 * drive.period();
        let n = 2_000_000;
        let h = period / n as f64;
        let sum: f64 = (0..n).map(|i| toggling_signal(&s, &drive, (i as f64 + 0.5) * h)).sum();
        assert!((sum * h / period - 2.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn cosine_phase_averages_to_zero_at_resonance() {
        let s = SignalSpec {
            amplitude: 1.0,
            frequency: 2.0,
            phase: PI / 2.0,
        };
        let drive = DriveSpec::resonant(&s);
        let period = 2.0 * drive.period();
        let n = 1_000_000;
        let h = period / n as f64;
        let brute: f64 = (0..n)
            .map(|i| toggling_signal(&s, &drive, (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h
            / period;
        assert!(brute.abs() < 1e-8);
        assert!(effective_signal_average(&s, &drive).mean.abs() < 1e-12);
    }

    #[test]
    fn far_detuned_average_vanishes() {
        let s = SignalSpec::new(1.0, 1.0);
        let avg = effective_signal_average(&s, &DriveSpec::new(20.0));
        assert!(avg.mean.abs() < 1e-3);
        assert_eq!(avg.truncation_bound, 0.0);
    }

    #[test]
    fn incommensurate_average_reports_truncation() {
        let s = SignalSpec::new(1.0, 1.0);
        let avg = effective_signal_average(&s, &DriveSpec::new(2.0 * 2f64.sqrt() * PI));
        assert!(avg.truncation_bound > 0.0 && avg.truncation_bound < 1e-4);
        assert!(avg.mean.abs() < avg.truncation_bound + 1e-6);
    }

    #[test]
    fn toggling_integral_matches_quadrature() {
        let s = SignalSpec {
            amplitude: 0.8,
            frequency: 1.3,
            phase: 0.4,
        };
        let drive = DriveSpec::new(5.1);
        let (a, b) = (0.37, 9.81);
        // Oracle: Gauss-Legendre on the raw integrand between pulse times.
        let g = crate::quad::GaussLegendre::new(24);
        let mut edges = vec![a];
        edges.extend(drive.pulse_times(a, b));
        if *edges.last().unwrap() < b {
            edges.push(b);
        }
        let brute: f64 = edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let sign = drive.square_wave(mid);
                g.integrate(w[0], w[1], |t| sign * s.value(t))
            })
            .sum();
        assert!((brute - toggling_integral(&s, &drive, a, b)).abs() < 1e-12);
    }

    #[test]
    fn pulse_times_are_on_global_grid() {
        let drive = DriveSpec::new(2.0 * PI); // τ = 1
        assert_eq!(drive.pulse_times(0.0, 3.0), vec![1.0, 2.0, 3.0]);
        assert_eq!(drive.pulse_times(1.0, 2.5), vec![2.0]);
        assert!(drive.pulse_times(0.2, 0.9).is_empty());
    }

    #[test]
    fn ramp_shapes_hit_endpoints() {
        let adiabatic = RampShape::Adiabatic {
            critical: 0.5,
            gap: 0.1,
        };
        for shape in [RampShape::Linear, RampShape::Smooth, adiabatic] {
            assert!((shape.interpolate(5.0, 0.0, 0.0) - 5.0).abs() < 1e-12);
            assert!(shape.interpolate(5.0, 0.0, 1.0).abs() < 1e-12);
        }
        assert_relative_eq!(RampShape::Smooth.interpolate(2.0, 0.0, 0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn adiabatic_ramp_rate_follows_the_gap() {
        let (c, g) = (0.5, 0.1);
        let shape = RampShape::Adiabatic { critical: c, gap: g };
        let h = 1e-6;
        let rate = |s: f64| (shape.interpolate(3.0, 0.0, s + h) - shape.interpolate(3.0, 0.0, s - h)) / (2.0 * h);
        // dΩ/ds divided by (Ω − Ω_c)² + g² is constant along the ramp.
        let ratios: Vec<f64> = [0.1, 0.4, 0.6, 0.9]
            .iter()
            .map(|&s| {
                let w = shape.interpolate(3.0, 0.0, s);
                rate(s) / ((w - c).powi(2) + g * g)
            })
            .collect();
        for r in &ratios {
            assert_relative_eq!(*r, ratios[0], max_relative = 1e-6);
        }
        assert!(RampShape::Adiabatic {
            critical: 0.5,
            gap: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn detuning_warning_flags_near_resonant_ramps() {
        let s = SignalSpec::new(0.01, 5.0);
        let good = ProtocolSchedule::parity(10.0, 5.0, 2.0, &s, DriveSpec::new(60.0));
        assert!(good.detuning_warnings(&s, 1.0).is_empty());
        let bad = ProtocolSchedule::parity(10.0, 5.0, 2.0, &s, DriveSpec::new(12.0));
        assert_eq!(bad.detuning_warnings(&s, 1.0).len(), 2);
    }

    #[test]
    fn rational_approximation_finds_small_ratios() {
        assert_eq!(rational_approximation(10.0, 100, 1e-13), Some((10, 1)));
        assert_eq!(rational_approximation(1.5, 100, 1e-13), Some((3, 2)));
        assert_eq!(rational_approximation(2f64.sqrt(), 10_000, 1e-13), None);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn resonant_average_holds_for_any_amplitude(b in 0.0f64..50.0, w in 0.1f64..20.0) {
                let s = SignalSpec::new(b, w);
                let avg = effective_signal_average(&s, &DriveSpec::resonant(&s));
                prop_assert!((avg.mean - 2.0 / PI * b).abs() <= 1e-8 * b.max(1e-300));
            }

            #[test]
            fn running_integral_stays_near_linear_trend(
                b in 0.01f64..5.0,
                w in 0.2f64..5.0,
                harmonic in prop::sample::select(vec![1u32, 3, 5, 10, 20]),
                t in 0.0f64..200.0,
            ) {
                // Commensurate drives ω₀ = 2·m·ω_s: trend plus bounded remainder.
                let s = SignalSpec::new(b, w);
                let drive = DriveSpec::new(2.0 * harmonic as f64 * w);
                let mean = effective_signal_average(&s, &drive).mean;
                let rem = toggling_integral(&s, &drive, 0.0, t) - mean * t;
                prop_assert!(rem.abs() <= b * drive.period() + 1e-9, "remainder {rem}");
            }

            #[test]
            fn disorder_is_a_pure_function_of_seed(seed in any::<u64>(), n in 2usize..40) {
                let spec = SpinEnsembleSpec::chain(n, 1.0, Boundary::Periodic)
                    .with_disorder(DisorderSpec { w_omega: 0.5, w_j: 0.5, w_theta: 0.1, seed });
                let a = sample_disorder(&spec).unwrap();
                let b = sample_disorder(&spec).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
