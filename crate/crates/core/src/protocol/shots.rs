use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolResult, Readout};
use crate::error::{Error, Result};

/// Simulated single-shot outcomes of `k` repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub readout: Readout,
    /// Number of experimental repetitions.
    pub shots: usize,
    pub seed: u64,
    /// `±1` for parity and spin readouts, counts for excitation readout.
    /// Spin readout stores `N` outcomes per shot, shot-major.
    pub outcomes: Vec<f64>,
}

impl MeasurementRecord {
    /// `k` independent `±1` draws with mean `expectation`.
    pub fn bernoulli(readout: Readout, expectation: f64, k: usize, seed: u64) -> Result<Self> {
        check_shots(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes = bernoulli_draws(&mut rng, expectation, k)?;
        Ok(Self {
            readout,
            shots: k,
            seed,
            outcomes,
        })
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().sum::<f64>() / self.outcomes.len() as f64
    }

    /// Unbiased sample variance of a single outcome.
    pub fn variance(&self) -> f64 {
        let n = self.outcomes.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.outcomes.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }
}

fn check_shots(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("shots", "need at least one shot"));
    }
    Ok(())
}

fn bernoulli_draws(rng: &mut ChaCha8Rng, expectation: f64, k: usize) -> Result<Vec<f64>> {
    if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&expectation) {
        return Err(Error::invalid(
            "expectation",
            format!("a ±1 observable needs |⟨O⟩| <= 1, got {expectation}"),
        ));
    }
    let p_up = (0.5 * (1.0 + expectation)).clamp(0.0, 1.0);
    Ok((0..k).map(|_| if rng.random_bool(p_up) { 1.0 } else { -1.0 }).collect())
}

/// Draws `k` single-shot outcomes of the run's readout observable.
///
/// Spin readout treats the sites as independent, which is exact for the
/// uncoupled reference ensemble it is meant for.
pub fn simulate_shots(result: &ProtocolResult, k: usize, seed: u64) -> Result<MeasurementRecord> {
    check_shots(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes = match result.readout {
        Readout::Parity => bernoulli_draws(&mut rng, result.parity, k)?,
        Readout::Excitations => {
            let dist = WeightedIndex::new(result.excitation_distribution.iter().map(|p| p.max(0.0)))
                .map_err(|e| Error::Internal(format!("excitation distribution: {e}")))?;
            (0..k).map(|_| dist.sample(&mut rng) as f64).collect()
        }
        Readout::SpinX => {
            let mut out = Vec::with_capacity(k * result.n);
            for _ in 0..k {
                for &m in &result.spin_x {
                    out.extend(bernoulli_draws(&mut rng, m, 1)?);
                }
            }
            out
        }
    };
    Ok(MeasurementRecord {
        readout: result.readout,
        shots: k,
        seed,
        outcomes,
    })
}
