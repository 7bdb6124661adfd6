//! Hong-Ou-Mandel delay scans: Gaussian-wavepacket overlap model, rate
//! evaluation over a network, and Poisson count synthesis.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::optics::{coincidence_rate, ModeUnitary, OpticsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomError {
    #[error("spectral width sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("source indistinguishability V0 must lie in [0, 1], got {0}")]
    InvalidV0(f64),
    #[error("delay value is not finite")]
    NonFiniteDelay,
    #[error("rate parameter must be positive, got {0}")]
    InvalidRate(f64),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Phenomenological photon-pair source: Gaussian wavepackets of spectral
/// width σ (1/ps) and intrinsic indistinguishability V0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub sigma_inv_ps: f64,
    pub v0: f64,
}

impl SourceModel {
    pub fn validate(&self) -> Result<(), HomError> {
        if !(self.sigma_inv_ps > 0.0) {
            return Err(HomError::InvalidSigma(self.sigma_inv_ps));
        }
        if !(0.0..=1.0).contains(&self.v0) {
            return Err(HomError::InvalidV0(self.v0));
        }
        Ok(())
    }

    /// Wavepacket overlap at relative delay τ (carrier phase dropped):
    /// χ(τ) = √V0·exp(−σ²τ²/2).
    pub fn chi(&self, tau_ps: f64) -> Complex64 {
        let s = self.sigma_inv_ps * tau_ps;
        Complex64::new(self.v0.sqrt() * (-0.5 * s * s).exp(), 0.0)
    }
}

/// A delay-scanned coincidence curve, optionally with sampled counts.
#[derive(Debug, Clone)]
pub struct HomScan {
    pub delays_ps: Vec<f64>,
    /// Delay expressed as path length, c·τ (mm).
    pub delays_mm: Vec<f64>,
    /// Coincidence probability per delay.
    pub rates: Vec<f64>,
    pub counts: Option<Vec<u64>>,
    /// √counts, present when counts are (Poisson-statistics convention).
    pub errors: Option<Vec<f64>>,
}

/// Evaluates the coincidence curve of `pair` over the delays.
pub fn hom_scan(
    network: &ModeUnitary,
    input: (usize, usize),
    pair: (usize, usize),
    source: &SourceModel,
    delays_ps: &[f64],
) -> Result<HomScan, HomError> {
    source.validate()?;
    let mut rates = Vec::with_capacity(delays_ps.len());
    let mut delays_mm = Vec::with_capacity(delays_ps.len());
    for &tau in delays_ps {
        if !tau.is_finite() {
            return Err(HomError::NonFiniteDelay);
        }
        rates.push(coincidence_rate(network, input, pair, source.chi(tau))?);
        delays_mm.push(tau * crate::C_MM_PER_PS);
    }
    Ok(HomScan { delays_ps: delays_ps.to_vec(), delays_mm, rates, counts: None, errors: None })
}

/// Draws Poisson counts with mean rate·pair_rate·integration per delay.
/// Deterministic under a fixed seed.
pub fn sample_counts(
    scan: &HomScan,
    pair_rate_hz: f64,
    integration_s: f64,
    seed: u64,
) -> Result<HomScan, HomError> {
    if !(pair_rate_hz > 0.0) {
        return Err(HomError::InvalidRate(pair_rate_hz));
    }
    if !(integration_s > 0.0) {
        return Err(HomError::InvalidRate(integration_s));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(scan.rates.len());
    for &r in &scan.rates {
        let mean = r * pair_rate_hz * integration_s;
        let c = if mean <= 0.0 {
            0
        } else {
            Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as u64
        };
        counts.push(c);
    }
    let errors = counts.iter().map(|&c| (c as f64).sqrt()).collect();
    Ok(HomScan {
        delays_ps: scan.delays_ps.clone(),
        delays_mm: scan.delays_mm.clone(),
        rates: scan.rates.clone(),
        counts: Some(counts),
        errors: Some(errors),
    })
}
