//! Multiplicative `n`-bit noise on the communicated predecessor acceleration.
//!
//! The follower receives `w·a_{i-1}` with
//!
//! ```text
//! w = (1 − 1/ρ) + (1/ρ) Σ_{j=0}^{n-1} z_j / 2^j,   z_j ~ Bernoulli(γ_j)
//! ```
//!
//! so `w` always lies in `[1 − 1/ρ, 1 + 1/ρ)`. `ρ` is the minimum
//! signal-to-noise amplitude ratio; `ρ = ∞` is carried explicitly as
//! [`Snr::Noiseless`].

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, PlatoonError, Result};

/// Per-bit expectations used for the reference 16-bit channel.
pub const REFERENCE_BIT_PROBS: [f64; 16] = [
    0.8055, 0.5767, 0.1829, 0.2399, 0.8865, 0.0287, 0.4899, 0.1679, 0.9787, 0.7127, 0.5005, 0.4711,
    0.0596, 0.6820, 0.0424, 0.0714,
];

/// Signal-to-noise amplitude factor `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snr {
    Noiseless,
    Factor(f64),
}

impl Snr {
    pub fn from_factor(rho: f64) -> Result<Self> {
        if rho == f64::INFINITY {
            return Ok(Snr::Noiseless);
        }
        if rho.is_finite() && rho > 1.0 {
            Ok(Snr::Factor(rho))
        } else {
            Err(PlatoonError::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "SNR factor must exceed 1",
            })
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        snr_db_to_rho(db).map(Snr::Factor)
    }

    /// `ρ`, or `+∞` without noise.
    pub fn factor(&self) -> f64 {
        match *self {
            Snr::Noiseless => f64::INFINITY,
            Snr::Factor(rho) => rho,
        }
    }

    /// `1/ρ`; exactly zero without noise.
    pub fn inverse(&self) -> f64 {
        match *self {
            Snr::Noiseless => 0.0,
            Snr::Factor(rho) => 1.0 / rho,
        }
    }

    /// SNR in dB, `20·log10 ρ`.
    pub fn db(&self) -> f64 {
        20.0 * self.factor().log10()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Snr::Noiseless => Ok(()),
            Snr::Factor(rho) => Snr::from_factor(rho).map(|_| ()),
        }
    }
}

/// `ρ = 10^(ϱ/20)`; rejects non-positive dB values since they give `ρ ≤ 1`.
pub fn snr_db_to_rho(db: f64) -> Result<f64> {
    positive("snr_db", db)?;
    let rho = 10f64.powf(db / 20.0);
    if rho > 1.0 {
        Ok(rho)
    } else {
        Err(PlatoonError::InvalidParameter {
            name: "snr_db",
            value: db,
            reason: "too small to give rho > 1 in double precision",
        })
    }
}

/// Channel description: SNR factor and the per-bit expectations `γ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub snr: Snr,
    /// `γ_j = E[z_j]` for `j = 0..n`; the length is the bit count `n`.
    pub bit_probs: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(snr: Snr, bit_probs: Vec<f64>) -> Result<Self> {
        let spec = Self { snr, bit_probs };
        spec.validate()?;
        Ok(spec)
    }

    /// `ρ = 5` with the reference 16-bit expectations.
    pub fn reference() -> Self {
        Self {
            snr: Snr::Factor(5.0),
            bit_probs: REFERENCE_BIT_PROBS.to_vec(),
        }
    }

    /// Perfect link: `w ≡ 1`.
    pub fn noiseless() -> Self {
        Self {
            snr: Snr::Noiseless,
            bit_probs: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.snr.validate()?;
        if self.bit_probs.is_empty() && self.snr != Snr::Noiseless {
            return Err(PlatoonError::Channel(
                "a noisy channel needs at least one bit".into(),
            ));
        }
        for &g in &self.bit_probs {
            if !(g > 0.0 && g < 1.0) {
                return Err(PlatoonError::InvalidParameter {
                    name: "bit_probs",
                    value: g,
                    reason: "each bit expectation must lie strictly inside (0, 1)",
                });
            }
        }
        Ok(())
    }

    pub fn bits(&self) -> usize {
        self.bit_probs.len()
    }

    /// Noise factor for a given bit pattern. Also the deterministic override
    /// hook used to pin the all-zeros / all-ones extremes in tests.
    pub fn noise_factor_from_bits(&self, bits: &[bool]) -> NoiseFactorSample {
        let inv = self.snr.inverse();
        let sum: f64 = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(j, _)| weight(j))
            .sum();
        NoiseFactorSample((1.0 - inv) + inv * sum)
    }

    /// Closed interval every realisation of `w` lies in. The upper end is
    /// attained only in the `n → ∞` limit; see [`Self::max_attainable`].
    pub fn band(&self) -> (f64, f64) {
        let inv = self.snr.inverse();
        (1.0 - inv, 1.0 + inv)
    }

    /// Largest attainable `w` with finitely many bits: `1 + (1 − 2^{1−n})/ρ`.
    pub fn max_attainable(&self) -> f64 {
        let inv = self.snr.inverse();
        let n = self.bits() as i32;
        1.0 + inv - inv * 2f64.powi(1 - n)
    }

    /// Standard deviation of a single draw of `w`.
    pub fn noise_std(&self) -> f64 {
        let inv = self.snr.inverse();
        let var: f64 = self
            .bit_probs
            .iter()
            .enumerate()
            .map(|(j, &g)| g * (1.0 - g) * weight(j) * weight(j))
            .sum();
        inv * var.sqrt()
    }

    /// Prepared per-bit Bernoulli draws for repeated sampling.
    pub fn sampler(&self) -> NoiseSampler {
        NoiseSampler {
            inv: self.snr.inverse(),
            bits: self
                .bit_probs
                .iter()
                .enumerate()
                .map(|(j, &g)| (Bernoulli::new(g).expect("validated probability"), weight(j)))
                .collect(),
        }
    }
}

#[inline]
fn weight(j: usize) -> f64 {
    // 2^{-j}, exact for any realistic bit count
    f64::powi(0.5, j as i32)
}

/// One realisation of the noise factor `w`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseFactorSample(pub f64);

impl NoiseFactorSample {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSampler {
    inv: f64,
    bits: Vec<(Bernoulli, f64)>,
}

impl NoiseSampler {
    /// Draws the `n` bits independently and returns `w`. Always consumes
    /// exactly `n` Bernoulli draws so streams replay deterministically.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseFactorSample {
        let mut sum = 0.0;
        for (dist, w) in &self.bits {
            if dist.sample(rng) {
                sum += w;
            }
        }
        NoiseFactorSample((1.0 - self.inv) + self.inv * sum)
    }
}

pub fn sample_noise_factor<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> NoiseFactorSample {
    spec.sampler().sample(rng)
}

/// `w̄ = 1 − 1/ρ + (1/ρ) Σ γ_j / 2^j`.
pub fn expected_noise_factor(spec: &ChannelSpec) -> f64 {
    let inv = spec.snr.inverse();
    let sum: f64 = spec
        .bit_probs
        .iter()
        .enumerate()
        .map(|(j, &g)| g * weight(j))
        .sum();
    1.0 - inv + inv * sum
}

/// Averaged feedforward gain together with its worst-case interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveGain {
    /// `k̃_a = k_a·w̄`.
    pub nominal: f64,
    /// `(1 − 1/ρ)·k_a`.
    pub lower: f64,
    /// `(1 + 1/ρ)·k_a`.
    pub upper: f64,
}

impl EffectiveGain {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower && value <= self.upper
    }
}

/// Interval `I = [(1 − 1/ρ) k_a, (1 + 1/ρ) k_a]` that `k̃_a` can occupy when
/// the bit expectations are unknown.
pub fn ka_interval(ka: f64, snr: Snr) -> (f64, f64) {
    let inv = snr.inverse();
    ((1.0 - inv) * ka, (1.0 + inv) * ka)
}

pub fn effective_gain(ka: f64, spec: &ChannelSpec) -> Result<EffectiveGain> {
    positive("k_a", ka)?;
    let (lower, upper) = ka_interval(ka, spec.snr);
    Ok(EffectiveGain {
        nominal: ka * expected_noise_factor(spec),
        lower,
        upper,
    })
}

/// Independent random stream for link `i` (follower `i` receiving from
/// `i − 1`) under a given seed.
pub fn link_rng(seed: u64, link: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(link as u64);
    rng
}

/// Seed of Monte-Carlo run `run` derived from a master seed (SplitMix64
/// finaliser, so neighbouring runs get unrelated streams).
pub fn run_seed(master: u64, run: u64) -> u64 {
    let mut z = master ^ run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
