//! 1-bit quantized uplink reception.
//!
//! The receiver keeps only the sign of the real and of the imaginary part of
//! every received sample: `Y[m,n] = sgn(h_m · x_n + w_mn)` with `w`
//! circularly-symmetric complex Gaussian noise of variance σ². The sign of
//! an exact zero is +1 — a deterministic tie-break that only matters in
//! noiseless unit tests.
//!
//! SNR is referenced per antenna-symbol: a channel set and a pilot power
//! define σ² = P_t · E[‖h‖²/M] / 10^(SNR/10), with the expectation over the
//! whole dataset so one σ² applies to every user at a nominal SNR.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, ChannelVector};
use crate::pilot::PilotSequence;
use crate::seed::derive_seed;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Complex sign
// ---------------------------------------------------------------------------

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Componentwise signum: `sign(Re z) + j · sign(Im z)`, with `sign(0) = +1`.
pub fn complex_sign(z: Complex64) -> Complex64 {
    Complex64::new(sign(z.re), sign(z.im))
}

// ---------------------------------------------------------------------------
// Quantized measurement
// ---------------------------------------------------------------------------

/// M×N matrix whose entries have real and imaginary parts in {+1, −1}.
///
/// Signs are stored in the normative vectorized layout: the M×N matrix is
/// flattened column-major to length MN, and the real block precedes the
/// imaginary block. This is exactly the network-input ordering and the
/// on-disk byte layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMeasurement {
    num_antennas: usize,
    pilot_len: usize,
    signs: Vec<i8>,
}

impl QuantizedMeasurement {
    /// Rebuild a measurement from stored signs (length 2·M·N, entries ±1).
    pub fn from_signs(num_antennas: usize, pilot_len: usize, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != 2 * num_antennas * pilot_len {
            return Err(Error::domain(format!(
                "expected {} sign components for a {num_antennas}x{pilot_len} measurement, got {}",
                2 * num_antennas * pilot_len,
                signs.len()
            )));
        }
        if let Some(pos) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::domain(format!(
                "sign component {pos} is {}, expected +1 or -1",
                signs[pos]
            )));
        }
        Ok(Self {
            num_antennas,
            pilot_len,
            signs,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    /// Entry (antenna `m`, symbol `n`) as a ±1±j complex value.
    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        let mn = self.num_antennas * self.pilot_len;
        let idx = n * self.num_antennas + m;
        Complex64::new(self.signs[idx] as f64, self.signs[mn + idx] as f64)
    }

    /// Signs in the normative vectorized order (real block, then imaginary).
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Number of differing ±1 components. Panics on dimension mismatch.
    pub fn hamming_distance(&self, other: &Self) -> usize {
        assert_eq!(self.signs.len(), other.signs.len(), "dimension mismatch");
        self.signs
            .iter()
            .zip(&other.signs)
            .filter(|(a, b)| a != b)
            .count()
    }
}

// ---------------------------------------------------------------------------
// Noise specification
// ---------------------------------------------------------------------------

/// Declarative noise mode, serialized in manifests and configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Noiseless,
    FixedSnrDb(f64),
    MixedSnrDb { low_db: f64, high_db: f64 },
}

/// Noise mode plus the seed all realizations derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            mode: NoiseMode::Noiseless,
            seed: 0,
        }
    }

    pub fn fixed(snr_db: f64, seed: u64) -> Self {
        Self {
            mode: NoiseMode::FixedSnrDb(snr_db),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseMode::MixedSnrDb { low_db, high_db } = self.mode {
            if !(low_db <= high_db) {
                return Err(Error::config(format!(
                    "mixed SNR range requires low <= high, got [{low_db}, {high_db}]"
                )));
            }
        }
        Ok(())
    }

    /// Resolve dB levels against a channel set's per-antenna energy.
    pub fn bind(&self, set: &ChannelSet, power: f64) -> Result<NoiseModel> {
        self.validate()?;
        let kind = match self.mode {
            NoiseMode::Noiseless => NoiseKind::Noiseless,
            NoiseMode::FixedSnrDb(snr_db) => NoiseKind::Fixed {
                sigma2: snr_to_sigma2(snr_db, set, power)?,
            },
            NoiseMode::MixedSnrDb { low_db, high_db } => NoiseKind::Mixed {
                ref_power: reference_power(set, power)?,
                low_db,
                high_db,
            },
        };
        Ok(NoiseModel {
            kind,
            seed: self.seed,
        })
    }

    /// Same mode with a seed derived for one user of a dataset.
    pub fn for_user(&self, user: usize) -> NoiseSpec {
        NoiseSpec {
            mode: self.mode,
            seed: derive_seed(self.seed, user as u64),
        }
    }

    /// Short stable label for reports, e.g. `0dB` or `mixed0to10dB`.
    pub fn label(&self) -> String {
        fn fmt_db(x: f64) -> String {
            if x == x.trunc() {
                format!("{}", x as i64)
            } else {
                format!("{x}")
            }
        }
        match self.mode {
            NoiseMode::Noiseless => "noiseless".to_string(),
            NoiseMode::FixedSnrDb(snr) => format!("{}dB", fmt_db(snr)),
            NoiseMode::MixedSnrDb { low_db, high_db } => {
                format!("mixed{}to{}dB", fmt_db(low_db), fmt_db(high_db))
            }
        }
    }
}

fn reference_power(set: &ChannelSet, power: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::domain("SNR reference needs a non-empty channel set"));
    }
    if !(power > 0.0) {
        return Err(Error::domain(format!(
            "pilot power must be positive, got {power}"
        )));
    }
    Ok(power * set.mean_antenna_energy())
}

/// σ² realizing `snr_db` with the per-antenna-symbol reference
/// `P_t · E[‖h‖²/M]`.
pub fn snr_to_sigma2(snr_db: f64, set: &ChannelSet, power: f64) -> Result<f64> {
    Ok(reference_power(set, power)? / 10f64.powf(snr_db / 10.0))
}

/// A noise spec resolved to linear variances, ready to drive a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NoiseKind {
    Noiseless,
    Fixed { sigma2: f64 },
    Mixed { ref_power: f64, low_db: f64, high_db: f64 },
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::Noiseless,
            seed: 0,
        }
    }

    /// Fixed noise variance, bypassing the dataset reference.
    pub fn fixed_sigma2(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::domain(format!(
                "noise variance must be finite and non-negative, got {sigma2}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Fixed { sigma2 },
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { kind: self.kind, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self.kind, NoiseKind::Noiseless)
    }
}

fn draw_noise(rng: &mut ChaCha8Rng, sigma2: f64) -> Complex64 {
    let scale = (sigma2 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

// ---------------------------------------------------------------------------
// Measurement simulation
// ---------------------------------------------------------------------------

/// Simulate `Y = sgn(h xᵀ + W)`.
///
/// Noise is drawn column-major (symbol-major), real part before imaginary
/// part, from a ChaCha stream seeded by the model seed; the mixed mode first
/// draws one SNR uniformly in dB for the whole call. Identical inputs give
/// bit-identical measurements.
pub fn simulate_measurement(
    h: &ChannelVector,
    pilot: &PilotSequence,
    noise: &NoiseModel,
) -> Result<QuantizedMeasurement> {
    if h.is_empty() {
        return Err(Error::domain("cannot simulate an empty channel"));
    }
    let m = h.len();
    let n = pilot.len();
    let mn = m * n;
    let mut signs = vec![0i8; 2 * mn];

    fn fill(
        signs: &mut [i8],
        h: &ChannelVector,
        pilot: &PilotSequence,
        mut sample: impl FnMut() -> Complex64,
    ) {
        let m = h.len();
        let mn = m * pilot.len();
        for (ni, &x) in pilot.symbols().iter().enumerate() {
            for (mi, &hm) in h.entries().iter().enumerate() {
                let v = hm * x + sample();
                let idx = ni * m + mi;
                signs[idx] = sign(v.re) as i8;
                signs[mn + idx] = sign(v.im) as i8;
            }
        }
    }

    match noise.kind {
        NoiseKind::Noiseless => fill(&mut signs, h, pilot, || Complex64::new(0.0, 0.0)),
        NoiseKind::Fixed { sigma2 } => {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            fill(&mut signs, h, pilot, || draw_noise(&mut rng, sigma2));
        }
        NoiseKind::Mixed {
            ref_power,
            low_db,
            high_db,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            let snr_db = if low_db == high_db {
                low_db
            } else {
                rng.random_range(low_db..high_db)
            };
            let sigma2 = ref_power / 10f64.powf(snr_db / 10.0);
            fill(&mut signs, h, pilot, || draw_noise(&mut rng, sigma2));
        }
    }

    QuantizedMeasurement::from_signs(m, n, signs)
}

/// Noiseless quantized signature `sgn(h xᵀ)` of a channel under a pilot.
pub fn noiseless_signature(h: &ChannelVector, pilot: &PilotSequence) -> Result<QuantizedMeasurement> {
    simulate_measurement(h, pilot, &NoiseModel::noiseless())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
