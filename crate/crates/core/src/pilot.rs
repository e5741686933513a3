//! Pilot sequence construction and mapping-existence analysis.
//!
//! A designed pilot of length `N` has symbol angles `kπ/(2N)`, k = 1…N —
//! an even sampling of the half-open interval `(0, π/2]` — and constant
//! per-symbol power. For a candidate channel set, the mapping angle
//!
//! ```text
//! α = min over pairs (u, v) of  max over antennas m of
//!     circdist(∠[h_u]_m, ∠[h_v]_m)
//! ```
//!
//! governs the pilot length `⌈π/(2α)⌉` that guarantees every pair of
//! channels produces distinct quantized signatures in the noiseless model.
//! Angle differences are wrapped to `[0, π]`; the quadrant-separation
//! argument only depends on separation up to π, and raw differences of
//! principal values would spuriously report up to 2π.
//!
//! The distinguishability report runs the pairwise signature check
//! exhaustively — it doubles as a diagnostic for datasets whose channels
//! cannot be separated by any pilot (α = 0).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::channel::{ChannelSet, ChannelVector};
use crate::quantize::{noiseless_signature, QuantizedMeasurement};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Pilot sequence
// ---------------------------------------------------------------------------

/// N complex pilot symbols with constant per-symbol power `P_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSequence {
    symbols: Vec<Complex64>,
    angles: Vec<f64>,
    power: f64,
}

impl PilotSequence {
    /// Build from explicit symbol angles (used when loading manifests).
    /// The angles are kept verbatim so a manifest round-trips bit-exactly.
    pub fn from_angles(angles: &[f64], power: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::domain("pilot sequence cannot be empty"));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::domain(format!(
                "pilot power must be positive and finite, got {power}"
            )));
        }
        let amplitude = power.sqrt();
        let symbols = angles
            .iter()
            .map(|&a| Complex64::from_polar(amplitude, a))
            .collect();
        Ok(Self {
            symbols,
            angles: angles.to_vec(),
            power,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Symbol angles in radians, as given at construction.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// Designed pilot: angles `kπ/(2n)` for k = 1…n (endpoint π/2 included,
/// 0 excluded), all symbols at power `P_t`.
pub fn design_pilot(n: usize, power: f64) -> Result<PilotSequence> {
    if n == 0 {
        return Err(Error::domain("pilot length must be at least 1"));
    }
    let angles: Vec<f64> = (1..=n).map(|k| k as f64 * PI / (2.0 * n as f64)).collect();
    PilotSequence::from_angles(&angles, power)
}

// ---------------------------------------------------------------------------
// Mapping angle
// ---------------------------------------------------------------------------

/// Circular distance between two principal-value angles, wrapped to `[0, π]`.
/// Symmetric bit-for-bit: |a−b| is exact under negation and both arguments
/// lie in (−π, π], so no modular reduction is needed.
fn circular_distance(a: f64, b: f64) -> f64 {
    let delta = (a - b).abs();
    if delta > PI {
        2.0 * PI - delta
    } else {
        delta
    }
}

/// Max over antennas of the circular distance between element phases.
pub fn pair_max_angle(u: &ChannelVector, v: &ChannelVector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "channel lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let mut max = 0.0f64;
    for (m, (a, b)) in u.entries().iter().zip(v.entries()).enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            return Err(Error::domain(format!(
                "first channel has a zero entry at element {m}; its phase is undefined"
            )));
        }
        if b.re == 0.0 && b.im == 0.0 {
            return Err(Error::domain(format!(
                "second channel has a zero entry at element {m}; its phase is undefined"
            )));
        }
        max = max.max(circular_distance(a.arg(), b.arg()));
    }
    Ok(max)
}

/// The mapping angle of a set together with the pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaReport {
    /// Eq-style min-max angle in radians; 0 marks a degenerate set.
    pub alpha: f64,
    /// Unordered channel index pair attaining the minimum.
    pub critical_pair: (usize, usize),
}

impl AlphaReport {
    /// A degenerate set contains a pair with element-wise equal phases;
    /// no pilot length can separate it.
    pub fn is_degenerate(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Exact min-over-pairs scan of [`pair_max_angle`], parallelized over the
/// leading index. Ties break toward the lexicographically smallest pair, so
/// parallel and sequential scans agree bit-for-bit.
pub fn compute_alpha(set: &ChannelSet) -> Result<AlphaReport> {
    let channels = set.channels();
    if channels.len() < 2 {
        return Err(Error::domain(
            "mapping angle needs at least two candidate channels",
        ));
    }
    for (i, ch) in channels.iter().enumerate() {
        if let Some(m) = ch
            .entries()
            .iter()
            .position(|z| z.re == 0.0 && z.im == 0.0)
        {
            return Err(Error::domain(format!(
                "channel {i} has a zero entry at element {m}; its phase is undefined"
            )));
        }
    }
    let phases: Vec<Vec<f64>> = channels
        .iter()
        .map(|ch| ch.entries().iter().map(|z| z.arg()).collect())
        .collect();

    let best = (0..channels.len() - 1)
        .into_par_iter()
        .map(|i| {
            let mut local = (f64::INFINITY, (usize::MAX, usize::MAX));
            for j in i + 1..channels.len() {
                let mut pair_max = 0.0f64;
                for (a, b) in phases[i].iter().zip(&phases[j]) {
                    pair_max = pair_max.max(circular_distance(*a, *b));
                }
                if (pair_max, (i, j)) < local {
                    local = (pair_max, (i, j));
                }
            }
            local
        })
        .reduce(
            || (f64::INFINITY, (usize::MAX, usize::MAX)),
            |a, b| if a <= b { a } else { b },
        );

    Ok(AlphaReport {
        alpha: best.0,
        critical_pair: best.1,
    })
}

// ---------------------------------------------------------------------------
// Pilot lengths
// ---------------------------------------------------------------------------

fn ceil_to_length(value: f64, what: &str) -> Result<usize> {
    if !value.is_finite() || value > 1e15 {
        return Err(Error::domain(format!(
            "{what} evaluates to {value}, beyond any practical pilot length"
        )));
    }
    Ok(value.ceil().max(1.0) as usize)
}

/// Minimum guaranteed pilot length `⌈π/(2α)⌉` for a mapping angle `α ∈ (0, π]`.
pub fn min_pilot_length(alpha: f64) -> Result<usize> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > PI {
        return Err(Error::domain(format!(
            "mapping angle must lie in (0, \u{3c0}], got {alpha}"
        )));
    }
    ceil_to_length(PI / (2.0 * alpha), "pi/(2 alpha)")
}

/// Closed-form pilot length for single-path half-wavelength ULA sets with
/// smallest AoA difference `δφ`: `⌈1 / ((M−1) · 4 sin²(δφ/2))⌉`.
pub fn corollary1_length(num_antennas: usize, delta_phi: f64) -> Result<usize> {
    if num_antennas < 2 {
        return Err(Error::domain(
            "closed-form length needs at least 2 antennas",
        ));
    }
    if !delta_phi.is_finite() || delta_phi <= 0.0 || delta_phi >= PI {
        return Err(Error::domain(format!(
            "AoA difference must lie in (0, \u{3c0}), got {delta_phi}"
        )));
    }
    let s = (delta_phi / 2.0).sin();
    let value = 1.0 / ((num_antennas - 1) as f64 * 4.0 * s * s);
    ceil_to_length(value, "closed-form pilot length")
}

// ---------------------------------------------------------------------------
// Distinguishability
// ---------------------------------------------------------------------------

/// Cap applied to the serialized pair list by default.
pub const DEFAULT_MAX_REPORTED_PAIRS: usize = 100;

/// Outcome of the exhaustive pairwise signature scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BijectivityReport {
    /// Mapping angle of the analyzed set.
    pub alpha: f64,
    /// `⌈π/(2α)⌉`, absent when the set is degenerate.
    pub min_pilot_length: Option<usize>,
    /// Pilot length the scan was run with.
    pub pilot_len: usize,
    pub pairs_total: usize,
    pub pairs_distinguishable: usize,
    /// Fraction of channels whose signature differs from every other's.
    pub channels_uniquely_identified_fraction: f64,
    pub undistinguishable_pairs: Vec<(usize, usize)>,
    pub degenerate: bool,
}

impl BijectivityReport {
    pub fn all_distinguishable(&self) -> bool {
        self.pairs_distinguishable == self.pairs_total
    }

    /// JSON form with the pair list capped at `max_pairs` entries.
    pub fn to_json(&self, max_pairs: usize) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(pairs) = value
            .get_mut("undistinguishable_pairs")
            .and_then(|p| p.as_array_mut())
        {
            let truncated = pairs.len() > max_pairs;
            pairs.truncate(max_pairs);
            value["undistinguishable_pairs_truncated"] = serde_json::Value::Bool(truncated);
        }
        value
    }
}

/// Count the channel pairs whose noiseless quantized signatures differ, and
/// the channels uniquely identified by their signature. Exhaustive scan.
pub fn distinguishability_report(
    set: &ChannelSet,
    pilot: &PilotSequence,
) -> Result<BijectivityReport> {
    let n = set.len();
    if n < 2 {
        return Err(Error::domain(
            "distinguishability needs at least two candidate channels",
        ));
    }
    let alpha = compute_alpha(set)?;

    let signatures: Vec<QuantizedMeasurement> = set
        .channels()
        .par_iter()
        .map(|h| noiseless_signature(h, pilot))
        .collect::<Result<_>>()?;

    let mut undistinguishable: Vec<(usize, usize)> = (0..n - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let sigs = &signatures;
            (i + 1..n).filter_map(move |j| (sigs[i] == sigs[j]).then_some((i, j)))
        })
        .collect();
    undistinguishable.sort_unstable();

    let mut unique = vec![true; n];
    for &(i, j) in &undistinguishable {
        unique[i] = false;
        unique[j] = false;
    }
    let pairs_total = n * (n - 1) / 2;
    let unique_count = unique.iter().filter(|&&u| u).count();

    Ok(BijectivityReport {
        alpha: alpha.alpha,
        min_pilot_length: if alpha.is_degenerate() {
            None
        } else {
            Some(min_pilot_length(alpha.alpha)?)
        },
        pilot_len: pilot.len(),
        pairs_total,
        pairs_distinguishable: pairs_total - undistinguishable.len(),
        channels_uniquely_identified_fraction: unique_count as f64 / n as f64,
        undistinguishable_pairs: undistinguishable,
        degenerate: alpha.is_degenerate(),
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
