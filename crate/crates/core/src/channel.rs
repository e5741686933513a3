//! Geometric multipath channel synthesis over a uniform linear array.
//!
//! A channel between a single-antenna user and an `M`-antenna base station
//! is a sum of `L` propagation paths, each with a complex gain and an angle
//! of arrival in `[0, π)`. The array response convention is
//!
//! ```text
//! [a(φ)]_m = exp(j · 2π · d · m · cos φ),   m = 0 … M−1
//! ```
//!
//! with `d` the element spacing in carrier wavelengths (0.5 for the
//! half-wavelength ULA). Scenario generation draws per-user path parameters
//! from seeds split per user, so regenerating the same scenario at a
//! different antenna count reuses the same physical paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed::derive_seed;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Uniform linear array: antenna count and element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    num_antennas: usize,
    element_spacing: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, element_spacing: f64) -> Result<Self> {
        if num_antennas < 1 {
            return Err(Error::domain("array needs at least one antenna"));
        }
        if !(element_spacing > 0.0) || !element_spacing.is_finite() {
            return Err(Error::domain(format!(
                "element spacing must be positive and finite, got {element_spacing}"
            )));
        }
        Ok(Self {
            num_antennas,
            element_spacing,
        })
    }

    /// Half-wavelength ULA with `m` antennas.
    pub fn ula(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }
}

/// One propagation path: complex gain and angle of arrival in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aoa: f64,
}

impl PathComponent {
    pub fn new(gain: Complex64, aoa: f64) -> Result<Self> {
        check_aoa(aoa)?;
        Ok(Self { gain, aoa })
    }
}

fn check_aoa(aoa: f64) -> Result<()> {
    if !aoa.is_finite() || !(0.0..PI).contains(&aoa) {
        return Err(Error::domain(format!(
            "angle of arrival {aoa} outside [0, \u{3c0})"
        )));
    }
    Ok(())
}

/// Scenario tags carried by generated channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub user_index: usize,
    /// Angles of arrival of the paths this channel was synthesized from.
    pub aoas: Vec<f64>,
}

/// Complex gain per base-station antenna (length `M`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
    meta: Option<ChannelMeta>,
}

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries, meta: None }
    }

    pub fn with_meta(entries: Vec<Complex64>, meta: ChannelMeta) -> Self {
        Self {
            entries,
            meta: Some(meta),
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn meta(&self) -> Option<&ChannelMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Squared Euclidean norm ‖h‖².
    pub fn energy(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Keep only the first `m` antennas. Used when slicing file-ingested
    /// sets to a smaller array.
    pub fn truncated(&self, m: usize) -> ChannelVector {
        ChannelVector {
            entries: self.entries[..m].to_vec(),
            meta: self.meta.clone(),
        }
    }
}

/// A candidate channel set: all channels share one geometry, are pairwise
/// distinct, and none is the zero vector (∠0 is undefined in the mapping
/// angle, so degenerate channels are rejected at admission).
#[derive(Debug, Clone)]
pub struct ChannelSet {
    channels: Vec<ChannelVector>,
    geometry: ArrayGeometry,
    seed: u64,
    num_paths: usize,
    min_aoa_separation: Option<f64>,
}

impl ChannelSet {
    pub fn new(
        geometry: ArrayGeometry,
        channels: Vec<ChannelVector>,
        seed: u64,
        num_paths: usize,
    ) -> Result<Self> {
        if num_paths < 1 {
            return Err(Error::domain("num_paths must be at least 1"));
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != geometry.num_antennas() {
                return Err(Error::domain(format!(
                    "channel {i} has length {} but geometry has {} antennas",
                    ch.len(),
                    geometry.num_antennas()
                )));
            }
            if ch.is_zero() {
                return Err(Error::domain(format!(
                    "channel {i} is the zero vector and cannot join a candidate set"
                )));
            }
        }
        // Pairwise distinctness via sorted bit patterns; exact complex equality.
        let mut keys: Vec<(Vec<u64>, usize)> = channels
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                let bits = ch
                    .entries()
                    .iter()
                    .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                    .collect();
                (bits, i)
            })
            .collect();
        keys.sort();
        for w in keys.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::domain(format!(
                    "channels {} and {} are identical complex vectors",
                    w[0].1.min(w[1].1),
                    w[0].1.max(w[1].1)
                )));
            }
        }
        Ok(Self {
            channels,
            geometry,
            seed,
            num_paths,
            min_aoa_separation: None,
        })
    }

    pub fn channels(&self) -> &[ChannelVector] {
        &self.channels
    }

    pub fn geometry(&self) -> ArrayGeometry {
        self.geometry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    /// Smallest angular gap of the scenario's AoA grid, when known.
    pub fn min_aoa_separation(&self) -> Option<f64> {
        self.min_aoa_separation
    }

    pub fn set_min_aoa_separation(&mut self, sep: Option<f64>) {
        self.min_aoa_separation = sep;
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Mean over the set of ‖h‖²/M — the per-antenna channel energy that
    /// anchors the SNR definition.
    pub fn mean_antenna_energy(&self) -> f64 {
        let m = self.geometry.num_antennas() as f64;
        let n = self.channels.len() as f64;
        self.channels.iter().map(|h| h.energy() / m).sum::<f64>() / n
    }
}

// ---------------------------------------------------------------------------
// Array response and channel synthesis
// ---------------------------------------------------------------------------

/// Array response vector `a(φ)` with unit-magnitude entries.
pub fn array_response(geometry: &ArrayGeometry, aoa: f64) -> Result<ChannelVector> {
    check_aoa(aoa)?;
    let phase_step = 2.0 * PI * geometry.element_spacing() * aoa.cos();
    let entries = (0..geometry.num_antennas())
        .map(|m| Complex64::from_polar(1.0, phase_step * m as f64))
        .collect();
    Ok(ChannelVector::new(entries))
}

/// Geometric channel h = Σ_ℓ gain_ℓ · a(φ_ℓ).
pub fn synthesize_channel(
    geometry: &ArrayGeometry,
    paths: &[PathComponent],
) -> Result<ChannelVector> {
    if paths.is_empty() {
        return Err(Error::domain("channel synthesis needs at least one path"));
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); geometry.num_antennas()];
    for path in paths {
        let response = array_response(geometry, path.aoa)?;
        for (acc, a) in entries.iter_mut().zip(response.entries()) {
            *acc += path.gain * a;
        }
    }
    Ok(ChannelVector::new(entries))
}

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

/// How user grid angles are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaGrid {
    /// Users at `{k · min_separation}`, k = 0 … num_users−1.
    Even { min_separation: f64 },
    /// One explicit nominal angle per user.
    Explicit(Vec<f64>),
}

/// Per-path complex gain model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// All gains exactly 1 — the closed-form single-path setting.
    Unit,
    /// Circularly-symmetric complex Gaussian, variance 1/L per path.
    ComplexGaussian,
    /// Constant-magnitude gains whose phase tracks the user position: path
    /// ℓ gets `exp(j(ψ_ℓ + κ_ℓ·φ_user))` with scenario-level ψ_ℓ and κ_ℓ.
    /// Models the path-length phase rotation a grid of users sees from a
    /// fixed transmitter and scatterers, so channels stay a smooth function
    /// of the grid angle while no two users share a phase profile.
    UnitModulus,
}

/// Declarative synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub num_users: usize,
    pub num_paths: usize,
    pub aoa_grid: AoaGrid,
    pub gain_model: GainModel,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Nominal grid angle per user, checked for feasibility in `[0, π)`.
    fn grid_angles(&self) -> Result<Vec<f64>> {
        match &self.aoa_grid {
            AoaGrid::Even { min_separation } => {
                if !(min_separation > &0.0) {
                    return Err(Error::config(format!(
                        "grid separation must be positive, got {min_separation}"
                    )));
                }
                let span = min_separation * (self.num_users.saturating_sub(1)) as f64;
                if span >= PI {
                    return Err(Error::config(format!(
                        "{} users spaced {min_separation} rad span {span:.4} rad, \
                         which does not fit in [0, \u{3c0})",
                        self.num_users
                    )));
                }
                Ok((0..self.num_users)
                    .map(|k| k as f64 * min_separation)
                    .collect())
            }
            AoaGrid::Explicit(angles) => {
                if angles.len() != self.num_users {
                    return Err(Error::config(format!(
                        "explicit grid has {} angles for {} users",
                        angles.len(),
                        self.num_users
                    )));
                }
                for &a in angles {
                    check_aoa(a)?;
                }
                Ok(angles.clone())
            }
        }
    }

    fn min_grid_separation(&self, angles: &[f64]) -> Option<f64> {
        if angles.len() < 2 {
            return None;
        }
        match &self.aoa_grid {
            AoaGrid::Even { min_separation } => Some(*min_separation),
            AoaGrid::Explicit(_) => {
                let mut sorted = angles.to_vec();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                sorted
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .min_by(|a, b| a.partial_cmp(b).unwrap())
            }
        }
    }
}

/// Deterministic per-user path draw.
///
/// The first path arrives from the user's grid angle. Further paths model a
/// static environment: each scenario draws one scatterer direction β_ℓ per
/// extra path, and user `u` sees that path from the mirror direction
/// `2β_ℓ − φ_u`, folded back into `[0, π)`. Neighboring users therefore see
/// neighboring multipath geometry, the way a user grid in a fixed room
/// does. Gains follow the gain model, with Gaussian gains scaled to
/// variance 1/L. Per-user draws use a seed derived from `(seed, user)` and
/// scenario-level draws use a reserved stream, so regenerating at another
/// antenna count reuses identical paths.
pub fn scenario_paths(config: &ScenarioConfig, user: usize) -> Result<Vec<PathComponent>> {
    if config.num_paths < 1 {
        return Err(Error::config("num_paths must be at least 1"));
    }
    let grid = config.grid_angles()?;
    let nominal = *grid
        .get(user)
        .ok_or_else(|| Error::domain(format!("user {user} outside scenario")))?;
    // Stream u64::MAX is reserved for the environment; users use their index.
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX));
    let mut user_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, user as u64));
    let mut paths = Vec::with_capacity(config.num_paths);
    for p in 0..config.num_paths {
        // Scenario-level environment: one scatterer direction and one phase
        // law per path, drawn in a fixed order for every user and model.
        let scatterer = env_rng.random_range(0.0..PI);
        let phase_rate = env_rng.random_range(120.0..240.0f64);
        let phase_offset = env_rng.random_range(0.0..2.0 * PI);
        let aoa = if p == 0 {
            nominal
        } else {
            (2.0 * scatterer - nominal).rem_euclid(PI)
        };
        let gain = match config.gain_model {
            GainModel::Unit => Complex64::new(1.0, 0.0),
            GainModel::ComplexGaussian => {
                let scale = (1.0 / (2.0 * config.num_paths as f64)).sqrt();
                let re: f64 = user_rng.sample(StandardNormal);
                let im: f64 = user_rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            }
            GainModel::UnitModulus => {
                Complex64::from_polar(1.0, phase_offset + phase_rate * nominal)
            }
        };
        paths.push(PathComponent::new(gain, aoa)?);
    }
    Ok(paths)
}

/// Generate a reproducible user-grid scenario.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<ChannelSet> {
    if config.num_users < 1 {
        return Err(Error::config("scenario needs at least one user"));
    }
    let grid = config.grid_angles()?;
    let mut channels = Vec::with_capacity(config.num_users);
    for user in 0..config.num_users {
        let paths = scenario_paths(config, user)?;
        let h = synthesize_channel(&config.geometry, &paths)?;
        let meta = ChannelMeta {
            user_index: user,
            aoas: paths.iter().map(|p| p.aoa).collect(),
        };
        channels.push(ChannelVector::with_meta(h.entries().to_vec(), meta));
    }
    let mut set = ChannelSet::new(config.geometry, channels, config.seed, config.num_paths)?;
    set.set_min_aoa_separation(config.min_grid_separation(&grid));
    Ok(set)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn assert_close(z: Complex64, w: Complex64, tol: f64) {
        assert!(
            (z - w).norm() <= tol,
            "expected {w}, got {z} (|diff| = {})",
            (z - w).norm()
        );
    }

    #[test]
    fn array_response_broadside_is_all_ones() {
        let g = ArrayGeometry::ula(4).unwrap();
        let a = array_response(&g, PI / 2.0).unwrap();
        for &z in a.entries() {
            assert_close(z, Complex64::new(1.0, 0.0), TOL);
        }
    }

    #[test]
    fn array_response_endfire_alternates_sign() {
        let g = ArrayGeometry::ula(2).unwrap();
        let a = array_response(&g, 0.0).unwrap();
        assert_close(a.entries()[0], Complex64::new(1.0, 0.0), TOL);
        assert_close(a.entries()[1], Complex64::new(-1.0, 0.0), TOL);
    }

    #[test]
    fn array_response_sixty_degrees_quarter_turns() {
        // cos(π/3) = 1/2 → phases {0, π/2, π}.
        let g = ArrayGeometry::ula(3).unwrap();
        let a = array_response(&g, PI / 3.0).unwrap();
        assert_close(a.entries()[0], Complex64::new(1.0, 0.0), TOL);
        assert_close(a.entries()[1], Complex64::new(0.0, 1.0), TOL);
        assert_close(a.entries()[2], Complex64::new(-1.0, 0.0), TOL);
    }

    #[test]
    fn array_response_entries_have_unit_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.random_range(1..=64);
            let d = rng.random_range(0.1..2.0);
            let aoa = rng.random_range(0.0..PI);
            let g = ArrayGeometry::new(m, d).unwrap();
            let a = array_response(&g, aoa).unwrap();
            for &z in a.entries() {
                assert!((z.norm() - 1.0).abs() <= TOL);
            }
        }
    }

    #[test]
    fn array_response_rejects_out_of_range_aoa() {
        let g = ArrayGeometry::ula(4).unwrap();
        assert!(matches!(array_response(&g, -0.1), Err(Error::Domain(_))));
        assert!(matches!(array_response(&g, PI), Err(Error::Domain(_))));
        assert!(matches!(
            array_response(&g, f64::NAN),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn synthesize_single_unit_path_equals_response() {
        let g = ArrayGeometry::ula(4).unwrap();
        let path = PathComponent::new(Complex64::new(1.0, 0.0), PI / 2.0).unwrap();
        let h = synthesize_channel(&g, &[path]).unwrap();
        let a = array_response(&g, PI / 2.0).unwrap();
        assert_eq!(h.entries(), a.entries());
    }

    #[test]
    fn synthesize_opposite_gains_cancel() {
        let g = ArrayGeometry::ula(3).unwrap();
        let aoa = 0.7;
        let paths = [
            PathComponent::new(Complex64::new(1.0, 0.0), aoa).unwrap(),
            PathComponent::new(Complex64::new(-1.0, 0.0), aoa).unwrap(),
        ];
        let h = synthesize_channel(&g, &paths).unwrap();
        for &z in h.entries() {
            assert_close(z, Complex64::new(0.0, 0.0), TOL);
        }
    }

    #[test]
    fn synthesize_two_path_hand_case() {
        // gains {1, j}, aoas {π/2, 0}, M=2 → 1·[1,1] + j·[1,−1] = [1+j, 1−j].
        let g = ArrayGeometry::ula(2).unwrap();
        let paths = [
            PathComponent::new(Complex64::new(1.0, 0.0), PI / 2.0).unwrap(),
            PathComponent::new(Complex64::new(0.0, 1.0), 0.0).unwrap(),
        ];
        let h = synthesize_channel(&g, &paths).unwrap();
        assert_close(h.entries()[0], Complex64::new(1.0, 1.0), TOL);
        assert_close(h.entries()[1], Complex64::new(1.0, -1.0), TOL);
    }

    #[test]
    fn synthesize_rejects_empty_paths() {
        let g = ArrayGeometry::ula(2).unwrap();
        assert!(matches!(synthesize_channel(&g, &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn synthesis_is_linear_in_paths() {
        let g = ArrayGeometry::ula(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let draw = |rng: &mut ChaCha8Rng| {
                PathComponent::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(0.0..PI),
                )
                .unwrap()
            };
            let a: Vec<_> = (0..3).map(|_| draw(&mut rng)).collect();
            let b: Vec<_> = (0..2).map(|_| draw(&mut rng)).collect();
            let mut joined = a.clone();
            joined.extend_from_slice(&b);
            let sum = synthesize_channel(&g, &joined).unwrap();
            let ha = synthesize_channel(&g, &a).unwrap();
            let hb = synthesize_channel(&g, &b).unwrap();
            for ((s, x), y) in sum.entries().iter().zip(ha.entries()).zip(hb.entries()) {
                assert_close(*s, x + y, TOL);
            }
        }
    }

    #[test]
    fn conjugate_symmetry_at_half_wavelength() {
        // Conjugating gains and mirroring aoas (φ → π−φ) conjugates h when
        // d = 0.5, since cos(π−φ) = −cos φ.
        let g = ArrayGeometry::ula(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let paths: Vec<PathComponent> = (0..3)
                .map(|_| {
                    PathComponent::new(
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        rng.random_range(1e-6..PI - 1e-6),
                    )
                    .unwrap()
                })
                .collect();
            let mirrored: Vec<PathComponent> = paths
                .iter()
                .map(|p| PathComponent::new(p.gain.conj(), PI - p.aoa).unwrap())
                .collect();
            let h = synthesize_channel(&g, &paths).unwrap();
            let hm = synthesize_channel(&g, &mirrored).unwrap();
            for (a, b) in h.entries().iter().zip(hm.entries()) {
                assert_close(b.conj(), *a, TOL);
            }
        }
    }

    fn demo_scenario() -> ScenarioConfig {
        ScenarioConfig {
            geometry: ArrayGeometry::ula(8).unwrap(),
            num_users: 10,
            num_paths: 1,
            aoa_grid: AoaGrid::Even {
                min_separation: 0.3,
            },
            gain_model: GainModel::Unit,
            seed: 7,
        }
    }

    #[test]
    fn scenario_single_path_unit_gain_is_pure_response() {
        let cfg = demo_scenario();
        let set = generate_scenario(&cfg).unwrap();
        assert_eq!(set.len(), 10);
        for (k, ch) in set.channels().iter().enumerate() {
            let a = array_response(&cfg.geometry, k as f64 * 0.3).unwrap();
            assert_eq!(ch.entries(), a.entries());
            assert_eq!(ch.meta().unwrap().user_index, k);
        }
        assert_eq!(set.min_aoa_separation(), Some(0.3));
    }

    #[test]
    fn scenario_is_bit_reproducible() {
        let cfg = ScenarioConfig {
            num_paths: 3,
            gain_model: GainModel::ComplexGaussian,
            ..demo_scenario()
        };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        for (x, y) in a.channels().iter().zip(b.channels()) {
            for (p, q) in x.entries().iter().zip(y.entries()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
    }

    #[test]
    fn scenario_multipath_matches_independent_sum() {
        // Recompute each user's channel with bare complex arithmetic from the
        // recorded path draws.
        let cfg = ScenarioConfig {
            num_paths: 3,
            gain_model: GainModel::ComplexGaussian,
            ..demo_scenario()
        };
        let set = generate_scenario(&cfg).unwrap();
        for (user, ch) in set.channels().iter().enumerate() {
            let paths = scenario_paths(&cfg, user).unwrap();
            for m in 0..8 {
                let mut expect = Complex64::new(0.0, 0.0);
                for p in &paths {
                    let phase = 2.0 * PI * 0.5 * m as f64 * p.aoa.cos();
                    expect += p.gain * Complex64::new(phase.cos(), phase.sin());
                }
                assert_close(ch.entries()[m], expect, 1e-10);
            }
        }
    }

    #[test]
    fn scenario_rejects_infeasible_separation() {
        let cfg = ScenarioConfig {
            num_users: 10,
            aoa_grid: AoaGrid::Even {
                min_separation: 0.5,
            },
            ..demo_scenario()
        };
        // span 4.5 rad ≥ π
        assert!(matches!(generate_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn channel_set_rejects_zero_and_duplicate_channels() {
        let g = ArrayGeometry::ula(2).unwrap();
        let zero = ChannelVector::new(vec![Complex64::new(0.0, 0.0); 2]);
        let one = ChannelVector::new(vec![Complex64::new(1.0, 0.0); 2]);
        assert!(matches!(
            ChannelSet::new(g, vec![one.clone(), zero], 0, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ChannelSet::new(g, vec![one.clone(), one], 0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mean_antenna_energy_of_unit_responses_is_one() {
        let set = generate_scenario(&demo_scenario()).unwrap();
        assert!((set.mean_antenna_energy() - 1.0).abs() < TOL);
    }
}
