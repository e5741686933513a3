//! Dataset containers: a JSON manifest next to a raw binary blob.
//!
//! Channel sets store `num_users · M · 2` little-endian f64 values,
//! interleaved (Re, Im) per entry and row-major by user. Quantized
//! measurement sets store `num_users · 2·M·N` signed bytes (±1 per real
//! component) in the normative vectorized order (column-major matrix
//! flattening, real block before imaginary block).
//!
//! The manifest path names the dataset; the blob sits next to it with a
//! `.bin` extension. Readers accept any minor revision of the current major
//! format version and reject newer majors.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelSet, ChannelVector};
use crate::pilot::PilotSequence;
use crate::quantize::{NoiseSpec, QuantizedMeasurement};
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u32 = 1;

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

fn check_version(path: &Path, version: &str) -> Result<()> {
    let major: u32 = version
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| {
            Error::parse(
                path.display().to_string(),
                format!("malformed format_version {version:?}"),
            )
        })?;
    if major > SUPPORTED_MAJOR {
        return Err(Error::parse(
            path.display().to_string(),
            format!("format_version {version} is newer than supported major {SUPPORTED_MAJOR}"),
        ));
    }
    Ok(())
}

fn read_manifest<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

// ---------------------------------------------------------------------------
// Channel datasets
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ChannelManifest {
    format_version: String,
    #[serde(rename = "M")]
    m: usize,
    num_users: usize,
    #[serde(rename = "L")]
    l: usize,
    seed: u64,
    complex_layout: String,
    dtype: String,
    element_spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_aoa_separation: Option<f64>,
}

/// Write a channel set as `<path>` (manifest) plus `<path with .bin>` (blob).
pub fn save_channels(set: &ChannelSet, manifest_path: &Path) -> Result<()> {
    let manifest = ChannelManifest {
        format_version: FORMAT_VERSION.to_string(),
        m: set.geometry().num_antennas(),
        num_users: set.len(),
        l: set.num_paths(),
        seed: set.seed(),
        complex_layout: "interleaved_re_im".to_string(),
        dtype: "f64_le".to_string(),
        element_spacing: set.geometry().element_spacing(),
        min_aoa_separation: set.min_aoa_separation(),
    };
    let mut blob = Vec::with_capacity(set.len() * manifest.m * 16);
    for ch in set.channels() {
        for z in ch.entries() {
            blob.extend_from_slice(&z.re.to_le_bytes());
            blob.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    if let Some(dir) = manifest_path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(blob_path(manifest_path), blob)?;
    Ok(())
}

/// Load a channel set saved by [`save_channels`]; bit-exact round trip.
pub fn load_channels(manifest_path: &Path) -> Result<ChannelSet> {
    let loc = || manifest_path.display().to_string();
    let manifest: ChannelManifest = read_manifest(manifest_path)?;
    check_version(manifest_path, &manifest.format_version)?;
    if manifest.complex_layout != "interleaved_re_im" {
        return Err(Error::parse(
            loc(),
            format!("unsupported complex_layout {:?}", manifest.complex_layout),
        ));
    }
    if manifest.dtype != "f64_le" {
        return Err(Error::parse(
            loc(),
            format!("unsupported dtype {:?}", manifest.dtype),
        ));
    }

    let blob = fs::read(blob_path(manifest_path))?;
    let expected = manifest.num_users * manifest.m * 16;
    if blob.len() != expected {
        return Err(Error::parse(
            loc(),
            format!(
                "blob holds {} bytes but manifest (M={}, num_users={}) requires {expected}",
                blob.len(),
                manifest.m,
                manifest.num_users
            ),
        ));
    }

    let geometry = ArrayGeometry::new(manifest.m, manifest.element_spacing)?;
    let mut channels = Vec::with_capacity(manifest.num_users);
    for user in 0..manifest.num_users {
        let mut entries = Vec::with_capacity(manifest.m);
        for k in 0..manifest.m {
            let off = (user * manifest.m + k) * 16;
            let re = f64::from_le_bytes(blob[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(blob[off + 8..off + 16].try_into().unwrap());
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::parse(
                    loc(),
                    format!("non-finite channel entry for user {user}, antenna {k}"),
                ));
            }
            entries.push(Complex64::new(re, im));
        }
        channels.push(ChannelVector::new(entries));
    }
    let mut set = ChannelSet::new(geometry, channels, manifest.seed, manifest.l)?;
    set.set_min_aoa_separation(manifest.min_aoa_separation);
    Ok(set)
}

// ---------------------------------------------------------------------------
// Measurement datasets
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct PilotManifest {
    angles: Vec<f64>,
    power: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementManifest {
    format_version: String,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    num_users: usize,
    pilot: PilotManifest,
    noise: NoiseSpec,
    snr_reference: String,
    layout: String,
}

/// Write per-user quantized measurements next to their generating pilot and
/// noise spec.
pub fn save_measurements(
    measurements: &[QuantizedMeasurement],
    pilot: &PilotSequence,
    noise: &NoiseSpec,
    manifest_path: &Path,
) -> Result<()> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::domain("cannot save an empty measurement dataset"))?;
    let (m, n) = (first.num_antennas(), first.pilot_len());
    if n != pilot.len() {
        return Err(Error::domain(format!(
            "measurements have {} symbols but pilot has {}",
            n,
            pilot.len()
        )));
    }
    for (u, y) in measurements.iter().enumerate() {
        if y.num_antennas() != m || y.pilot_len() != n {
            return Err(Error::domain(format!(
                "measurement {u} is {}x{}, expected {m}x{n}",
                y.num_antennas(),
                y.pilot_len()
            )));
        }
    }
    let manifest = MeasurementManifest {
        format_version: FORMAT_VERSION.to_string(),
        m,
        n,
        num_users: measurements.len(),
        pilot: PilotManifest {
            angles: pilot.angles().to_vec(),
            power: pilot.power(),
        },
        noise: *noise,
        snr_reference: "per_antenna_symbol".to_string(),
        layout: "vectorized_re_im_i8".to_string(),
    };
    let mut blob = Vec::with_capacity(measurements.len() * 2 * m * n);
    for y in measurements {
        blob.extend(y.signs().iter().map(|&s| s as u8));
    }
    if let Some(dir) = manifest_path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    fs::write(blob_path(manifest_path), blob)?;
    Ok(())
}

/// Load a measurement dataset; returns the per-user measurements together
/// with the pilot and noise spec that produced them.
pub fn load_measurements(
    manifest_path: &Path,
) -> Result<(Vec<QuantizedMeasurement>, PilotSequence, NoiseSpec)> {
    let loc = || manifest_path.display().to_string();
    let manifest: MeasurementManifest = read_manifest(manifest_path)?;
    check_version(manifest_path, &manifest.format_version)?;
    if manifest.layout != "vectorized_re_im_i8" {
        return Err(Error::parse(
            loc(),
            format!("unsupported layout {:?}", manifest.layout),
        ));
    }
    if manifest.pilot.angles.len() != manifest.n {
        return Err(Error::parse(
            loc(),
            format!(
                "pilot has {} angles but manifest declares N={}",
                manifest.pilot.angles.len(),
                manifest.n
            ),
        ));
    }

    let blob = fs::read(blob_path(manifest_path))?;
    let per_user = 2 * manifest.m * manifest.n;
    let expected = manifest.num_users * per_user;
    if blob.len() != expected {
        return Err(Error::parse(
            loc(),
            format!(
                "blob holds {} bytes but manifest (M={}, N={}, num_users={}) requires {expected}",
                blob.len(),
                manifest.m,
                manifest.n,
                manifest.num_users
            ),
        ));
    }

    let mut measurements = Vec::with_capacity(manifest.num_users);
    for user in 0..manifest.num_users {
        let signs: Vec<i8> = blob[user * per_user..(user + 1) * per_user]
            .iter()
            .map(|&b| b as i8)
            .collect();
        let y = QuantizedMeasurement::from_signs(manifest.m, manifest.n, signs)
            .map_err(|e| Error::parse(loc(), format!("user {user}: {e}")))?;
        measurements.push(y);
    }
    let pilot = PilotSequence::from_angles(&manifest.pilot.angles, manifest.pilot.power)?;
    manifest.noise.validate()?;
    Ok((measurements, pilot, manifest.noise))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
