//! Radargram file format and run configuration.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size      | field                         |
//! |--------|-----------|-------------------------------|
//! | 0      | 4         | magic `"UWBR"`                |
//! | 4      | 4         | format version, u32 (= 1)     |
//! | 8      | 4         | M, fast-time samples, u32     |
//! | 12     | 4         | N, traces, u32                |
//! | 16     | 8         | dt_fast, f64 seconds          |
//! | 24     | 8         | dt_slow, f64 seconds          |
//! | 32     | M * N * 8 | samples, f64, range-bin major |
//!
//! Samples are stored bin-major: bin 0's N slow-time samples, then bin 1's,
//! and so on. Everything is binary64; round trips are bit-exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dims, PipelineConfig, Radargram};
use crate::simulator::{PulseModel, SceneConfig};

const MAGIC: [u8; 4] = *b"UWBR";
const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Serializes a radargram. The write is atomic: a temporary file in the
/// destination directory is renamed over the target.
pub fn write_radargram(path: &Path, g: &Radargram) -> Result<()> {
    let m = g.num_bins();
    let n = g.num_traces();
    let mut buf = Vec::with_capacity(HEADER_LEN + m * n * 8);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&(FORMAT_VERSION).to_le_bytes());
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&g.dt_fast().to_le_bytes());
    buf.extend_from_slice(&g.dt_slow().to_le_bytes());
    for bin in 0..m {
        for trace in 0..n {
            buf.extend_from_slice(&g.samples()[[bin, trace]].to_le_bytes());
        }
    }

    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(&buf)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a radargram, rejecting bad magic, unknown versions, truncated or
/// oversized payloads, and non-finite samples — each as a distinct error.
pub fn read_radargram(path: &Path) -> Result<Radargram> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[..4]);
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { version });
    }
    let m = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let n = LittleEndian::read_u32(&bytes[12..16]) as usize;
    let dt_fast = LittleEndian::read_f64(&bytes[16..24]);
    let dt_slow = LittleEndian::read_f64(&bytes[24..32]);

    let expected = HEADER_LEN as u64 + (m as u64) * (n as u64) * 8;
    if (bytes.len() as u64) < expected {
        return Err(Error::TruncatedFile {
            expected,
            actual: bytes.len() as u64,
        });
    }
    if (bytes.len() as u64) > expected {
        return Err(Error::TrailingData {
            extra: bytes.len() as u64 - expected,
        });
    }

    let payload = &bytes[HEADER_LEN..];
    let samples = Array2::from_shape_fn((m, n), |(bin, trace)| {
        let off = (bin * n + trace) * 8;
        LittleEndian::read_f64(&payload[off..off + 8])
    });
    if let Some(((bin, trace), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteInFile { bin, trace });
    }
    Radargram::new(samples, dt_fast, dt_slow)
}

/// Complete run configuration: scene, pulse, pipeline, and acquisition dims.
///
/// Parsed strictly — unknown keys are rejected; omitted keys take the
/// defaults that match the reference acquisition (1024 x 200 at 39 GS/s,
/// 10 traces/s).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub pulse: PulseModel,
    pub pipeline: PipelineConfig,
    pub dims: Dims,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.scene.validate_for(self.dims.dt_slow)?;
        self.pulse.validate()?;
        self.pipeline.validate()?;
        Ok(())
    }
}

/// Parses a TOML run configuration with strict keys and full validation.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parses from TOML text; parse errors carry the offending line/field.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
