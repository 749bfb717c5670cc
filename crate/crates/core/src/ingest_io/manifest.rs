//! Measurement-session manifest (TOML).
//!
//! ```toml
//! session_id = "forearm-01"
//! notes = "saline phantom, 22 °C"
//! shared_timebase = false          # captures share one trigger clock
//! tx = ["tx.csv"]                  # one capture, or one per rx capture
//! rx = ["rx_000.csv", "rx_001.csv"]
//! reference_model = "model.toml"   # optional
//!
//! [sounding]
//! degree = 13
//! chip_rate_hz = 5e6
//! amplitude_v = 1.0
//! taps = [13, 12, 11, 8]           # optional, built-in table otherwise
//! seed = 8191                      # optional, all ones otherwise
//! pad_samples = 8191
//!
//! [format]                         # optional capture parser overrides
//! delimiter = ";"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::capture::{parse_capture, CaptureFile, FormatOptions, UNIFORMITY_TOLERANCE};
use super::IngestError;
use crate::signals::{default_mseq, generate_mseq, PnSequence, SignalError, Waveform};

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoundingParams {
    pub degree: u32,
    pub chip_rate_hz: f64,
    pub amplitude_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u32>,
    #[serde(default)]
    pub pad_samples: usize,
}

impl SoundingParams {
    /// The sounding sequence these parameters describe.
    pub fn sequence(&self) -> Result<PnSequence, SignalError> {
        match (&self.taps, self.seed) {
            (None, None) => default_mseq(self.degree),
            (taps, seed) => {
                let taps = match taps {
                    Some(t) => t.clone(),
                    None => crate::signals::primitive_taps(self.degree)?.to_vec(),
                };
                let seed = seed.unwrap_or(if self.degree >= 32 { u32::MAX } else { (1u32 << self.degree) - 1 });
                generate_mseq(self.degree, &taps, seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub session_id: String,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub shared_timebase: bool,
    pub tx: Vec<PathBuf>,
    pub rx: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_model: Option<PathBuf>,
    pub sounding: SoundingParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatOptions>,
}

impl SessionManifest {
    /// Schema checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut problems = Vec::new();
        if self.session_id.trim().is_empty() {
            problems.push("session_id is empty".to_string());
        }
        let s = &self.sounding;
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&s.degree) {
            problems.push(format!("sounding.degree {} outside [{MIN_DEGREE}, {MAX_DEGREE}]", s.degree));
        }
        if !(s.chip_rate_hz.is_finite() && s.chip_rate_hz > 0.0) {
            problems.push("sounding.chip_rate_hz must be positive".into());
        }
        if !(s.amplitude_v.is_finite() && s.amplitude_v > 0.0) {
            problems.push("sounding.amplitude_v must be positive".into());
        }
        if self.rx.is_empty() {
            problems.push("rx lists no captures".into());
        }
        if self.tx.len() != 1 && self.tx.len() != self.rx.len() {
            problems.push(format!(
                "tx lists {} captures; expected 1 or one per rx capture ({})",
                self.tx.len(),
                self.rx.len()
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(IngestError::SchemaViolation(problems))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        let m: Self = toml::from_str(text).map_err(|e| IngestError::SchemaViolation(vec![e.message().to_string()]))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// A manifest with every capture loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub manifest: SessionManifest,
    pub base_dir: PathBuf,
    pub tx: Vec<CaptureFile>,
    pub rx: Vec<CaptureFile>,
    pub sample_rate: f64,
}

impl Session {
    pub fn frames_available(&self) -> usize {
        self.rx.len()
    }

    /// `(tx, rx)` waveform pairs; a single tx capture serves every rx.
    pub fn pairs(&self) -> Vec<(&Waveform, &Waveform)> {
        self.rx
            .iter()
            .enumerate()
            .map(|(k, rx)| (&self.tx[if self.tx.len() == 1 { 0 } else { k }].waveform, &rx.waveform))
            .collect()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }
}

/// Loads the manifest and all captures (in parallel). Every problem found is
/// reported together: missing files, unparseable files and sample-rate
/// mismatches against the most common rate.
pub fn load_session(manifest_path: &Path) -> Result<Session, IngestError> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| IngestError::io(manifest_path, e))?;
    let manifest = SessionManifest::from_toml(&text)?;
    let base_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let options = manifest.format.clone().unwrap_or_default();
    let paths: Vec<PathBuf> = manifest.tx.iter().chain(&manifest.rx).map(|p| base_dir.join(p)).collect();
    let loaded: Vec<Result<CaptureFile, IngestError>> = paths
        .par_iter()
        .map(|p| {
            if !p.is_file() {
                return Err(IngestError::MissingCapture { path: p.clone() });
            }
            parse_capture(p, &options)
        })
        .collect();
    let mut problems = Vec::new();
    let mut captures = Vec::with_capacity(loaded.len());
    for r in loaded {
        match r {
            Ok(c) => captures.push(Some(c)),
            Err(e) => {
                problems.push(e);
                captures.push(None);
            }
        }
    }
    // reference rate: the most common one, earliest first on ties
    let rates: Vec<f64> = captures.iter().flatten().map(|c| c.sample_rate).collect();
    let same = |a: f64, b: f64| ((a - b) / b).abs() <= UNIFORMITY_TOLERANCE;
    let reference = rates
        .iter()
        .copied()
        .max_by_key(|&r| (rates.iter().filter(|&&q| same(q, r)).count(), std::cmp::Reverse(rates.iter().position(|&q| q == r))))
        .unwrap_or(0.0);
    let offenders: Vec<(PathBuf, f64)> = paths
        .iter()
        .zip(&captures)
        .filter_map(|(p, c)| c.as_ref().filter(|c| !same(c.sample_rate, reference)).map(|c| (p.clone(), c.sample_rate)))
        .collect();
    if !offenders.is_empty() {
        problems.push(IngestError::RateMismatch { expected: reference, offenders });
    }
    if !problems.is_empty() {
        return Err(if problems.len() == 1 { problems.remove(0) } else { IngestError::Multiple(problems) });
    }
    let mut captures: Vec<CaptureFile> = captures.into_iter().flatten().collect();
    let rx = captures.split_off(manifest.tx.len());
    Ok(Session { manifest, base_dir, tx: captures, rx, sample_rate: reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
session_id = "s1"
tx = ["tx.csv"]
rx = ["a.csv", "b.csv"]
[sounding]
degree = 5
chip_rate_hz = 5e6
amplitude_v = 1.0
"#;

    #[test]
    fn parses_and_roundtrips() {
        let m = SessionManifest::from_toml(MINIMAL).unwrap();
        assert_eq!(m.rx.len(), 2);
        assert_eq!(m.sounding.pad_samples, 0);
        assert_eq!(SessionManifest::from_toml(&m.to_toml()).unwrap(), m);
        assert_eq!(m.sounding.sequence().unwrap().len(), 31);
    }

    #[test]
    fn schema_violations_are_collected() {
        let bad = MINIMAL.replace("degree = 5", "degree = 17").replace("session_id = \"s1\"", "session_id = \"\"");
        match SessionManifest::from_toml(&bad) {
            Err(IngestError::SchemaViolation(p)) => assert_eq!(p.len(), 2, "{p:?}"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{MINIMAL}\nextra = 1\n");
        assert!(matches!(SessionManifest::from_toml(&unknown), Err(IngestError::SchemaViolation(_))));
        let pairs = MINIMAL.replace(r#"tx = ["tx.csv"]"#, r#"tx = ["t1.csv", "t2.csv", "t3.csv"]"#);
        assert!(matches!(SessionManifest::from_toml(&pairs), Err(IngestError::SchemaViolation(_))));
    }

    #[test]
    fn explicit_taps_and_seed() {
        let mut m = SessionManifest::from_toml(MINIMAL).unwrap();
        m.sounding.taps = Some(vec![5, 3]);
        m.sounding.seed = Some(1);
        let s = m.sounding.sequence().unwrap();
        assert_eq!((s.len(), s.seed()), (31, 1));
        m.sounding.taps = Some(vec![5, 4, 3, 2, 1]);
        assert!(m.sounding.sequence().is_err());
    }
}
