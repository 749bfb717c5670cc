//! Oscilloscope capture CSV.
//!
//! Written form: header `time_s,voltage_V`, then one `time,voltage` row per
//! sample using the shortest representation that round-trips the `f64`.
//! The reader is tolerant of instrument layouts: any number of leading
//! header/metadata lines, `,` or `;` delimiters, extra columns and `#`
//! comments. Numbers always use `.` as decimal separator, whatever the host
//! locale.
//!
//! The sample rate is recovered from the median time step, so it is only as
//! precise as the time column: with absolute times `t`, the step resolution
//! is about `|t|·2⁻⁵²`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::signals::Waveform;

/// Relative spread of sampling periods tolerated before a warning.
pub const UNIFORMITY_TOLERANCE: f64 = 1e-6;
const RATE_SIGNIFICANT_DIGITS: usize = 9;

/// Overrides for captures the auto-detection cannot handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatOptions {
    /// Field delimiter; detected when absent.
    pub delimiter: Option<char>,
    /// Number of leading lines to skip; detected when absent.
    pub header_lines: Option<usize>,
    pub time_column: usize,
    pub voltage_column: usize,
    /// Samples at or beyond this magnitude are reported as clipped.
    pub clip_level: Option<f64>,
    /// Exact layout only: `,` delimiter, at most one header line, exactly
    /// two columns, uniform sampling.
    pub strict: bool,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self { delimiter: None, header_lines: None, time_column: 0, voltage_column: 1, clip_level: None, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaptureWarning {
    /// Sampling periods deviate from the median by more than 1 ppm, or the
    /// time column is not strictly increasing.
    NonUniformSampling { max_relative_deviation: f64, non_increasing: usize },
    Clipped { samples: usize, level: f64 },
    /// A rate declared in the header disagrees with the time column.
    DeclaredRateMismatch { declared: f64, measured: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFile {
    /// Instrument label from the header, else the file name.
    pub source: String,
    pub sample_rate: f64,
    pub waveform: Waveform,
    pub warnings: Vec<CaptureWarning>,
}

pub fn parse_capture(path: &Path, options: &FormatOptions) -> Result<CaptureFile, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| IngestError::Unparseable {
        path: path.to_path_buf(),
        line: 0,
        reason: "file is not UTF-8 text".into(),
    })?;
    let label = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    parse_capture_str(&text, options, &label).map_err(|e| e.with_path(path))
}

fn numeric_fields(line: &str, delim: char) -> Option<Vec<f64>> {
    let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
    if fields.len() < 2 {
        return None;
    }
    fields.iter().map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite())).collect()
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn detect_delimiter(lines: &[(usize, &str)]) -> Result<char, IngestError> {
    let count = |d: char| lines.iter().filter(|(_, l)| numeric_fields(l, d).is_some()).count();
    match (count(','), count(';')) {
        (0, 0) => {
            // "0;0,1" style rows: semicolon delimited with decimal commas
            if let Some((n, _)) = lines
                .iter()
                .find(|(_, l)| l.contains(';') && numeric_fields(&l.replace(',', "."), ';').is_some())
            {
                return Err(IngestError::Unparseable {
                    path: Default::default(),
                    line: *n,
                    reason: "decimal commas are not supported; use '.' as the decimal separator".into(),
                });
            }
            Err(IngestError::NoNumericData { path: Default::default() })
        }
        (_, 0) => Ok(','),
        (0, _) => Ok(';'),
        _ => Err(IngestError::AmbiguousDelimiter { path: Default::default() }),
    }
}

fn declared_rate(header: &[(usize, &str)]) -> Option<f64> {
    header.iter().find_map(|(_, l)| {
        let lower = l.to_ascii_lowercase();
        let compact: String = lower.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        if !compact.starts_with("samplerate") {
            return None;
        }
        lower
            .split([',', ';', '=', ':'])
            .skip(1)
            .find_map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0))
    })
}

fn source_label(header: &[(usize, &str)]) -> Option<String> {
    header.iter().find_map(|(_, l)| {
        let mut parts = l.splitn(2, [',', ';', '=', ':']);
        let key = parts.next()?.trim().to_ascii_lowercase();
        let value = parts.next()?.trim().trim_matches(['"', ',', ';']).trim();
        (matches!(key.as_str(), "source" | "instrument" | "model") && !value.is_empty()).then(|| value.to_string())
    })
}

fn snap_rate(rate: f64) -> f64 {
    format!("{:.*e}", RATE_SIGNIFICANT_DIGITS - 1, rate).parse().unwrap_or(rate)
}

/// Parse capture text; `label` names the source when the header does not.
pub fn parse_capture_str(text: &str, options: &FormatOptions, label: &str) -> Result<CaptureFile, IngestError> {
    let unparseable = |line: usize, reason: String| IngestError::Unparseable { path: Default::default(), line, reason };
    let lines = content_lines(text);
    let delim = match options.delimiter {
        Some(d) => d,
        None if options.strict => ',',
        None => detect_delimiter(&lines)?,
    };
    let first_data = match options.header_lines {
        Some(h) => lines.iter().position(|(n, _)| *n > h).unwrap_or(lines.len()),
        None => lines
            .iter()
            .position(|(_, l)| numeric_fields(l, delim).is_some())
            .ok_or(IngestError::NoNumericData { path: Default::default() })?,
    };
    let (header, data) = lines.split_at(first_data);
    if data.is_empty() {
        return Err(IngestError::NoNumericData { path: Default::default() });
    }
    if options.strict && header.len() > 1 {
        return Err(unparseable(header[1].0, "strict mode allows at most one header line".into()));
    }
    let need = options.time_column.max(options.voltage_column) + 1;
    let mut times = Vec::with_capacity(data.len());
    let mut volts = Vec::with_capacity(data.len());
    for (n, l) in data {
        let fields = numeric_fields(l, delim).ok_or_else(|| {
            if l.contains(';') && numeric_fields(&l.replace(',', "."), ';').is_some() {
                unparseable(*n, "decimal commas are not supported; use '.' as the decimal separator".into())
            } else {
                unparseable(*n, format!("expected numeric fields separated by {delim:?}"))
            }
        })?;
        if fields.len() < need || (options.strict && fields.len() != 2) {
            return Err(unparseable(*n, format!("expected {} columns, found {}", if options.strict { 2 } else { need }, fields.len())));
        }
        times.push(fields[options.time_column]);
        volts.push(fields[options.voltage_column]);
    }
    let mut warnings = Vec::new();
    let declared = declared_rate(header);
    let sample_rate = if times.len() < 2 {
        declared.ok_or_else(|| unparseable(data[0].0, "one sample and no declared sample rate".into()))?
    } else {
        let periods: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let mut sorted = periods.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        if median.is_nan() || median <= 0.0 {
            return Err(unparseable(data[0].0, "time column does not increase".into()));
        }
        let non_increasing = periods.iter().filter(|&&p| p <= 0.0).count();
        let max_relative_deviation = periods.iter().map(|p| (p - median).abs() / median).fold(0.0, f64::max);
        if non_increasing > 0 || max_relative_deviation > UNIFORMITY_TOLERANCE {
            if options.strict {
                return Err(unparseable(data[0].0, "non-uniform sampling".into()));
            }
            warnings.push(CaptureWarning::NonUniformSampling { max_relative_deviation, non_increasing });
        }
        let measured = snap_rate(1.0 / median);
        if let Some(d) = declared {
            if ((d - measured) / d).abs() > UNIFORMITY_TOLERANCE {
                warnings.push(CaptureWarning::DeclaredRateMismatch { declared: d, measured });
            }
        }
        measured
    };
    if let Some(level) = options.clip_level {
        let samples = volts.iter().filter(|v| v.abs() >= level).count();
        if samples > 0 {
            warnings.push(CaptureWarning::Clipped { samples, level });
        }
    }
    let waveform = Waveform::with_start(volts, sample_rate, times[0])
        .map_err(|e| unparseable(data[0].0, e.to_string()))?;
    Ok(CaptureFile {
        source: source_label(header).unwrap_or_else(|| label.to_string()),
        sample_rate,
        waveform,
        warnings,
    })
}

/// Writes `time_s,voltage_V` rows with `time = t0 + i/fs`.
pub fn write_capture_to<W: Write>(w: &Waveform, mut out: W) -> std::io::Result<()> {
    let mut buf = String::with_capacity(32 * (w.len() + 1));
    buf.push_str("time_s,voltage_V\n");
    for (i, v) in w.samples().iter().enumerate() {
        use std::fmt::Write as _;
        let _ = writeln!(buf, "{},{}", w.time_at(i), v);
    }
    out.write_all(buf.as_bytes())
}

pub fn write_capture(w: &Waveform, path: &Path) -> Result<(), IngestError> {
    let mut bytes = Vec::new();
    write_capture_to(w, &mut bytes).map_err(|e| IngestError::io(path, e))?;
    std::fs::write(path, bytes).map_err(|e| IngestError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CaptureFile, IngestError> {
        parse_capture_str(text, &FormatOptions::default(), "test")
    }

    #[test]
    fn two_samples_at_five_megahertz() {
        let c = parse("time,volt\n0,0.1\n2e-7,0.2\n").unwrap();
        assert_eq!(c.waveform.samples(), &[0.1, 0.2]);
        assert_eq!(c.sample_rate, 5e6);
        assert!(c.warnings.is_empty());
        assert_eq!(c.source, "test");
    }

    #[test]
    fn detects_headers_and_semicolons() {
        let text = "Source;T3DSO\nSample Rate;5e6\nSecond;Volt\n0;1\n2e-7;-1\n4e-7;0.5\n";
        let c = parse(text).unwrap();
        assert_eq!(c.source, "T3DSO");
        assert_eq!(c.waveform.len(), 3);
        assert_eq!(c.sample_rate, 5e6);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn extra_columns_and_comments() {
        let c = parse("# scope dump\nt,ch1,ch2\n0,9,0.5\n1e-6,9,0.25\n").unwrap();
        assert_eq!(c.sample_rate, 1e6);
        assert_eq!(c.waveform.samples(), &[9.0, 9.0]);
        let opts = FormatOptions { voltage_column: 2, ..Default::default() };
        let c = parse_capture_str("t,ch1,ch2\n0,9,0.5\n1e-6,9,0.25\n", &opts, "x").unwrap();
        assert_eq!(c.waveform.samples(), &[0.5, 0.25]);
    }

    #[test]
    fn rejects_decimal_commas() {
        for text in ["t;v\n0;0,1\n0,0000002;0,2\n", "0;0,5\n"] {
            match parse(text) {
                Err(IngestError::Unparseable { reason, .. }) => assert!(reason.contains("decimal commas"), "{reason}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn mixed_delimiters_are_ambiguous() {
        assert!(matches!(parse("0,1\n1e-6;2\n"), Err(IngestError::AmbiguousDelimiter { .. })));
    }

    #[test]
    fn no_numbers() {
        assert!(matches!(parse("time,volt\n"), Err(IngestError::NoNumericData { .. })));
        assert!(matches!(parse(""), Err(IngestError::NoNumericData { .. })));
    }

    #[test]
    fn junk_after_data_names_the_line() {
        match parse("0,1\n1e-6,2\noops\n") {
            Err(IngestError::Unparseable { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_time_warns_and_uses_the_median() {
        let c = parse("0,1\n1e-6,2\n3e-6,3\n2e-6,4\n4e-6,5\n5e-6,6\n").unwrap();
        assert_eq!(c.sample_rate, 1e6);
        match &c.warnings[..] {
            [CaptureWarning::NonUniformSampling { non_increasing, .. }] => assert_eq!(*non_increasing, 1),
            w => panic!("{w:?}"),
        }
        let strict = FormatOptions { strict: true, ..Default::default() };
        assert!(parse_capture_str("0,1\n1e-6,2\n3e-6,3\n", &strict, "x").is_err());
    }

    #[test]
    fn strict_mode_layout() {
        let strict = FormatOptions { strict: true, ..Default::default() };
        assert!(parse_capture_str("time_s,voltage_V\n0,1\n1e-6,2\n", &strict, "x").is_ok());
        assert!(parse_capture_str("a\nb\n0,1\n1e-6,2\n", &strict, "x").is_err());
        assert!(parse_capture_str("0,1,2\n1e-6,2,3\n", &strict, "x").is_err());
        assert!(parse_capture_str("0;1\n1e-6;2\n", &strict, "x").is_err());
    }

    #[test]
    fn clipping_and_declared_rate_warnings() {
        let opts = FormatOptions { clip_level: Some(1.0), ..Default::default() };
        let c = parse_capture_str("Sample rate,2e6\n0,1\n1e-6,0.5\n2e-6,-1\n", &opts, "x").unwrap();
        assert!(c.warnings.contains(&CaptureWarning::Clipped { samples: 2, level: 1.0 }));
        assert!(c.warnings.contains(&CaptureWarning::DeclaredRateMismatch { declared: 2e6, measured: 1e6 }));
    }

    #[test]
    fn single_sample_needs_a_declared_rate() {
        let c = parse("sample_rate = 5e6\n0.5,1\n").unwrap();
        assert_eq!((c.sample_rate, c.waveform.t0()), (5e6, 0.5));
        assert!(parse("0.5,1\n").is_err());
    }

    #[test]
    fn explicit_header_count() {
        let opts = FormatOptions { header_lines: Some(2), ..Default::default() };
        let c = parse_capture_str("0,0\n1,1\n0,5\n1e-3,6\n", &opts, "x").unwrap();
        assert_eq!(c.waveform.samples(), &[5.0, 6.0]);
    }

    #[test]
    fn write_then_parse_is_bit_identical() {
        let w = Waveform::with_start(vec![0.1, -1.0 / 3.0, 1e-300, 2.5], 5e6, 1e-3).unwrap();
        let mut buf = Vec::new();
        write_capture_to(&w, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_s,voltage_V\n0.001,0.1\n"));
        let c = parse(&text).unwrap();
        assert_eq!(c.waveform.samples(), w.samples());
        assert_eq!(c.sample_rate, 5e6);
        assert_eq!(c.waveform.t0(), 1e-3);
    }
}
