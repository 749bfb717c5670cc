//! Structured text reports: a `key = value` header whose first key is
//! `format`, a blank line, then a CSV table with a header row. Numbers use
//! the shortest round-trip representation, so reports re-read bit-exactly.
//!
//! ```text
//! format = galvanic-estimate-v1
//! sample_rate_hz = 5000000
//! peak_index = 0
//!
//! delay_s,tap
//! 0,0.98
//! 2e-7,0.01
//! ```
//!
//! Curves (frequency responses, power-delay profiles) are plain CSV files
//! with a single header row.

use std::fmt::Write as _;

use super::IngestError;
use crate::response::FrequencyResponse;
use crate::sounder::{ChannelEstimate, PowerDelayProfile, StationarityReport};

pub const ESTIMATE_FORMAT: &str = "galvanic-estimate-v1";
pub const STATIONARITY_FORMAT: &str = "galvanic-stationarity-v1";
pub const RESPONSE_HEADER: &str = "freq_hz,gain_db,re,im";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub format: String,
    pub fields: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn bad(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::Unparseable { path: Default::default(), line, reason: reason.into() }
}

impl Report {
    pub fn new(format: &str, columns: &[&str]) -> Self {
        Self {
            format: format.to_string(),
            fields: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn field(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        let v = value.to_string();
        debug_assert!(!v.contains('\n'));
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse_field<T: std::str::FromStr>(&self, key: &str) -> Result<T, IngestError> {
        let v = self.get(key).ok_or_else(|| bad(0, format!("{} report lacks {key}", self.format)))?;
        v.parse().map_err(|_| bad(0, format!("{key} = {v:?} is not valid")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, IngestError> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| bad(0, format!("{} report lacks column {name}", self.format)))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    fn expect_format(&self, format: &str) -> Result<(), IngestError> {
        if self.format == format {
            Ok(())
        } else {
            Err(bad(1, format!("expected a {format} report, found {}", self.format)))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = {}", self.format);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let mut fields = Vec::new();
        for (n, line) in lines.by_ref() {
            if line.trim().is_empty() {
                break;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(n, "header lines take the form key = value"))?;
            fields.push((k.trim().to_string(), v.trim().to_string()));
        }
        let format = match fields.first() {
            Some((k, v)) if k == "format" => v.clone(),
            _ => return Err(bad(1, "report must start with a format line")),
        };
        fields.remove(0);
        let (_, header) = lines.next().ok_or_else(|| bad(0, "report has no table header"))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(n, "table rows must be numeric"))?;
            if row.len() != columns.len() {
                return Err(bad(n, format!("expected {} columns, found {}", columns.len(), row.len())));
            }
            rows.push(row);
        }
        Ok(Self { format, fields, columns, rows })
    }
}

pub fn estimate_report(est: &ChannelEstimate) -> Report {
    let mut r = Report::new(ESTIMATE_FORMAT, &["delay_s", "tap"])
        .field("sample_rate_hz", est.sample_rate)
        .field("normalization", est.normalization)
        .field("peak_index", est.peak_index)
        .field("peak_delay_s", est.peak_delay())
        .field("peak_amplitude", est.peak_amplitude())
        .field("peak_to_offpeak_db", est.peak_to_offpeak_db)
        .field("frames_averaged", est.frames_averaged)
        .field("taps", est.taps.len());
    r.rows = est.delay_axis.iter().zip(&est.taps).map(|(&d, &t)| vec![d, t]).collect();
    r
}

pub fn estimate_from_report(r: &Report) -> Result<ChannelEstimate, IngestError> {
    r.expect_format(ESTIMATE_FORMAT)?;
    Ok(ChannelEstimate {
        taps: r.column("tap")?,
        delay_axis: r.column("delay_s")?,
        sample_rate: r.parse_field("sample_rate_hz")?,
        normalization: r.parse_field("normalization")?,
        peak_index: r.parse_field("peak_index")?,
        peak_to_offpeak_db: r.parse_field("peak_to_offpeak_db")?,
        frames_averaged: r.parse_field("frames_averaged")?,
    })
}

pub fn stationarity_report(s: &StationarityReport) -> Report {
    let mut r = Report::new(STATIONARITY_FORMAT, &["frame", "peak_amplitude", "peak_index"])
        .field("frames", s.peak_amplitudes.len())
        .field("coefficient_of_variation", s.coefficient_of_variation)
        .field("max_drift_samples", s.max_drift_samples)
        .field("cv_threshold", s.cv_threshold)
        .field("time_invariant", s.time_invariant);
    r.rows = s
        .peak_amplitudes
        .iter()
        .zip(&s.peak_indices)
        .enumerate()
        .map(|(k, (&a, &i))| vec![k as f64, a, i as f64])
        .collect();
    r
}

pub fn stationarity_from_report(r: &Report) -> Result<StationarityReport, IngestError> {
    r.expect_format(STATIONARITY_FORMAT)?;
    Ok(StationarityReport {
        peak_amplitudes: r.column("peak_amplitude")?,
        peak_indices: r.column("peak_index")?.iter().map(|&v| v as usize).collect(),
        coefficient_of_variation: r.parse_field("coefficient_of_variation")?,
        max_drift_samples: r.parse_field("max_drift_samples")?,
        cv_threshold: r.parse_field("cv_threshold")?,
        time_invariant: r.parse_field("time_invariant")?,
    })
}

/// Frequency response as a plain CSV: `freq_hz,gain_db,re,im`.
pub fn response_csv(resp: &FrequencyResponse) -> String {
    let mut out = String::from(RESPONSE_HEADER);
    out.push('\n');
    for ((f, g), db) in resp.freqs().iter().zip(resp.gains()).zip(resp.gain_db()) {
        let _ = writeln!(out, "{f},{db},{},{}", g.re, g.im);
    }
    out
}

/// Reads [`response_csv`] output; the complex columns are authoritative.
pub fn parse_response_csv(text: &str) -> Result<FrequencyResponse, IngestError> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == RESPONSE_HEADER => {}
        _ => return Err(bad(1, format!("expected header {RESPONSE_HEADER}"))),
    }
    let (mut freqs, mut gains) = (Vec::new(), Vec::new());
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(n, "rows must be numeric"))?;
        if v.len() != 4 {
            return Err(bad(n, format!("expected 4 columns, found {}", v.len())));
        }
        freqs.push(v[0]);
        gains.push(num_complex::Complex64::new(v[2], v[3]));
    }
    FrequencyResponse::new(freqs, gains).map_err(|e| bad(0, e.to_string()))
}

/// Power-delay profile as a plain CSV: `delay_s,power`.
pub fn pdp_csv(p: &PowerDelayProfile) -> String {
    let mut out = String::from("delay_s,power\n");
    for (d, w) in p.delay_axis.iter().zip(&p.power) {
        let _ = writeln!(out, "{d},{w}");
    }
    out
}
