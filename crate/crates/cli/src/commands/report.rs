use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use galvanic_core::channel_model::{HighPassModel, MODEL_FORMAT};
use galvanic_core::ingest_io::{
    estimate_from_report, parse_capture_str, parse_response_csv, stationarity_from_report, FormatOptions, Report,
    SessionManifest, ESTIMATE_FORMAT, RESPONSE_HEADER, STATIONARITY_FORMAT,
};
use serde::{Deserialize, Serialize};

use super::solve::{SOLVE_FORMAT, VALIDATION_FORMAT};
use super::sound::COMPARISON_FORMAT;
use super::{plot, prepare_out, write_text};
use crate::config::{self, Settings, RUN_CONFIG_FILE};
use crate::plots::{self, Series};
use crate::Console;

pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Report, curve, model or manifest file, or a directory of them;
    /// repeatable [required]
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Directory for summary.txt and curve plots [default: print only]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    pub input: Vec<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Settings for ReportSettings {
    const SECTION: &'static str = "report";
}

impl ReportSettings {
    pub fn resolve(args: Args, file: Option<&Path>) -> Result<Self> {
        let mut s: Self = config::load(file)?;
        if !args.input.is_empty() {
            s.input = args.input;
        }
        if args.out.is_some() {
            s.out = args.out;
        }
        Ok(s)
    }
}

/// Files to summarize, directories expanded in name order.
fn expand(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, bool)>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()
                .with_context(|| format!("listing {}", p.display()))?;
            entries.sort();
            files.extend(entries.into_iter().filter(|e| e.is_file()).map(|e| (e, false)));
        } else {
            files.push((p.clone(), true));
        }
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

struct Summary {
    text: String,
    /// `(label, freqs, gain_db)` curve worth plotting.
    curve: Option<(String, Vec<f64>, Vec<f64>)>,
}

fn summarize_report(r: &Report) -> Result<String> {
    let mut out = String::new();
    match r.format.as_str() {
        ESTIMATE_FORMAT => {
            let e = estimate_from_report(r)?;
            let _ = write!(
                out,
                "channel estimate: {} taps at {} Hz, {} frames averaged; peak {:.6} at {:.3e} s; peak-to-off-peak {:.1} dB",
                e.len(),
                e.sample_rate,
                e.frames_averaged,
                e.peak_amplitude(),
                e.peak_delay(),
                e.peak_to_offpeak_db
            );
        }
        STATIONARITY_FORMAT => {
            let s = stationarity_from_report(r)?;
            let _ = write!(
                out,
                "stationarity: {} frames, CV {:.3e} (limit {}), drift {} samples, time invariant: {}",
                s.peak_amplitudes.len(),
                s.coefficient_of_variation,
                s.cv_threshold,
                s.max_drift_samples,
                s.time_invariant
            );
        }
        COMPARISON_FORMAT => {
            let worst: f64 = r.parse_field("max_abs_difference_db")?;
            let _ = write!(out, "model comparison: {} points, max |difference| {worst:.3} dB", r.rows.len());
        }
        SOLVE_FORMAT => {
            let _ = write!(
                out,
                "tissue solve: {} x {} grid, {} frequencies, monotone increasing: {}, gain change {} dB",
                r.get("grid_nx").unwrap_or("?"),
                r.get("grid_ny").unwrap_or("?"),
                r.rows.len(),
                r.get("monotone_increasing").unwrap_or("?"),
                r.get("gain_change_db").unwrap_or("?")
            );
            for (f, g) in r.column("freq_hz")?.iter().zip(r.column("gain_db")?) {
                let _ = write!(out, "\n  {f} Hz: {g:.3} dB");
            }
        }
        VALIDATION_FORMAT => {
            let _ = write!(
                out,
                "solver validation: passed {}, ramp error {}, plate errors {:?}, orders {}",
                r.get("passed").unwrap_or("?"),
                r.get("ramp_potential_error").unwrap_or("?"),
                r.column("relative_error")?,
                r.get("observed_orders").unwrap_or("?")
            );
        }
        other => {
            let _ = write!(out, "report {other}: {} fields, {} rows", r.fields.len(), r.rows.len());
        }
    }
    Ok(out)
}

fn summarize_csv(text: &str, label: &str) -> Result<Option<Summary>> {
    let header = text.lines().next().unwrap_or("").trim();
    if header == RESPONSE_HEADER {
        let resp = parse_response_csv(text)?;
        let db = resp.gain_db();
        let (lo, hi) = db.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let f = resp.freqs();
        let text = format!(
            "frequency response: {} points, {} to {} Hz, gain {lo:.3} to {hi:.3} dB, {:+.3} dB end to end, monotone increasing: {}",
            resp.len(),
            f[0],
            f[f.len() - 1],
            db[db.len() - 1] - db[0],
            resp.is_monotone_increasing()
        );
        return Ok(Some(Summary { text, curve: Some((label.to_string(), f.to_vec(), db.to_vec())) }));
    }
    if header == "delay_s,power" {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
            let (d, p) = line.split_once(',').with_context(|| format!("line {}: expected delay,power", n + 1))?;
            let parse = |v: &str| v.trim().parse::<f64>().with_context(|| format!("line {}: {v:?}", n + 1));
            rows.push((parse(d)?, parse(p)?));
        }
        let total: f64 = rows.iter().map(|r| r.1).sum();
        if total <= 0.0 {
            return Ok(Some(Summary { text: format!("power delay profile: {} taps, zero power", rows.len()), curve: None }));
        }
        let mean = rows.iter().map(|(d, p)| d * p).sum::<f64>() / total;
        let spread = (rows.iter().map(|(d, p)| (d - mean).powi(2) * p).sum::<f64>() / total).sqrt();
        let text = format!(
            "power delay profile: {} taps, mean delay {mean:.3e} s, rms delay spread {spread:.3e} s",
            rows.len()
        );
        return Ok(Some(Summary { text, curve: None }));
    }
    if header.starts_with("x_m,y_m") {
        let cells = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
        return Ok(Some(Summary { text: format!("field grid: {cells} cells"), curve: None }));
    }
    match parse_capture_str(text, &FormatOptions::default(), label) {
        Ok(c) => Ok(Some(Summary {
            text: format!(
                "capture: {} samples at {} Hz, rms {:.4} V, {} warnings",
                c.waveform.len(),
                c.sample_rate,
                c.waveform.rms(),
                c.warnings.len()
            ),
            curve: None,
        })),
        Err(_) => Ok(None),
    }
}

fn summarize_toml(text: &str, path: &Path) -> Result<Option<String>> {
    if path.file_name().is_some_and(|n| n == RUN_CONFIG_FILE) {
        return Ok(Some("run configuration".into()));
    }
    let table: toml::Table = toml::from_str(text).with_context(|| format!("parsing {}", path.display()))?;
    if table.get("format").and_then(|v| v.as_str()) == Some(MODEL_FORMAT) {
        let m = HighPassModel::from_toml(text)?;
        let cutoff = m.cutoff_hz().map_or("none".into(), |c| format!("{c:.0} Hz"));
        let mut s = format!(
            "channel model: order {}, passband {:.2} dB, cut-off {cutoff}",
            m.order(),
            m.passband_gain_db()
        );
        if let Some(fit) = m.fit_report() {
            let _ = write!(s, ", fit rms {:.3} dB", fit.rms_db);
        }
        return Ok(Some(s));
    }
    if table.contains_key("sounding") {
        let m = SessionManifest::from_toml(text)?;
        return Ok(Some(format!(
            "session {}: {} rx captures, m = {}, {} Hz chips",
            m.session_id,
            m.rx.len(),
            m.sounding.degree,
            m.sounding.chip_rate_hz
        )));
    }
    Ok(None)
}

fn summarize(path: &Path) -> Result<Option<Summary>> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if !matches!(ext, "txt" | "csv" | "toml") {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match ext {
        "txt" => {
            let r = Report::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
            let text = summarize_report(&r).with_context(|| path.display().to_string())?;
            Ok(Some(Summary { text, curve: None }))
        }
        "csv" => summarize_csv(&text, &stem(path)).with_context(|| path.display().to_string()),
        _ => Ok(summarize_toml(&text, path)?.map(|text| Summary { text, curve: None })),
    }
}

pub fn run(args: Args, config_file: Option<&Path>, console: Console) -> Result<()> {
    let s = ReportSettings::resolve(args, config_file)?;
    if s.input.is_empty() {
        bail!("nothing to report: give --input FILE or DIR");
    }
    let mut text = String::new();
    let mut curves = Vec::new();
    for (path, explicit) in expand(&s.input)? {
        match summarize(&path)? {
            Some(sum) => {
                let _ = writeln!(text, "{}: {}", path.display(), sum.text);
                curves.extend(sum.curve);
            }
            None if explicit => bail!("{}: not a recognized report, curve, model or manifest", path.display()),
            None => console.detail(format!("skipped {}", path.display())),
        }
    }
    console.info(text.trim_end());
    if let Some(out) = &s.out {
        prepare_out(out)?;
        write_text(&out.join(SUMMARY_FILE), &text, console)?;
        for (label, f, db) in &curves {
            let path = out.join(format!("{label}.svg"));
            let series = [Series { label, x: f, y: db }];
            plot(plots::log_x(&path, label, "frequency (Hz)", "gain (dB)", &series), &path, console);
        }
        config::echo(out, &s, console.verbosity)?;
    }
    Ok(())
}
