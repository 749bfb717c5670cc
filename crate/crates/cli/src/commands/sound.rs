use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use galvanic_core::channel_model::{model_frequency_response, HighPassModel};
use galvanic_core::ingest_io::{
    estimate_report, load_session, pdp_csv, response_csv, stationarity_report, CaptureWarning, Report,
};
use galvanic_core::response::log_grid;
use galvanic_core::sounder::{
    cfr_from_cir, estimate_session, power_delay_profile, stationarity_check, Alignment, Averaging, SounderConfig,
    DEFAULT_CV_THRESHOLD,
};
use serde::{Deserialize, Serialize};

use super::{default_out, merge_grid, plot, prepare_out, write_text};
use crate::config::{self, apply_flags, Settings};
use crate::plots::{self, Series};
use crate::units::{parse_positive, parse_si};
use crate::Console;

pub const ESTIMATE_FILE: &str = "estimate.txt";
pub const STATIONARITY_FILE: &str = "stationarity.txt";
pub const CFR_FILE: &str = "cfr.csv";
pub const PDP_FILE: &str = "pdp.csv";
pub const COMPARISON_FILE: &str = "comparison.txt";
pub const COMPARISON_FORMAT: &str = "galvanic-comparison-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingChoice {
    Coherent,
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentChoice {
    /// Absolute latency on a shared time base, peak aligned otherwise.
    Auto,
    PeakAligned,
    AbsoluteLatency,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Session manifest (TOML) listing the captures [required]
    #[arg(long)]
    pub session: Option<PathBuf>,
    /// Frame combining [default: coherent]
    #[arg(long, value_enum)]
    pub averaging: Option<AveragingChoice>,
    /// Delay reference [default: auto]
    #[arg(long, value_enum)]
    pub alignment: Option<AlignmentChoice>,
    /// Subtract each frame's mean [default: true]
    #[arg(long)]
    pub remove_dc: Option<bool>,
    /// Also subtract each frame's linear trend [default: true]
    #[arg(long)]
    pub remove_trend: Option<bool>,
    /// Drop the first located frame of each capture [default: true]
    #[arg(long)]
    pub skip_transient: Option<bool>,
    /// Minimum peak-to-off-peak ratio in dB [default: 3]
    #[arg(long, value_parser = parse_si)]
    pub threshold_db: Option<f64>,
    /// Coefficient-of-variation limit for time invariance [default: 0.05]
    #[arg(long, value_parser = parse_si)]
    pub cv_threshold: Option<f64>,
    /// Lowest frequency of the CFR grid [default: 10k]
    #[arg(long, value_parser = parse_positive)]
    pub cfr_start: Option<f64>,
    /// Highest frequency of the CFR grid, at most half the sample rate
    /// [default: 2.5M]
    #[arg(long, value_parser = parse_positive)]
    pub cfr_stop: Option<f64>,
    /// Log-spaced points of the CFR grid [default: 49]
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    pub cfr_points: Option<u32>,
    /// Extra CFR frequencies, comma separated [default: none]
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub cfr_freqs: Option<Vec<f64>>,
    /// Channel model to compare against [default: the manifest's reference_model]
    #[arg(long)]
    pub reference_model: Option<PathBuf>,
    /// Taps after the peak shown in the impulse-response plot [default: 40]
    #[arg(long)]
    pub plot_taps: Option<usize>,
    /// Output directory [default: galvanic-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoundSettings {
    pub session: Option<PathBuf>,
    pub averaging: AveragingChoice,
    pub alignment: AlignmentChoice,
    pub remove_dc: bool,
    pub remove_trend: bool,
    pub skip_transient: bool,
    pub threshold_db: f64,
    pub cv_threshold: f64,
    pub cfr_start: f64,
    pub cfr_stop: f64,
    pub cfr_points: u32,
    pub cfr_freqs: Vec<f64>,
    pub reference_model: Option<PathBuf>,
    pub plot_taps: usize,
    pub out: PathBuf,
}

impl Default for SoundSettings {
    fn default() -> Self {
        let d = SounderConfig::default();
        Self {
            session: None,
            averaging: AveragingChoice::Coherent,
            alignment: AlignmentChoice::Auto,
            remove_dc: d.remove_dc,
            remove_trend: d.remove_trend,
            skip_transient: d.skip_transient_frame,
            threshold_db: d.detection_threshold_db,
            cv_threshold: DEFAULT_CV_THRESHOLD,
            cfr_start: 10e3,
            cfr_stop: 2.5e6,
            cfr_points: 49,
            cfr_freqs: Vec::new(),
            reference_model: None,
            plot_taps: 40,
            out: default_out(),
        }
    }
}

impl Settings for SoundSettings {
    const SECTION: &'static str = "sound";
}

impl SoundSettings {
    pub fn resolve(args: Args, file: Option<&Path>) -> Result<Self> {
        let mut s: Self = config::load(file)?;
        apply_flags!(s, args; averaging, alignment, remove_dc, remove_trend, skip_transient, threshold_db,
            cv_threshold, cfr_start, cfr_stop, cfr_points, cfr_freqs, plot_taps, out);
        if args.session.is_some() {
            s.session = args.session;
        }
        if args.reference_model.is_some() {
            s.reference_model = args.reference_model;
        }
        Ok(s)
    }
}

pub fn run(args: Args, config_file: Option<&Path>, console: Console) -> Result<()> {
    let s = SoundSettings::resolve(args, config_file)?;
    let Some(manifest_path) = s.session.clone() else {
        bail!("no session: give --session FILE");
    };
    let session =
        load_session(&manifest_path).with_context(|| format!("loading session {}", manifest_path.display()))?;
    for c in session.tx.iter().chain(&session.rx) {
        for w in &c.warnings {
            let text = match w {
                CaptureWarning::NonUniformSampling { max_relative_deviation, non_increasing } => format!(
                    "non-uniform sampling (max deviation {max_relative_deviation:.2e}, {non_increasing} non-increasing steps)"
                ),
                CaptureWarning::Clipped { samples, level } => format!("{samples} samples at the clip level {level} V"),
                CaptureWarning::DeclaredRateMismatch { declared, measured } => {
                    format!("declared rate {declared} Hz, time column gives {measured} Hz")
                }
            };
            console.warn(format!("{}: {text}", c.source));
        }
    }
    let m = &session.manifest;
    let seq = m.sounding.sequence().context("building the m-sequence")?;
    let config = SounderConfig {
        chip_rate: m.sounding.chip_rate_hz,
        detection_threshold_db: s.threshold_db,
        remove_dc: s.remove_dc,
        remove_trend: s.remove_trend,
        averaging: match s.averaging {
            AveragingChoice::Coherent => Averaging::Coherent,
            AveragingChoice::PerFrame => Averaging::PerFrame,
        },
        alignment: match s.alignment {
            AlignmentChoice::PeakAligned => Alignment::PeakAligned,
            AlignmentChoice::AbsoluteLatency => Alignment::AbsoluteLatency,
            AlignmentChoice::Auto if m.shared_timebase => Alignment::AbsoluteLatency,
            AlignmentChoice::Auto => Alignment::PeakAligned,
        },
        skip_transient_frame: s.skip_transient,
        ..SounderConfig::default()
    };
    let estimate = estimate_session(&session.pairs(), &seq, &config).context("estimating the channel")?;
    let est = &estimate.combined;

    let nyquist = est.sample_rate / 2.0;
    if s.cfr_stop > nyquist || s.cfr_start >= s.cfr_stop {
        bail!(
            "CFR grid {}..{} Hz must be increasing and end at or below half the sample rate ({nyquist} Hz)",
            s.cfr_start,
            s.cfr_stop
        );
    }
    let grid = merge_grid(log_grid(s.cfr_start, s.cfr_stop, s.cfr_points as usize), &s.cfr_freqs);
    let cfr = cfr_from_cir(est, &grid)?;
    let pdp = power_delay_profile(est);

    prepare_out(&s.out)?;
    let mut report = estimate_report(est).field("session_id", &m.session_id);
    report.fields.push(("alignment".into(), format!("{:?}", config.alignment)));
    write_text(&s.out.join(ESTIMATE_FILE), &report.to_text(), console)?;
    write_text(&s.out.join(CFR_FILE), &response_csv(&cfr), console)?;
    write_text(&s.out.join(PDP_FILE), &pdp_csv(&pdp), console)?;

    console.info(format!(
        "session {}: {} capture pairs, {} frames averaged at {} Hz",
        m.session_id,
        session.frames_available(),
        est.frames_averaged,
        est.sample_rate
    ));
    console.info(format!(
        "impulse response: peak {:.6} at {:.3e} s, peak-to-off-peak {:.1} dB",
        est.peak_amplitude(),
        est.peak_delay(),
        est.peak_to_offpeak_db
    ));

    if estimate.frames.len() >= 2 {
        let st = stationarity_check(&estimate.frames, s.cv_threshold)?;
        write_text(&s.out.join(STATIONARITY_FILE), &stationarity_report(&st).to_text(), console)?;
        console.info(format!(
            "stationarity: CV {:.3e}, peak drift {} samples, time invariant: {}",
            st.coefficient_of_variation, st.max_drift_samples, st.time_invariant
        ));
    } else {
        console.warn("one frame only: stationarity not assessed");
    }

    let reference = s
        .reference_model
        .clone()
        .or_else(|| m.reference_model.as_ref().map(|p| session.resolve(p)));
    let mut model_db = None;
    if let Some(path) = reference {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading model {}", path.display()))?;
        let model = HighPassModel::from_toml(&text).with_context(|| format!("model {}", path.display()))?;
        let mr = model_frequency_response(&model, &grid)?;
        let mut cmp = Report::new(COMPARISON_FORMAT, &["freq_hz", "estimated_db", "model_db", "difference_db"]);
        let mut worst = 0.0f64;
        for ((&f, &e), &g) in grid.iter().zip(cfr.gain_db()).zip(mr.gain_db()) {
            worst = worst.max((e - g).abs());
            cmp.rows.push(vec![f, e, g, e - g]);
        }
        let cmp = cmp
            .field("model", path.display())
            .field("points", grid.len())
            .field("max_abs_difference_db", worst);
        write_text(&s.out.join(COMPARISON_FILE), &cmp.to_text(), console)?;
        console.info(format!(
            "model comparison: max |estimated - model| = {worst:.3} dB over {}..{} Hz",
            grid[0],
            grid[grid.len() - 1]
        ));
        model_db = Some(mr.gain_db().to_vec());
    }

    for f in &s.cfr_freqs {
        if let Some(k) = grid.iter().position(|g| g == f) {
            console.info(format!("CFR at {f} Hz: {:.3} dB", cfr.gain_db()[k]));
        }
    }
    console.info(format!(
        "CFR {}monotone increasing over the grid",
        if cfr.is_monotone_increasing() { "" } else { "not " }
    ));

    // figures
    let lo = est.peak_index.saturating_sub(s.plot_taps / 8);
    let hi = (est.peak_index + s.plot_taps + 1).min(est.len());
    let us: Vec<f64> = est.delay_axis[lo..hi].iter().map(|d| d * 1e6).collect();
    let path = s.out.join("cir.svg");
    plot(
        plots::stem(&path, "Channel impulse response", "delay (us)", "tap", &us, &est.taps[lo..hi]),
        &path,
        console,
    );
    let peak_power = pdp.power[est.peak_index].max(f64::MIN_POSITIVE);
    let pdb: Vec<f64> = pdp.power[lo..hi]
        .iter()
        .map(|p| 10.0 * (p / peak_power).log10())
        .collect();
    let path = s.out.join("pdp.svg");
    plot(
        plots::linear(&path, "Power delay profile", "delay (us)", "power re peak (dB)", &us, &pdb),
        &path,
        console,
    );
    let mut series = vec![Series { label: "estimated", x: &grid, y: cfr.gain_db() }];
    if let Some(db) = &model_db {
        series.push(Series { label: "model", x: &grid, y: db });
    }
    let path = s.out.join("cfr.svg");
    plot(
        plots::log_x(&path, "Channel frequency response", "frequency (Hz)", "gain (dB)", &series),
        &path,
        console,
    );

    config::echo(&s.out, &s, console.verbosity)?;
    Ok(())
}
