use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use galvanic_core::channel_model::{apply_channel, fit_gain_model, ChannelSimConfig, HighPassModel};
use galvanic_core::ingest_io::{write_capture, SessionManifest, SoundingParams};
use galvanic_core::response::FrequencyResponse;
use galvanic_core::signals::{repeat, resample_zoh, to_bipolar, zero_pad};
use serde::{Deserialize, Serialize};

use super::{default_out, prepare_out, write_text};
use crate::config::{self, apply_flags, Settings};
use crate::units::{parse_db, parse_gain_points, parse_positive, parse_si};
use crate::Console;

pub const TX_FILE: &str = "tx.csv";
pub const MODEL_FILE: &str = "model.toml";
pub const MANIFEST_FILE: &str = "session.toml";

pub fn rx_file(k: usize) -> String {
    format!("rx_{k:03}.csv")
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Channel model file written by a previous run [default: none]
    #[arg(long, conflicts_with = "fit_from")]
    pub model: Option<PathBuf>,
    /// Fit the model to freq:dB gain points, e.g. 100k:-52.2,1M:-43.75
    /// [default: none]
    #[arg(long)]
    pub fit_from: Option<String>,
    /// Model order for --fit-from [default: 2]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub fit_order: Option<u32>,
    /// LFSR degree of the sounding sequence [default: 13]
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=16))]
    pub degree: Option<u32>,
    /// Chip rate in Hz [default: 5M]
    #[arg(long, value_parser = parse_positive)]
    pub chip_rate: Option<f64>,
    /// Peak-to-peak amplitude in volts [default: 1.0]
    #[arg(long, value_parser = parse_positive)]
    pub amplitude: Option<f64>,
    /// Samples per chip [default: 1]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub samples_per_chip: Option<u32>,
    /// Steady-state sequence periods per capture; one extra leading period
    /// absorbs the channel start-up transient [default: 1]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub periods: Option<u32>,
    /// Number of rx captures [default: 41]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub captures: Option<u32>,
    /// Signal-to-noise ratio in dB, or inf for no noise [default: 30]
    #[arg(long, value_parser = parse_db)]
    pub snr_db: Option<f64>,
    /// Seed of the noise generator [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Common-mode fundamental peak amplitude in volts [default: 0]
    #[arg(long, value_parser = parse_si)]
    pub cm_amplitude: Option<f64>,
    /// Common-mode fundamental frequency in Hz [default: 50]
    #[arg(long, value_parser = parse_positive)]
    pub cm_tone: Option<f64>,
    /// Output directory [default: galvanic-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    pub model: Option<PathBuf>,
    pub fit_from: Option<String>,
    pub fit_order: u32,
    pub degree: u32,
    pub chip_rate: f64,
    pub amplitude: f64,
    pub samples_per_chip: u32,
    pub periods: u32,
    pub captures: u32,
    pub snr_db: f64,
    pub seed: u64,
    pub cm_amplitude: f64,
    pub cm_tone: f64,
    pub out: PathBuf,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            model: None,
            fit_from: None,
            fit_order: 2,
            degree: 13,
            chip_rate: 5e6,
            amplitude: 1.0,
            samples_per_chip: 1,
            periods: 1,
            captures: 41,
            snr_db: 30.0,
            seed: 0,
            cm_amplitude: 0.0,
            cm_tone: 50.0,
            out: default_out(),
        }
    }
}

impl Settings for SimulateSettings {
    const SECTION: &'static str = "simulate";
}

impl SimulateSettings {
    pub fn resolve(args: Args, file: Option<&Path>) -> Result<Self> {
        let mut s: Self = config::load(file)?;
        apply_flags!(s, args; fit_order, degree, chip_rate, amplitude, samples_per_chip, periods,
            captures, snr_db, seed, cm_amplitude, cm_tone, out);
        // a model source given on the command line replaces the file's
        if args.model.is_some() || args.fit_from.is_some() {
            s.model = args.model;
            s.fit_from = args.fit_from;
        }
        Ok(s)
    }

    fn channel(&self) -> Result<HighPassModel> {
        match (&self.model, &self.fit_from) {
            (Some(_), Some(_)) => bail!("give either model or fit_from, not both"),
            (None, None) => bail!("no channel: give --model FILE or --fit-from freq:dB,..."),
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading model {}", path.display()))?;
                HighPassModel::from_toml(&text).with_context(|| format!("model {}", path.display()))
            }
            (None, Some(points)) => {
                let mut points = parse_gain_points(points).map_err(anyhow::Error::msg)?;
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (f, g): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
                let samples = FrequencyResponse::from_db(f, &g)?;
                Ok(fit_gain_model(&samples, self.fit_order as usize).context("fitting the gain model")?)
            }
        }
    }
}

/// Deterministic, well-spread mains phase for capture `k`: captures are not
/// synchronized to the mains cycle.
fn mains_phase(k: usize) -> f64 {
    let golden = 0.618_033_988_749_894_9;
    std::f64::consts::TAU * (k as f64 * golden).fract()
}

/// Noise seed of capture `k`; distinct across (seed, k) pairs.
fn capture_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

pub fn run(args: Args, config_file: Option<&Path>, console: Console) -> Result<()> {
    let s = SimulateSettings::resolve(args, config_file)?;
    if s.snr_db.is_nan() || s.cm_amplitude < 0.0 {
        bail!("snr_db must be a number or inf and cm_amplitude non-negative");
    }
    let model = s.channel()?;

    let mut sounding = SoundingParams {
        degree: s.degree,
        chip_rate_hz: s.chip_rate,
        amplitude_v: s.amplitude,
        taps: None,
        seed: None,
        pad_samples: 0,
    };
    let seq = sounding.sequence().context("building the m-sequence")?;
    let period = resample_zoh(&to_bipolar(&seq, s.amplitude, s.chip_rate)?, s.samples_per_chip as usize)?;
    let burst = zero_pad(&repeat(&period, s.periods as usize + 1), period.len());
    sounding.pad_samples = period.len();

    prepare_out(&s.out)?;
    write_capture(&burst, &s.out.join(TX_FILE))?;
    write_text(&s.out.join(MODEL_FILE), &model.to_toml(), console)?;
    let mut rx = Vec::with_capacity(s.captures as usize);
    for k in 0..s.captures as usize {
        let cfg = ChannelSimConfig {
            noise_snr_db: s.snr_db,
            cm_tone_hz: s.cm_tone,
            cm_amplitude: s.cm_amplitude,
            cm_phase_rad: mains_phase(k),
            rng_seed: capture_seed(s.seed, k),
            ..Default::default()
        };
        let y = apply_channel(&burst, &model, &cfg)?;
        let name = rx_file(k);
        write_capture(&y, &s.out.join(&name))?;
        console.detail(format!("wrote {}", s.out.join(&name).display()));
        rx.push(PathBuf::from(name));
    }
    let manifest = SessionManifest {
        session_id: format!("simulated-seed-{}", s.seed),
        notes: format!(
            "synthetic: order-{} high-pass channel, {} dB SNR, {} V common mode at {} Hz",
            model.order(),
            s.snr_db,
            s.cm_amplitude,
            s.cm_tone
        ),
        shared_timebase: true,
        tx: vec![PathBuf::from(TX_FILE)],
        rx,
        reference_model: Some(PathBuf::from(MODEL_FILE)),
        sounding,
        format: None,
    };
    let manifest_path = s.out.join(MANIFEST_FILE);
    write_text(&manifest_path, &manifest.to_toml(), console)?;
    config::echo(&s.out, &s, console.verbosity)?;

    let cutoff = model
        .cutoff_hz()
        .map_or("none".to_string(), |c| format!("{c:.0} Hz"));
    console.info(format!(
        "model: order {}, passband {:.2} dB, cut-off {cutoff}",
        model.order(),
        model.passband_gain_db()
    ));
    if let Some(fit) = model.fit_report() {
        console.info(format!("fit: rms residual {:.3} dB over {} points", fit.rms_db, fit.freqs_hz.len()));
        if fit.degenerate {
            console.warn("the fit is degenerate: the gain points show no usable high-pass structure");
        }
    }
    console.info(format!(
        "session: {} captures of {} samples at {} Hz, SNR {} dB -> {}",
        s.captures,
        burst.len(),
        burst.sample_rate(),
        s.snr_db,
        manifest_path.display()
    ));
    Ok(())
}
