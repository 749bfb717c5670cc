use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use galvanic_core::ingest_io::{write_capture, SoundingParams};
use galvanic_core::signals::{resample_zoh, to_bipolar, zero_pad};
use serde::{Deserialize, Serialize};

use super::{default_out, prepare_out};
use crate::config::{self, apply_flags, Settings};
use crate::units::parse_positive;
use crate::Console;

pub const WAVEFORM_FILE: &str = "pn_waveform.csv";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// LFSR degree; the period is 2^degree - 1 chips [default: 13]
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=16))]
    pub degree: Option<u32>,
    /// Chip rate in Hz; SI suffixes allowed (2.5M) [default: 5M]
    #[arg(long, value_parser = parse_positive)]
    pub chip_rate: Option<f64>,
    /// Peak-to-peak amplitude in volts [default: 1.0]
    #[arg(long, value_parser = parse_positive)]
    pub amplitude: Option<f64>,
    /// Samples per chip, held constant [default: 1]
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub samples_per_chip: Option<u32>,
    /// Zero samples appended after the sequence [default: one period]
    #[arg(long)]
    pub pad: Option<usize>,
    /// Feedback taps, comma separated [default: built-in primitive polynomial]
    #[arg(long, value_delimiter = ',')]
    pub taps: Option<Vec<u32>>,
    /// Initial register state [default: all ones]
    #[arg(long)]
    pub lfsr_seed: Option<u32>,
    /// Output directory [default: galvanic-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub degree: u32,
    pub chip_rate: f64,
    pub amplitude: f64,
    pub samples_per_chip: u32,
    pub pad: Option<usize>,
    pub taps: Option<Vec<u32>>,
    pub lfsr_seed: Option<u32>,
    pub out: PathBuf,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        Self {
            degree: 13,
            chip_rate: 5e6,
            amplitude: 1.0,
            samples_per_chip: 1,
            pad: None,
            taps: None,
            lfsr_seed: None,
            out: default_out(),
        }
    }
}

impl Settings for GenerateSettings {
    const SECTION: &'static str = "generate";
}

impl GenerateSettings {
    pub fn resolve(args: Args, file: Option<&Path>) -> Result<Self> {
        let mut s: Self = config::load(file)?;
        apply_flags!(s, args; degree, chip_rate, amplitude, samples_per_chip, out);
        if args.pad.is_some() {
            s.pad = args.pad;
        }
        if args.taps.is_some() {
            s.taps = args.taps;
        }
        if args.lfsr_seed.is_some() {
            s.lfsr_seed = args.lfsr_seed;
        }
        Ok(s)
    }

    pub fn sounding(&self) -> SoundingParams {
        SoundingParams {
            degree: self.degree,
            chip_rate_hz: self.chip_rate,
            amplitude_v: self.amplitude,
            taps: self.taps.clone(),
            seed: self.lfsr_seed,
            pad_samples: self.pad.unwrap_or(0),
        }
    }
}

pub fn run(args: Args, config_file: Option<&Path>, console: Console) -> Result<()> {
    let s = GenerateSettings::resolve(args, config_file)?;
    let seq = s.sounding().sequence().context("building the m-sequence")?;
    let period = to_bipolar(&seq, s.amplitude, s.chip_rate)?;
    let period = resample_zoh(&period, s.samples_per_chip as usize)?;
    let pad = s.pad.unwrap_or(period.len());
    let wave = zero_pad(&period, pad);

    prepare_out(&s.out)?;
    let path = s.out.join(WAVEFORM_FILE);
    write_capture(&wave, &path)?;
    config::echo(&s.out, &s, console.verbosity)?;

    let st = seq.stats();
    console.info(format!(
        "sequence: degree {}, taps {:?}, seed {}",
        seq.degree(),
        seq.taps(),
        seq.seed()
    ));
    console.info(format!("period: {} chips", st.period));
    console.info(format!(
        "balance: {} ones, {} zeros ({})",
        st.ones,
        st.zeros,
        if st.balanced() { "balanced" } else { "UNBALANCED" }
    ));
    let off = if st.offpeak_min == st.offpeak_max {
        format!("{}", st.offpeak_min)
    } else {
        format!("{}..{}", st.offpeak_min, st.offpeak_max)
    };
    console.info(format!(
        "autocorrelation: peak {}, off-peak {off} ({})",
        st.autocorrelation_peak,
        if st.two_valued() { "two-valued" } else { "NOT two-valued" }
    ));
    console.info(format!(
        "waveform: {} samples ({} sequence + {pad} pad) at {} Hz -> {}",
        wave.len(),
        period.len(),
        wave.sample_rate(),
        path.display()
    ));
    Ok(())
}
