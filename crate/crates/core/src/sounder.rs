//! Correlative channel estimation from transmitted/received capture pairs.
//!
//! The received signal is correlated, one sequence period at a time, against
//! the ideal bipolar replica of the sounding sequence. For a periodic
//! m-sequence of `N` chips held for `spc` samples per chip the circular
//! autocorrelation is `(N+1)·T(k) − spc`, where `T` is the triangular
//! zero-order-hold kernel. The constant `−spc` floor biases every lag by the
//! channel's DC sum, so the estimator adds back `ΣC/spc` (which recovers that
//! sum exactly) before dividing by `(N+1)·spc`. With one sample per chip a
//! noiseless steady-state frame returns the channel taps exactly; with `spc`
//! samples per chip it returns the taps smoothed by `T`.
//!
//! Taps are then scaled so the transmitted capture, processed the same way,
//! has unit peak: an identity channel estimates to a unit impulse.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::response::{FrequencyResponse, ResponseError};
use crate::signals::{argmax, circular_fft_with, PnSequence, SignalError, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SounderError {
    #[error("sample rates differ: tx {tx} Hz, rx {rx} Hz")]
    SampleRateMismatch { tx: f64, rx: f64 },
    #[error("capture holds {got} samples, one sounding period needs {need}")]
    InsufficientLength { got: usize, need: usize },
    #[error("peak-to-off-peak ratio {ratio_db:.2} dB below detection threshold {threshold_db:.2} dB")]
    NoPeakFound { ratio_db: f64, threshold_db: f64 },
    #[error("sample rate {sample_rate} Hz is not an integer multiple of chip rate {chip_rate} Hz")]
    ChipRateMismatch { sample_rate: f64, chip_rate: f64 },
    #[error("no sounding frames found in the capture pair")]
    NoFrames,
    #[error("frequency {0} Hz outside [0, fs/2]")]
    FrequencyOutOfRange(f64),
    #[error("voltages must be > 0 (got V_R = {received}, V_T = {transmitted})")]
    NonPositiveVoltage { received: f64, transmitted: f64 },
    #[error("stationarity needs at least two frames with identical delay axes: {0}")]
    FrameMismatch(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Average the received frames, then correlate once.
    Coherent,
    /// Correlate each frame and average the estimates.
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Delays are reported relative to the strongest path.
    PeakAligned,
    /// Delays are reported relative to the transmitted sequence start; needs
    /// captures on a shared time base (their `t0` values are honoured).
    AbsoluteLatency,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SounderConfig {
    pub chip_rate: f64,
    pub detection_threshold_db: f64,
    /// Subtract each frame's mean before correlating. Rejects drift and
    /// mains pickup but also the channel's own DC term: every tap shifts by
    /// about `sum(h) / N`.
    pub remove_dc: bool,
    /// Also subtract each frame's least-squares line (needs `remove_dc`).
    pub remove_trend: bool,
    pub averaging: Averaging,
    pub alignment: Alignment,
    /// Drop the first located frame when more than one is available; it
    /// carries the channel's start-up transient.
    pub skip_transient_frame: bool,
    /// Off-peak region excludes lags within this many samples of the peak.
    pub mainlobe_halfwidth: usize,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self {
            chip_rate: 5e6,
            detection_threshold_db: 3.0,
            remove_dc: true,
            remove_trend: true,
            averaging: Averaging::Coherent,
            alignment: Alignment::PeakAligned,
            skip_transient_frame: true,
            mainlobe_halfwidth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub taps: Vec<f64>,
    pub delay_axis: Vec<f64>,
    pub sample_rate: f64,
    /// Factor applied to the raw correlation so that the transmitted
    /// capture has unit peak.
    pub normalization: f64,
    pub peak_index: usize,
    pub peak_to_offpeak_db: f64,
    pub frames_averaged: usize,
}

impl ChannelEstimate {
    /// Builds an estimate from taps sampled at `sample_rate`, starting at
    /// delay zero.
    pub fn from_taps(taps: Vec<f64>, sample_rate: f64) -> Self {
        let delay_axis = (0..taps.len()).map(|k| k as f64 / sample_rate).collect();
        let peak_index = peak_of(&taps);
        let peak_to_offpeak_db = peak_to_offpeak_db(&taps, peak_index, 3);
        Self {
            taps,
            delay_axis,
            sample_rate,
            normalization: 1.0,
            peak_index,
            peak_to_offpeak_db,
            frames_averaged: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn peak_delay(&self) -> f64 {
        self.delay_axis.get(self.peak_index).copied().unwrap_or(0.0)
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.taps.get(self.peak_index).copied().unwrap_or(0.0)
    }
}

/// Index of the largest `|tap|`, first on ties.
fn peak_of(taps: &[f64]) -> usize {
    let abs: Vec<f64> = taps.iter().map(|t| t.abs()).collect();
    argmax(&abs).unwrap_or(0)
}

/// Ratio of the peak to the largest tap further than `halfwidth` samples
/// (circularly) from it. Capped near 313 dB when the off-peak region is
/// exactly zero.
fn peak_to_offpeak_db(taps: &[f64], peak: usize, halfwidth: usize) -> f64 {
    let n = taps.len();
    let Some(&p) = taps.get(peak) else {
        return 0.0;
    };
    let p = p.abs();
    if p == 0.0 {
        return 0.0;
    }
    let off = taps
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let d = k.abs_diff(peak);
            d.min(n - d) > halfwidth
        })
        .fold(0.0f64, |m, (_, t)| m.max(t.abs()));
    20.0 * (p / off.max(p * f64::EPSILON)).log10()
}

/// Bipolar replica of one sounding period at the capture sample rate, with
/// FFT plans for its length.
struct Replica {
    samples: Vec<f64>,
    chips: usize,
    samples_per_chip: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Replica {
    fn new(seq: &PnSequence, sample_rate: f64, chip_rate: f64) -> Result<Self, SounderError> {
        let ratio = sample_rate / chip_rate;
        let spc = ratio.round();
        if chip_rate.is_nan() || chip_rate <= 0.0 || spc < 1.0 || (ratio - spc).abs() > 1e-6 * ratio {
            return Err(SounderError::ChipRateMismatch {
                sample_rate,
                chip_rate,
            });
        }
        let spc = spc as usize;
        let samples: Vec<f64> = seq
            .chips()
            .iter()
            .flat_map(|&c| std::iter::repeat_n(if c == 1 { 1.0 } else { -1.0 }, spc))
            .collect();
        let mut planner = FftPlanner::new();
        let n = samples.len();
        Ok(Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            samples,
            chips: seq.len(),
            samples_per_chip: spc,
        })
    }

    fn period(&self) -> usize {
        self.samples.len()
    }

    /// Sidelobe-compensated circular correlation of one period-long window.
    fn raw_estimate(&self, window: &[f64]) -> Vec<f64> {
        let c = circular_fft_with(&self.samples, window, &self.fwd, &self.inv);
        let spc = self.samples_per_chip as f64;
        let dc = c.iter().sum::<f64>() / spc;
        let scale = 1.0 / ((self.chips as f64 + 1.0) * spc);
        c.iter().map(|v| (v + dc) * scale).collect()
    }

    /// Linear correlation against every full-period placement in `signal`;
    /// entry `s` is `Σ_n r[n]·signal[s+n]`.
    fn sliding(&self, signal: &[f64]) -> Vec<f64> {
        let l = self.period();
        if signal.len() < l {
            return Vec::new();
        }
        let size = (signal.len() + l).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut a: Vec<Complex64> = self
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(size)
            .collect();
        let mut b: Vec<Complex64> = signal
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(size)
            .collect();
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x = x.conj() * y;
        }
        inv.process(&mut a);
        let scale = 1.0 / size as f64;
        a[..=signal.len() - l].iter().map(|c| c.re * scale).collect()
    }

    /// Start indices of consecutive full sounding periods: the earliest
    /// strong correlation peak (either polarity), then every period after it
    /// while the correlation stays above half the maximum.
    fn locate_frames(&self, signal: &[f64], remove_dc: bool) -> Vec<usize> {
        let l = self.period();
        let sig: Vec<f64> = if remove_dc {
            let m = signal.iter().sum::<f64>() / signal.len().max(1) as f64;
            signal.iter().map(|v| v - m).collect()
        } else {
            signal.to_vec()
        };
        let v: Vec<f64> = self.sliding(&sig).iter().map(|x| x.abs()).collect();
        let Some(max) = v.iter().copied().reduce(f64::max) else {
            return Vec::new();
        };
        if max <= 0.0 {
            return Vec::new();
        }
        let Some(first) = v.iter().position(|&x| x >= 0.5 * max) else {
            return Vec::new();
        };
        let end = (first + l / 2 + 1).min(v.len());
        let start = first + argmax(&v[first..end]).unwrap_or(0);
        let mut frames = Vec::new();
        let mut s = start;
        while s < v.len() && v[s] >= 0.5 * max {
            frames.push(s);
            s += l;
        }
        frames
    }
}

/// Copies one period-long window, removing its mean and optionally its
/// least-squares line. Slow interference such as mains pickup is close to a
/// ramp over one period; left in, the ramp's wrap-around step leaks into the
/// circular correlation at every lag.
fn window(signal: &[f64], start: usize, len: usize, config: &SounderConfig) -> Vec<f64> {
    let w = &signal[start..start + len];
    if !config.remove_dc {
        return w.to_vec();
    }
    let n = len as f64;
    let mean = w.iter().sum::<f64>() / n;
    if !config.remove_trend || len < 2 {
        return w.iter().map(|v| v - mean).collect();
    }
    let tc = (n - 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in w.iter().enumerate() {
        let t = i as f64 - tc;
        sxy += t * (v - mean);
        sxx += t * t;
    }
    let slope = sxy / sxx;
    w.iter()
        .enumerate()
        .map(|(i, v)| v - mean - slope * (i as f64 - tc))
        .collect()
}

/// Aligned period-long windows taken from one capture pair.
struct PairFrames {
    rx: Vec<Vec<f64>>,
    tx: Vec<Vec<f64>>,
}

fn extract_frames(
    tx: &Waveform,
    rx: &Waveform,
    replica: &Replica,
    config: &SounderConfig,
) -> Result<PairFrames, SounderError> {
    let l = replica.period();
    for w in [tx, rx] {
        if w.len() < l {
            return Err(SounderError::InsufficientLength {
                got: w.len(),
                need: l,
            });
        }
    }
    let mut tx_starts = replica.locate_frames(tx.samples(), config.remove_dc);
    if tx_starts.is_empty() {
        return Err(SounderError::NoFrames);
    }
    let mut rx_starts: Vec<usize> = match config.alignment {
        Alignment::AbsoluteLatency => {
            // rx index of a tx sample, from the shared time base
            let offset = ((tx.t0() - rx.t0()) * tx.sample_rate()).round() as i64;
            let mut pairs = Vec::new();
            for &s in &tx_starts {
                let r = s as i64 + offset;
                if r >= 0 && r as usize + l <= rx.len() {
                    pairs.push((s, r as usize));
                }
            }
            tx_starts = pairs.iter().map(|p| p.0).collect();
            pairs.into_iter().map(|p| p.1).collect()
        }
        Alignment::PeakAligned => replica.locate_frames(rx.samples(), config.remove_dc),
    };
    if rx_starts.is_empty() {
        return Err(SounderError::NoFrames);
    }
    if config.skip_transient_frame {
        if rx_starts.len() > 1 {
            rx_starts.remove(0);
        }
        if tx_starts.len() > 1 && config.alignment == Alignment::AbsoluteLatency {
            tx_starts.remove(0);
        }
    }
    Ok(PairFrames {
        rx: rx_starts
            .iter()
            .map(|&s| window(rx.samples(), s, l, config))
            .collect(),
        tx: tx_starts
            .iter()
            .map(|&s| window(tx.samples(), s, l, config))
            .collect(),
    })
}

fn mean_of(windows: &[&[f64]]) -> Vec<f64> {
    let l = windows[0].len();
    let mut acc = vec![0.0; l];
    for w in windows {
        for (a, v) in acc.iter_mut().zip(w.iter()) {
            *a += v;
        }
    }
    let k = windows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    acc
}

/// Channel estimate combined over every frame of a session together with
/// the individual per-frame estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionEstimate {
    pub combined: ChannelEstimate,
    pub frames: Vec<ChannelEstimate>,
}

/// Estimates the channel impulse response from one capture pair.
pub fn estimate_cir(
    tx: &Waveform,
    rx: &Waveform,
    sounding: &PnSequence,
    config: &SounderConfig,
) -> Result<ChannelEstimate, SounderError> {
    estimate_session(&[(tx, rx)], sounding, config).map(|s| s.combined)
}

/// Estimates the channel from several capture pairs, averaging over every
/// located frame of every pair.
pub fn estimate_session(
    pairs: &[(&Waveform, &Waveform)],
    sounding: &PnSequence,
    config: &SounderConfig,
) -> Result<SessionEstimate, SounderError> {
    let Some(&(first_tx, _)) = pairs.first() else {
        return Err(SounderError::NoFrames);
    };
    let fs = first_tx.sample_rate();
    for (tx, rx) in pairs {
        for w in [tx, rx] {
            if w.sample_rate() != fs {
                return Err(SounderError::SampleRateMismatch {
                    tx: fs,
                    rx: w.sample_rate(),
                });
            }
        }
    }
    let replica = Replica::new(sounding, fs, config.chip_rate)?;
    let l = replica.period();

    let per_pair: Vec<PairFrames> = pairs
        .par_iter()
        .map(|(tx, rx)| extract_frames(tx, rx, &replica, config))
        .collect::<Result<_, _>>()?;
    let rx_windows: Vec<&[f64]> = per_pair
        .iter()
        .flat_map(|p| p.rx.iter().map(Vec::as_slice))
        .collect();
    let tx_windows: Vec<&[f64]> = per_pair
        .iter()
        .flat_map(|p| p.tx.iter().map(Vec::as_slice))
        .collect();

    // Normalization from the transmitted side, processed identically.
    let tx_raw = replica.raw_estimate(&mean_of(&tx_windows));
    let tx_peak = tx_raw[peak_of(&tx_raw)];
    if tx_peak == 0.0 {
        return Err(SounderError::NoFrames);
    }
    let normalization = 1.0 / tx_peak;

    let frame_raw: Vec<Vec<f64>> = rx_windows
        .par_iter()
        .map(|w| replica.raw_estimate(w))
        .collect();
    let combined_raw = match config.averaging {
        Averaging::Coherent => replica.raw_estimate(&mean_of(&rx_windows)),
        Averaging::PerFrame => {
            let refs: Vec<&[f64]> = frame_raw.iter().map(Vec::as_slice).collect();
            mean_of(&refs)
        }
    };

    let mut taps: Vec<f64> = combined_raw.iter().map(|v| v * normalization).collect();
    let rotation = match config.alignment {
        Alignment::PeakAligned => peak_of(&taps),
        Alignment::AbsoluteLatency => 0,
    };
    taps.rotate_left(rotation);

    let build = |mut taps: Vec<f64>, frames: usize| {
        if taps.len() != l {
            taps.resize(l, 0.0);
        }
        let peak_index = peak_of(&taps);
        ChannelEstimate {
            delay_axis: (0..l).map(|k| k as f64 / fs).collect(),
            sample_rate: fs,
            normalization,
            peak_index,
            peak_to_offpeak_db: peak_to_offpeak_db(&taps, peak_index, config.mainlobe_halfwidth),
            frames_averaged: frames,
            taps,
        }
    };
    let combined = build(taps, rx_windows.len());
    if combined.peak_to_offpeak_db < config.detection_threshold_db {
        return Err(SounderError::NoPeakFound {
            ratio_db: combined.peak_to_offpeak_db,
            threshold_db: config.detection_threshold_db,
        });
    }
    let frames = frame_raw
        .into_iter()
        .map(|raw| {
            let mut t: Vec<f64> = raw.iter().map(|v| v * normalization).collect();
            t.rotate_left(rotation);
            build(t, 1)
        })
        .collect();
    Ok(SessionEstimate { combined, frames })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub power: Vec<f64>,
    pub delay_axis: Vec<f64>,
}

/// `P[k] = taps[k]²`.
pub fn power_delay_profile(est: &ChannelEstimate) -> PowerDelayProfile {
    PowerDelayProfile {
        power: est.taps.iter().map(|t| t * t).collect(),
        delay_axis: est.delay_axis.clone(),
    }
}

/// Evaluates `Σ_k taps[k]·exp(−j2πf·τ_k)` on the given grid.
pub fn cfr_from_cir(est: &ChannelEstimate, freq_grid: &[f64]) -> Result<FrequencyResponse, SounderError> {
    let nyquist = est.sample_rate / 2.0;
    if let Some(&f) = freq_grid
        .iter()
        .find(|&&f| !(0.0..=nyquist * (1.0 + 1e-12)).contains(&f))
    {
        return Err(SounderError::FrequencyOutOfRange(f));
    }
    let gains = freq_grid
        .par_iter()
        .map(|&f| {
            let w = -2.0 * std::f64::consts::PI * f;
            est.taps
                .iter()
                .zip(&est.delay_axis)
                .filter(|(t, _)| **t != 0.0)
                .map(|(&t, &d)| Complex64::from_polar(t, w * d))
                .sum()
        })
        .collect();
    Ok(FrequencyResponse::new(freq_grid.to_vec(), gains)?)
}

/// `20·log10(V_R / V_T)`.
pub fn scalar_gain_db(v_received: f64, v_transmitted: f64) -> Result<f64, SounderError> {
    if !(v_received > 0.0 && v_transmitted > 0.0) {
        return Err(SounderError::NonPositiveVoltage {
            received: v_received,
            transmitted: v_transmitted,
        });
    }
    Ok(20.0 * (v_received / v_transmitted).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Peak tap amplitude of each frame.
    pub peak_amplitudes: Vec<f64>,
    pub peak_indices: Vec<usize>,
    /// Population standard deviation over mean of the peak amplitudes.
    pub coefficient_of_variation: f64,
    pub max_drift_samples: usize,
    pub cv_threshold: f64,
    pub time_invariant: bool,
}

pub const DEFAULT_CV_THRESHOLD: f64 = 0.05;

/// Checks whether the channel stays put over the given frames: the peak
/// amplitude should not wander and the peak delay should not move.
pub fn stationarity_check(frames: &[ChannelEstimate], cv_threshold: f64) -> Result<StationarityReport, SounderError> {
    if frames.len() < 2 {
        return Err(SounderError::FrameMismatch(format!("got {} frame(s)", frames.len())));
    }
    let axis = &frames[0].delay_axis;
    if let Some(i) = frames.iter().position(|f| &f.delay_axis != axis) {
        return Err(SounderError::FrameMismatch(format!("frame {i} has a different delay axis")));
    }
    let peak_amplitudes: Vec<f64> = frames.iter().map(|f| f.peak_amplitude().abs()).collect();
    let peak_indices: Vec<usize> = frames.iter().map(|f| f.peak_index).collect();
    let n = peak_amplitudes.len() as f64;
    let mean = peak_amplitudes.iter().sum::<f64>() / n;
    let var = peak_amplitudes.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let coefficient_of_variation = if mean > 0.0 { var.sqrt() / mean } else { f64::INFINITY };
    let lo = peak_indices.iter().min().copied().unwrap_or(0);
    let hi = peak_indices.iter().max().copied().unwrap_or(0);
    let max_drift_samples = hi - lo;
    Ok(StationarityReport {
        time_invariant: coefficient_of_variation <= cv_threshold && max_drift_samples == 0,
        peak_amplitudes,
        peak_indices,
        coefficient_of_variation,
        max_drift_samples,
        cv_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{default_mseq, to_bipolar};

    fn sounding(m: u32, fs: f64) -> (PnSequence, Waveform) {
        let seq = default_mseq(m).unwrap();
        let tx = to_bipolar(&seq, 1.0, fs).unwrap();
        (seq, tx)
    }

    fn conv(x: &[f64], taps: &[(usize, f64)], len: usize) -> Vec<f64> {
        let mut y = vec![0.0; len];
        for (n, &v) in x.iter().enumerate() {
            for &(d, h) in taps {
                if n + d < len {
                    y[n + d] += v * h;
                }
            }
        }
        y
    }

    #[test]
    fn identity_channel_is_unit_impulse() {
        let (seq, tx) = sounding(13, 5e6);
        for remove_dc in [true, false] {
            let cfg = SounderConfig {
                remove_dc,
                ..Default::default()
            };
            let est = estimate_cir(&tx, &tx, &seq, &cfg).unwrap();
            assert_eq!(est.peak_index, 0);
            assert!((est.taps[0] - 1.0).abs() < 1e-6);
            let bound = 2.0 / 8191.0;
            assert!(est.taps[1..].iter().all(|t| t.abs() <= bound));
            assert_eq!(est.frames_averaged, 1);
        }
    }

    #[test]
    fn two_path_channel_at_five_megahertz() {
        let (seq, tx) = sounding(13, 5e6);
        // 4 µs at 5 MHz is 20 samples
        let rx = conv(tx.samples(), &[(0, 1.0), (20, 0.5)], tx.len() + 20);
        let rx = Waveform::new(rx, 5e6).unwrap();
        let est = estimate_cir(&tx, &rx, &seq, &SounderConfig::default()).unwrap();
        assert!((est.taps[0] - 1.0).abs() < 0.01);
        assert!((est.taps[20] - 0.5).abs() < 0.005);
        assert!((est.delay_axis[20] - 4e-6).abs() < 1e-15);
    }

    #[test]
    fn two_samples_per_chip_smooths_with_triangle() {
        let seq = default_mseq(9).unwrap();
        let chips = to_bipolar(&seq, 1.0, 2.5e6).unwrap();
        let tx = crate::signals::resample_zoh(&chips, 2).unwrap();
        let burst = crate::signals::repeat(&tx, 3);
        let rx = conv(burst.samples(), &[(0, 1.0), (20, 0.5)], burst.len());
        let rx = Waveform::new(rx, 5e6).unwrap();
        let cfg = SounderConfig {
            chip_rate: 2.5e6,
            remove_dc: false,
            alignment: Alignment::AbsoluteLatency,
            ..Default::default()
        };
        let est = estimate_cir(&burst, &rx, &seq, &cfg).unwrap();
        let want = [(0, 1.0), (1, 0.5), (19, 0.25), (20, 0.5), (21, 0.25), (5, 0.0)];
        for (k, v) in want {
            assert!((est.taps[k] - v).abs() < 1e-9, "tap {k}: {}", est.taps[k]);
        }
        assert!((est.taps[est.len() - 1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn absolute_latency_keeps_leading_delay() {
        let (seq, tx) = sounding(8, 1e6);
        let burst = crate::signals::repeat(&tx, 4);
        let h = [(3, 0.4), (7, -1.0), (9, 0.25)];
        let rx = Waveform::new(conv(burst.samples(), &h, burst.len()), 1e6).unwrap();
        let cfg = SounderConfig {
            chip_rate: 1e6,
            remove_dc: false,
            alignment: Alignment::AbsoluteLatency,
            ..Default::default()
        };
        let session = estimate_session(&[(&burst, &rx)], &seq, &cfg).unwrap();
        let est = &session.combined;
        assert_eq!(est.frames_averaged, 3);
        assert_eq!(est.peak_index, 7);
        for (k, v) in h {
            assert!((est.taps[k] - v).abs() < 1e-12);
        }
        assert_eq!(session.frames.len(), 3);

        let cfg = SounderConfig {
            alignment: Alignment::PeakAligned,
            ..cfg
        };
        let est = estimate_cir(&burst, &rx, &seq, &cfg).unwrap();
        assert_eq!(est.peak_index, 0);
        assert!((est.taps[0] + 1.0).abs() < 1e-12);
        assert!((est.taps[2] - 0.25).abs() < 1e-12);
        // the early path wraps to the end of the window
        assert!((est.taps[est.len() - 4] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn shared_time_base_offsets_are_honoured() {
        let (seq, tx) = sounding(7, 1e6);
        let burst = crate::signals::repeat(&tx, 3);
        let rx_full = conv(burst.samples(), &[(2, 1.0)], burst.len());
        // rx capture starts 10 samples after tx
        let rx = Waveform::with_start(rx_full[10..].to_vec(), 1e6, 10e-6).unwrap();
        let cfg = SounderConfig {
            chip_rate: 1e6,
            remove_dc: false,
            alignment: Alignment::AbsoluteLatency,
            ..Default::default()
        };
        let est = estimate_cir(&burst, &rx, &seq, &cfg).unwrap();
        assert_eq!(est.peak_index, 2);
    }

    #[test]
    fn error_paths() {
        let (seq, tx) = sounding(7, 1e6);
        let cfg = SounderConfig {
            chip_rate: 1e6,
            ..Default::default()
        };
        let other = Waveform::new(tx.samples().to_vec(), 2e6).unwrap();
        assert!(matches!(
            estimate_cir(&tx, &other, &seq, &cfg),
            Err(SounderError::SampleRateMismatch { .. })
        ));
        let short = Waveform::new(tx.samples()[..100].to_vec(), 1e6).unwrap();
        assert!(matches!(
            estimate_cir(&tx, &short, &seq, &cfg),
            Err(SounderError::InsufficientLength { got: 100, need: 127 })
        ));
        let flat = Waveform::new(vec![0.0; 127], 1e6).unwrap();
        assert!(estimate_cir(&tx, &flat, &seq, &cfg).is_err());
        // two equal paths give a 0 dB ratio
        let rx = conv(tx.samples(), &[(0, 1.0), (40, 1.0)], 127);
        let rx = Waveform::new(rx, 1e6).unwrap();
        assert!(matches!(
            estimate_cir(&tx, &rx, &seq, &cfg),
            Err(SounderError::NoPeakFound { .. })
        ));
        let cfg = SounderConfig {
            chip_rate: 0.3e6,
            ..cfg
        };
        assert!(matches!(
            estimate_cir(&tx, &tx, &seq, &cfg),
            Err(SounderError::ChipRateMismatch { .. })
        ));
    }

    #[test]
    fn pdp_squares_taps() {
        let est = ChannelEstimate::from_taps(vec![1.0, 0.5], 1.0);
        assert_eq!(power_delay_profile(&est).power, vec![1.0, 0.25]);
        let est = ChannelEstimate::from_taps(vec![0.0; 4], 1.0);
        assert_eq!(power_delay_profile(&est).power, vec![0.0; 4]);
        let est = ChannelEstimate::from_taps(vec![-0.3], 1.0);
        assert!((power_delay_profile(&est).power[0] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn cfr_of_simple_taps() {
        let fs = 1e6;
        let unit = ChannelEstimate::from_taps(vec![1.0], fs);
        let r = cfr_from_cir(&unit, &[0.0, 1e5, 5e5]).unwrap();
        assert!(r.gains().iter().all(|g| (g - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let mut delayed = ChannelEstimate::from_taps(vec![1.0], fs);
        delayed.delay_axis = vec![3e-6];
        let f = 1e5;
        let r = cfr_from_cir(&delayed, &[f]).unwrap();
        assert!((r.gains()[0].norm() - 1.0).abs() < 1e-12);
        let want = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * 3e-6);
        assert!((r.gains()[0] - want).norm() < 1e-12);

        let avg = ChannelEstimate::from_taps(vec![0.5, 0.5], fs);
        let r = cfr_from_cir(&avg, &[fs / 2.0]).unwrap();
        assert!(r.gains()[0].norm() < 1e-12);

        assert!(matches!(
            cfr_from_cir(&avg, &[6e5]),
            Err(SounderError::FrequencyOutOfRange(_))
        ));
    }

    #[test]
    fn scalar_gain() {
        assert_eq!(scalar_gain_db(1.0, 1.0).unwrap(), 0.0);
        assert!((scalar_gain_db(0.1, 1.0).unwrap() + 20.0).abs() < 1e-12);
        let r = 10f64.powf(-52.2 / 20.0);
        assert!((scalar_gain_db(r, 1.0).unwrap() + 52.2).abs() < 1e-9);
        assert!(scalar_gain_db(0.0, 1.0).is_err());
        assert!(scalar_gain_db(1.0, -1.0).is_err());
    }

    fn frame(peak: f64, at: usize) -> ChannelEstimate {
        let mut t = vec![0.0; 16];
        t[at] = peak;
        ChannelEstimate::from_taps(t, 1.0)
    }

    #[test]
    fn stationarity() {
        let r = stationarity_check(&[frame(1.0, 0), frame(1.0, 0)], DEFAULT_CV_THRESHOLD).unwrap();
        assert_eq!(r.coefficient_of_variation, 0.0);
        assert_eq!(r.max_drift_samples, 0);
        assert!(r.time_invariant);

        let r = stationarity_check(&[frame(1.0, 0), frame(1.1, 0)], DEFAULT_CV_THRESHOLD).unwrap();
        assert!((r.coefficient_of_variation - 0.05 / 1.05).abs() < 1e-12);
        assert!(r.time_invariant);

        let r = stationarity_check(&[frame(1.0, 2), frame(1.0, 5)], DEFAULT_CV_THRESHOLD).unwrap();
        assert_eq!(r.max_drift_samples, 3);
        assert!(!r.time_invariant);

        assert!(stationarity_check(&[frame(1.0, 0)], 0.05).is_err());
        let odd = ChannelEstimate::from_taps(vec![1.0; 8], 1.0);
        assert!(matches!(
            stationarity_check(&[frame(1.0, 0), odd], 0.05),
            Err(SounderError::FrameMismatch(_))
        ));
    }
}
