//! Sounding signal generation: LFSR m-sequences, bipolar mapping, padding,
//! resampling and correlation primitives.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("degree {0} outside the supported range 2..=31")]
    InvalidDegree(u32),
    #[error("LFSR seed must be non-zero")]
    ZeroSeed,
    #[error("seed {seed:#x} does not fit in {degree} bits")]
    SeedTooWide { seed: u32, degree: u32 },
    #[error("tap {tap} outside 1..={degree}")]
    InvalidTap { tap: u32, degree: u32 },
    #[error("taps {taps:?} are not primitive for degree {degree}: period {period} < {expected}")]
    NonPrimitivePolynomial {
        degree: u32,
        taps: Vec<u32>,
        period: u64,
        expected: u64,
    },
    #[error("no built-in primitive polynomial for degree {0}")]
    NoBuiltinTaps(u32),
    #[error("sample rate must be finite and > 0 (got {0})")]
    InvalidSampleRate(f64),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("amplitude must be finite and > 0 (got {0})")]
    InvalidAmplitude(f64),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),
    #[error("circular correlation needs equal lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("resampling factor must be >= 1")]
    InvalidFactor,
}

/// One primitive polynomial per degree, written as the exponents of the
/// feedback polynomial (the constant term is implied).
const PRIMITIVE_TAPS: [&[u32]; 15] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 11, 10, 4],
    &[13, 12, 11, 8],
    &[14, 13, 12, 2],
    &[15, 14],
    &[16, 15, 13, 4],
];

/// Built-in primitive tap set for degrees 2 through 16.
pub fn primitive_taps(degree: u32) -> Result<&'static [u32], SignalError> {
    if (2..=16).contains(&degree) {
        Ok(PRIMITIVE_TAPS[(degree - 2) as usize])
    } else {
        Err(SignalError::NoBuiltinTaps(degree))
    }
}

/// Uniformly sampled real signal in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self, SignalError> {
        Self::with_start(samples, sample_rate, 0.0)
    }

    pub fn with_start(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self, SignalError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
            t0: if t0.is_finite() { t0 } else { 0.0 },
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time stamp of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.samples.iter().sum::<f64>() / self.samples.len() as f64
        }
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.energy() / self.samples.len() as f64).sqrt()
        }
    }

    /// Returns a copy with every sample transformed by `f`. Non-finite
    /// results are rejected.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, SignalError> {
        Self::with_start(
            self.samples.iter().map(|&s| f(s)).collect(),
            self.sample_rate,
            self.t0,
        )
    }
}

/// A maximal-length binary sequence and the LFSR that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnSequence {
    degree: u32,
    taps: Vec<u32>,
    seed: u32,
    end_state: u32,
    chips: Vec<u8>,
}

impl PnSequence {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    /// Register contents after the last generated chip.
    pub fn end_state(&self) -> u32 {
        self.end_state
    }

    pub fn chips(&self) -> &[u8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.chips.iter().filter(|&&c| c == 1).count()
    }

    /// Chips mapped to ±1.
    pub fn bipolar_chips(&self) -> Vec<i64> {
        self.chips.iter().map(|&c| if c == 1 { 1 } else { -1 }).collect()
    }

    /// Circular autocorrelation of the ±1 chips in exact integer arithmetic.
    pub fn autocorrelation(&self) -> Vec<i64> {
        let b = self.bipolar_chips();
        let n = b.len();
        (0..n)
            .map(|k| (0..n).map(|i| b[i] * b[(i + k) % n]).sum())
            .collect()
    }

    pub fn stats(&self) -> SequenceStats {
        let ac = self.autocorrelation();
        let off = &ac[1.min(ac.len())..];
        SequenceStats {
            period: self.len(),
            ones: self.ones(),
            zeros: self.len() - self.ones(),
            autocorrelation_peak: ac.first().copied().unwrap_or(0),
            offpeak_min: off.iter().copied().min().unwrap_or(0),
            offpeak_max: off.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceStats {
    pub period: usize,
    pub ones: usize,
    pub zeros: usize,
    pub autocorrelation_peak: i64,
    pub offpeak_min: i64,
    pub offpeak_max: i64,
}

impl SequenceStats {
    /// One more one than zero, as every m-sequence has.
    pub fn balanced(&self) -> bool {
        self.ones == self.zeros + 1
    }

    /// Peak `N`, every other lag `-1`.
    pub fn two_valued(&self) -> bool {
        self.autocorrelation_peak == self.period as i64 && self.offpeak_min == -1 && self.offpeak_max == -1
    }
}

/// Fibonacci LFSR. Stage `k` lives in bit `k - 1`; the output is stage
/// `degree` and the feedback (XOR of the tapped stages) enters stage 1.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    tap_mask: u32,
    degree: u32,
    mask: u32,
}

impl Lfsr {
    pub fn new(degree: u32, taps: &[u32], seed: u32) -> Result<Self, SignalError> {
        if !(2..=31).contains(&degree) {
            return Err(SignalError::InvalidDegree(degree));
        }
        let mask = (1u32 << degree) - 1;
        if seed == 0 {
            return Err(SignalError::ZeroSeed);
        }
        if seed & !mask != 0 {
            return Err(SignalError::SeedTooWide { seed, degree });
        }
        let mut tap_mask = 0;
        for &tap in taps {
            if tap == 0 || tap > degree {
                return Err(SignalError::InvalidTap { tap, degree });
            }
            tap_mask |= 1 << (tap - 1);
        }
        Ok(Self {
            state: seed,
            tap_mask,
            degree,
            mask,
        })
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Emits one chip and advances the register.
    pub fn step(&mut self) -> u8 {
        let out = ((self.state >> (self.degree - 1)) & 1) as u8;
        let feedback = (self.state & self.tap_mask).count_ones() & 1;
        self.state = ((self.state << 1) | feedback) & self.mask;
        out
    }
}

/// Runs the LFSR for one full period and checks the period is maximal.
pub fn generate_mseq(degree: u32, taps: &[u32], seed: u32) -> Result<PnSequence, SignalError> {
    let mut lfsr = Lfsr::new(degree, taps, seed)?;
    let expected = (1u64 << degree) - 1;
    let mut chips = Vec::with_capacity(expected as usize);
    for step in 1..=expected {
        chips.push(lfsr.step());
        if lfsr.state() == seed && step < expected {
            return Err(SignalError::NonPrimitivePolynomial {
                degree,
                taps: taps.to_vec(),
                period: step,
                expected,
            });
        }
    }
    if lfsr.state() != seed {
        // The register never came back, so it is not even a permutation of states.
        return Err(SignalError::NonPrimitivePolynomial {
            degree,
            taps: taps.to_vec(),
            period: 0,
            expected,
        });
    }
    Ok(PnSequence {
        degree,
        taps: taps.to_vec(),
        seed,
        end_state: lfsr.state(),
        chips,
    })
}

/// m-sequence of the given degree from the built-in tap table, seeded with
/// the all-ones register.
pub fn default_mseq(degree: u32) -> Result<PnSequence, SignalError> {
    let taps = primitive_taps(degree)?;
    generate_mseq(degree, taps, (1u32 << degree) - 1)
}

/// Maps chip 1 to `+amplitude/2` and chip 0 to `-amplitude/2`, one sample
/// per chip at `chip_rate`.
pub fn to_bipolar(seq: &PnSequence, amplitude: f64, chip_rate: f64) -> Result<Waveform, SignalError> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(SignalError::InvalidAmplitude(amplitude));
    }
    let half = amplitude / 2.0;
    let samples = seq
        .chips()
        .iter()
        .map(|&c| if c == 1 { half } else { -half })
        .collect();
    Waveform::new(samples, chip_rate)
}

pub fn zero_pad(w: &Waveform, pad_samples: usize) -> Waveform {
    let mut samples = Vec::with_capacity(w.len() + pad_samples);
    samples.extend_from_slice(w.samples());
    samples.resize(w.len() + pad_samples, 0.0);
    Waveform {
        samples,
        sample_rate: w.sample_rate,
        t0: w.t0,
    }
}

/// Concatenates `count` copies of the waveform.
pub fn repeat(w: &Waveform, count: usize) -> Waveform {
    Waveform {
        samples: w.samples().repeat(count),
        sample_rate: w.sample_rate,
        t0: w.t0,
    }
}

/// Zero-order-hold upsampling by an integer factor, as an arbitrary
/// waveform generator replays a sample list.
pub fn resample_zoh(w: &Waveform, factor: usize) -> Result<Waveform, SignalError> {
    if factor == 0 {
        return Err(SignalError::InvalidFactor);
    }
    let samples = w
        .samples()
        .iter()
        .flat_map(|&s| std::iter::repeat_n(s, factor))
        .collect();
    Waveform::with_start(samples, w.sample_rate * factor as f64, w.t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    Circular,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub values: Vec<f64>,
    /// Lags in samples, aligned with `values`.
    pub lag_axis: Vec<i64>,
    pub mode: CorrelationMode,
    pub sample_rate: f64,
}

impl CorrelationResult {
    pub fn lag_seconds(&self, i: usize) -> f64 {
        self.lag_axis[i] as f64 / self.sample_rate
    }

    pub fn value_at_lag(&self, lag: i64) -> Option<f64> {
        let first = *self.lag_axis.first()?;
        let idx = usize::try_from(lag - first).ok()?;
        self.values.get(idx).copied()
    }

    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.values)
    }
}

pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Below this many multiply-adds the direct sum is used.
const DIRECT_CORRELATION_LIMIT: usize = 1 << 16;

/// `values[k] = Σ_n x[n]·y[n+k]`, circularly wrapped (lags `0..N`) or with
/// zero extension (lags `-(len x - 1) ..= len y - 1`).
pub fn cross_correlate(
    x: &Waveform,
    y: &Waveform,
    mode: CorrelationMode,
) -> Result<CorrelationResult, SignalError> {
    if x.sample_rate != y.sample_rate {
        return Err(SignalError::SampleRateMismatch(x.sample_rate, y.sample_rate));
    }
    let (values, lag_axis) = match mode {
        CorrelationMode::Circular => {
            if x.len() != y.len() {
                return Err(SignalError::LengthMismatch(x.len(), y.len()));
            }
            let n = x.len();
            let values = if n * n <= DIRECT_CORRELATION_LIMIT {
                circular_direct(x.samples(), y.samples())
            } else {
                circular_fft(x.samples(), y.samples())
            };
            (values, (0..n as i64).collect())
        }
        CorrelationMode::Linear => {
            let (nx, ny) = (x.len(), y.len());
            if nx == 0 || ny == 0 {
                (Vec::new(), Vec::new())
            } else {
                let values = if nx * ny <= DIRECT_CORRELATION_LIMIT {
                    linear_direct(x.samples(), y.samples())
                } else {
                    linear_fft(x.samples(), y.samples())
                };
                (values, (-(nx as i64 - 1)..=ny as i64 - 1).collect())
            }
        }
    };
    Ok(CorrelationResult {
        values,
        lag_axis,
        mode,
        sample_rate: x.sample_rate,
    })
}

pub(crate) fn circular_direct(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).map(|i| x[i] * y[(i + k) % n]).sum())
        .collect()
}

fn linear_direct(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (nx, ny) = (x.len() as i64, y.len() as i64);
    (-(nx - 1)..ny)
        .map(|k| {
            let lo = 0.max(-k);
            let hi = nx.min(ny - k);
            (lo..hi).map(|i| x[i as usize] * y[(i + k) as usize]).sum()
        })
        .collect()
}

/// Circular correlation through the DFT: `IFFT(conj(X)·Y) / N`.
pub(crate) fn circular_fft(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    circular_fft_with(x, y, &fwd, &inv)
}

pub(crate) fn circular_fft_with(
    x: &[f64],
    y: &[f64],
    fwd: &Arc<dyn rustfft::Fft<f64>>,
    inv: &Arc<dyn rustfft::Fft<f64>>,
) -> Vec<f64> {
    let n = x.len();
    let mut xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut ys: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut xs);
    fwd.process(&mut ys);
    for (a, b) in xs.iter_mut().zip(&ys) {
        *a = a.conj() * b;
    }
    inv.process(&mut xs);
    let scale = 1.0 / n as f64;
    xs.iter().map(|c| c.re * scale).collect()
}

fn linear_fft(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (nx, ny) = (x.len(), y.len());
    let size = (nx + ny - 1).next_power_of_two();
    let mut xp = x.to_vec();
    xp.resize(size, 0.0);
    let mut yp = y.to_vec();
    yp.resize(size, 0.0);
    let circ = circular_fft(&xp, &yp);
    // Negative lags wrap to the tail of the circular result.
    let mut out = Vec::with_capacity(nx + ny - 1);
    for k in -(nx as i64 - 1)..ny as i64 {
        out.push(circ[k.rem_euclid(size as i64) as usize]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf(s: &[f64]) -> Waveform {
        Waveform::new(s.to_vec(), 1.0).unwrap()
    }

    /// Hand-stepped 3-bit register with taps {3,2} from seed 0b111.
    #[test]
    fn stats_of_degree_five() {
        let st = default_mseq(5).unwrap().stats();
        assert_eq!((st.period, st.ones, st.zeros, st.autocorrelation_peak), (31, 16, 15, 31));
        assert!(st.balanced() && st.two_valued());
    }

    #[test]
    fn degree_three_hand_stepped() {
        let seq = generate_mseq(3, &[3, 2], 0b111).unwrap();
        assert_eq!(seq.chips(), &[1, 1, 1, 0, 0, 1, 0]);
        assert_eq!(seq.len(), 7);
        assert_eq!(seq.ones(), 4);
        assert_eq!(seq.end_state(), 0b111);
    }

    #[test]
    fn non_primitive_taps_are_rejected() {
        // x^3 + x^2 + x + 1 = (x + 1)^3
        let err = generate_mseq(3, &[3, 2, 1], 0b001).unwrap_err();
        assert!(matches!(err, SignalError::NonPrimitivePolynomial { expected: 7, .. }));
        // missing the top tap: the register is not invertible
        let err = generate_mseq(4, &[3], 0b1000).unwrap_err();
        assert!(matches!(err, SignalError::NonPrimitivePolynomial { .. }));
    }

    #[test]
    fn bad_seed_and_taps() {
        assert_eq!(generate_mseq(3, &[3, 2], 0), Err(SignalError::ZeroSeed));
        assert!(matches!(
            generate_mseq(3, &[3, 2], 0b1000),
            Err(SignalError::SeedTooWide { .. })
        ));
        assert!(matches!(
            generate_mseq(3, &[4, 2], 1),
            Err(SignalError::InvalidTap { tap: 4, .. })
        ));
        assert!(matches!(generate_mseq(1, &[1], 1), Err(SignalError::InvalidDegree(1))));
    }

    #[test]
    fn degree_thirteen_length() {
        let seq = default_mseq(13).unwrap();
        assert_eq!(seq.len(), 8191);
        assert_eq!(seq.ones(), 4096);
    }

    #[test]
    fn end_state_continues_cyclically() {
        let seq = default_mseq(6).unwrap();
        let mut lfsr = Lfsr::new(6, seq.taps(), seq.end_state()).unwrap();
        let again: Vec<u8> = (0..seq.len()).map(|_| lfsr.step()).collect();
        assert_eq!(again, seq.chips());
    }

    #[test]
    fn every_builtin_degree_is_maximal() {
        for m in 2..=16 {
            let seq = default_mseq(m).unwrap();
            assert_eq!(seq.len() as u64, (1u64 << m) - 1, "degree {m}");
            assert_eq!(seq.ones() as u64, 1u64 << (m - 1), "degree {m}");
        }
    }

    #[test]
    fn bipolar_mapping() {
        let seq = PnSequence {
            degree: 2,
            taps: vec![2, 1],
            seed: 1,
            end_state: 1,
            chips: vec![1, 0, 1],
        };
        assert_eq!(to_bipolar(&seq, 1.0, 1.0).unwrap().samples(), &[0.5, -0.5, 0.5]);
        let one = PnSequence { chips: vec![1], ..seq };
        assert_eq!(to_bipolar(&one, 2.0, 1.0).unwrap().samples(), &[1.0]);
        assert!(to_bipolar(&one, 0.0, 1.0).is_err());
    }

    #[test]
    fn bipolar_mean_follows_balance() {
        let seq = default_mseq(13).unwrap();
        let w = to_bipolar(&seq, 1.0, 2.5e6).unwrap();
        assert!((w.mean() - 0.5 / 8191.0).abs() < 1e-15);
    }

    #[test]
    fn padding() {
        let w = wf(&[1.0, -1.0]);
        let p = zero_pad(&w, 2);
        assert_eq!(p.samples(), &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(p.sample_rate(), 1.0);
        assert_eq!(zero_pad(&w, 0), w);
        assert_eq!(p.energy(), w.energy());
    }

    #[test]
    fn zoh_doubles_rate() {
        let w = Waveform::new(vec![1.0, -1.0], 2.5e6).unwrap();
        let r = resample_zoh(&w, 2).unwrap();
        assert_eq!(r.samples(), &[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(r.sample_rate(), 5e6);
        assert!(resample_zoh(&w, 0).is_err());
    }

    #[test]
    fn waveform_rejects_bad_input() {
        assert!(Waveform::new(vec![1.0], 0.0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 1.0).is_err());
        assert!(Waveform::new(vec![1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn circular_impulse() {
        let x = wf(&[1.0, 0.0, 0.0]);
        let r = cross_correlate(&x, &x, CorrelationMode::Circular).unwrap();
        assert_eq!(r.values, vec![1.0, 0.0, 0.0]);
        assert_eq!(r.lag_axis, vec![0, 1, 2]);
    }

    #[test]
    fn circular_mseq_two_valued() {
        let seq = generate_mseq(3, &[3, 2], 0b111).unwrap();
        let chips: Vec<f64> = seq.bipolar_chips().iter().map(|&c| c as f64).collect();
        let x = wf(&chips);
        let r = cross_correlate(&x, &x, CorrelationMode::Circular).unwrap();
        assert_eq!(r.values, vec![7.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0]);
    }

    /// Σ_n x[n]·y[n+k] for x=[1,2], y=[3,4]:
    /// k=-1 → x[1]y[0] = 6, k=0 → 11, k=1 → x[0]y[1] = 4.
    #[test]
    fn linear_small_case() {
        let r = cross_correlate(&wf(&[1.0, 2.0]), &wf(&[3.0, 4.0]), CorrelationMode::Linear).unwrap();
        assert_eq!(r.lag_axis, vec![-1, 0, 1]);
        assert_eq!(r.values, vec![6.0, 11.0, 4.0]);
        let swapped =
            cross_correlate(&wf(&[3.0, 4.0]), &wf(&[1.0, 2.0]), CorrelationMode::Linear).unwrap();
        assert_eq!(swapped.values, vec![4.0, 11.0, 6.0]);
    }

    #[test]
    fn correlation_errors() {
        let a = Waveform::new(vec![1.0, 2.0], 1.0).unwrap();
        let b = Waveform::new(vec![1.0, 2.0], 2.0).unwrap();
        assert!(matches!(
            cross_correlate(&a, &b, CorrelationMode::Linear),
            Err(SignalError::SampleRateMismatch(..))
        ));
        let c = wf(&[1.0]);
        assert!(matches!(
            cross_correlate(&a, &c, CorrelationMode::Circular),
            Err(SignalError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn fft_paths_match_direct_sum() {
        let seq = default_mseq(10).unwrap();
        let x: Vec<f64> = seq.bipolar_chips().iter().map(|&c| c as f64 * 0.37).collect();
        let y: Vec<f64> = (0..x.len()).map(|i| ((i * 7919) % 113) as f64 - 56.0).collect();
        let direct = circular_direct(&x, &y);
        let fast = circular_fft(&x, &y);
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (d, f) in direct.iter().zip(&fast) {
            assert!((d - f).abs() <= 1e-9 * scale);
        }
        let direct = linear_direct(&x[..300], &y[..500]);
        let fast = linear_fft(&x[..300], &y[..500]);
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (d, f) in direct.iter().zip(&fast) {
            assert!((d - f).abs() <= 1e-9 * scale);
        }
    }
}
