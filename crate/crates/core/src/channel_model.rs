//! Parametric galvanic-coupling channel: a rational high-pass transfer
//! function fitted to gain samples, its discretization, and a channel
//! simulator applying it to waveforms with additive and common-mode noise.
//!
//! Fitted models are built from first-order sections in cascade:
//!
//! ```text
//! H(s) = K · s/(s + p₀) · Π_i (s + r_i·p_i)/(s + p_i),   0 < r_i < 1
//! ```
//!
//! Every section has its zero below its pole, so `|H(jω)|` rises
//! monotonically from zero at DC to the passband gain `K`.

use std::f64::consts::{LN_10, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::response::{check_grid, log_grid, FrequencyResponse, ResponseError};
use crate::signals::Waveform;
use crate::sounder::ChannelEstimate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("fit of order {order} needs at least {need} samples, got {got}")]
    InsufficientSamples { order: usize, need: usize, got: usize },
    #[error("model order must be >= 1")]
    InvalidOrder,
    #[error("gain samples must sit at finite, positive frequencies with finite dB values")]
    InvalidSample,
    #[error("fit stalled with RMS residual {rms_db:.3} dB (tolerance {tolerance_db} dB)")]
    FitDiverged { rms_db: f64, tolerance_db: f64 },
    #[error("model is not stable or not real: {0}")]
    InvalidModel(String),
    #[error("discretized pole has magnitude {0} >= 1")]
    UnstableAfterDiscretization(f64),
    #[error("invalid sample rate or length")]
    InvalidDiscretization,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub freqs_hz: Vec<f64>,
    pub target_db: Vec<f64>,
    /// Model minus target, per sample.
    pub residual_db: Vec<f64>,
    pub rms_db: f64,
    pub iterations: usize,
    /// Set when the data carried no usable high-pass structure: a pole
    /// drifted far outside the sampled band or a zero/pole pair nearly
    /// cancels.
    pub degenerate: bool,
}

/// Analog rational high-pass model with poles and zeros in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HighPassModel {
    gain: f64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    fit: Option<FitReport>,
}

fn conjugate_closed(roots: &[Complex64]) -> bool {
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    let mut used = vec![false; roots.len()];
    for (i, r) in roots.iter().enumerate() {
        if r.im.abs() <= 1e-12 * scale {
            continue;
        }
        if used[i] {
            continue;
        }
        let mate = roots.iter().enumerate().position(|(j, q)| {
            j != i && !used[j] && (q - r.conj()).norm() <= 1e-9 * scale
        });
        match mate {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

impl HighPassModel {
    pub fn new(gain: f64, zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self, ModelError> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(ModelError::InvalidModel(format!("gain {gain}")));
        }
        if zeros.len() > poles.len() {
            return Err(ModelError::InvalidModel("more zeros than poles".into()));
        }
        if let Some(p) = poles.iter().find(|p| !(p.re < 0.0 && p.im.is_finite())) {
            return Err(ModelError::InvalidModel(format!("pole {p} not in the left half-plane")));
        }
        if zeros.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ModelError::InvalidModel("non-finite zero".into()));
        }
        if !conjugate_closed(&poles) || !conjugate_closed(&zeros) {
            return Err(ModelError::InvalidModel("roots not closed under conjugation".into()));
        }
        Ok(Self {
            gain,
            zeros,
            poles,
            fit: None,
        })
    }

    /// Unit gain, no dynamics.
    pub fn identity() -> Self {
        Self {
            gain: 1.0,
            zeros: Vec::new(),
            poles: Vec::new(),
            fit: None,
        }
    }

    /// `K·s/(s + 2π·fc)`.
    pub fn first_order(cutoff_hz: f64, passband_gain_db: f64) -> Result<Self, ModelError> {
        Self::new(
            10f64.powf(passband_gain_db / 20.0),
            vec![Complex64::new(0.0, 0.0)],
            vec![Complex64::new(-2.0 * PI * cutoff_hz, 0.0)],
        )
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn fit_report(&self) -> Option<&FitReport> {
        self.fit.as_ref()
    }

    /// High-frequency asymptote in dB. Only meaningful when the numbers of
    /// zeros and poles match, as they do for every fitted model.
    pub fn passband_gain_db(&self) -> f64 {
        20.0 * self.gain.log10()
    }

    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let s = Complex64::new(0.0, 2.0 * PI * freq_hz);
        let num: Complex64 = self.zeros.iter().map(|z| s - z).product();
        let den: Complex64 = self.poles.iter().map(|p| s - p).product();
        num / den * self.gain
    }

    /// Frequency where the magnitude first sits 3.01 dB below the passband
    /// gain, found by bisection on a log axis. `None` for the identity model.
    pub fn cutoff_hz(&self) -> Option<f64> {
        if self.poles.is_empty() {
            return None;
        }
        let target = self.gain / 2f64.sqrt();
        let below = |f: f64| self.response_at(f).norm() < target;
        let (mut lo, mut hi) = (1e-6f64, 1e15f64);
        if !below(lo) || below(hi) {
            return None;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-13 {
                break;
            }
        }
        Some((lo * hi).sqrt())
    }
}

/// Analytic evaluation of the model on a frequency grid. At exactly 0 Hz a
/// high-pass model has zero magnitude and `gain_db` holds `-inf`.
pub fn model_frequency_response(model: &HighPassModel, freq_grid: &[f64]) -> Result<FrequencyResponse, ModelError> {
    check_grid(freq_grid)?;
    if freq_grid.iter().any(|&f| f < 0.0) {
        return Err(ModelError::InvalidSample);
    }
    let gains = freq_grid.iter().map(|&f| model.response_at(f)).collect();
    Ok(FrequencyResponse::new(freq_grid.to_vec(), gains)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// The fit is rejected when its RMS residual stays above this.
    pub tolerance_db: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            tolerance_db: 3.0,
        }
    }
}

/// Section-cascade parameters: `[ln K, ln p₀, (ln p_i, logit r_i)…]`.
struct Cascade {
    order: usize,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Cascade {
    fn n_params(&self) -> usize {
        2 * self.order
    }

    /// Model dB at angular frequency `w` and its gradient.
    fn eval(&self, theta: &[f64], w: f64, grad: Option<&mut [f64]>) -> f64 {
        let c = 10.0 / LN_10;
        let w2 = w * w;
        let p0 = theta[1].exp();
        let mut db = 20.0 * theta[0] / LN_10 + c * (w2 / (w2 + p0 * p0)).ln();
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g[0] = 2.0 * c;
            g[1] = -2.0 * c * p0 * p0 / (w2 + p0 * p0);
        }
        for i in 1..self.order {
            let p = theta[2 * i].exp();
            let r = logistic(theta[2 * i + 1]);
            let z = r * p;
            db += c * ((w2 + z * z) / (w2 + p * p)).ln();
            if let Some(g) = g.as_deref_mut() {
                g[2 * i] = c * (2.0 * z * z / (w2 + z * z) - 2.0 * p * p / (w2 + p * p));
                g[2 * i + 1] = c * 2.0 * z * z * (1.0 - r) / (w2 + z * z);
            }
        }
        db
    }

    fn residuals(&self, theta: &[f64], w: &[f64], target: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(target)
            .map(|(&wi, &t)| self.eval(theta, wi, None) - t)
            .collect()
    }

    fn cost(&self, theta: &[f64], w: &[f64], target: &[f64]) -> f64 {
        self.residuals(theta, w, target).iter().map(|r| r * r).sum()
    }

    /// Sets `ln K` to the least-squares optimum for the current shape.
    fn best_gain(&self, theta: &mut [f64], w: &[f64], target: &[f64]) {
        theta[0] = 0.0;
        let offset = self
            .residuals(theta, w, target)
            .iter()
            .map(|r| -r)
            .sum::<f64>()
            / w.len() as f64;
        theta[0] = offset * LN_10 / 20.0;
    }

    fn to_model(&self, theta: &[f64]) -> Result<HighPassModel, ModelError> {
        let mut zeros = vec![Complex64::new(0.0, 0.0)];
        let mut poles = vec![Complex64::new(-theta[1].exp(), 0.0)];
        for i in 1..self.order {
            let p = theta[2 * i].exp();
            let r = logistic(theta[2 * i + 1]);
            zeros.push(Complex64::new(-r * p, 0.0));
            poles.push(Complex64::new(-p, 0.0));
        }
        HighPassModel::new(theta[0].exp(), zeros, poles)
    }
}

/// Fits a high-pass model of the given order to magnitude samples by least
/// squares on the dB error. A coarse grid over the corner frequency (and,
/// for higher orders, section spread and zero ratio) seeds a
/// Levenberg-Marquardt refinement; both stages are deterministic.
pub fn fit_gain_model(samples: &FrequencyResponse, order: usize) -> Result<HighPassModel, ModelError> {
    fit_gain_model_with(samples, order, &FitOptions::default())
}

pub fn fit_gain_model_with(
    samples: &FrequencyResponse,
    order: usize,
    options: &FitOptions,
) -> Result<HighPassModel, ModelError> {
    if order == 0 {
        return Err(ModelError::InvalidOrder);
    }
    let need = order + 1;
    if samples.len() < need {
        return Err(ModelError::InsufficientSamples {
            order,
            need,
            got: samples.len(),
        });
    }
    let freqs = samples.freqs();
    let target = samples.gain_db();
    if freqs.iter().any(|&f| !(f > 0.0 && f.is_finite())) || target.iter().any(|d| !d.is_finite()) {
        return Err(ModelError::InvalidSample);
    }
    let w: Vec<f64> = freqs.iter().map(|f| 2.0 * PI * f).collect();
    let cascade = Cascade { order };
    let (fmin, fmax) = (freqs[0], freqs[freqs.len() - 1]);

    // coarse grid
    let corners = log_grid(fmin / 10.0, fmax * 10.0, 49);
    let spreads: &[f64] = if order > 1 { &[0.1, 0.3, 1.0, 3.0, 10.0] } else { &[1.0] };
    let ratios: &[f64] = if order > 1 { &[0.05, 0.2, 0.5, 0.8] } else { &[0.5] };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for &fc in &corners {
        for &spread in spreads {
            for &ratio in ratios {
                let mut theta = vec![0.0; cascade.n_params()];
                theta[1] = (2.0 * PI * fc).ln();
                for i in 1..order {
                    theta[2 * i] = (2.0 * PI * fc * spread.powi(i as i32)).ln();
                    theta[2 * i + 1] = (ratio / (1.0 - ratio)).ln();
                }
                cascade.best_gain(&mut theta, &w, target);
                let cost = cascade.cost(&theta, &w, target);
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, theta));
                }
            }
        }
    }
    let (mut cost, mut theta) = best.expect("grid is non-empty");

    // Levenberg-Marquardt
    let np = cascade.n_params();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut grad = vec![0.0; np];
    while iterations < options.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(w.len(), np);
        let mut res = DVector::<f64>::zeros(w.len());
        for (i, &wi) in w.iter().enumerate() {
            res[i] = cascade.eval(&theta, wi, Some(&mut grad)) - target[i];
            for j in 0..np {
                jac[(i, j)] = grad[j];
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        if jtr.amax() < 1e-14 {
            break;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for d in 0..np {
                a[(d, d)] += lambda * (jtj[(d, d)] + 1e-9);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let trial_cost = cascade.cost(&trial, &w, target);
            if trial_cost.is_finite() && trial_cost < cost {
                let done = cost - trial_cost <= 1e-15 * cost.max(1e-30);
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-24 {
            break;
        }
    }

    let residual_db = cascade.residuals(&theta, &w, target);
    let rms_db = (cost / w.len() as f64).sqrt();
    if !rms_db.is_finite() || rms_db > options.tolerance_db {
        return Err(ModelError::FitDiverged {
            rms_db,
            tolerance_db: options.tolerance_db,
        });
    }
    let mut model = cascade.to_model(&theta)?;
    let band = (2.0 * PI * fmin / 100.0)..=(2.0 * PI * fmax * 100.0);
    let out_of_band = model.poles.iter().any(|p| !band.contains(&p.norm()));
    let cancelling = (1..order).any(|i| logistic(theta[2 * i + 1]) > 0.99);
    model.fit = Some(FitReport {
        freqs_hz: freqs.to_vec(),
        target_db: target.to_vec(),
        residual_db,
        rms_db,
        iterations,
        degenerate: out_of_band || cancelling,
    });
    Ok(model)
}

/// How the analog model was mapped to discrete time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// `s = 2·fs·(1 − z⁻¹)/(1 + z⁻¹)` without prewarping.
    Bilinear,
}

impl std::fmt::Display for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("bilinear")
    }
}

/// Real-coefficient IIR filter `B(z⁻¹)/A(z⁻¹)` with `a[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl DiscreteFilter {
    /// Transposed direct form II.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let n = self.a.len().max(self.b.len());
        let b: Vec<f64> = (0..n).map(|i| self.b.get(i).copied().unwrap_or(0.0)).collect();
        let a: Vec<f64> = (0..n).map(|i| self.a.get(i).copied().unwrap_or(0.0)).collect();
        let mut state = vec![0.0; n];
        x.iter()
            .map(|&xn| {
                let y = b[0] * xn + state[0];
                for i in 1..n {
                    let next = if i + 1 < n { state[i] } else { 0.0 };
                    state[i - 1] = b[i] * xn - a[i] * y + next;
                }
                y
            })
            .collect()
    }
}

fn poly_from_roots(roots: &[Complex64], c: f64) -> Vec<Complex64> {
    // Π ((c − r) − (c + r) z⁻¹)
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let (k0, k1) = (Complex64::new(c, 0.0) - r, -(Complex64::new(c, 0.0) + r));
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i] += p * k0;
            next[i + 1] += p * k1;
        }
        poly = next;
    }
    poly
}

/// Bilinear-transform discretization of the model at `sample_rate`.
pub fn discretize(model: &HighPassModel, sample_rate: f64) -> Result<DiscreteFilter, ModelError> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(ModelError::InvalidDiscretization);
    }
    let c = 2.0 * sample_rate;
    for p in &model.poles {
        let zd = (Complex64::new(c, 0.0) + p) / (Complex64::new(c, 0.0) - p);
        if zd.norm() >= 1.0 {
            return Err(ModelError::UnstableAfterDiscretization(zd.norm()));
        }
    }
    let mut num = poly_from_roots(&model.zeros, c);
    // surplus poles leave (1 + z⁻¹) factors in the numerator
    for _ in model.zeros.len()..model.poles.len() {
        let mut next = vec![Complex64::new(0.0, 0.0); num.len() + 1];
        for (i, &p) in num.iter().enumerate() {
            next[i] += p;
            next[i + 1] += p;
        }
        num = next;
    }
    let den = poly_from_roots(&model.poles, c);
    let a0 = den[0];
    Ok(DiscreteFilter {
        b: num.iter().map(|v| (v / a0 * model.gain).re).collect(),
        a: den.iter().map(|v| (v / a0).re).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelImpulseResponse {
    pub estimate: ChannelEstimate,
    pub discretization: Discretization,
    /// Energy of the response beyond the truncation point.
    pub truncation_energy_loss: f64,
    /// Same, as a fraction of the total response energy.
    pub truncation_loss_fraction: f64,
}

const TAIL_LIMIT: usize = 1 << 22;

/// Discrete impulse response of the model, truncated to `length` taps.
pub fn model_impulse_response(
    model: &HighPassModel,
    sample_rate: f64,
    length: usize,
) -> Result<ModelImpulseResponse, ModelError> {
    if length == 0 {
        return Err(ModelError::InvalidDiscretization);
    }
    let filter = discretize(model, sample_rate)?;
    // Run past the requested length until the tail has died out.
    let mut run = length.max(1024);
    let h = loop {
        let mut impulse = vec![0.0; run];
        impulse[0] = 1.0;
        let h = filter.filter(&impulse);
        let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = h[run - run / 8..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if tail <= 1e-17 * peak || run >= TAIL_LIMIT {
            break h;
        }
        run *= 2;
    };
    let total: f64 = h.iter().map(|v| v * v).sum();
    let kept: f64 = h[..length.min(h.len())].iter().map(|v| v * v).sum();
    let loss = (total - kept).max(0.0);
    let mut taps = h;
    taps.resize(length, 0.0);
    Ok(ModelImpulseResponse {
        estimate: ChannelEstimate::from_taps(taps, sample_rate),
        discretization: Discretization::Bilinear,
        truncation_energy_loss: loss,
        truncation_loss_fraction: if total > 0.0 { loss / total } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    pub relative_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSimConfig {
    /// Additive white Gaussian noise relative to the filtered signal power.
    /// `inf` disables the noise.
    pub noise_snr_db: f64,
    /// Common-mode interference fundamental.
    pub cm_tone_hz: f64,
    /// Peak amplitude of the fundamental in volts; 0 disables the tone.
    pub cm_amplitude: f64,
    pub cm_phase_rad: f64,
    pub cm_harmonics: Vec<Harmonic>,
    pub rng_seed: u64,
}

impl Default for ChannelSimConfig {
    fn default() -> Self {
        Self {
            noise_snr_db: f64::INFINITY,
            cm_tone_hz: 50.0,
            cm_amplitude: 0.0,
            cm_phase_rad: 0.0,
            cm_harmonics: vec![
                Harmonic {
                    order: 1,
                    relative_amplitude: 1.0,
                },
                Harmonic {
                    order: 3,
                    relative_amplitude: 0.3,
                },
                Harmonic {
                    order: 5,
                    relative_amplitude: 0.2,
                },
            ],
            rng_seed: 0,
        }
    }
}

/// Passes `tx` through the model and adds noise and common-mode
/// interference. Zero signal power means zero injected noise.
pub fn apply_channel(tx: &Waveform, model: &HighPassModel, cfg: &ChannelSimConfig) -> Result<Waveform, ModelError> {
    if cfg.cm_amplitude < 0.0 || cfg.noise_snr_db.is_nan() {
        return Err(ModelError::InvalidModel("negative amplitude or NaN SNR".into()));
    }
    let filter = discretize(model, tx.sample_rate())?;
    let mut y = filter.filter(tx.samples());
    if cfg.noise_snr_db.is_finite() {
        let power = y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64;
        if power > 0.0 {
            let sigma = (power / 10f64.powf(cfg.noise_snr_db / 10.0)).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| ModelError::InvalidModel(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            for v in y.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    if cfg.cm_amplitude > 0.0 {
        for (n, v) in y.iter_mut().enumerate() {
            let t = tx.time_at(n);
            for h in &cfg.cm_harmonics {
                let w = 2.0 * PI * cfg.cm_tone_hz * h.order as f64;
                *v += cfg.cm_amplitude * h.relative_amplitude * (w * t + cfg.cm_phase_rad * h.order as f64).sin();
            }
        }
    }
    Waveform::with_start(y, tx.sample_rate(), tx.t0()).map_err(|e| ModelError::InvalidModel(e.to_string()))
}

/// On-disk form of a model (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub order: usize,
    pub gain: f64,
    /// `[re, im]` pairs in rad/s.
    pub zeros: Vec<[f64; 2]>,
    pub poles: Vec<[f64; 2]>,
    pub passband_gain_db: f64,
    pub cutoff_hz: Option<f64>,
    pub discretization: Discretization,
    pub fit: Option<FitReport>,
}

pub const MODEL_FORMAT: &str = "galvanic-highpass-v1";

impl HighPassModel {
    pub fn to_file(&self) -> ModelFile {
        let pairs = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        ModelFile {
            format: MODEL_FORMAT.into(),
            order: self.order(),
            gain: self.gain,
            zeros: pairs(&self.zeros),
            poles: pairs(&self.poles),
            passband_gain_db: self.passband_gain_db(),
            cutoff_hz: self.cutoff_hz(),
            discretization: Discretization::Bilinear,
            fit: self.fit.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, ModelError> {
        if file.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("unknown format {:?}", file.format)));
        }
        if file.order != file.poles.len() {
            return Err(ModelError::Format("order does not match pole count".into()));
        }
        let c = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let mut model = if file.poles.is_empty() && file.zeros.is_empty() {
            let mut m = Self::identity();
            m.gain = file.gain;
            m
        } else {
            Self::new(file.gain, c(&file.zeros), c(&file.poles))?
        };
        model.fit = file.fit;
        Ok(model)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("model file serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        Self::from_file(file)
    }
}
