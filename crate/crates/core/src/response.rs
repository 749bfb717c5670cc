//! Complex gain sampled on a frequency grid. Produced by the sounder, the
//! parametric model and the field solver alike.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("frequency grid and gains differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("frequency grid must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
}

/// `20·log10|g|`, with `-inf` for an exact zero.
pub fn magnitude_db(g: Complex64) -> f64 {
    20.0 * g.norm().log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    freqs: Vec<f64>,
    gains: Vec<Complex64>,
    gain_db: Vec<f64>,
}

impl FrequencyResponse {
    pub fn new(freqs: Vec<f64>, gains: Vec<Complex64>) -> Result<Self, ResponseError> {
        if freqs.len() != gains.len() {
            return Err(ResponseError::LengthMismatch(freqs.len(), gains.len()));
        }
        check_grid(&freqs)?;
        let gain_db = gains.iter().map(|&g| magnitude_db(g)).collect();
        Ok(Self {
            freqs,
            gains,
            gain_db,
        })
    }

    /// Magnitude-only samples (zero phase), e.g. digitized gain curves.
    pub fn from_db(freqs: Vec<f64>, gain_db: &[f64]) -> Result<Self, ResponseError> {
        let gains = gain_db
            .iter()
            .map(|&db| Complex64::new(10f64.powf(db / 20.0), 0.0))
            .collect();
        let mut r = Self::new(freqs, gains)?;
        // keep the caller's dB values verbatim rather than the round trip
        r.gain_db = gain_db.to_vec();
        Ok(r)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn gain_db(&self) -> &[f64] {
        &self.gain_db
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// True when the dB magnitude never decreases along the grid.
    pub fn is_monotone_increasing(&self) -> bool {
        self.gain_db.windows(2).all(|w| w[1] >= w[0])
    }
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<(), ResponseError> {
    for (i, f) in freqs.iter().enumerate() {
        if !f.is_finite() || (i > 0 && *f <= freqs[i - 1]) {
            return Err(ResponseError::NotIncreasing(i));
        }
    }
    Ok(())
}

/// `count` log-spaced points from `start` to `stop` inclusive.
pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        start
                    } else if i == count - 1 {
                        stop
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
