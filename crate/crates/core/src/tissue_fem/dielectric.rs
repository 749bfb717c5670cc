//! Tabulated tissue dielectric spectra.
//!
//! CSV columns: `frequency_hz,tissue_name,sigma_s_per_m,eps_r`, one row per
//! (tissue, frequency). Values between tabulated frequencies are linearly
//! interpolated in log-frequency; outside the table the nearest end value is
//! held.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use super::FemError;

pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

const BUNDLED: &str = include_str!("../../data/tissue_properties.csv");
const HEADER: [&str; 4] = ["frequency_hz", "tissue_name", "sigma_s_per_m", "eps_r"];

/// Conductivity and relative permittivity of one tissue versus frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DielectricSpectrum {
    freqs: Vec<f64>,
    sigma: Vec<f64>,
    eps_r: Vec<f64>,
}

impl DielectricSpectrum {
    /// Points must have `f > 0` strictly increasing, `sigma ≥ 0`, `eps_r ≥ 1`.
    pub fn new(freqs: Vec<f64>, sigma: Vec<f64>, eps_r: Vec<f64>) -> Result<Self, FemError> {
        let bad = |m: String| Err(FemError::TissueData { line: 0, message: m });
        if freqs.is_empty() || freqs.len() != sigma.len() || freqs.len() != eps_r.len() {
            return bad("spectrum needs equal, non-empty frequency/sigma/eps_r lists".into());
        }
        for k in 0..freqs.len() {
            if !(freqs[k].is_finite() && freqs[k] > 0.0) || (k > 0 && freqs[k] <= freqs[k - 1]) {
                return bad(format!("frequencies must be positive and strictly increasing (index {k})"));
            }
            if !(sigma[k].is_finite() && sigma[k] >= 0.0) {
                return bad(format!("sigma must be finite and >= 0 (index {k})"));
            }
            if !(eps_r[k].is_finite() && eps_r[k] >= 1.0) {
                return bad(format!("eps_r must be finite and >= 1 (index {k})"));
            }
        }
        Ok(Self { freqs, sigma, eps_r })
    }

    /// Frequency-independent material.
    pub fn constant(sigma: f64, eps_r: f64) -> Result<Self, FemError> {
        Self::new(vec![1.0], vec![sigma], vec![eps_r])
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `(sigma, eps_r)` at `freq`; frequencies at or below the first
    /// tabulated point (including DC) take the first point's values.
    pub fn at(&self, freq: f64) -> (f64, f64) {
        let n = self.freqs.len();
        if n == 1 || freq <= self.freqs[0] {
            return (self.sigma[0], self.eps_r[0]);
        }
        if freq >= self.freqs[n - 1] {
            return (self.sigma[n - 1], self.eps_r[n - 1]);
        }
        let k = self.freqs.partition_point(|&f| f <= freq) - 1;
        let (f0, f1) = (self.freqs[k].ln(), self.freqs[k + 1].ln());
        let t = (freq.ln() - f0) / (f1 - f0);
        let lerp = |v: &[f64]| v[k] + t * (v[k + 1] - v[k]);
        (lerp(&self.sigma), lerp(&self.eps_r))
    }

    /// Complex admittivity `σ + jωε₀ε_r` in S/m.
    pub fn admittivity(&self, freq: f64) -> Complex64 {
        let (s, e) = self.at(freq);
        Complex64::new(s, 2.0 * std::f64::consts::PI * freq * VACUUM_PERMITTIVITY * e)
    }
}

/// Named spectra loaded from a tissue-property CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueTable {
    tissues: BTreeMap<String, DielectricSpectrum>,
}

impl TissueTable {
    /// The dataset shipped with the crate: skin, fat, muscle, cortical_bone,
    /// cancellous_bone, 1 kHz to 10 MHz.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled tissue table is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, FemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FemError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, FemError> {
        let mut rows: BTreeMap<String, Vec<(f64, f64, f64, usize)>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(FemError::TissueData {
                    line: line_no,
                    message: format!("expected 4 columns, found {}", cols.len()),
                });
            }
            if cols == HEADER {
                continue;
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>().map_err(|_| FemError::TissueData {
                    line: line_no,
                    message: format!("{what} {s:?} is not a number"),
                })
            };
            let f = num(cols[0], "frequency")?;
            let s = num(cols[2], "sigma")?;
            let e = num(cols[3], "eps_r")?;
            if cols[1].is_empty() {
                return Err(FemError::TissueData { line: line_no, message: "empty tissue name".into() });
            }
            rows.entry(cols[1].to_string()).or_default().push((f, s, e, line_no));
        }
        if rows.is_empty() {
            return Err(FemError::TissueData { line: 0, message: "no tissue rows".into() });
        }
        let mut tissues = BTreeMap::new();
        for (name, mut pts) in rows {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(FemError::TissueData {
                    line: w[1].3,
                    message: format!("duplicate frequency {} for {name}", w[1].0),
                });
            }
            let first_line = pts[0].3;
            let spec = DielectricSpectrum::new(
                pts.iter().map(|p| p.0).collect(),
                pts.iter().map(|p| p.1).collect(),
                pts.iter().map(|p| p.2).collect(),
            )
            .map_err(|e| match e {
                FemError::TissueData { message, .. } => FemError::TissueData {
                    line: first_line,
                    message: format!("{name}: {message}"),
                },
                other => other,
            })?;
            tissues.insert(name, spec);
        }
        Ok(Self { tissues })
    }

    pub fn get(&self, name: &str) -> Result<&DielectricSpectrum, FemError> {
        self.tissues.get(name).ok_or_else(|| FemError::UnknownTissue(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tissues.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_in_log_frequency() {
        let s = DielectricSpectrum::new(vec![1e3, 1e5], vec![0.0, 2.0], vec![10.0, 30.0]).unwrap();
        // 1e4 is halfway in log-frequency
        let (sig, eps) = s.at(1e4);
        assert!((sig - 1.0).abs() < 1e-12);
        assert!((eps - 20.0).abs() < 1e-12);
        assert_eq!(s.at(0.0), (0.0, 10.0));
        assert_eq!(s.at(1e9), (2.0, 30.0));
    }

    #[test]
    fn admittivity_at_dc_is_real() {
        let s = DielectricSpectrum::constant(0.3, 5000.0).unwrap();
        assert_eq!(s.admittivity(0.0), Complex64::new(0.3, 0.0));
        let k = s.admittivity(1e6);
        let want = 2.0 * std::f64::consts::PI * 1e6 * VACUUM_PERMITTIVITY * 5000.0;
        assert!((k.im - want).abs() < 1e-15);
    }

    #[test]
    fn parses_with_or_without_header() {
        let a = TissueTable::parse("frequency_hz,tissue_name,sigma_s_per_m,eps_r\n1e3,gel,0.5,80\n1e4,gel,0.6,70\n").unwrap();
        let b = TissueTable::parse("# comment\n1e4,gel,0.6,70\n1e3,gel,0.5,80\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get("gel").unwrap().freqs(), &[1e3, 1e4]);
        assert!(matches!(a.get("bone"), Err(FemError::UnknownTissue(_))));
    }

    #[test]
    fn rejects_invalid_rows() {
        for (text, line) in [
            ("1e3,gel,0.5\n", 1),
            ("1e3,gel,abc,80\n", 1),
            ("1e3,gel,0.5,80\n1e3,gel,0.6,70\n", 2),
            ("1e3,gel,-0.5,80\n", 1),
            ("1e3,gel,0.5,0.5\n", 1),
        ] {
            match TissueTable::parse(text) {
                Err(FemError::TissueData { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(TissueTable::parse("\n").is_err());
    }

    #[test]
    fn bundled_table_covers_the_arm_layers() {
        let t = TissueTable::bundled();
        for name in ["skin", "fat", "muscle", "cortical_bone", "cancellous_bone"] {
            let s = t.get(name).unwrap();
            assert!(s.freqs()[0] <= 1e4 && *s.freqs().last().unwrap() >= 2.5e6);
        }
        // muscle is the most conductive layer across the sweep band
        for f in [1e4, 1e5, 1e6, 2.5e6] {
            let m = t.get("muscle").unwrap().at(f).0;
            for other in ["skin", "fat", "cortical_bone", "cancellous_bone"] {
                assert!(m > t.get(other).unwrap().at(f).0);
            }
        }
    }
}
