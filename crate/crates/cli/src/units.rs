//! Number parsing for flags: SI suffixes (`100k`, `2.5M`, `1G`), an optional
//! `Hz` unit, and `inf` where a quantity may be unbounded.

pub fn parse_si(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let t = t
        .strip_suffix("Hz")
        .or_else(|| t.strip_suffix("hz"))
        .unwrap_or(t)
        .trim_end();
    if t.is_empty() {
        return Err("empty number".into());
    }
    let (body, scale) = match t.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => {
            let scale = match c {
                'G' => 1e9,
                'M' => 1e6,
                'k' | 'K' => 1e3,
                'm' => 1e-3,
                'u' => 1e-6,
                _ => return Err(format!("unknown suffix '{c}' in {text:?}")),
            };
            (&t[..i], scale)
        }
        _ => (t, 1.0),
    };
    let v: f64 = body
        .parse()
        .map_err(|_| format!("{text:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{text:?} is not finite"));
    }
    Ok(v * scale)
}

/// Positive, finite, SI-suffixed.
pub fn parse_positive(text: &str) -> Result<f64, String> {
    let v = parse_si(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{text:?} must be positive"))
    }
}

/// A decibel value or `inf`.
pub fn parse_db(text: &str) -> Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("{text:?} is not a dB value")),
    }
}

/// Comma-separated `freq:dB` pairs, e.g. `100k:-52.2,1M:-43.75`.
pub fn parse_gain_points(text: &str) -> Result<Vec<(f64, f64)>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (f, g) = pair
                .split_once(':')
                .ok_or_else(|| format!("{pair:?} is not freq:dB"))?;
            let g: f64 = g
                .trim()
                .parse()
                .map_err(|_| format!("{g:?} is not a dB value"))?;
            Ok((parse_positive(f)?, g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_si("2.5M").unwrap(), 2.5e6);
        assert_eq!(parse_si("100k").unwrap(), 1e5);
        assert_eq!(parse_si("370kHz").unwrap(), 3.7e5);
        assert_eq!(parse_si("5e6").unwrap(), 5e6);
        assert_eq!(parse_si("1G").unwrap(), 1e9);
        assert_eq!(parse_si("20m").unwrap(), 0.02);
        assert!(parse_si("3x").is_err());
        assert!(parse_si("").is_err());
        assert!(parse_si("inf").is_err());
        assert!(parse_positive("0").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_gain_points("100k:-52.2, 1M:-43.75").unwrap(),
            vec![(1e5, -52.2), (1e6, -43.75)]
        );
        assert!(parse_gain_points("100k").is_err());
    }

    #[test]
    fn decibels() {
        assert_eq!(parse_db("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_db("20").unwrap(), 20.0);
        assert!(parse_db("loud").is_err());
    }
}
