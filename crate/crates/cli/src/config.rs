//! Layered run configuration: flag > config file > built-in default.
//!
//! A config file holds one table per subcommand:
//!
//! ```toml
//! [simulate]
//! captures = 41
//! snr_db = 30.0
//! ```
//!
//! Every run writes the effective settings to `run_config.toml` in its
//! output directory; that file is itself a valid `--config` input.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const RUN_CONFIG_FILE: &str = "run_config.toml";

/// Top-level keys besides the subcommand tables; written into the echo and
/// ignored on input.
const ECHO_KEYS: [&str; 2] = ["subcommand", "verbosity"];
const SECTIONS: [&str; 5] = ["generate", "simulate", "solve", "sound", "report"];

/// Effective settings of one subcommand.
pub trait Settings: Serialize + DeserializeOwned + Default {
    const SECTION: &'static str;
}

/// Reads the subcommand's table from a config file, or the defaults.
pub fn load<S: Settings>(path: Option<&Path>) -> Result<S> {
    let Some(path) = path else {
        return Ok(S::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut table: toml::Table =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    for key in table.keys() {
        if !SECTIONS.contains(&key.as_str()) && !ECHO_KEYS.contains(&key.as_str()) {
            bail!("config {}: unknown key {key:?}", path.display());
        }
    }
    match table.remove(S::SECTION) {
        Some(v) => v
            .try_into()
            .with_context(|| format!("config {}: [{}]", path.display(), S::SECTION)),
        None => Ok(S::default()),
    }
}

/// Overwrites each named field of `$settings` with the flag value when the
/// flag was given.
macro_rules! apply_flags {
    ($settings:ident, $args:ident; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $settings.$field = v; })+
    };
}
pub(crate) use apply_flags;

pub fn echo<S: Settings>(dir: &Path, settings: &S, verbosity: i8) -> Result<PathBuf> {
    let mut table = toml::Table::new();
    table.insert("subcommand".into(), S::SECTION.into());
    table.insert("verbosity".into(), i64::from(verbosity).into());
    table.insert(
        S::SECTION.into(),
        toml::Value::try_from(settings).context("serializing run config")?,
    );
    let path = dir.join(RUN_CONFIG_FILE);
    let text = toml::to_string(&table).context("serializing run config")?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
