pub mod generate;
pub mod report;
pub mod simulate;
pub mod solve;
pub mod sound;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::Console;

pub const DEFAULT_OUT: &str = "galvanic-out";

pub fn default_out() -> PathBuf {
    PathBuf::from(DEFAULT_OUT)
}

pub fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_text(path: &Path, text: &str, console: Console) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    console.detail(format!("wrote {}", path.display()));
    Ok(())
}

/// Plots are conveniences: a failure is a warning, never an error.
pub fn plot(result: Result<()>, path: &Path, console: Console) {
    match result {
        Ok(()) => console.detail(format!("wrote {}", path.display())),
        Err(e) => console.warn(format!("{}: {e:#}", path.display())),
    }
}

/// Sorted, duplicate-free frequency grid.
pub fn merge_grid(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.extend_from_slice(b);
    a.sort_by(f64::total_cmp);
    a.dedup();
    a
}
