use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use galvanic_core::ingest_io::{response_csv, Report};
use galvanic_core::response::FrequencyResponse;
use galvanic_core::tissue_fem::validation::{laplace_ramp, observed_orders, LayeredPlate};
use galvanic_core::tissue_fem::{
    arm_gain, injected_current, solve_sweep, ArmGeometry, GridResolution, TissueTable, MIN_LAYER_NODES,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{default_out, plot, prepare_out, write_text};
use crate::config::{self, apply_flags, Settings};
use crate::plots::{self, Series};
use crate::units::parse_positive;
use crate::Console;

pub const GAIN_FILE: &str = "gain.csv";
pub const SOLVE_REPORT_FILE: &str = "solve_report.txt";
pub const SOLVE_FORMAT: &str = "galvanic-solve-v1";
pub const VALIDATION_FILE: &str = "validation.txt";
pub const VALIDATION_FORMAT: &str = "galvanic-validation-v1";

const RAMP_TOLERANCE: f64 = 1e-6;
const PLATE_TOLERANCE: f64 = 0.01;
const MIN_ORDER: f64 = 1.8;
const PLATE_LEVELS: [usize; 3] = [4, 8, 16];

pub fn field_file(freq: f64) -> String {
    format!("field_{freq}Hz.csv")
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Arm geometry (TOML) [default: built-in forearm]
    #[arg(long)]
    pub arm: Option<PathBuf>,
    /// Tissue property table (CSV) [default: bundled dataset]
    #[arg(long)]
    pub tissue: Option<PathBuf>,
    /// Frequencies, comma separated [default: 10k,100k,370k,1M,2.5M]
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub freqs: Option<Vec<f64>>,
    /// Cells across the thinnest layer, at least 3 [default: 3]
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Cell length along the arm in mm [default: 4]
    #[arg(long, value_parser = parse_positive)]
    pub dx_mm: Option<f64>,
    /// Largest cell height within a layer in mm [default: 1]
    #[arg(long, value_parser = parse_positive)]
    pub dy_max_mm: Option<f64>,
    /// Write the potential and field grid at every frequency [default: true]
    #[arg(long)]
    pub fields: Option<bool>,
    /// First check the solver against closed-form solutions [default: false]
    #[arg(long)]
    pub validate: Option<bool>,
    /// Output directory [default: galvanic-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    pub arm: Option<PathBuf>,
    pub tissue: Option<PathBuf>,
    pub freqs: Vec<f64>,
    pub resolution: usize,
    pub dx_mm: f64,
    pub dy_max_mm: f64,
    pub fields: bool,
    pub validate: bool,
    pub out: PathBuf,
}

impl Default for SolveSettings {
    fn default() -> Self {
        let g = GridResolution::default();
        Self {
            arm: None,
            tissue: None,
            freqs: vec![10e3, 100e3, 370e3, 1e6, 2.5e6],
            resolution: MIN_LAYER_NODES,
            dx_mm: g.dx_mm,
            dy_max_mm: g.dy_max_mm,
            fields: true,
            validate: false,
            out: default_out(),
        }
    }
}

impl Settings for SolveSettings {
    const SECTION: &'static str = "solve";
}

impl SolveSettings {
    pub fn resolve(args: Args, file: Option<&Path>) -> Result<Self> {
        let mut s: Self = config::load(file)?;
        apply_flags!(s, args; freqs, resolution, dx_mm, dy_max_mm, fields, validate, out);
        if args.arm.is_some() {
            s.arm = args.arm;
        }
        if args.tissue.is_some() {
            s.tissue = args.tissue;
        }
        Ok(s)
    }
}

/// Closed-form checks; an error when any exceeds its tolerance.
fn validate(out: &Path, console: Console) -> Result<()> {
    let ramp = laplace_ramp(40, 20, Complex64::new(0.5, 0.02))?;
    let plate = LayeredPlate::default();
    let errors = PLATE_LEVELS
        .iter()
        .map(|&n| plate.solve_error(n))
        .collect::<Result<Vec<_>, _>>()?;
    let orders = observed_orders(&errors);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);

    let ramp_ok = ramp.potential_error <= RAMP_TOLERANCE && ramp.field_error <= RAMP_TOLERANCE;
    let plate_ok = errors[0] <= PLATE_TOLERANCE && min_order >= MIN_ORDER;
    let mut r = Report::new(VALIDATION_FORMAT, &["cells_per_layer", "relative_error"])
        .field("ramp_potential_error", ramp.potential_error)
        .field("ramp_field_error", ramp.field_error)
        .field("ramp_tolerance", RAMP_TOLERANCE)
        .field("plate_tolerance", PLATE_TOLERANCE)
        .field("observed_orders", format!("{orders:?}"))
        .field("passed", ramp_ok && plate_ok);
    r.rows = PLATE_LEVELS.iter().zip(&errors).map(|(&n, &e)| vec![n as f64, e]).collect();
    write_text(&out.join(VALIDATION_FILE), &r.to_text(), console)?;

    console.info(format!(
        "validation: homogeneous ramp error {:.2e} (potential), {:.2e} (field); tolerance {RAMP_TOLERANCE:.0e}",
        ramp.potential_error, ramp.field_error
    ));
    console.info(format!(
        "validation: two-layer plate error {} at {PLATE_LEVELS:?} cells per layer, observed order {}",
        errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", "),
        orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ")
    ));
    if !ramp_ok || !plate_ok {
        bail!("solver validation failed; see {}", out.join(VALIDATION_FILE).display());
    }
    Ok(())
}

pub fn run(args: Args, config_file: Option<&Path>, console: Console) -> Result<()> {
    let s = SolveSettings::resolve(args, config_file)?;
    if s.freqs.is_empty() {
        bail!("no frequencies to solve");
    }
    let table = match &s.tissue {
        Some(p) => TissueTable::from_path(p).with_context(|| format!("tissue table {}", p.display()))?,
        None => TissueTable::bundled(),
    };
    let geometry: ArmGeometry = match &s.arm {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading arm {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("arm {}", p.display()))?
        }
        None => ArmGeometry::default(),
    };
    let model = geometry.build(&table)?;
    let res = GridResolution { min_layer_nodes: s.resolution, dx_mm: s.dx_mm, dy_max_mm: s.dy_max_mm };
    let (grid, _) = model.grid(&res)?;

    prepare_out(&s.out)?;
    if s.validate {
        validate(&s.out, console)?;
    }
    console.detail(format!("grid: {} x {} cells", grid.nx(), grid.ny()));
    let solutions = solve_sweep(&model, &s.freqs, &res)?;
    let gains = solutions
        .iter()
        .map(|sol| arm_gain(sol, &model))
        .collect::<Result<Vec<_>, _>>()?;
    let response = FrequencyResponse::new(s.freqs.clone(), gains)?;
    write_text(&s.out.join(GAIN_FILE), &response_csv(&response), console)?;

    let db = response.gain_db();
    let monotone = response.is_monotone_increasing();
    let mut r = Report::new(SOLVE_FORMAT, &["freq_hz", "gain_db", "relative_residual", "injected_current_a_per_m"])
        .field("length_mm", model.length_mm())
        .field("depth_mm", model.depth_mm())
        .field("extent", format!("{:?}", model.extent()))
        .field("tx_rx_separation_mm", model.tx_rx_separation_mm())
        .field("grid_nx", grid.nx())
        .field("grid_ny", grid.ny())
        .field("monotone_increasing", monotone)
        .field("gain_change_db", db[db.len() - 1] - db[0]);
    for (sol, (&f, &g)) in solutions.iter().zip(s.freqs.iter().zip(db)) {
        r.rows.push(vec![f, g, sol.relative_residual(), injected_current(sol, &model)?.norm()]);
    }
    write_text(&s.out.join(SOLVE_REPORT_FILE), &r.to_text(), console)?;

    if s.fields {
        for sol in &solutions {
            let path = s.out.join(field_file(sol.frequency()));
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            sol.write_csv(BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?;
            console.detail(format!("wrote {}", path.display()));
        }
    }
    let path = s.out.join("gain.svg");
    plot(
        plots::log_x(
            &path,
            "Simulated channel gain",
            "frequency (Hz)",
            "gain (dB)",
            &[Series { label: "tissue model", x: &s.freqs, y: db }],
        ),
        &path,
        console,
    );
    config::echo(&s.out, &s, console.verbosity)?;

    console.info(format!("grid: {} x {} cells", grid.nx(), grid.ny()));
    for (&f, &g) in s.freqs.iter().zip(db) {
        console.info(format!("gain at {f} Hz: {g:.3} dB"));
    }
    console.info(format!(
        "monotone increasing: {monotone}; gain change {:+.3} dB from {} Hz to {} Hz",
        db[db.len() - 1] - db[0],
        s.freqs[0],
        s.freqs[s.freqs.len() - 1]
    ));
    Ok(())
}
