//! Quasi-static complex-potential solver for a layered arm slice.
//!
//! Solves `∇·((σ + jωε₀ε_r)∇V) = 0` on a 2D cell-centred finite-volume grid
//! with the transmit electrodes held at ±0.5 V, then reads the receive pair.

mod arm;
mod assembly;
mod dielectric;
mod grid;
mod solver;
pub mod validation;

use thiserror::Error;

use crate::response::ResponseError;

pub use arm::{
    arm_gain, assemble_system, gain_sweep, injected_current, receive_voltage, solve_arm, solve_sweep, transmit_voltage,
    ArmGeometry,
    ArmModel, Electrode, ElectrodeRole, GridResolution, LayerSpec, SliceExtent, TissueLayer, MIN_LAYER_NODES,
    TX_NEGATIVE_VOLTS, TX_POSITIVE_VOLTS,
};
pub use assembly::{face_coefficient, Boundary, LinearSystem, Problem, Side, BOTTOM, EAST, TOP, WEST};
pub use dielectric::{DielectricSpectrum, TissueTable, VACUUM_PERMITTIVITY};
pub use grid::Grid2d;
pub use solver::{solve_potential, FieldSolution, RESIDUAL_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("resolution too coarse: {nodes} cells across layer {layer}, need at least {required}")]
    ResolutionTooCoarse { layer: String, nodes: usize, required: usize },
    #[error("electrode {role} covers no grid cells")]
    EmptyElectrode { role: ElectrodeRole },
    #[error("solver did not converge (relative residual {relative_residual:e}): {detail}")]
    SolverDidNotConverge { relative_residual: f64, detail: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("frequency must be finite and >= 0, got {0}")]
    InvalidFrequency(f64),
    #[error("tissue data line {line}: {message}")]
    TissueData { line: usize, message: String },
    #[error("tissue {0:?} not found in the property table")]
    UnknownTissue(String),
    #[error("{0}")]
    Io(String),
    #[error("at {frequency} Hz: {source}")]
    AtFrequency { frequency: f64, source: Box<FemError> },
    #[error(transparent)]
    Response(#[from] ResponseError),
}
