//! Galvanic-coupled intrabody channel characterization: m-sequence sounding
//! signals, correlative channel estimation, parametric high-pass channel
//! models, a quasi-static field solver for layered tissue, and the file
//! formats tying them together.

pub mod channel_model;
pub mod ingest_io;
pub mod response;
pub mod signals;
pub mod sounder;
pub mod tissue_fem;

pub use channel_model::HighPassModel;
pub use ingest_io::{CaptureFile, Session, SessionManifest};
pub use response::FrequencyResponse;
pub use signals::{PnSequence, Waveform};
pub use sounder::{ChannelEstimate, StationarityReport};
pub use tissue_fem::{ArmModel, FieldSolution};
