//! Simulation and analysis toolkit for spin-photon entanglement by
//! time-to-polarization conversion (TPC).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod emitter;
pub mod error;
pub mod event_mc;
pub mod levels;
pub mod optics;
pub mod protocol;
pub mod qsim;
pub mod rates;
pub mod records;

pub use analysis::{analyze, AnalysisConfig, Calibration, CorrelationReport, Estimate};
pub use config::RunConfig;
pub use emitter::EmitterParams;
pub use error::{Error, Result};
pub use event_mc::{simulate_cycles, DetectionParams, EmissionSource, McSetup, Simulation};
pub use optics::{ArrivalClass, DetectionPort, InterferometerConfig};
pub use protocol::{build_sequence, run_ideal, run_noisy, PrepSign, ProtocolConfig, Sequence};
pub use qsim::QuantumState;
pub use records::{pair_coincidences, read_records, write_records, ClickRecord};
