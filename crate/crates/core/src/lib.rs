//! Passive inductive ring telemetry: coupled-coil impedance models, a
//! balanced-bridge readout, synthetic analyzer sweeps, baseline-residual
//! resonance detection and ring input decoding.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod bridge;
pub mod circuit;
pub mod dca;
pub mod decode;
pub mod defaults;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod synth;

pub use bridge::{bridge_output, to_db_magnitude, BridgeConfig};
pub use circuit::{
    default_reader, load_impedance, reflected_impedance, resonant_frequency, ring_coil,
    sensor_impedance, CoilParams, ComplexValue, CoupledPair,
};
pub use dca::{design_dca, segment_length_check, DcaDesign, Rounding, SegmentCheck};
pub use decode::{
    classify_state, decode_scroll, decode_stream, Classification, DebounceConfig, InputEvent,
    ProfileKind, RingProfile, StreamDecoder,
};
pub use detect::{compute_snr, detect_peaks, fit_baseline, Detector, DetectorConfig, PeakReport};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Experiment, ExperimentOutput, ExperimentSpec};
pub use synth::{
    coupling_from_geometry, scripted_session, synthesize_sweep, DisturbanceModel, GeometryScenario,
    MetalPreset, Sweep, SweepConfig,
};
