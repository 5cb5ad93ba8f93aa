//! Default constants for the wristband/ring hardware, the sweep, the noise
//! floor and the detector. Every default used by the library and the CLI
//! lives here.

/// Wristband coil inductance (H).
pub const READER_INDUCTANCE: f64 = 3.7e-6;
/// Wristband coil winding loss (Ω), excluding the series chip resistor.
pub const READER_COIL_LOSS: f64 = 4.0;
/// Series chip resistor that lifts the reader's real part over 50 Ω.
pub const READER_CHIP_RESISTOR: f64 = 51.0;
/// Number of series capacitors on the wristband coil.
pub const READER_SEGMENTS: usize = 18;
/// Per-segment chip capacitance on the wristband coil (F).
pub const READER_SEGMENT_CAPACITANCE: f64 = 170e-12;

/// Amplifier transimpedance of the bridge (Ω).
pub const AMPLIFIER_RESISTANCE: f64 = 100.0;
/// Drive power into the bridge (W).
pub const INPUT_POWER: f64 = 1e-3;
/// System impedance used to turn the drive power into a peak amplitude (Ω).
pub const SYSTEM_IMPEDANCE: f64 = 50.0;
/// Relative impedance error between the reference load and the reader coil.
pub const MISMATCH_FRACTION: f64 = 0.1;
/// Curvature of the static bridge offset, in dB per unit squared fractional
/// detuning from the reader's matching frequency.
pub const OFFSET_CURVATURE_DB: f64 = -150.0;
/// Fractional detuning beyond which the offset curvature flattens out
/// logarithmically. Covers the whole default sweep.
pub const OFFSET_QUADRATIC_LIMIT: f64 = 0.12;

/// Peak drive amplitude for `INPUT_POWER` into `SYSTEM_IMPEDANCE` (≈ 0.316 V).
pub fn input_amplitude() -> f64 {
    (2.0 * SYSTEM_IMPEDANCE * INPUT_POWER).sqrt()
}

pub const SWEEP_START: f64 = 27e6;
pub const SWEEP_STOP: f64 = 30e6;
pub const SWEEP_STEP: f64 = 60e3;
/// Sweeps per second.
pub const ACQUISITION_RATE: f64 = 5.0;

/// Per-point measurement noise of the analyzer (dB RMS).
pub const NOISE_SIGMA_DB: f64 = 0.002;

/// Coupling coefficient at the reference distance, for the 8-turn ring.
pub const REFERENCE_COUPLING: f64 = 0.001;
/// Reference ring-to-wristband distance (m).
pub const REFERENCE_DISTANCE: f64 = 0.13;
/// Reference coupling used by the finger-bending scenarios.
pub const BENDING_REFERENCE_COUPLING: f64 = 0.0025;

/// Ring coil tuning frequency used by the turn, distance, angle and metal studies.
pub const RING_FREQUENCY: f64 = 29e6;
/// Turn count of the ring used as the coupling reference.
pub const REFERENCE_TURNS: u32 = 8;

pub const PEAK_THRESHOLD_DB: f64 = 0.02;
pub const BASELINE_ORDER: usize = 3;
pub const MIN_PEAK_SEPARATION: f64 = 150e3;
/// Half-width of the window excluded around a peak when the baseline is refit.
pub const PEAK_MASK_HALF_WIDTH: f64 = 360e3;
/// Maximum number of peak windows excluded from the baseline fit.
pub const PEAK_MASK_PASSES: usize = 3;

/// Half-band of each ring state (Hz).
pub const STATE_TOLERANCE: f64 = 45e3;
/// Consecutive sweeps required to confirm a state change.
pub const CONFIRM_FRAMES: usize = 2;

/// Traces per set in the SNR formula.
pub const SNR_TRACES: usize = 100;

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Segment length limit as a fraction of the free-space wavelength.
pub const SEGMENT_WAVELENGTH_FRACTION: f64 = 1.0 / 20.0;
