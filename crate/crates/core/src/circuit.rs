//! Series-RLC coil impedances and the reflected impedance a coupled sensor
//! coil presents to the reader coil.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{domain, require_positive, Result};

/// Complex number used for impedances (Ω) and phasors (V).
pub type ComplexValue = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilParams {
    /// Inductance (H).
    pub inductance: f64,
    /// Series loss resistance (Ω).
    pub resistance: f64,
    /// Tuning capacitance (F). For distributed designs this is the
    /// equivalent series capacitance.
    pub capacitance: f64,
    #[serde(default)]
    pub label: String,
}

impl CoilParams {
    pub fn new(
        inductance: f64,
        resistance: f64,
        capacitance: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let coil = Self {
            inductance,
            resistance,
            capacitance,
            label: label.into(),
        };
        coil.validate()?;
        Ok(coil)
    }

    /// Builds a coil whose capacitance resonates `inductance` at `frequency`.
    pub fn tuned(
        inductance: f64,
        resistance: f64,
        frequency: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let c = tuning_capacitance(inductance, frequency)?;
        Self::new(inductance, resistance, c, label)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("inductance", self.inductance)?;
        require_positive("capacitance", self.capacitance)?;
        if !(self.resistance.is_finite() && self.resistance >= 0.0) {
            return Err(domain(format!(
                "resistance must be finite and >= 0, got {}",
                self.resistance
            )));
        }
        Ok(())
    }

    /// Same coil retuned to resonate at `frequency`.
    pub fn retuned(&self, frequency: f64) -> Result<Self> {
        Self::tuned(
            self.inductance,
            self.resistance,
            frequency,
            self.label.clone(),
        )
    }

    /// Unloaded quality factor 2πf0L/R. Infinite for a lossless coil.
    pub fn quality_factor(&self) -> Result<f64> {
        let f0 = resonant_frequency(self)?;
        Ok(2.0 * PI * f0 * self.inductance / self.resistance)
    }

    /// Full width of the resonance at half power, f0/Q (Hz).
    pub fn bandwidth(&self) -> Result<f64> {
        require_positive("inductance", self.inductance)?;
        Ok(self.resistance / (2.0 * PI * self.inductance))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub reader: CoilParams,
    pub sensor: CoilParams,
    /// Coupling coefficient k in [0, 1).
    pub coupling: f64,
}

impl CoupledPair {
    pub fn new(reader: CoilParams, sensor: CoilParams, coupling: f64) -> Result<Self> {
        let pair = Self {
            reader,
            sensor,
            coupling,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        self.reader.validate()?;
        self.sensor.validate()?;
        check_coupling(self.coupling)
    }

    /// M = k·√(L_reader·L_sensor) (H).
    pub fn mutual_inductance(&self) -> f64 {
        self.coupling * (self.reader.inductance * self.sensor.inductance).sqrt()
    }
}

pub(crate) fn check_coupling(k: f64) -> Result<()> {
    if k.is_finite() && (0.0..1.0).contains(&k) {
        Ok(())
    } else {
        Err(domain(format!("coupling must lie in [0, 1), got {k}")))
    }
}

/// f0 = 1/(2π√(LC)).
pub fn resonant_frequency(coil: &CoilParams) -> Result<f64> {
    require_positive("inductance", coil.inductance)?;
    require_positive("capacitance", coil.capacitance)?;
    Ok(1.0 / (2.0 * PI * (coil.inductance * coil.capacitance).sqrt()))
}

/// Capacitance that resonates `inductance` at `frequency`: 1/((2πf)²L).
pub fn tuning_capacitance(inductance: f64, frequency: f64) -> Result<f64> {
    require_positive("inductance", inductance)?;
    require_positive("frequency", frequency)?;
    let w = 2.0 * PI * frequency;
    Ok(1.0 / (w * w * inductance))
}

/// Z = R + j(ωL − 1/(ωC)) of a series-resonant coil.
pub fn sensor_impedance(coil: &CoilParams, f: f64) -> Result<ComplexValue> {
    require_positive("frequency", f)?;
    coil.validate()?;
    Ok(series_impedance(coil, f))
}

/// Self-impedance of the reader coil; identical form to the sensor coil.
pub fn reader_impedance(coil: &CoilParams, f: f64) -> Result<ComplexValue> {
    sensor_impedance(coil, f)
}

#[inline]
pub(crate) fn series_impedance(coil: &CoilParams, f: f64) -> ComplexValue {
    let w = 2.0 * PI * f;
    Complex64::new(
        coil.resistance,
        w * coil.inductance - 1.0 / (w * coil.capacitance),
    )
}

/// (ωM)²/Z_sensor. Exactly zero with no coupling.
pub fn reflected_impedance(pair: &CoupledPair, f: f64) -> Result<ComplexValue> {
    require_positive("frequency", f)?;
    pair.validate()?;
    Ok(reflected_unchecked(
        pair.mutual_inductance(),
        &pair.sensor,
        f,
    ))
}

#[inline]
pub(crate) fn reflected_unchecked(mutual: f64, sensor: &CoilParams, f: f64) -> ComplexValue {
    if mutual == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let wm = 2.0 * PI * f * mutual;
    let zs = series_impedance(sensor, f);
    // A lossless sensor exactly at resonance would divide by zero.
    if zs.norm_sqr() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    (wm * wm) / zs
}

/// Z_reader + ΔZ_reader.
pub fn load_impedance(pair: &CoupledPair, f: f64) -> Result<ComplexValue> {
    let dz = reflected_impedance(pair, f)?;
    Ok(series_impedance(&pair.reader, f) + dz)
}

/// The wristband reader: 3.7 µH, 4 Ω of winding loss plus the
/// 51 Ω series chip resistor, tuned by eighteen 170 pF capacitors in series.
pub fn default_reader() -> CoilParams {
    CoilParams {
        inductance: defaults::READER_INDUCTANCE,
        resistance: defaults::READER_COIL_LOSS + defaults::READER_CHIP_RESISTOR,
        capacitance: defaults::READER_SEGMENT_CAPACITANCE / defaults::READER_SEGMENTS as f64,
        label: "wristband".into(),
    }
}

/// Measured ring coil parameters per turn count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingCoilSpec {
    pub turns: u32,
    pub inductance: f64,
    pub resistance: f64,
    pub capacitor_count: usize,
    /// SNR reported for the manufactured coil; used only for comparison.
    pub measured_snr: f64,
}

pub const RING_COILS: [RingCoilSpec; 7] = [
    RingCoilSpec {
        turns: 3,
        inductance: 0.34e-6,
        resistance: 0.89,
        capacitor_count: 1,
        measured_snr: 6.2,
    },
    RingCoilSpec {
        turns: 4,
        inductance: 0.56e-6,
        resistance: 1.1,
        capacitor_count: 2,
        measured_snr: 8.6,
    },
    RingCoilSpec {
        turns: 5,
        inductance: 0.85e-6,
        resistance: 1.5,
        capacitor_count: 2,
        measured_snr: 11.6,
    },
    RingCoilSpec {
        turns: 6,
        inductance: 1.2e-6,
        resistance: 1.8,
        capacitor_count: 2,
        measured_snr: 13.5,
    },
    RingCoilSpec {
        turns: 7,
        inductance: 1.4e-6,
        resistance: 2.0,
        capacitor_count: 3,
        measured_snr: 17.0,
    },
    RingCoilSpec {
        turns: 8,
        inductance: 1.8e-6,
        resistance: 2.6,
        capacitor_count: 3,
        measured_snr: 18.2,
    },
    RingCoilSpec {
        turns: 9,
        inductance: 2.1e-6,
        resistance: 3.4,
        capacitor_count: 3,
        measured_snr: 17.5,
    },
];

pub fn ring_coil_spec(turns: u32) -> Result<RingCoilSpec> {
    RING_COILS
        .iter()
        .copied()
        .find(|s| s.turns == turns)
        .ok_or_else(|| domain(format!("no ring coil with {turns} turns (available: 3-9)")))
}

/// Ring coil with the given turn count, tuned to `frequency`.
pub fn ring_coil(turns: u32, frequency: f64) -> Result<CoilParams> {
    let s = ring_coil_spec(turns)?;
    CoilParams::tuned(
        s.inductance,
        s.resistance,
        frequency,
        format!("ring-{turns}t"),
    )
}
