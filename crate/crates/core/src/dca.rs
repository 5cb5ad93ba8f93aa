//! Distributed capacitance arrangement: a long winding is broken into
//! `segment_count` stretches joined by equal series capacitors, so every
//! stretch stays electrically short while the whole coil keeps its inductance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    #[default]
    Exact,
    /// Round each capacitor to the nearest E12 value.
    E12,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcaDesign {
    pub target_frequency: f64,
    pub inductance: f64,
    pub segment_count: usize,
    /// Value of each series capacitor (F).
    pub per_segment_capacitance: f64,
    /// Series equivalent of all segments (F).
    pub equivalent_capacitance: f64,
    /// Resonance of the inductance with `equivalent_capacitance` (Hz).
    pub achieved_frequency: f64,
    /// (achieved − target)/target.
    pub frequency_error: f64,
    pub wire_length: Option<f64>,
    /// Longest admissible stretch of wire between capacitors (m).
    pub max_segment_length: f64,
    pub rounding: Rounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentCheck {
    pub pass: bool,
    pub segment_length: f64,
    pub limit: f64,
    /// limit / segment_length; above 1 passes.
    pub margin: f64,
}

const E12: [f64; 12] = [1.0, 1.2, 1.5, 1.8, 2.2, 2.7, 3.3, 3.9, 4.7, 5.6, 6.8, 8.2];

/// Nearest E12 value, picking by ratio so rounding error is symmetric in log space.
pub fn nearest_e12(value: f64) -> f64 {
    let decade = value.log10().floor();
    let scale = 10f64.powf(decade);
    let mut best = E12[0] * scale;
    for m in E12.iter().copied().chain(std::iter::once(10.0)) {
        let cand = m * scale;
        if (cand / value).ln().abs() < (best / value).ln().abs() {
            best = cand;
        }
    }
    best
}

/// Longest wire stretch that still counts as lumped at `frequency` (λ/20).
pub fn max_segment_length(frequency: f64) -> f64 {
    defaults::SPEED_OF_LIGHT / frequency * defaults::SEGMENT_WAVELENGTH_FRACTION
}

pub fn segment_length_check(
    wire_length: f64,
    segment_count: usize,
    frequency: f64,
) -> SegmentCheck {
    let segment_length = wire_length / segment_count as f64;
    let limit = max_segment_length(frequency);
    SegmentCheck {
        pass: segment_length < limit,
        segment_length,
        limit,
        margin: limit / segment_length,
    }
}

pub fn design_dca(
    inductance: f64,
    target_frequency: f64,
    segment_count: usize,
    wire_length: Option<f64>,
    rounding: Rounding,
) -> Result<DcaDesign> {
    require_positive("inductance", inductance)?;
    require_positive("target_frequency", target_frequency)?;
    if segment_count == 0 {
        return Err(Error::Design {
            constraint: "segment_count >= 1",
            detail: "got 0 segments".into(),
        });
    }
    let max_len = max_segment_length(target_frequency);
    if let Some(len) = wire_length {
        require_positive("wire_length", len)?;
        let check = segment_length_check(len, segment_count, target_frequency);
        if !check.pass {
            return Err(Error::Design {
                constraint: "segment length < wavelength/20",
                detail: format!(
                    "{:.3} m per segment exceeds {:.3} m at {:.4} MHz; use at least {} segments",
                    check.segment_length,
                    check.limit,
                    target_frequency / 1e6,
                    (len / check.limit).floor() as usize + 1
                ),
            });
        }
    }
    let w = 2.0 * PI * target_frequency;
    let exact = segment_count as f64 / (w * w * inductance);
    let per_segment = match rounding {
        Rounding::Exact => exact,
        Rounding::E12 => nearest_e12(exact),
    };
    let equivalent = per_segment / segment_count as f64;
    let achieved = 1.0 / (2.0 * PI * (inductance * equivalent).sqrt());
    Ok(DcaDesign {
        target_frequency,
        inductance,
        segment_count,
        per_segment_capacitance: per_segment,
        equivalent_capacitance: equivalent,
        achieved_frequency: achieved,
        frequency_error: (achieved - target_frequency) / target_frequency,
        wire_length,
        max_segment_length: max_len,
        rounding,
    })
}
