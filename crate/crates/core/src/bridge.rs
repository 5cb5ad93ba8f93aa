//! Balanced-bridge readout: the amplifier subtracts the current through a
//! reference load from the current through the reader coil, so only the
//! change in reader impedance reaches the output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::ComplexValue;
use crate::defaults;
use crate::error::{domain, require_positive, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BridgeConfig {
    /// R_amp (Ω).
    pub amplifier_resistance: f64,
    /// Fixed Z_ref (Ω). When absent the reference tracks the reader coil
    /// with a resistive error of `mismatch_fraction`, see [`reference_for`].
    pub reference_impedance: Option<ComplexValue>,
    /// V_in (V, peak).
    pub input_amplitude: f64,
    pub mismatch_fraction: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            amplifier_resistance: defaults::AMPLIFIER_RESISTANCE,
            reference_impedance: None,
            input_amplitude: defaults::input_amplitude(),
            mismatch_fraction: defaults::MISMATCH_FRACTION,
        }
    }
}

impl BridgeConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("amplifier_resistance", self.amplifier_resistance)?;
        require_positive("input_amplitude", self.input_amplitude)?;
        if !(0.0..=0.2).contains(&self.mismatch_fraction) {
            return Err(domain(format!(
                "mismatch_fraction must lie in [0, 0.2], got {}",
                self.mismatch_fraction
            )));
        }
        if let Some(z) = self.reference_impedance {
            if !(z.norm() > 0.0 && z.is_finite()) {
                return Err(domain("reference impedance must be finite and non-zero"));
            }
        }
        Ok(())
    }
}

/// Z_ref used against a reader of impedance `z_reader`.
///
/// A tracking reference is the reader with its real part short by
/// `mismatch_fraction`: Z_ref = Z_reader − m·Re(Z_reader).
pub fn reference_for(cfg: &BridgeConfig, z_reader: ComplexValue) -> ComplexValue {
    match cfg.reference_impedance {
        Some(z) => z,
        None => z_reader - Complex64::new(cfg.mismatch_fraction * z_reader.re, 0.0),
    }
}

/// V_out = −R_amp·(V_in/Z_load − V_in/Z_ref), evaluated exactly.
pub fn bridge_output(
    cfg: &BridgeConfig,
    z_load: ComplexValue,
    z_reader: ComplexValue,
) -> Result<ComplexValue> {
    let z_ref = reference_for(cfg, z_reader);
    if z_load.norm() == 0.0 || !z_load.is_finite() {
        return Err(domain("load impedance must be finite and non-zero"));
    }
    if z_ref.norm() == 0.0 || !z_ref.is_finite() {
        return Err(domain("reference impedance must be finite and non-zero"));
    }
    if z_load == z_ref {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let v_in = cfg.input_amplitude;
    Ok(-cfg.amplifier_resistance * (v_in / z_load - v_in / z_ref))
}

/// Output of the bridge with no sensor present: the mismatch offset.
pub fn static_offset(cfg: &BridgeConfig, z_reader: ComplexValue) -> Result<ComplexValue> {
    bridge_output(cfg, z_reader, z_reader)
}

/// 20·log10(|v_out|/v_in). Zero magnitude maps to −∞.
pub fn to_db_magnitude(v_out: ComplexValue, v_in: f64) -> f64 {
    let m = v_out.norm();
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    20.0 * (m / v_in).log10()
}

/// Change in dB that the same impedance change produces when the reader
/// impedance is measured directly, without the bridge subtraction.
pub fn single_ended_contrast_db(z_load: ComplexValue, z_reader: ComplexValue) -> f64 {
    20.0 * (z_load.norm() / z_reader.norm()).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg_fixed(z_ref: f64, v_in: f64) -> BridgeConfig {
        BridgeConfig {
            amplifier_resistance: 100.0,
            reference_impedance: Some(Complex64::new(z_ref, 0.0)),
            input_amplitude: v_in,
            mismatch_fraction: 0.0,
        }
    }

    fn linearized(cfg: &BridgeConfig, z_ref: ComplexValue, dz: ComplexValue) -> ComplexValue {
        cfg.amplifier_resistance * cfg.input_amplitude * dz / (z_ref * z_ref)
    }

    #[test]
    fn balanced_null_is_exact() {
        let cfg = cfg_fixed(55.0, 1.0);
        let z = Complex64::new(55.0, 0.0);
        assert_eq!(bridge_output(&cfg, z, z).unwrap(), Complex64::new(0.0, 0.0));
        let track = BridgeConfig {
            mismatch_fraction: 0.0,
            ..Default::default()
        };
        let zr = Complex64::new(55.0, 37.3);
        assert_eq!(
            bridge_output(&track, zr, zr).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            to_db_magnitude(Complex64::new(0.0, 0.0), 1.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn fifty_milliohm_example() {
        let cfg = cfg_fixed(55.0, 1.0);
        let zl = Complex64::new(55.05, 0.0);
        let v = bridge_output(&cfg, zl, Complex64::new(55.0, 0.0)).unwrap();
        let approx = 100.0 * 0.05 / (55.0f64 * 55.0);
        assert!((v.norm() - 1.65e-3).abs() < 0.01e-3, "{}", v.norm());
        assert!((v.norm() - approx).abs() / approx < 0.01);
        // 20·log10(1.651e-3) = −55.64, quoted to one decimal as −55.7.
        assert!((to_db_magnitude(v, 1.0) + 55.7).abs() < 0.1);
    }

    #[test]
    fn db_reference_points() {
        let v = Complex64::new(0.3, 0.4);
        assert!((to_db_magnitude(v, 0.5)).abs() < 1e-12);
        assert!((to_db_magnitude(v / 10.0, 0.5) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch_offset_is_static() {
        let cfg = BridgeConfig {
            mismatch_fraction: 0.05,
            ..Default::default()
        };
        let z = Complex64::new(55.0, 0.0);
        let a = static_offset(&cfg, z).unwrap();
        let b = static_offset(&cfg, z).unwrap();
        assert!(a.norm() > 0.0);
        assert_eq!(a, b);
        let fixed = BridgeConfig {
            reference_impedance: Some(z),
            ..cfg
        };
        let off = bridge_output(&fixed, z * 1.05, z * 1.05).unwrap();
        assert!(off.norm() > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = cfg_fixed(55.0, 1.0);
        assert!(bridge_output(&cfg, Complex64::new(0.0, 0.0), Complex64::new(55.0, 0.0)).is_err());
        let bad = BridgeConfig {
            reference_impedance: Some(Complex64::new(0.0, 0.0)),
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        assert!(BridgeConfig {
            mismatch_fraction: 0.3,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(BridgeConfig::default().validate().is_ok());
        assert!((BridgeConfig::default().input_amplitude - 0.316).abs() < 1e-3);
    }

    fn z_strategy() -> impl Strategy<Value = ComplexValue> {
        (1.0..200.0f64, -200.0..200.0f64).prop_map(|(r, x)| Complex64::new(r, x))
    }

    proptest! {
        #[test]
        fn exact_vs_linear_within_one_percent(
            z_ref in z_strategy(),
            frac in 0.0..0.01f64,
            phase in 0.0..std::f64::consts::TAU,
        ) {
            prop_assume!(frac > 1e-9);
            let cfg = BridgeConfig { reference_impedance: Some(z_ref), input_amplitude: 1.0, ..Default::default() };
            let dz = Complex64::from_polar(frac * z_ref.norm(), phase);
            let exact = bridge_output(&cfg, z_ref + dz, z_ref).unwrap();
            let lin = linearized(&cfg, z_ref, dz);
            // Relative to the exact output the error is exactly |ΔZ|/|Z_ref|.
            prop_assert!((exact - lin).norm() <= 0.01 * (1.0 + 1e-9) * exact.norm());
        }

        #[test]
        fn linear_in_drive(z_ref in z_strategy(), dz in z_strategy(), v in 0.01..10.0f64) {
            let c1 = BridgeConfig { reference_impedance: Some(z_ref), input_amplitude: v, ..Default::default() };
            let c2 = BridgeConfig { input_amplitude: 2.0 * v, ..c1.clone() };
            let zl = z_ref + dz * 0.01;
            let a = bridge_output(&c1, zl, z_ref).unwrap().norm();
            let b = bridge_output(&c2, zl, z_ref).unwrap().norm();
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        }

        #[test]
        fn db_monotone(a in 1e-9..1.0f64, b in 1e-9..1.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(to_db_magnitude(Complex64::new(lo, 0.0), 1.0) <= to_db_magnitude(Complex64::new(0.0, hi), 1.0));
        }
    }
}
