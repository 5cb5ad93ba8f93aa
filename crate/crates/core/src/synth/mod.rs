//! Synthetic analyzer sweeps of the bridge output.
//!
//! Each point is the dB magnitude of the bridge output for the coupled
//! reader/ring pair, plus optional metal curvature, slow drift and Gaussian
//! noise. Randomness is seeded per call from `(seed, t)`, so sweeps can be
//! generated in any order or in parallel and still come out identical.

mod io;
mod session;

pub use io::{
    read_session, read_sweep_csv, sweep_from_csv_str, sweep_to_csv_string, write_session,
    write_sweep_csv, SessionEntry,
};
pub use session::{
    scripted_session, RingHardware, SceneKey, SceneTimeline, SessionScript, SwitchEvent,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bridge::{self, BridgeConfig};
use crate::circuit::{self, check_coupling, series_impedance, CoilParams, CoupledPair};
use crate::defaults;
use crate::error::{domain, require_positive, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub start_frequency: f64,
    pub stop_frequency: f64,
    pub step: f64,
    /// Sweeps per second.
    pub acquisition_rate: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            start_frequency: defaults::SWEEP_START,
            stop_frequency: defaults::SWEEP_STOP,
            step: defaults::SWEEP_STEP,
            acquisition_rate: defaults::ACQUISITION_RATE,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("start_frequency", self.start_frequency)?;
        require_positive("step", self.step)?;
        require_positive("acquisition_rate", self.acquisition_rate)?;
        if !(self.stop_frequency > self.start_frequency) {
            return Err(domain("stop_frequency must exceed start_frequency"));
        }
        let q = (self.stop_frequency - self.start_frequency) / self.step;
        if (q - q.round()).abs() > 1e-6 {
            return Err(domain(format!(
                "sweep span is not a whole number of steps ({q})"
            )));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        ((self.stop_frequency - self.start_frequency) / self.step).round() as usize + 1
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.point_count())
            .map(|i| self.start_frequency + i as f64 * self.step)
            .collect()
    }

    /// Timestamp of frame `index`.
    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.acquisition_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryScenario {
    /// Ring-to-wristband distance (m).
    pub distance: f64,
    /// Finger bending angle (degrees, 0-90).
    pub bend_angle: f64,
    pub reference_coupling: f64,
    pub reference_distance: f64,
}

impl Default for GeometryScenario {
    fn default() -> Self {
        Self {
            distance: defaults::REFERENCE_DISTANCE,
            bend_angle: 0.0,
            reference_coupling: defaults::REFERENCE_COUPLING,
            reference_distance: defaults::REFERENCE_DISTANCE,
        }
    }
}

impl GeometryScenario {
    pub fn at_distance(distance: f64) -> Self {
        Self {
            distance,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("distance", self.distance)?;
        require_positive("reference_distance", self.reference_distance)?;
        if !(0.0..=90.0).contains(&self.bend_angle) {
            return Err(domain(format!(
                "bend_angle must lie in [0, 90] degrees, got {}",
                self.bend_angle
            )));
        }
        if !(self.reference_coupling > 0.0 && self.reference_coupling < 1.0) {
            return Err(domain(format!(
                "reference_coupling must lie in (0, 1), got {}",
                self.reference_coupling
            )));
        }
        Ok(())
    }
}

/// k = k_ref·(d_ref/d)³·cos(θ), clamped to [0, 1).
pub fn coupling_from_geometry(scene: &GeometryScenario) -> f64 {
    let ratio = scene.reference_distance / scene.distance;
    let k = scene.reference_coupling * ratio.powi(3) * scene.bend_angle.to_radians().cos();
    // cos(90°) is ~6e-17 in floating point; orthogonal coils do not couple.
    if scene.bend_angle >= 90.0 || k <= 0.0 {
        return 0.0;
    }
    k.min(1.0 - f64::EPSILON)
}

/// Smooth additive curve, as polynomial coefficients in the sweep's
/// normalized frequency u ∈ [−1, 1] (dB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetalBaseline {
    pub coefficients: Vec<f64>,
}

impl MetalBaseline {
    pub fn eval(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * u + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisturbanceModel {
    /// Per-point Gaussian noise (dB RMS).
    pub noise_sigma: f64,
    /// Peak rate of slow baseline wander (dB/s).
    pub amplitude_drift: f64,
    /// Peak rate of sensor resonance wander (Hz/s).
    pub frequency_drift: f64,
    pub metal_baseline: Option<MetalBaseline>,
    /// Upward pull of every ring resonance by a nearby resonator (Hz).
    pub nearby_resonator_shift: Option<f64>,
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self {
            noise_sigma: defaults::NOISE_SIGMA_DB,
            amplitude_drift: 0.0,
            frequency_drift: 0.0,
            metal_baseline: None,
            nearby_resonator_shift: None,
        }
    }
}

impl DisturbanceModel {
    pub fn noiseless() -> Self {
        Self {
            noise_sigma: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("amplitude_drift", self.amplitude_drift),
            ("frequency_drift", self.frequency_drift),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(s) = self.nearby_resonator_shift {
            if !s.is_finite() {
                return Err(domain("nearby_resonator_shift must be finite"));
            }
        }
        Ok(())
    }

    pub fn preset(preset: MetalPreset) -> Self {
        let base = Self::default();
        let (sigma, coefficients, shift): (f64, &[f64], Option<f64>) = match preset {
            MetalPreset::None => return base,
            MetalPreset::QiCharger => (0.0023, &[-0.8, 0.15, -0.10, 0.03, 0.004], None),
            MetalPreset::NfcReader => (0.0025, &[-0.5, -0.10, 0.12, 0.0, 0.003], None),
            MetalPreset::Laptop => (0.0021, &[-0.3, 0.05, -0.05], None),
            MetalPreset::MicrowaveOven => (0.0027, &[-1.2, 0.30, -0.20, 0.05, 0.006], None),
            MetalPreset::HairDryer => (0.0024, &[-0.6, -0.20, 0.08, -0.02, 0.002], None),
            MetalPreset::NearbyRing => (0.0021, &[-0.2, 0.02], Some(0.6e6)),
        };
        Self {
            noise_sigma: sigma,
            metal_baseline: Some(MetalBaseline {
                coefficients: coefficients.to_vec(),
            }),
            nearby_resonator_shift: shift,
            ..base
        }
    }
}

/// Disturbances near the hand. Magnitudes are illustrative only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetalPreset {
    None,
    QiCharger,
    NfcReader,
    Laptop,
    MicrowaveOven,
    HairDryer,
    /// Another metallic ring within about 1 cm of the sensor ring.
    NearbyRing,
}

impl MetalPreset {
    pub const ALL: [MetalPreset; 7] = [
        MetalPreset::None,
        MetalPreset::QiCharger,
        MetalPreset::NfcReader,
        MetalPreset::Laptop,
        MetalPreset::MicrowaveOven,
        MetalPreset::HairDryer,
        MetalPreset::NearbyRing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetalPreset::None => "none",
            MetalPreset::QiCharger => "qi-charger",
            MetalPreset::NfcReader => "nfc-reader",
            MetalPreset::Laptop => "laptop",
            MetalPreset::MicrowaveOven => "microwave-oven",
            MetalPreset::HairDryer => "hair-dryer",
            MetalPreset::NearbyRing => "nearby-ring",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub frequencies: Vec<f64>,
    pub magnitudes_db: Vec<f64>,
    /// Acquisition time (s).
    pub timestamp: f64,
}

impl Sweep {
    pub fn new(frequencies: Vec<f64>, magnitudes_db: Vec<f64>, timestamp: f64) -> Result<Self> {
        let s = Self {
            frequencies,
            magnitudes_db,
            timestamp,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.magnitudes_db.len() {
            return Err(domain(format!(
                "frequency/magnitude length mismatch: {} vs {}",
                self.frequencies.len(),
                self.magnitudes_db.len()
            )));
        }
        if self.frequencies.is_empty() {
            return Err(domain("sweep has no points"));
        }
        if let Some(i) = self.frequencies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(domain(format!(
                "frequencies not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = self
            .frequencies
            .iter()
            .chain(&self.magnitudes_db)
            .position(|v| !v.is_finite())
        {
            return Err(domain(format!("non-finite value at flat index {i}")));
        }
        if !self.timestamp.is_finite() {
            return Err(domain("non-finite timestamp"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the grid point nearest `f`; ties go to the lower frequency.
    pub fn nearest_index(&self, f: f64) -> usize {
        let mut best = 0;
        for (i, &x) in self.frequencies.iter().enumerate() {
            if (x - f).abs() < (self.frequencies[best] - f).abs() {
                best = i;
            }
        }
        best
    }
}

/// Resonant sensors seen by one reader: each sensor with its coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSet {
    pub reader: CoilParams,
    pub sensors: Vec<(CoilParams, f64)>,
}

impl SensorSet {
    pub fn single(pair: &CoupledPair) -> Self {
        Self {
            reader: pair.reader.clone(),
            sensors: vec![(pair.sensor.clone(), pair.coupling)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reader.validate()?;
        for (c, k) in &self.sensors {
            c.validate()?;
            check_coupling(*k)?;
        }
        Ok(())
    }
}

struct Readout<'a> {
    bridge: &'a BridgeConfig,
    reader: &'a CoilParams,
    f_match: f64,
    offset_level: f64,
}

impl<'a> Readout<'a> {
    fn new(bridge: &'a BridgeConfig, reader: &'a CoilParams) -> Result<Self> {
        let f_match = circuit::resonant_frequency(reader)?;
        let z_match = series_impedance(reader, f_match);
        let offset_level = bridge::static_offset(bridge, z_match)?.norm();
        Ok(Self {
            bridge,
            reader,
            f_match,
            offset_level,
        })
    }

    /// Bridge output phasor at `f` for the given reflected impedance.
    ///
    /// The sensor term is the balanced bridge response. The mismatch offset
    /// keeps the phase of the exact offset at `f`, while its magnitude is the
    /// exact offset at the matching frequency shaped by a quadratic in dB.
    /// A fixed reference impedance is evaluated literally instead.
    fn voltage(&self, f: f64, dz: Complex64) -> Result<Complex64> {
        let zr = series_impedance(self.reader, f);
        let zl = zr + dz;
        if self.bridge.reference_impedance.is_some() {
            return bridge::bridge_output(self.bridge, zl, zr);
        }
        let balanced = BridgeConfig {
            reference_impedance: Some(zr),
            ..self.bridge.clone()
        };
        let signal = bridge::bridge_output(&balanced, zl, zr)?;
        if self.offset_level == 0.0 {
            return Ok(signal);
        }
        let exact = bridge::static_offset(self.bridge, zr)?;
        let mag = self.offset_level
            * 10f64.powf(offset_shape_db((f - self.f_match) / self.f_match) / 20.0);
        Ok(signal + Complex64::from_polar(mag, exact.arg()))
    }
}

/// Static offset relative to its value at the matching frequency (dB), for
/// fractional detuning `x`: quadratic near the match, continued with a
/// matching slope in x² as a logarithm further out.
fn offset_shape_db(x: f64) -> f64 {
    let a = defaults::OFFSET_QUADRATIC_LIMIT * defaults::OFFSET_QUADRATIC_LIMIT;
    let x2 = x * x;
    if x2 <= a {
        defaults::OFFSET_CURVATURE_DB * x2
    } else {
        defaults::OFFSET_CURVATURE_DB * a * (1.0 + (x2 / a).ln())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn noise_rng(seed: u64, t: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(t.to_bits())))
}

const DRIFT_PERIODS: [f64; 3] = [7.0, 13.0, 29.0];

/// Sum of seeded sinusoids whose derivative never exceeds `rate` per second.
fn drift_value(seed: u64, channel: u64, rate: f64, t: f64) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(0xD41F7 + channel)));
    DRIFT_PERIODS
        .iter()
        .map(|&p| {
            let phase: f64 = rng.random::<f64>() * 2.0 * PI;
            let amp = rate * p / (2.0 * PI * DRIFT_PERIODS.len() as f64);
            amp * (2.0 * PI * t / p + phase).sin()
        })
        .sum()
}

fn normalized_grid(freqs: &[f64]) -> Vec<f64> {
    let lo = freqs[0];
    let hi = freqs[freqs.len() - 1];
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    freqs
        .iter()
        .map(|f| if half > 0.0 { (f - mid) / half } else { 0.0 })
        .collect()
}

/// One sweep for a single ring coupled to the reader.
pub fn synthesize_sweep(
    cfg: &SweepConfig,
    pair: &CoupledPair,
    bridge: &BridgeConfig,
    disturb: &DisturbanceModel,
    t: f64,
) -> Result<Sweep> {
    pair.validate()?;
    synthesize_multi(cfg, &SensorSet::single(pair), bridge, disturb, t)
}

/// One sweep for any number of resonators coupled to the reader; their
/// reflected impedances add.
pub fn synthesize_multi(
    cfg: &SweepConfig,
    set: &SensorSet,
    bridge: &BridgeConfig,
    disturb: &DisturbanceModel,
    t: f64,
) -> Result<Sweep> {
    cfg.validate()?;
    bridge.validate()?;
    disturb.validate()?;
    set.validate()?;
    if !t.is_finite() {
        return Err(domain("timestamp must be finite"));
    }
    let freqs = cfg.frequencies();
    let u = normalized_grid(&freqs);
    let readout = Readout::new(bridge, &set.reader)?;

    let f_shift = drift_value(cfg.seed, 0, disturb.frequency_drift, t)
        + disturb.nearby_resonator_shift.unwrap_or(0.0);
    let sensors: Vec<(CoilParams, f64)> = set
        .sensors
        .iter()
        .filter(|(_, k)| *k > 0.0)
        .map(|(c, k)| {
            let coil = if f_shift != 0.0 {
                let f0 = circuit::resonant_frequency(c)?;
                c.retuned(f0 + f_shift)?
            } else {
                c.clone()
            };
            let m = k * (set.reader.inductance * coil.inductance).sqrt();
            Ok((coil, m))
        })
        .collect::<Result<_>>()?;

    let drift_coeffs: Vec<f64> = (0..3)
        .map(|i| drift_value(cfg.seed, 1 + i, disturb.amplitude_drift, t) / 3.0)
        .collect();

    let mut rng = noise_rng(cfg.seed, t);
    let normal = if disturb.noise_sigma > 0.0 {
        Some(Normal::new(0.0, disturb.noise_sigma).map_err(|e| domain(e.to_string()))?)
    } else {
        None
    };

    let mut mags = Vec::with_capacity(freqs.len());
    for (i, &f) in freqs.iter().enumerate() {
        let dz: Complex64 = sensors
            .iter()
            .map(|(c, m)| circuit::reflected_unchecked(*m, c, f))
            .sum();
        let v = readout.voltage(f, dz)?;
        let mut p = bridge::to_db_magnitude(v, bridge.input_amplitude);
        if let Some(metal) = &disturb.metal_baseline {
            p += metal.eval(u[i]);
        }
        p += drift_coeffs[0] + drift_coeffs[1] * u[i] + drift_coeffs[2] * u[i] * u[i];
        if let Some(n) = &normal {
            p += n.sample(&mut rng);
        }
        if !p.is_finite() {
            return Err(domain(format!(
                "bridge output is not finite at {f} Hz (perfectly balanced bridge with no sensor?)"
            )));
        }
        mags.push(p);
    }
    Ok(Sweep {
        frequencies: freqs,
        magnitudes_db: mags,
        timestamp: t,
    })
}

fn noiseless_contrast(
    cfg: &SweepConfig,
    set: &SensorSet,
    bridge: &BridgeConfig,
    at: f64,
) -> Result<f64> {
    let quiet = DisturbanceModel::noiseless();
    let with = synthesize_multi(cfg, set, bridge, &quiet, 0.0)?;
    let empty = SensorSet {
        reader: set.reader.clone(),
        sensors: vec![],
    };
    let without = synthesize_multi(cfg, &empty, bridge, &quiet, 0.0)?;
    let i = with.nearest_index(at);
    Ok(with.magnitudes_db[i] - without.magnitudes_db[i])
}

/// SNR the detector would measure for this pair in the limit of many traces:
/// the noiseless with/without contrast at the grid point nearest the sensor
/// resonance, divided by the noise σ.
pub fn expected_snr(
    cfg: &SweepConfig,
    pair: &CoupledPair,
    bridge: &BridgeConfig,
    noise_sigma: f64,
) -> Result<f64> {
    require_positive("noise_sigma", noise_sigma)?;
    let f0 = circuit::resonant_frequency(&pair.sensor)?;
    Ok(noiseless_contrast(cfg, &SensorSet::single(pair), bridge, f0)? / noise_sigma)
}

/// Coupling at which the weakest of the sensor tunings reaches `target` SNR.
pub fn coupling_for_snr(
    cfg: &SweepConfig,
    reader: &CoilParams,
    sensors: &[CoilParams],
    bridge: &BridgeConfig,
    noise_sigma: f64,
    target: f64,
) -> Result<f64> {
    require_positive("target", target)?;
    if sensors.is_empty() {
        return Err(domain("no sensor tunings given"));
    }
    let weakest = |k: f64| -> Result<f64> {
        let mut lo = f64::INFINITY;
        for s in sensors {
            let pair = CoupledPair::new(reader.clone(), s.clone(), k)?;
            lo = lo.min(expected_snr(cfg, &pair, bridge, noise_sigma)?);
        }
        Ok(lo)
    };
    let (mut a, mut b) = (1e-6, 0.5);
    if weakest(b)? < target {
        return Err(domain(format!("SNR {target} is unreachable for k < {b}")));
    }
    for _ in 0..80 {
        let mid = (a * b).sqrt();
        if weakest(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(b)
}

/// Ratio, in dB, of the sensor contrast through the bridge to the contrast
/// the same reflected impedance makes on a direct reader measurement.
pub fn bridge_gain_db(pair: &CoupledPair, bridge: &BridgeConfig, f: f64) -> Result<f64> {
    pair.validate()?;
    let readout = Readout::new(bridge, &pair.reader)?;
    let dz = circuit::reflected_impedance(pair, f)?;
    let zr = series_impedance(&pair.reader, f);
    let with = bridge::to_db_magnitude(readout.voltage(f, dz)?, bridge.input_amplitude);
    let without = bridge::to_db_magnitude(
        readout.voltage(f, Complex64::new(0.0, 0.0))?,
        bridge.input_amplitude,
    );
    let single = bridge::single_ended_contrast_db(zr + dz, zr);
    Ok(20.0 * ((with - without).abs() / single.abs()).log10())
}
