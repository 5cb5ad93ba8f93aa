//! Reproducible SNR and accuracy studies. Every trial draws its own seed as
//! `seed + trial`, so trials run in parallel and still give identical tables.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bridge::BridgeConfig;
use crate::circuit::{
    default_reader, ring_coil, ring_coil_spec, CoilParams, CoupledPair, RING_COILS,
};
use crate::decode::{decode_stream, DebounceConfig, RingProfile};
use crate::defaults;
use crate::detect::{compute_snr, detect_peaks, DetectorConfig};
use crate::error::{domain, Error, Result};
use crate::synth::{
    coupling_for_snr, coupling_from_geometry, scripted_session, synthesize_multi, DisturbanceModel,
    GeometryScenario, MetalPreset, RingHardware, SceneTimeline, SensorSet, SessionScript, Sweep,
    SweepConfig, SwitchEvent,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SnrVsTurns,
    SnrVsFrequency,
    SnrVsDistance,
    SnrVsAngle,
    SnrVsMetal,
    PressAccuracy,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SnrVsTurns,
        Experiment::SnrVsFrequency,
        Experiment::SnrVsDistance,
        Experiment::SnrVsAngle,
        Experiment::SnrVsMetal,
        Experiment::PressAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SnrVsTurns => "snr-vs-turns",
            Experiment::SnrVsFrequency => "snr-vs-frequency",
            Experiment::SnrVsDistance => "snr-vs-distance",
            Experiment::SnrVsAngle => "snr-vs-angle",
            Experiment::SnrVsMetal => "snr-vs-metal",
            Experiment::PressAccuracy => "press-accuracy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub trials: usize,
    pub seed: u64,
    /// Where to write the CSV table; the JSON summary goes next to it with a
    /// `.json` extension. Nothing is written when absent.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory CSV");
        for r in &self.rows {
            w.write_record(r).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary is valid JSON");
        s.push('\n');
        s
    }

    pub fn write(&self, csv_path: &Path) -> Result<()> {
        fs::write(csv_path, self.to_csv())?;
        fs::write(csv_path.with_extension("json"), self.summary_json())?;
        Ok(())
    }

    /// Numeric column by name, parsed back from the table.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        self.rows.iter().map(|r| r[i].parse().ok()).collect()
    }
}

/// SNR and detection statistics for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrTrial {
    pub snr: f64,
    pub detection_rate: f64,
}

/// Inputs of an SNR measurement: which resonators are present, where to read
/// the SNR and where the detector should find the peak.
struct SnrSetup {
    cfg: SweepConfig,
    with: SensorSet,
    at: f64,
    expect: f64,
    disturb: DisturbanceModel,
}

/// One trial: `SNR_TRACES` sweeps without the ring, then as many with it,
/// taken back to back at the acquisition rate.
fn snr_trial(setup: &SnrSetup, seed: u64) -> Result<SnrTrial> {
    let cfg = SweepConfig {
        seed,
        ..setup.cfg.clone()
    };
    let bridge = BridgeConfig::default();
    let det = DetectorConfig::default();
    let n = defaults::SNR_TRACES;
    let empty = SensorSet {
        reader: setup.with.reader.clone(),
        sensors: vec![],
    };
    let without: Vec<Sweep> = (0..n)
        .map(|i| synthesize_multi(&cfg, &empty, &bridge, &setup.disturb, cfg.frame_time(i)))
        .collect::<Result<_>>()?;
    let with: Vec<Sweep> = (n..2 * n)
        .map(|i| {
            synthesize_multi(
                &cfg,
                &setup.with,
                &bridge,
                &setup.disturb,
                cfg.frame_time(i),
            )
        })
        .collect::<Result<_>>()?;
    let snr = compute_snr(&with, &without, setup.at)?;
    let mut hits = 0usize;
    for s in &with {
        let peaks = detect_peaks(s, &det)?;
        if peaks
            .first()
            .is_some_and(|p| (p.peak_frequency - setup.expect).abs() <= setup.cfg.step)
        {
            hits += 1;
        }
    }
    Ok(SnrTrial {
        snr,
        detection_rate: hits as f64 / n as f64,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (m, sd)
}

/// Mean/std of SNR and mean detection rate over trials.
fn snr_stats(setup: &SnrSetup, spec: &ExperimentSpec) -> Result<(f64, f64, f64)> {
    let trials: Vec<SnrTrial> = (0..spec.trials)
        .into_par_iter()
        .map(|t| snr_trial(setup, spec.seed.wrapping_add(t as u64)))
        .collect::<Result<_>>()?;
    let snrs: Vec<f64> = trials.iter().map(|t| t.snr).collect();
    let (m, sd) = mean_std(&snrs);
    let det = trials.iter().map(|t| t.detection_rate).sum::<f64>() / trials.len() as f64;
    Ok((m, sd, det))
}

fn single(sensor: CoilParams, k: f64) -> SensorSet {
    SensorSet {
        reader: default_reader(),
        sensors: vec![(sensor, k)],
    }
}

/// Coupling of a ring with `turns` turns at the reference geometry. The
/// mutual inductance grows in proportion to the turn count, relative to the
/// 8-turn reference coil whose coupling is `k_ref`.
pub fn turn_scaled_coupling(turns: u32, k_ref: f64) -> Result<f64> {
    let s = ring_coil_spec(turns)?;
    let r = ring_coil_spec(defaults::REFERENCE_TURNS)?;
    Ok(k_ref * (turns as f64 / r.turns as f64) * (r.inductance / s.inductance).sqrt())
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn run_turns(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let f0 = defaults::RING_FREQUENCY;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for s in RING_COILS {
        let k = turn_scaled_coupling(s.turns, defaults::REFERENCE_COUPLING)?;
        let setup = SnrSetup {
            cfg: SweepConfig::default(),
            with: single(ring_coil(s.turns, f0)?, k),
            at: f0,
            expect: f0,
            disturb: DisturbanceModel::default(),
        };
        let (m, sd, det) = snr_stats(&setup, spec)?;
        means.push(m);
        rows.push(vec![
            s.turns.to_string(),
            fmt(s.inductance),
            fmt(s.resistance),
            s.capacitor_count.to_string(),
            fmt(k),
            fmt(m),
            fmt(sd),
            fmt(det),
            fmt(s.measured_snr),
        ]);
    }
    let rising = means[..5].windows(2).all(|w| w[1] > w[0]);
    let plateau = means[4..]
        .iter()
        .map(|v| (v - means[4]).abs() / means[4])
        .fold(0.0, f64::max);
    Ok(ExperimentOutput {
        columns: vec![
            "turns",
            "inductance_h",
            "resistance_ohm",
            "capacitor_count",
            "coupling",
            "snr_mean",
            "snr_std",
            "detection_rate",
            "measured_snr",
        ],
        rows,
        summary: json!({
            "rising_over_3_to_7_turns": rising,
            "max_relative_change_7_to_9_turns": plateau,
        }),
    })
}

fn run_frequency(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut rows = Vec::new();
    let mut band = Vec::new();
    for mhz in 20..=40u32 {
        let f0 = mhz as f64 * 1e6;
        // The sweep window follows the ring so its resonance stays centred.
        let cfg = SweepConfig {
            start_frequency: f0 - 1.5e6,
            stop_frequency: f0 + 1.5e6,
            ..Default::default()
        };
        let setup = SnrSetup {
            cfg,
            with: single(
                ring_coil(defaults::REFERENCE_TURNS, f0)?,
                defaults::REFERENCE_COUPLING,
            ),
            at: f0,
            expect: f0,
            disturb: DisturbanceModel::default(),
        };
        let (m, sd, det) = snr_stats(&setup, spec)?;
        if m > 10.0 {
            band.push(mhz);
        }
        rows.push(vec![fmt(f0), fmt(m), fmt(sd), fmt(det)]);
    }
    Ok(ExperimentOutput {
        columns: vec!["ring_frequency_hz", "snr_mean", "snr_std", "detection_rate"],
        rows,
        summary: json!({
            "band_above_snr_10_mhz": band.first().map(|lo| json!([lo, band.last()])),
        }),
    })
}

fn run_distance(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let f0 = defaults::RING_FREQUENCY;
    let mut rows = Vec::new();
    let mut at_13 = f64::NAN;
    let mut beyond_15 = f64::NEG_INFINITY;
    for cm in 5..=20u32 {
        let d = cm as f64 / 100.0;
        let k = coupling_from_geometry(&GeometryScenario::at_distance(d));
        let setup = SnrSetup {
            cfg: SweepConfig::default(),
            with: single(ring_coil(defaults::REFERENCE_TURNS, f0)?, k),
            at: f0,
            expect: f0,
            disturb: DisturbanceModel::default(),
        };
        let (m, sd, det) = snr_stats(&setup, spec)?;
        if cm == 13 {
            at_13 = m;
        }
        if cm > 15 {
            beyond_15 = beyond_15.max(m);
        }
        rows.push(vec![fmt(d), fmt(k), fmt(m), fmt(sd), fmt(det)]);
    }
    Ok(ExperimentOutput {
        columns: vec![
            "distance_m",
            "coupling",
            "snr_mean",
            "snr_std",
            "detection_rate",
        ],
        rows,
        summary: json!({ "snr_at_13_cm": at_13, "max_snr_beyond_15_cm": beyond_15 }),
    })
}

/// Bending angles studied; a negative bend couples like its mirror image.
pub const BEND_ANGLES: [f64; 4] = [0.0, 30.0, 50.0, 70.0];

fn run_angle(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let f0 = defaults::RING_FREQUENCY;
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for angle in BEND_ANGLES {
        let scene = GeometryScenario {
            bend_angle: angle,
            reference_coupling: defaults::BENDING_REFERENCE_COUPLING,
            ..Default::default()
        };
        scene.validate()?;
        let k = coupling_from_geometry(&scene);
        let setup = SnrSetup {
            cfg: SweepConfig::default(),
            with: single(ring_coil(defaults::REFERENCE_TURNS, f0)?, k),
            at: f0,
            expect: f0,
            disturb: DisturbanceModel::default(),
        };
        let (m, sd, det) = snr_stats(&setup, spec)?;
        worst = worst.min(m);
        rows.push(vec![fmt(angle), fmt(k), fmt(m), fmt(sd), fmt(det)]);
    }
    Ok(ExperimentOutput {
        columns: vec![
            "bend_angle_deg",
            "coupling",
            "snr_mean",
            "snr_std",
            "detection_rate",
        ],
        rows,
        summary: json!({ "min_snr": worst, "reference_coupling": defaults::BENDING_REFERENCE_COUPLING }),
    })
}

fn run_metal(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let f0 = defaults::RING_FREQUENCY;
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for preset in MetalPreset::ALL {
        let disturb = DisturbanceModel::preset(preset);
        let shift = disturb.nearby_resonator_shift.unwrap_or(0.0);
        let setup = SnrSetup {
            cfg: SweepConfig::default(),
            with: single(
                ring_coil(defaults::REFERENCE_TURNS, f0)?,
                defaults::REFERENCE_COUPLING,
            ),
            at: f0,
            expect: f0 + shift,
            disturb: disturb.clone(),
        };
        let (m, sd, det) = snr_stats(&setup, spec)?;
        summary.insert(preset.name().into(), json!(m));
        rows.push(vec![
            preset.name().to_string(),
            fmt(disturb.noise_sigma),
            fmt(shift),
            fmt(m),
            fmt(sd),
            fmt(det),
        ]);
    }
    Ok(ExperimentOutput {
        columns: vec![
            "preset",
            "noise_sigma_db",
            "resonance_shift_hz",
            "snr_mean",
            "snr_std",
            "detection_rate",
        ],
        rows,
        summary: json!({ "snr_mean_by_preset": summary }),
    })
}

/// Timing of a scripted press session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressCadence {
    pub presses: usize,
    /// Idle time before the first press (s).
    pub lead_in: f64,
    /// Time the switch is held down (s).
    pub hold: f64,
    /// Time between release and the next press (s).
    pub release: f64,
}

impl Default for PressCadence {
    fn default() -> Self {
        Self {
            presses: 300,
            lead_in: 1.0,
            hold: 0.8,
            release: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressResult {
    pub target_snr: f64,
    pub coupling: f64,
    pub presses: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Runs a press session whose weaker switch state sits at `target_snr` and
/// counts presses decoded as exactly one press-down inside their own cycle.
pub fn press_session_accuracy(
    target_snr: f64,
    seed: u64,
    cadence: &PressCadence,
) -> Result<PressResult> {
    if cadence.presses == 0 {
        return Err(domain("a press session needs at least one press"));
    }
    let profile = RingProfile::press();
    let hw = RingHardware::with_turns(7)?;
    let cfg = SweepConfig {
        seed,
        ..Default::default()
    };
    let disturb = DisturbanceModel::default();
    let tunings: Vec<CoilParams> = profile
        .states
        .iter()
        .map(|s| hw.ring.retuned(s.frequency))
        .collect::<Result<_>>()?;
    let k = coupling_for_snr(
        &cfg,
        &hw.reader,
        &tunings,
        &hw.bridge,
        disturb.noise_sigma,
        target_snr,
    )?;

    let period = cadence.hold + cadence.release;
    let starts: Vec<f64> = (0..cadence.presses)
        .map(|i| cadence.lead_in + i as f64 * period)
        .collect();
    let mut events = Vec::with_capacity(2 * cadence.presses);
    for &t in &starts {
        events.push(SwitchEvent::to(t, "off"));
        events.push(SwitchEvent::to(t + cadence.hold, "on"));
    }
    let duration = cadence.lead_in + cadence.presses as f64 * period;
    let script = SessionScript {
        duration,
        initial: None,
        events,
        scene: SceneTimeline::constant(k),
    };
    let sweeps = scripted_session(&script, &profile, &hw, &cfg, &disturb)?;
    let decoded = decode_stream(
        &sweeps,
        &profile,
        &DetectorConfig::default(),
        &DebounceConfig::default(),
    )?;

    let mut downs = vec![0usize; cadence.presses];
    for e in decoded.iter().filter(|e| e.event == "press-down") {
        if let Some(i) = starts.iter().rposition(|&s| s <= e.time) {
            downs[i] += 1;
        }
    }
    let correct = downs.iter().filter(|&&n| n == 1).count();
    Ok(PressResult {
        target_snr,
        coupling: k,
        presses: cadence.presses,
        correct,
        accuracy: correct as f64 / cadence.presses as f64,
    })
}

/// Press-session target SNRs.
pub const PRESS_TARGET_SNRS: [f64; 4] = [10.0, 11.0, 12.0, 13.0];

fn run_press(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let cadence = PressCadence::default();
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for target in PRESS_TARGET_SNRS {
        let results: Vec<PressResult> = (0..spec.trials)
            .into_par_iter()
            .map(|t| press_session_accuracy(target, spec.seed.wrapping_add(t as u64), &cadence))
            .collect::<Result<_>>()?;
        let acc: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
        let (m, sd) = mean_std(&acc);
        summary.insert(fmt(target), json!(m));
        rows.push(vec![
            fmt(target),
            fmt(results[0].coupling),
            cadence.presses.to_string(),
            fmt(m),
            fmt(sd),
        ]);
    }
    Ok(ExperimentOutput {
        columns: vec![
            "target_snr",
            "coupling",
            "presses",
            "accuracy_mean",
            "accuracy_std",
        ],
        rows,
        summary: json!({ "accuracy_by_target_snr": summary, "cadence": cadence }),
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    if spec.trials < 1 {
        return Err(domain("trials must be >= 1"));
    }
    let mut out = match spec.experiment {
        Experiment::SnrVsTurns => run_turns(spec),
        Experiment::SnrVsFrequency => run_frequency(spec),
        Experiment::SnrVsDistance => run_distance(spec),
        Experiment::SnrVsAngle => run_angle(spec),
        Experiment::SnrVsMetal => run_metal(spec),
        Experiment::PressAccuracy => run_press(spec),
    }?;
    if let Value::Object(m) = &mut out.summary {
        m.insert("experiment".into(), json!(spec.experiment.name()));
        m.insert("trials".into(), json!(spec.trials));
        m.insert("seed".into(), json!(spec.seed));
    }
    if let Some(p) = &spec.output_path {
        out.write(p).map_err(|e| match e {
            Error::Io(io) => Error::Io(std::io::Error::new(
                io.kind(),
                format!("{}: {io}", p.display()),
            )),
            other => other,
        })?;
    }
    Ok(out)
}

/// Expected SNR of the `turns`-turn ring at the reference geometry.
pub fn expected_turn_snr(turns: u32) -> Result<f64> {
    let k = turn_scaled_coupling(turns, defaults::REFERENCE_COUPLING)?;
    let pair = CoupledPair::new(
        default_reader(),
        ring_coil(turns, defaults::RING_FREQUENCY)?,
        k,
    )?;
    crate::synth::expected_snr(
        &SweepConfig::default(),
        &pair,
        &BridgeConfig::default(),
        defaults::NOISE_SIGMA_DB,
    )
}
