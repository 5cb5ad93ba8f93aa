//! Scripted sessions: a ring switching between profile states while the
//! reader sweeps at the acquisition rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    coupling_from_geometry, synthesize_multi, DisturbanceModel, GeometryScenario, SensorSet, Sweep,
    SweepConfig,
};
use crate::bridge::BridgeConfig;
use crate::circuit::{check_coupling, default_reader, ring_coil, CoilParams};
use crate::decode::RingProfile;
use crate::defaults;
use crate::error::{domain, Result};

/// From `time` on, the ring's active state set is `active`. Single-resonance
/// profiles take exactly one label; scroll profiles take any subset of reeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub active: Vec<String>,
}

impl SwitchEvent {
    pub fn to(time: f64, label: &str) -> Self {
        Self {
            time,
            active: vec![label.to_string()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneKey {
    pub time: f64,
    pub coupling: f64,
}

/// Piecewise-constant coupling over time. The first key also covers any
/// time before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTimeline {
    pub keys: Vec<SceneKey>,
}

impl SceneTimeline {
    pub fn constant(coupling: f64) -> Self {
        Self {
            keys: vec![SceneKey {
                time: 0.0,
                coupling,
            }],
        }
    }

    pub fn from_geometry(scene: &GeometryScenario) -> Result<Self> {
        scene.validate()?;
        Ok(Self::constant(coupling_from_geometry(scene)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.keys.is_empty() {
            return Err(domain("scene timeline has no keys"));
        }
        if self.keys.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(domain("scene keys must have strictly increasing times"));
        }
        self.keys
            .iter()
            .try_for_each(|k| check_coupling(k.coupling))
    }

    pub fn coupling_at(&self, t: f64) -> f64 {
        let mut k = self.keys[0].coupling;
        for key in &self.keys {
            if key.time <= t {
                k = key.coupling;
            }
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScript {
    /// Session length (s); frames are taken at i/rate for i/rate < duration.
    pub duration: f64,
    /// Active set before the first event; defaults to the profile's idle state.
    #[serde(default)]
    pub initial: Option<Vec<String>>,
    pub events: Vec<SwitchEvent>,
    pub scene: SceneTimeline,
}

/// Reader, ring winding and bridge used for a session. The ring's
/// capacitance is replaced by each state's tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct RingHardware {
    pub reader: CoilParams,
    pub ring: CoilParams,
    pub bridge: BridgeConfig,
}

impl RingHardware {
    /// Wristband reader with a ring of `turns` turns and the default bridge.
    pub fn with_turns(turns: u32) -> Result<Self> {
        Ok(Self {
            reader: default_reader(),
            ring: ring_coil(turns, defaults::RING_FREQUENCY)?,
            bridge: BridgeConfig::default(),
        })
    }
}

fn state_coils(
    profile: &RingProfile,
    ring: &CoilParams,
    active: &[String],
) -> Result<Vec<CoilParams>> {
    active
        .iter()
        .map(|label| ring.retuned(profile.frequency_of(label)?))
        .collect()
}

pub fn scripted_session(
    script: &SessionScript,
    profile: &RingProfile,
    hw: &RingHardware,
    cfg: &SweepConfig,
    disturb: &DisturbanceModel,
) -> Result<Vec<Sweep>> {
    cfg.validate()?;
    profile.validate()?;
    script.scene.validate()?;
    if !(script.duration.is_finite() && script.duration >= 0.0) {
        return Err(domain(format!(
            "session duration must be finite and >= 0, got {}",
            script.duration
        )));
    }
    let mut prev = f64::NEG_INFINITY;
    for ev in &script.events {
        if !(0.0..=script.duration).contains(&ev.time) {
            return Err(domain(format!(
                "event at {} s lies outside the session [0, {}]",
                ev.time, script.duration
            )));
        }
        if ev.time < prev {
            return Err(domain("events must be time-ordered"));
        }
        prev = ev.time;
        if !profile.is_scroll() && ev.active.len() != 1 {
            return Err(domain(format!(
                "profile {} takes exactly one state per event",
                profile.name
            )));
        }
    }

    let initial = script.initial.clone().unwrap_or_else(|| profile.idle_set());
    // Resolve every distinct state set once, which also rejects unknown labels.
    let mut sets = vec![state_coils(profile, &hw.ring, &initial)?];
    for ev in &script.events {
        sets.push(state_coils(profile, &hw.ring, &ev.active)?);
    }

    let frames = (script.duration * cfg.acquisition_rate - 1e-9)
        .ceil()
        .max(0.0) as usize;
    (0..frames)
        .into_par_iter()
        .map(|i| {
            let t = cfg.frame_time(i);
            let which = script
                .events
                .iter()
                .rposition(|e| e.time <= t)
                .map_or(0, |j| j + 1);
            let k = script.scene.coupling_at(t);
            let set = SensorSet {
                reader: hw.reader.clone(),
                sensors: sets[which].iter().map(|c| (c.clone(), k)).collect(),
            };
            synthesize_multi(cfg, &set, &hw.bridge, disturb, t)
        })
        .collect()
}
