//! Ring profiles and the stream decoder that turns per-sweep peaks into
//! debounced input events.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::detect::{Detector, DetectorConfig, PeakReport};
use crate::error::{domain, Result};
use crate::synth::Sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Press,
    Slide,
    Joystick,
    Scroll,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Press => "press",
            ProfileKind::Slide => "slide",
            ProfileKind::Joystick => "joystick",
            ProfileKind::Scroll => "scroll",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub label: String,
    #[serde(rename = "frequency_hz")]
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingProfile {
    pub name: String,
    pub kind: ProfileKind,
    /// Half-band around each state frequency (Hz).
    #[serde(rename = "tolerance_hz")]
    pub tolerance: f64,
    /// For non-scroll profiles the first state is the idle state.
    pub states: Vec<ProfileState>,
}

/// Label of the pressed state in slide and joystick style profiles.
pub const PRESS_LABEL: &str = "press";

impl RingProfile {
    fn build(name: &str, kind: ProfileKind, states: &[(&str, f64)]) -> Self {
        Self {
            name: name.into(),
            kind,
            tolerance: defaults::STATE_TOLERANCE,
            states: states
                .iter()
                .map(|&(l, f)| ProfileState {
                    label: l.into(),
                    frequency: f,
                })
                .collect(),
        }
    }

    /// Tactile switch: open at 28.9 MHz, closed (pressed) at 28.0 MHz.
    pub fn press() -> Self {
        Self::build(
            "press",
            ProfileKind::Press,
            &[("on", 28.9e6), ("off", 28.0e6)],
        )
    }

    /// Lever switch: center, 2/4 mm left, 2/4 mm right and press.
    pub fn slide() -> Self {
        Self::build(
            "slide",
            ProfileKind::Slide,
            &[
                ("center", 28.7e6),
                ("left-2mm", 28.4e6),
                ("left-4mm", 28.1e6),
                ("right-2mm", 27.9e6),
                ("right-4mm", 27.7e6),
                (PRESS_LABEL, 27.6e6),
            ],
        )
    }

    /// Five-position joystick; diagonals are not distinguishable.
    pub fn joystick() -> Self {
        Self::build(
            "joystick",
            ProfileKind::Joystick,
            &[
                ("center", 28.7e6),
                ("right", 28.4e6),
                ("up", 28.1e6),
                ("left", 27.8e6),
                ("down", 27.6e6),
            ],
        )
    }

    /// Three reed switches, each adding its own resonance when closed.
    pub fn scroll() -> Self {
        Self::build(
            "scroll",
            ProfileKind::Scroll,
            &[("reed-A", 29.3e6), ("reed-B", 28.9e6), ("reed-C", 28.6e6)],
        )
    }

    pub fn presets() -> [RingProfile; 4] {
        [
            Self::press(),
            Self::slide(),
            Self::joystick(),
            Self::scroll(),
        ]
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::presets().into_iter().find(|p| p.name == name)
    }

    pub fn is_scroll(&self) -> bool {
        self.kind == ProfileKind::Scroll
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(domain(format!("profile {} has no states", self.name)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(domain(format!(
                "profile {}: tolerance must be > 0",
                self.name
            )));
        }
        for (i, a) in self.states.iter().enumerate() {
            if !(a.frequency.is_finite() && a.frequency > 0.0) {
                return Err(domain(format!(
                    "profile {}: state {} has invalid frequency",
                    self.name, a.label
                )));
            }
            for b in &self.states[i + 1..] {
                if a.label == b.label {
                    return Err(domain(format!(
                        "profile {}: duplicate label {}",
                        self.name, a.label
                    )));
                }
                let gap = (a.frequency - b.frequency).abs();
                if gap == 0.0 {
                    return Err(domain(format!(
                        "profile {}: {} and {} share a frequency",
                        self.name, a.label, b.label
                    )));
                }
                if self.tolerance >= gap / 2.0 {
                    return Err(domain(format!(
                        "profile {}: tolerance {} Hz overlaps the {}/{} gap of {} Hz",
                        self.name, self.tolerance, a.label, b.label, gap
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frequency_of(&self, label: &str) -> Result<f64> {
        self.states
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.frequency)
            .ok_or_else(|| domain(format!("profile {} has no state `{label}`", self.name)))
    }

    pub fn idle_label(&self) -> Option<&str> {
        if self.is_scroll() {
            None
        } else {
            Some(&self.states[0].label)
        }
    }

    /// Active set with nothing touched.
    pub fn idle_set(&self) -> Vec<String> {
        self.idle_label()
            .map(|l| vec![l.to_string()])
            .unwrap_or_default()
    }

    fn band_of(&self, f: f64) -> Option<&ProfileState> {
        self.states
            .iter()
            .find(|s| (s.frequency - f).abs() <= self.tolerance)
    }

    fn top_band(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.frequency)
            .fold(f64::NEG_INFINITY, f64::max)
            + self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Classification {
    State(String),
    /// Closed reeds, in profile order.
    Reeds(Vec<String>),
    /// The strongest peak lies above every band of the profile.
    ForeignResonator,
    Unmatched,
}

/// Maps one sweep's peaks (highest first) onto the profile.
pub fn classify_state(peaks: &[PeakReport], profile: &RingProfile) -> Classification {
    classify_with_support(peaks, profile).0
}

fn classify_with_support(peaks: &[PeakReport], profile: &RingProfile) -> (Classification, f64) {
    let mut order: Vec<&PeakReport> = peaks.iter().collect();
    order.sort_by(|a, b| b.peak_height.total_cmp(&a.peak_height));
    if profile.is_scroll() {
        let mut support = f64::INFINITY;
        let active: Vec<String> = profile
            .states
            .iter()
            .filter(|s| {
                let hit = order
                    .iter()
                    .find(|p| (p.peak_frequency - s.frequency).abs() <= profile.tolerance);
                if let Some(p) = hit {
                    support = support.min(p.snr);
                }
                hit.is_some()
            })
            .map(|s| s.label.clone())
            .collect();
        if !active.is_empty() {
            return (Classification::Reeds(active), support);
        }
    } else if let Some((p, s)) = order
        .iter()
        .find_map(|p| profile.band_of(p.peak_frequency).map(|s| (p, s)))
    {
        return (Classification::State(s.label.clone()), p.snr);
    }
    match order.first() {
        Some(p) if p.peak_frequency > profile.top_band() => {
            (Classification::ForeignResonator, p.snr)
        }
        _ => (Classification::Unmatched, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    /// Timestamp of the sweep that confirmed the event (s).
    pub time: f64,
    pub ring: String,
    pub event: String,
    /// SNR of the supporting peak.
    pub confidence: f64,
    /// Signed 45° steps, clockwise positive. Scroll events only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub steps: Option<i32>,
}

pub const FOREIGN_RESONATOR_EVENT: &str = "foreign-resonator";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebounceConfig {
    /// Consecutive sweeps needed to accept a new state.
    pub confirm_frames: usize,
    /// State assumed before any sweep; empty means the profile's idle state.
    pub idle_label: String,
}

impl Default for DebounceConfig {
    fn default() -> Self {
        Self {
            confirm_frames: defaults::CONFIRM_FRAMES,
            idle_label: String::new(),
        }
    }
}

/// Turns a sequence of single-reed activations into ±1 steps.
///
/// Reeds A, B, C sit in clockwise order. A→B and B→C are clockwise steps,
/// the reverse ones counterclockwise. The C→A wrap is ambiguous on its own
/// and only counts when it continues the previous step's direction; an
/// unexplained jump emits nothing and clears the direction context.
/// Empty and multi-reed sets carry no position and are skipped.
#[derive(Debug, Clone, Default)]
pub struct ScrollDecoder {
    position: Option<usize>,
    direction: Option<i32>,
}

impl ScrollDecoder {
    pub fn push<S: AsRef<str>>(&mut self, active: &[S]) -> Option<i32> {
        let [only] = active else { return None };
        let idx = match only.as_ref() {
            "reed-A" | "A" => 0,
            "reed-B" | "B" => 1,
            "reed-C" | "C" => 2,
            _ => return None,
        };
        let prev = self.position.replace(idx)?;
        let step = match (prev, idx) {
            (p, c) if p == c => return None,
            (0, 1) | (1, 2) => 1,
            (1, 0) | (2, 1) => -1,
            (2, 0) if self.direction == Some(1) => 1,
            (0, 2) if self.direction == Some(-1) => -1,
            _ => {
                self.direction = None;
                return None;
            }
        };
        self.direction = Some(step);
        Some(step)
    }
}

/// Signed steps for a whole activation sequence.
pub fn decode_scroll<S: AsRef<str>>(sequence: &[Vec<S>]) -> Vec<i32> {
    let mut dec = ScrollDecoder::default();
    sequence.iter().filter_map(|set| dec.push(set)).collect()
}

/// Sequential decoder for one ring. Holds detector and debounce state, so
/// each ring needs its own instance.
#[derive(Debug, Clone)]
pub struct StreamDecoder {
    profile: RingProfile,
    detector: Detector,
    confirm_frames: usize,
    /// Debounced classification key; `None` is the foreign-resonator state.
    confirmed: Option<Vec<String>>,
    /// Last confirmed profile state, kept across foreign episodes.
    settled: Vec<String>,
    candidate: Option<Option<Vec<String>>>,
    streak: usize,
    scroll: ScrollDecoder,
    last_time: f64,
}

impl StreamDecoder {
    pub fn new(profile: RingProfile, det: DetectorConfig, deb: DebounceConfig) -> Result<Self> {
        profile.validate()?;
        if deb.confirm_frames < 1 {
            return Err(domain("confirm_frames must be >= 1"));
        }
        let initial = if deb.idle_label.is_empty() {
            profile.idle_set()
        } else {
            profile.frequency_of(&deb.idle_label)?;
            vec![deb.idle_label.clone()]
        };
        let mut scroll = ScrollDecoder::default();
        scroll.push(&initial);
        Ok(Self {
            detector: Detector::new(det)?,
            confirm_frames: deb.confirm_frames,
            confirmed: Some(initial.clone()),
            settled: initial,
            candidate: None,
            streak: 0,
            scroll,
            profile,
            last_time: f64::NEG_INFINITY,
        })
    }

    pub fn profile(&self) -> &RingProfile {
        &self.profile
    }

    pub fn push(&mut self, sweep: &Sweep) -> Result<Vec<InputEvent>> {
        if sweep.timestamp < self.last_time {
            return Err(domain(format!(
                "sweep at {} s arrives after {} s",
                sweep.timestamp, self.last_time
            )));
        }
        self.last_time = sweep.timestamp;
        let peaks = self.detector.detect(sweep)?;
        let (class, support) = classify_with_support(&peaks, &self.profile);
        let key = match class {
            Classification::Unmatched => return Ok(Vec::new()),
            Classification::ForeignResonator => None,
            Classification::State(s) => Some(vec![s]),
            Classification::Reeds(r) => Some(r),
        };
        if key == self.confirmed {
            self.candidate = None;
            self.streak = 0;
            return Ok(Vec::new());
        }
        if self.candidate.as_ref() == Some(&key) {
            self.streak += 1;
        } else {
            self.candidate = Some(key.clone());
            self.streak = 1;
        }
        if self.streak < self.confirm_frames {
            return Ok(Vec::new());
        }
        self.candidate = None;
        self.streak = 0;
        self.confirmed = key.clone();
        let t = sweep.timestamp;
        let Some(state) = key else {
            return Ok(vec![self.event(t, FOREIGN_RESONATOR_EVENT, support, None)]);
        };
        let prev = std::mem::replace(&mut self.settled, state.clone());
        Ok(self.transition_events(&prev, &state, t, support))
    }

    fn event(&self, time: f64, name: &str, confidence: f64, steps: Option<i32>) -> InputEvent {
        InputEvent {
            time,
            ring: self.profile.name.clone(),
            event: name.to_string(),
            confidence,
            steps,
        }
    }

    fn transition_events(
        &mut self,
        prev: &[String],
        next: &[String],
        t: f64,
        support: f64,
    ) -> Vec<InputEvent> {
        if prev == next {
            return Vec::new();
        }
        let kind = self.profile.kind;
        if kind == ProfileKind::Scroll {
            return match self.scroll.push(next) {
                Some(1) => vec![self.event(t, "scroll-cw-45deg", support, Some(1))],
                Some(s) => vec![self.event(t, "scroll-ccw-45deg", support, Some(s))],
                None => Vec::new(),
            };
        }
        let idle = self.profile.idle_label().unwrap_or_default();
        let (from, to) = (prev[0].as_str(), next[0].as_str());
        if kind == ProfileKind::Press {
            let name = if to == idle { "press-up" } else { "press-down" };
            return vec![self.event(t, name, support, None)];
        }
        let mut out = Vec::new();
        if from == PRESS_LABEL {
            out.push(self.event(t, "press-up", support, None));
            if to == idle {
                return out;
            }
        }
        if to == PRESS_LABEL {
            out.push(self.event(t, "press-down", support, None));
        } else {
            out.push(self.event(t, &format!("{}-{}", kind.name(), to), support, None));
        }
        out
    }
}

pub fn decode_stream(
    sweeps: &[Sweep],
    profile: &RingProfile,
    det: &DetectorConfig,
    deb: &DebounceConfig,
) -> Result<Vec<InputEvent>> {
    let mut dec = StreamDecoder::new(profile.clone(), det.clone(), deb.clone())?;
    let mut out = Vec::new();
    for s in sweeps {
        out.extend(dec.push(s)?);
    }
    Ok(out)
}
