use ringtel_core::synth::{
    read_session, write_session, RingHardware, SceneKey, SceneTimeline, SessionScript, SwitchEvent,
};
use ringtel_core::*;

fn slide_walk() -> SessionScript {
    let labels = [
        "left-2mm",
        "left-4mm",
        "left-2mm",
        "center",
        "right-2mm",
        "press",
        "center",
    ];
    SessionScript {
        duration: labels.len() as f64 + 1.0,
        initial: None,
        events: labels
            .iter()
            .enumerate()
            .map(|(i, l)| SwitchEvent::to(i as f64 + 1.0, l))
            .collect(),
        scene: SceneTimeline::constant(1e-3),
    }
}

#[test]
fn slide_session_decodes_every_move() {
    let hw = RingHardware::with_turns(8).unwrap();
    let cfg = SweepConfig {
        seed: 11,
        ..Default::default()
    };
    let sweeps = scripted_session(
        &slide_walk(),
        &RingProfile::slide(),
        &hw,
        &cfg,
        &DisturbanceModel::default(),
    )
    .unwrap();
    let events = decode_stream(
        &sweeps,
        &RingProfile::slide(),
        &DetectorConfig::default(),
        &DebounceConfig::default(),
    )
    .unwrap();
    let names: Vec<&str> = events.iter().map(|e| e.event.as_str()).collect();
    assert_eq!(
        names,
        [
            "slide-left-2mm",
            "slide-left-4mm",
            "slide-left-2mm",
            "slide-center",
            "slide-right-2mm",
            "press-down",
            "press-up"
        ]
    );
    // Events confirm after the debounce window, never before the switch.
    for (e, t) in events.iter().zip(1..) {
        assert!(e.time >= t as f64 && e.time < t as f64 + 1.0, "{e:?}");
    }
}

#[test]
fn session_survives_json_round_trip() {
    let hw = RingHardware::with_turns(8).unwrap();
    let sweeps = scripted_session(
        &slide_walk(),
        &RingProfile::slide(),
        &hw,
        &SweepConfig::default(),
        &DisturbanceModel::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_session(&sweeps, &mut buf).unwrap();
    let back = read_session(
        std::str::from_utf8(&buf).unwrap(),
        std::path::Path::new("."),
        "mem",
    )
    .unwrap();
    assert_eq!(back, sweeps);
}

#[test]
fn ring_moved_out_of_range_goes_silent() {
    let hw = RingHardware::with_turns(7).unwrap();
    let far = coupling_from_geometry(&GeometryScenario::at_distance(0.25));
    let script = SessionScript {
        duration: 4.0,
        initial: Some(vec!["on".into()]),
        events: vec![],
        scene: SceneTimeline {
            keys: vec![
                SceneKey {
                    time: 0.0,
                    coupling: 1e-3,
                },
                SceneKey {
                    time: 2.0,
                    coupling: far,
                },
            ],
        },
    };
    let sweeps = scripted_session(
        &script,
        &RingProfile::press(),
        &hw,
        &SweepConfig::default(),
        &DisturbanceModel::default(),
    )
    .unwrap();
    let det = DetectorConfig::default();
    for s in &sweeps {
        let c = classify_state(&detect_peaks(s, &det).unwrap(), &RingProfile::press());
        if s.timestamp < 2.0 {
            assert_eq!(c, Classification::State("on".into()), "t = {}", s.timestamp);
        } else {
            assert_eq!(c, Classification::Unmatched, "t = {}", s.timestamp);
        }
    }
}

#[test]
fn nearby_ring_is_reported_once() {
    let hw = RingHardware::with_turns(7).unwrap();
    let script = SessionScript {
        duration: 3.0,
        initial: None,
        events: vec![],
        scene: SceneTimeline::constant(1e-3),
    };
    let disturb = DisturbanceModel::preset(synth::MetalPreset::NearbyRing);
    let profile = RingProfile::press();
    let sweeps =
        scripted_session(&script, &profile, &hw, &SweepConfig::default(), &disturb).unwrap();
    let events = decode_stream(
        &sweeps,
        &profile,
        &DetectorConfig::default(),
        &DebounceConfig::default(),
    )
    .unwrap();
    assert_eq!(
        events
            .iter()
            .filter(|e| e.event == decode::FOREIGN_RESONATOR_EVENT)
            .count(),
        1
    );
}

#[test]
fn experiment_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let path = dir.path().join(name);
        run_experiment(&ExperimentSpec {
            experiment: Experiment::SnrVsDistance,
            trials: 2,
            seed: 4,
            output_path: Some(path.clone()),
        })
        .unwrap();
        (
            std::fs::read(&path).unwrap(),
            std::fs::read(path.with_extension("json")).unwrap(),
        )
    };
    assert_eq!(write("a.csv"), write("b.csv"));
}
