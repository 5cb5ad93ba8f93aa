//! `ringtel`: coil design, sweep synthesis, peak detection, decoding and
//! the SNR studies, all reading and writing plain CSV/JSON.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ringtel_core::synth::{
    read_session, read_sweep_csv, write_session, write_sweep_csv, MetalPreset, RingHardware,
    SensorSet, SessionScript,
};
use ringtel_core::*;
use serde::Deserialize;

const CONFIG_ENV: &str = "RINGTEL_CONFIG";

#[derive(Parser)]
#[command(
    name = "ringtel",
    version,
    about = "Passive inductive ring telemetry toolkit"
)]
struct Cli {
    /// JSON config file with `sweep`, `bridge`, `detector`, `disturbance`
    /// and `debounce` sections. Falls back to $RINGTEL_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size the distributed capacitors for a reader coil.
    DesignCoil {
        #[arg(long)]
        inductance: f64,
        #[arg(long)]
        frequency: f64,
        #[arg(long)]
        segments: usize,
        /// Total wire length (m), checked against the segment length limit.
        #[arg(long)]
        wire_length: Option<f64>,
        /// Round the capacitor to the nearest E12 value.
        #[arg(long)]
        e12: bool,
    },
    /// Synthesize sweeps.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Detect resonance peaks in a sweep CSV.
    Detect {
        sweep: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        timestamp: f64,
    },
    /// Decode a session into input events, one JSON object per line.
    Decode {
        session: PathBuf,
        /// Preset name (press, slide, joystick, scroll) or a profile JSON file.
        #[arg(long)]
        profile: String,
    },
    /// Run one of the SNR or accuracy studies.
    Evaluate {
        experiment: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; the summary goes next to it as .json.
        /// Without it the table is printed.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// One sweep with the given states active, as CSV.
    Sweep {
        #[command(flatten)]
        ring: RingArgs,
        /// Active state label; repeat for several, omit for no ring.
        #[arg(long = "state")]
        states: Vec<String>,
        #[arg(long, default_value_t = defaults::REFERENCE_COUPLING)]
        coupling: f64,
        /// Acquisition time (s), which fixes the noise and drift draw.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// A scripted session, as JSON.
    Session {
        #[command(flatten)]
        ring: RingArgs,
        /// Session script JSON (duration, events, scene).
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RingArgs {
    #[arg(long, default_value = "press")]
    profile: String,
    #[arg(long, default_value_t = defaults::REFERENCE_TURNS)]
    turns: u32,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable noise and drift.
    #[arg(long)]
    noiseless: bool,
    /// Environmental disturbance preset, e.g. laptop or nearby-ring.
    #[arg(long)]
    metal: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    sweep: SweepConfig,
    bridge: BridgeConfig,
    detector: DetectorConfig,
    disturbance: DisturbanceModel,
    debounce: DebounceConfig,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Design { .. } => Failure::Usage(e.to_string()),
            Error::Data(_) | Error::Io(_) => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(
    text: &str,
    path: &Path,
) -> std::result::Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| {
        Failure::Data(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn load_config(flag: Option<PathBuf>) -> std::result::Result<Config, Failure> {
    let path = flag.or_else(|| {
        std::env::var_os(CONFIG_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    });
    match path {
        Some(p) => parse_json(&read_text(&p)?, &p),
        None => Ok(Config::default()),
    }
}

fn load_profile(arg: &str) -> std::result::Result<RingProfile, Failure> {
    if let Some(p) = RingProfile::preset(arg) {
        return Ok(p);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::Usage(format!(
            "unknown profile `{arg}`: not a preset and no such file"
        )));
    }
    let profile: RingProfile = parse_json(&read_text(path)?, path)?;
    profile
        .validate()
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(profile)
}

fn disturbance(cfg: &Config, ring: &RingArgs) -> std::result::Result<DisturbanceModel, Failure> {
    let mut d = match &ring.metal {
        Some(name) => DisturbanceModel::preset(
            MetalPreset::from_name(name)
                .ok_or_else(|| Failure::Usage(format!("unknown metal preset `{name}`")))?,
        ),
        None => cfg.disturbance.clone(),
    };
    if ring.noiseless {
        d.noise_sigma = 0.0;
        d.amplitude_drift = 0.0;
        d.frequency_drift = 0.0;
    }
    Ok(d)
}

fn sweep_config(cfg: &Config, seed: Option<u64>) -> SweepConfig {
    let mut s = cfg.sweep.clone();
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Outcome {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(
                fs::File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
            );
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            f(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(cli.config)?;
    match cli.command {
        Command::DesignCoil {
            inductance,
            frequency,
            segments,
            wire_length,
            e12,
        } => {
            let rounding = if e12 { Rounding::E12 } else { Rounding::Exact };
            let d = design_dca(inductance, frequency, segments, wire_length, rounding)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&d).expect("design serializes")
            );
        }
        Command::Synth(SynthCommand::Sweep {
            ring,
            states,
            coupling,
            time,
            output,
        }) => {
            let profile = load_profile(&ring.profile)?;
            let hw = RingHardware::with_turns(ring.turns)?;
            let mut sensors = Vec::new();
            for label in &states {
                sensors.push((hw.ring.retuned(profile.frequency_of(label)?)?, coupling));
            }
            let set = SensorSet {
                reader: hw.reader.clone(),
                sensors,
            };
            let disturb = disturbance(&cfg, &ring)?;
            let sweep = synth::synthesize_multi(
                &sweep_config(&cfg, ring.seed),
                &set,
                &cfg.bridge,
                &disturb,
                time,
            )?;
            emit(output.as_deref(), |w| write_sweep_csv(&sweep, w))?;
        }
        Command::Synth(SynthCommand::Session {
            ring,
            script,
            output,
        }) => {
            let profile = load_profile(&ring.profile)?;
            let script: SessionScript = parse_json(&read_text(&script)?, &script)?;
            let hw = RingHardware {
                bridge: cfg.bridge.clone(),
                ..RingHardware::with_turns(ring.turns)?
            };
            let disturb = disturbance(&cfg, &ring)?;
            let sweeps = scripted_session(
                &script,
                &profile,
                &hw,
                &sweep_config(&cfg, ring.seed),
                &disturb,
            )?;
            emit(output.as_deref(), |w| write_session(&sweeps, w))?;
        }
        Command::Detect { sweep, timestamp } => {
            let file = fs::File::open(&sweep)
                .map_err(|e| Failure::Data(format!("{}: {e}", sweep.display())))?;
            let s = read_sweep_csv(
                io::BufReader::new(file),
                &sweep.display().to_string(),
                timestamp,
            )?;
            let peaks = detect_peaks(&s, &cfg.detector)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&peaks).expect("peaks serialize")
            );
        }
        Command::Decode { session, profile } => {
            let profile = load_profile(&profile)?;
            let text = read_text(&session)?;
            let base = session.parent().unwrap_or(Path::new("."));
            let sweeps = read_session(&text, base, &session.display().to_string())?;
            let events = decode_stream(&sweeps, &profile, &cfg.detector, &cfg.debounce)?;
            let mut out = io::stdout().lock();
            for e in events {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&e).expect("event serializes")
                )?;
            }
        }
        Command::Evaluate {
            experiment,
            trials,
            seed,
            output,
        } => {
            let experiment = Experiment::from_name(&experiment).ok_or_else(|| {
                let known: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Failure::Usage(format!(
                    "unknown experiment `{experiment}` (expected one of {})",
                    known.join(", ")
                ))
            })?;
            let to_stdout = output.is_none();
            let out = run_experiment(&ExperimentSpec {
                experiment,
                trials,
                seed,
                output_path: output,
            })?;
            if to_stdout {
                print!("{}", out.to_csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("ringtel: error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ringtel: usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
