//! Sweep CSV and session JSON formats.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! written sweep reads back bit-identical.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Sweep;
use crate::error::{Error, Result};

const HEADER: [&str; 2] = ["frequency_hz", "magnitude_db"];

fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

pub fn write_sweep_csv<W: Write>(sweep: &Sweep, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| data(format!("writing sweep CSV: {e}"));
    w.write_record(HEADER).map_err(io_err)?;
    for (f, m) in sweep.frequencies.iter().zip(&sweep.magnitudes_db) {
        w.write_record([f.to_string(), m.to_string()])
            .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_to_csv_string(sweep: &Sweep) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(sweep, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Reads a sweep CSV. `origin` names the source in diagnostics.
pub fn read_sweep_csv<R: Read>(input: R, origin: &str, timestamp: f64) -> Result<Sweep> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| data(format!("{origin}: cannot read header: {e}")))?
        .clone();
    if headers.len() != 2 || headers.get(0) != Some(HEADER[0]) || headers.get(1) != Some(HEADER[1])
    {
        return Err(data(format!(
            "{origin}: line 1: expected header `{},{}`, found `{}`",
            HEADER[0],
            HEADER[1],
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut freqs = Vec::new();
    let mut mags = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data(format!("{origin}: line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                data(format!(
                    "{origin}: line {line}, field `{}`: `{raw}` is not a number",
                    HEADER[i]
                ))
            })?;
            if !v.is_finite() {
                return Err(data(format!(
                    "{origin}: line {line}, field `{}`: value is not finite",
                    HEADER[i]
                )));
            }
            Ok(v)
        };
        let f = field(0)?;
        if let Some(&prev) = freqs.last() {
            if !(f > prev) {
                return Err(data(format!(
                    "{origin}: line {line}, field `frequency_hz`: {f} does not increase on the previous row"
                )));
            }
        }
        freqs.push(f);
        mags.push(field(1)?);
    }
    if freqs.is_empty() {
        return Err(data(format!("{origin}: no data rows")));
    }
    Ok(Sweep {
        frequencies: freqs,
        magnitudes_db: mags,
        timestamp,
    })
}

pub fn sweep_from_csv_str(text: &str, timestamp: f64) -> Result<Sweep> {
    read_sweep_csv(text.as_bytes(), "<memory>", timestamp)
}

/// One session JSON entry: a sweep inline or in a CSV file next to the
/// session file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SessionEntry {
    Inline {
        timestamp_s: f64,
        points: Vec<[f64; 2]>,
    },
    File {
        timestamp_s: f64,
        sweep_file: String,
    },
}

impl SessionEntry {
    pub fn inline(sweep: &Sweep) -> Self {
        SessionEntry::Inline {
            timestamp_s: sweep.timestamp,
            points: sweep
                .frequencies
                .iter()
                .zip(&sweep.magnitudes_db)
                .map(|(&f, &m)| [f, m])
                .collect(),
        }
    }
}

/// Parses a session JSON document. `base` resolves relative `sweep_file` paths.
pub fn read_session(text: &str, base: &Path, origin: &str) -> Result<Vec<Sweep>> {
    let entries: Vec<SessionEntry> = serde_json::from_str(text).map_err(|e| {
        data(format!(
            "{origin}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    let mut out = Vec::with_capacity(entries.len());
    for (i, entry) in entries.into_iter().enumerate() {
        let sweep = match entry {
            SessionEntry::Inline {
                timestamp_s,
                points,
            } => Sweep {
                frequencies: points.iter().map(|p| p[0]).collect(),
                magnitudes_db: points.iter().map(|p| p[1]).collect(),
                timestamp: timestamp_s,
            },
            SessionEntry::File {
                timestamp_s,
                sweep_file,
            } => {
                let path: PathBuf = base.join(&sweep_file);
                let file = fs::File::open(&path).map_err(|e| {
                    data(format!(
                        "{origin}: entry {i}: cannot open `{}`: {e}",
                        path.display()
                    ))
                })?;
                read_sweep_csv(file, &path.display().to_string(), timestamp_s)?
            }
        };
        sweep
            .validate()
            .map_err(|e| data(format!("{origin}: entry {i}: {e}")))?;
        if let Some(prev) = out.last().map(|s: &Sweep| s.timestamp) {
            if sweep.timestamp < prev {
                return Err(data(format!(
                    "{origin}: entry {i}: field `timestamp_s` goes back in time"
                )));
            }
        }
        out.push(sweep);
    }
    Ok(out)
}

/// Writes sweeps as an inline session JSON array.
pub fn write_session<W: Write>(sweeps: &[Sweep], mut out: W) -> Result<()> {
    let entries: Vec<SessionEntry> = sweeps.iter().map(SessionEntry::inline).collect();
    serde_json::to_writer(&mut out, &entries).map_err(|e| data(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::BridgeConfig;
    use crate::circuit::{default_reader, ring_coil, CoupledPair};
    use crate::synth::{synthesize_sweep, DisturbanceModel, SweepConfig};

    fn sample() -> Sweep {
        let pair = CoupledPair::new(default_reader(), ring_coil(8, 29e6).unwrap(), 1e-3).unwrap();
        let cfg = SweepConfig {
            seed: 11,
            ..Default::default()
        };
        synthesize_sweep(
            &cfg,
            &pair,
            &BridgeConfig::default(),
            &DisturbanceModel::default(),
            0.4,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = sample();
        let text = sweep_to_csv_string(&s);
        assert!(text.starts_with("frequency_hz,magnitude_db\n"));
        let back = sweep_from_csv_str(&text, s.timestamp).unwrap();
        assert_eq!(back, s);
        assert_eq!(sweep_to_csv_string(&back), text);
    }

    #[test]
    fn csv_diagnostics() {
        let e = sweep_from_csv_str("freq,db\n1,2\n", 0.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = sweep_from_csv_str("frequency_hz,magnitude_db\n1,2\n2,abc\n", 0.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 3") && e.contains("magnitude_db"), "{e}");
        let e = sweep_from_csv_str("frequency_hz,magnitude_db\n2,2\n1,3\n", 0.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("frequency_hz"), "{e}");
        assert!(sweep_from_csv_str("frequency_hz,magnitude_db\n", 0.0).is_err());
        assert!(matches!(
            sweep_from_csv_str("frequency_hz,magnitude_db\n1\n", 0.0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn session_round_trip() {
        let a = sample();
        let mut b = sample();
        b.timestamp = 0.6;
        let mut buf = Vec::new();
        write_session(&[a.clone(), b.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_session(&text, Path::new("."), "mem").unwrap();
        assert_eq!(back, vec![a, b]);
        assert!(read_session("[]", Path::new("."), "mem")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn session_with_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        fs::write(dir.path().join("a.csv"), sweep_to_csv_string(&s)).unwrap();
        let text = r#"[{"timestamp_s": 0.4, "sweep_file": "a.csv"}]"#;
        let back = read_session(text, dir.path(), "mem").unwrap();
        assert_eq!(back, vec![s]);
        let missing = r#"[{"timestamp_s": 0.4, "sweep_file": "nope.csv"}]"#;
        assert!(read_session(missing, dir.path(), "mem")
            .unwrap_err()
            .to_string()
            .contains("entry 0"));
        let bad = "[{\"timestamp_s\": 0.4,\n \"points\": 3}]";
        assert!(read_session(bad, dir.path(), "mem")
            .unwrap_err()
            .to_string()
            .contains("line"));
    }
}
