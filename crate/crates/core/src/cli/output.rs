//! CSV and manifest writers shared by every subcommand. All numeric output
//! goes through [`float`] so runs with the same configuration and seed are
//! byte-identical; wall-clock data lives only in the manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// 17 significant digits, enough for an exact parse round-trip.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Filesystem-safe tag for a grid value: "0.01" -> "0p01".
pub fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

/// One CSV output file; the header is written on creation.
pub struct CsvFile {
    rel: String,
    out: BufWriter<File>,
}

impl CsvFile {
    pub fn create(dir: &Path, rel: &str, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(dir.join(rel))?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvFile {
            rel: rel.to_string(),
            out,
        })
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    /// Flush and return the file's name for the manifest.
    pub fn finish(mut self) -> Result<String> {
        self.out.flush()?;
        Ok(self.rel)
    }
}

#[derive(Serialize)]
struct OutputFile {
    path: String,
    bytes: u64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    engine_version: &'static str,
    started_unix_ms: u128,
    wall_seconds: f64,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputFile>,
}

/// Timing context carried through a run so the manifest can report wall time.
pub struct RunClock {
    started: SystemTime,
    timer: Instant,
}

impl RunClock {
    pub fn start() -> Self {
        RunClock {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }
}

/// Write `manifest.json` listing every produced file; refuses to record an
/// empty output.
pub fn write_manifest(
    dir: &Path,
    command: &'static str,
    cfg: &ExperimentConfig,
    clock: &RunClock,
    rels: Vec<String>,
) -> Result<()> {
    let mut outputs = Vec::with_capacity(rels.len());
    for rel in rels {
        let meta = fs::metadata(dir.join(&rel))?;
        if meta.len() == 0 {
            return Err(Error::Io(std::io::Error::other(format!(
                "output file {rel} is empty"
            ))));
        }
        outputs.push(OutputFile {
            path: rel,
            bytes: meta.len(),
        });
    }
    let manifest = RunManifest {
        command,
        engine_version: env!("CARGO_PKG_VERSION"),
        started_unix_ms: clock
            .started
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            .as_millis(),
        wall_seconds: clock.timer.elapsed().as_secs_f64(),
        config: cfg,
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2.5e-17, -4.0e12, f64::MIN_POSITIVE] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn tags_are_filesystem_safe() {
        assert_eq!(tag(0.01), "0p01");
        assert_eq!(tag(10.0), "10");
        assert_eq!(tag(-0.5), "m0p5");
    }

    #[test]
    fn csv_and_manifest_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = CsvFile::create(dir.path(), "a.csv", &["x", "y"]).unwrap();
        f.row([float(1.0), float(2.0)]).unwrap();
        let rel = f.finish().unwrap();
        let clock = RunClock::start();
        let cfg = ExperimentConfig::default();
        write_manifest(dir.path(), "dynamics", &cfg, &clock, vec![rel]).unwrap();
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["command"], "dynamics");
        assert_eq!(parsed["outputs"][0]["path"], "a.csv");
        assert!(parsed["outputs"][0]["bytes"].as_u64().unwrap() > 0);
    }

    #[test]
    fn empty_outputs_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("empty.csv"), "").unwrap();
        let clock = RunClock::start();
        let cfg = ExperimentConfig::default();
        let err = write_manifest(
            dir.path(),
            "dynamics",
            &cfg,
            &clock,
            vec!["empty.csv".into()],
        );
        assert!(err.is_err());
    }
}
