use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

/// 17 significant digits: round-trip exact for f64, so reruns and golden
/// files compare byte for byte.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("reports serialize");
    body.push('\n');
    write_text(path, &body)
}

/// Record of one invocation: what ran, with which resolved parameters, and
/// which data files it produced. The data files themselves carry no clock,
/// so reruns stay byte-identical; the wall time lives here.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    /// The tool uses no randomness anywhere; the flag only asserts it.
    pub seedless: bool,
    pub duration_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: serde_json::Value,
    seedless: bool,
    started: Instant,
    outputs: &[PathBuf],
) -> std::io::Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        seedless,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    write_json(&out_dir.join("run_manifest.json"), &manifest)
}
