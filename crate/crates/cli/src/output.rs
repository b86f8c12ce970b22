use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Run metadata kept apart from the reports so the reports stay
/// byte-identical across runs with the same seed.
#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    seed: u64,
    version: &'static str,
    created_unix: u64,
    arguments: Vec<String>,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    output.with_file_name(name)
}

pub fn write_metadata(path: &Path, command: &str, seed: u64) -> Result<()> {
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        path,
        &Metadata {
            command,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            created_unix,
            arguments: std::env::args().skip(1).collect(),
        },
    )
}

/// Writes the sidecar next to a single-file output.
pub fn write_sidecar(output: &Path, command: &str, seed: u64) -> Result<()> {
    write_metadata(&sidecar_path(output), command, seed)
}
