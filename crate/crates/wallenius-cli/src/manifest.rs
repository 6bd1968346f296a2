//! Run manifests: every command writes one next to its outputs, recording
//! the resolved parameters, master seed, and input digests. Re-running a
//! command from its manifest (via `--config`) reproduces the outputs
//! byte-for-byte. Execution knobs that cannot affect results (like the
//! worker count) are deliberately excluded.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Debug, Default)]
pub struct RunManifest {
    command: String,
    entries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut manifest = RunManifest {
            command: command.to_string(),
            entries: BTreeMap::new(),
        };
        manifest.set("version", env!("CARGO_PKG_VERSION"));
        manifest
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn set_digest(&mut self, key: &str, bytes: &[u8]) {
        self.entries
            .insert(format!("digest.{key}"), sha256_hex(bytes));
    }

    /// Key-value serialisation: `command` first, then sorted keys.
    pub fn render(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (key, value) in &self.entries {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::write(dir.join("manifest.txt"), self.render())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Keys a config file may not supply as flags: outputs and bookkeeping.
const NON_FLAG_KEYS: [&str; 2] = ["command", "version"];

/// Parses a plain key=value config file (manifests qualify) into flag
/// arguments for the current subcommand. Digest and bookkeeping keys are
/// skipped; `#` lines are comments.
pub fn config_to_args(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", idx + 1))?;
        let key = key.trim();
        let value = value.trim();
        if NON_FLAG_KEYS.contains(&key) || key.starts_with("digest.") {
            continue;
        }
        args.push(format!("--{}", key.replace('_', "-")));
        args.push(value.to_string());
    }
    Ok(args)
}
