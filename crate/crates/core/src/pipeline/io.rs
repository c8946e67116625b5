// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Atomic file output and small JSON/CSV helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<V: DeserializeOwned>(path: &Path, what: &str) -> Result<V> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{what} {}: {e}", path.display())))
}

/// CSV text whose first line is `# config_digest=<hex>`.
pub fn csv_with_digest(digest: &str, body: &[u8]) -> Vec<u8> {
    let mut out = format!("# config_digest={digest}\n").into_bytes();
    out.extend_from_slice(body);
    out
}

/// Reads the digest comment of a CSV written by [`csv_with_digest`].
pub fn csv_digest(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# config_digest=")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Adds or replaces one entry of `timings.json` in `dir`.
pub fn record_timing(dir: &Path, stage: &str, seconds: f64) -> Result<()> {
    let path = dir.join("timings.json");
    let mut map: serde_json::Map<String, serde_json::Value> = if path.exists() {
        read_json(&path, "timings file").unwrap_or_default()
    } else {
        Default::default()
    };
    map.insert(stage.to_string(), serde_json::json!(seconds));
    write_json(&path, &map)
}
