//! Flat `key=value` files whose entries become command-line flags.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// One `--key value` default per line. Blank lines and `#` comments are
/// ignored; `_` in keys is read as `-`. `true`/`false` switch boolean flags.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got `{line}`", idx + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("line {}: invalid key `{key}`", idx + 1);
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

/// Value of `--config` in `args`, if present.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter()
        .take_while(|a| *a != "--")
        .map(|a| a.to_string_lossy())
        .any(|a| a == flag || a.starts_with(&with_value))
}

/// Appends config entries for flags absent from `args`.
pub fn inject(mut args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let explicit = args.clone();
    for (key, value) in entries {
        if given(&explicit, key) {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                // repeated keys (multi-value flags) append one value each
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    args
}

/// Reads `--config` (if any) and returns the effective argument list.
pub fn apply(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    Ok(inject(args, &parse(&text)?))
}
