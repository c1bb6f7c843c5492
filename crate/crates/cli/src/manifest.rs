//! Reproducibility record written next to every run's primary output.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Contents depend only on the command, its resolved flags and its inputs,
/// so identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).with_context(|| format!("cannot read {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((total, format!("{:x}", hasher.finalize())))
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let mut seeds = BTreeMap::new();
        if let serde_json::Value::Object(map) = &config {
            for (k, v) in map {
                if k.contains("seed") {
                    if let Some(s) = v.as_u64() {
                        seeds.insert(k.clone(), s);
                    }
                }
            }
        }
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            seeds,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let (bytes, sha256) = sha256_file(path)?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            bytes,
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Writes to `explicit`, else `<first output>.run.json`, else stderr.
    pub fn emit(&self, explicit: Option<&Path>) -> Result<()> {
        let target = explicit.map(Path::to_path_buf).or_else(|| {
            self.outputs.first().map(|o| {
                let mut p = PathBuf::from(o).into_os_string();
                p.push(".run.json");
                PathBuf::from(p)
            })
        });
        match target {
            Some(path) => std::fs::write(&path, self.to_json() + "\n")
                .with_context(|| format!("cannot write run manifest {}", path.display())),
            None => {
                eprintln!("{}", self.to_json());
                Ok(())
            }
        }
    }
}
