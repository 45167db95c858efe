//! Versioned JSON container for network parameters and optimizer state.
//!
//! Floats are written with round-trip precision, so a save/load cycle
//! restores every parameter bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::mlp::{Mlp, MlpSpec};
use crate::error::{Error, Result};

pub const FORMAT: &str = "cfmec-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSnapshot {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<AdamState>,
}

impl NetworkSnapshot {
    pub fn of(net: &Mlp, optimizer: Option<&AdamState>) -> Self {
        Self {
            spec: net.spec().clone(),
            params: net.params().to_vec(),
            optimizer: optimizer.cloned(),
        }
    }

    pub fn restore(&self) -> Result<Mlp> {
        if let Some(i) = self.params.iter().position(|p| !p.is_finite()) {
            return Err(Error::CheckpointMismatch(format!(
                "parameter {i} is not finite"
            )));
        }
        let net = Mlp::from_params(self.spec.clone(), self.params.clone())
            .map_err(|e| Error::CheckpointMismatch(e.to_string()))?;
        if let Some(opt) = &self.optimizer {
            if opt.m.len() != self.params.len() || opt.v.len() != self.params.len() {
                return Err(Error::CheckpointMismatch(
                    "optimizer state does not match parameters".into(),
                ));
            }
        }
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Container<T> {
    pub format: String,
    pub version: u32,
    pub payload: T,
}

impl<T> Container<T> {
    pub fn new(payload: T) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            payload,
        }
    }
}

pub fn to_string<T: Serialize>(payload: &T) -> Result<String> {
    Ok(serde_json::to_string(&Container::new(payload))?)
}

pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let c: Container<T> = serde_json::from_str(text)?;
    check_header(&c.format, c.version)?;
    Ok(c.payload)
}

fn check_header(format: &str, version: u32) -> Result<()> {
    if format != FORMAT {
        return Err(Error::CheckpointMismatch(format!(
            "unknown container format {format:?}"
        )));
    }
    if version != VERSION {
        return Err(Error::CheckpointMismatch(format!(
            "container version {version}, this build reads {VERSION}"
        )));
    }
    Ok(())
}

/// Writes to a sibling temp file and renames, so a crash never leaves a
/// truncated checkpoint behind.
pub fn save<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &Container::new(payload))?;
    w.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let c: Container<T> = serde_json::from_reader(BufReader::new(file))?;
    check_header(&c.format, c.version)?;
    Ok(c.payload)
}
