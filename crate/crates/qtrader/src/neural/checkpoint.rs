//! Network checkpoints: a versioned JSON dump of the spec and every
//! parameter array in layer order.
//!
//! Floats are written in their shortest round-trip decimal form, so a
//! save→load cycle reproduces every parameter bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NetworkParams, NeuralError};

pub const FORMAT_TAG: &str = "qtrader.checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    network: NetworkParams,
}

/// Writes `params` to `path`. Refuses non-finite parameters; those are a
/// corrupt network, not a checkpoint.
pub fn save(path: impl AsRef<Path>, params: &NetworkParams) -> Result<(), NeuralError> {
    params.validate()?;
    let file = CheckpointFile {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        network: params.clone(),
    };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Reads a checkpoint, checking the format tag, version and shapes.
pub fn load(path: impl AsRef<Path>) -> Result<NetworkParams, NeuralError> {
    let raw = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&raw)?;
    if file.format != FORMAT_TAG {
        return Err(NeuralError::BadCheckpoint(format!(
            "format tag `{}`",
            file.format
        )));
    }
    if file.version != FORMAT_VERSION {
        return Err(NeuralError::UnsupportedVersion {
            found: file.version,
            expected: FORMAT_VERSION,
        });
    }
    file.network.validate()?;
    Ok(file.network)
}
