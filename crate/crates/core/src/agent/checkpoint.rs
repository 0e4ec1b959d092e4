//! Model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "HWRLCKPT"
//! version    u32      1
//! header_len u32      byte length of the JSON header
//! header     JSON     CheckpointMeta
//! count      u64      number of parameters
//! params     f64 × count, in ValueNetwork::params order
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentConfig, ValueNetwork};
use crate::env::RewardParams;
use crate::scalar::Real;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HWRLCKPT";
const VERSION: u32 = 1;

/// JSON header of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub sizes: Vec<usize>,
    pub activation: String,
    /// Scalar type the network was trained in.
    pub scalar: String,
    /// State/reward scheme tag (`s_m`, `s_m-x4`, `scheme-one`, ...).
    pub scheme: String,
    pub reward: RewardParams<f64>,
    pub agent: AgentConfig,
    pub seed: u64,
}

pub fn write_checkpoint<T: Real, W: Write>(
    mut w: W,
    net: &ValueNetwork<T>,
    meta: &CheckpointMeta,
) -> Result<()> {
    if meta.sizes != net.sizes() {
        return Err(Error::Checkpoint(
            "header sizes do not match the network".into(),
        ));
    }
    let header = serde_json::to_vec(meta)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let params = net.params();
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for p in params {
        w.write_all(&p.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<(ValueNetwork<T>, CheckpointMeta)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut header)?;
    let meta: CheckpointMeta = serde_json::from_slice(&header)?;
    let mut count = [0u8; 8];
    r.read_exact(&mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    let mut params = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        params.push(T::of(f64::from_le_bytes(buf)));
    }
    let net = ValueNetwork::from_params(&meta.sizes, &params).ok_or_else(|| {
        Error::Checkpoint(format!(
            "{count} parameters do not fit sizes {:?}",
            meta.sizes
        ))
    })?;
    Ok((net, meta))
}

pub fn save_checkpoint<T: Real>(
    path: impl AsRef<Path>,
    net: &ValueNetwork<T>,
    meta: &CheckpointMeta,
) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, net, meta)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(
    path: impl AsRef<Path>,
) -> Result<(ValueNetwork<T>, CheckpointMeta)> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}
