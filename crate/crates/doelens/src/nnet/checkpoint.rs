//! Versioned binary checkpoint: a JSON header describing the architecture,
//! the training-config snapshot, and a tensor directory, followed by raw
//! little-endian f32 data in directory order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ArchSpec, ModelParams};
use super::TrainConfig;
use crate::error::{DoeError, Result};

const MAGIC: &[u8; 4] = b"DLCK";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: ArchSpec,
    config: Option<TrainConfig>,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

pub fn save_checkpoint(
    params: &ModelParams<f32>,
    config: Option<&TrainConfig>,
    path: &Path,
) -> Result<()> {
    let tensors = params.state_tensors();
    let header = Header {
        arch: params.arch.clone(),
        config: config.cloned(),
        tensors: tensors
            .iter()
            .map(|t| TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut file = fs::File::create(path)?;
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for t in &tensors {
        let mut bytes = Vec::with_capacity(t.data.len() * 4);
        for v in t.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&bytes)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams<f32>, Option<TrainConfig>)> {
    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| DoeError::Checkpoint("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(DoeError::Checkpoint("bad magic; not a checkpoint".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(DoeError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;

    let mut params = ModelParams::<f32>::init(header.arch, 0)?;
    for entry in &header.tensors {
        let count: usize = entry.shape.iter().product();
        let mut bytes = vec![0u8; count * 4];
        file.read_exact(&mut bytes).map_err(|_| {
            DoeError::Checkpoint(format!("truncated tensor data for '{}'", entry.name))
        })?;
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        params.load_tensor(&entry.name, &data)?;
    }
    Ok((params, header.config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{ArchSpec, Mode};
    use ndarray::Array4;

    #[test]
    fn checkpoint_round_trip_preserves_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = ModelParams::<f32>::init(ArchSpec::conv4(0.25), 17).unwrap();
        let config = TrainConfig {
            seed: 17,
            ..TrainConfig::default()
        };
        save_checkpoint(&params, Some(&config), &path).unwrap();
        let (loaded, cfg) = load_checkpoint(&path).unwrap();
        assert_eq!(cfg.unwrap().seed, 17);

        let x = Array4::from_shape_fn((2, 1, 64, 64), |(_, _, y, xx)| {
            ((y * 13 + xx * 7) % 29) as f32 / 29.0
        });
        let a = params.forward(&x, Mode::Eval).unwrap();
        let b = loaded.forward(&x, Mode::Eval).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn rejects_garbage_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
