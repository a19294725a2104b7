//! Checkpoint files: a single-line JSON manifest (names, shapes, seed,
//! format version) followed by the raw little-endian f64 payload of
//! every entry, concatenated in manifest order. Round-trips bit-exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::array::{Array, ParameterSet};

pub const CHECKPOINT_FORMAT: &str = "adapam-ckpt-1";

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    seed: u64,
    entries: Vec<ManifestEntry>,
}

pub fn save_checkpoint(path: &Path, params: &ParameterSet) -> Result<()> {
    let manifest = Manifest {
        format: CHECKPOINT_FORMAT.to_string(),
        seed: params.seed(),
        entries: params
            .iter()
            .map(|(name, array)| ManifestEntry {
                name: name.to_string(),
                shape: array.shape().to_vec(),
            })
            .collect(),
    };
    let mut file = fs::File::create(path)?;
    let header = serde_json::to_string(&manifest)?;
    file.write_all(header.as_bytes())?;
    file.write_all(b"\n")?;
    for (_, array) in params.iter() {
        for value in array.data() {
            file.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParameterSet> {
    let bytes = fs::read(path)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Integrity(format!("{}: missing manifest line", path.display())))?;
    let manifest: Manifest = serde_json::from_slice(&bytes[..newline])?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(Error::Integrity(format!(
            "{}: unsupported checkpoint format '{}'",
            path.display(),
            manifest.format
        )));
    }
    let mut payload = &bytes[newline + 1..];
    let mut params = ParameterSet::new(manifest.seed);
    for entry in &manifest.entries {
        let count: usize = entry.shape.iter().product();
        let want = count * 8;
        if payload.len() < want {
            return Err(Error::Integrity(format!(
                "{}: truncated payload for entry '{}'",
                path.display(),
                entry.name
            )));
        }
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        let mut reader = &payload[..want];
        for _ in 0..count {
            reader.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        payload = &payload[want..];
        params.insert(entry.name.clone(), Array::new(entry.shape.clone(), data)?)?;
    }
    if !payload.is_empty() {
        return Err(Error::Integrity(format!(
            "{}: {} trailing bytes after payload",
            path.display(),
            payload.len()
        )));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::mlp::{mlp_init, MlpSpec};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let params = mlp_init(&MlpSpec::tanh(vec![4, 8, 5]).unwrap(), 31).unwrap();
        save_checkpoint(&path, &params).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert!(loaded.bits_eq(&params));
        assert_eq!(loaded.seed(), 31);
    }

    #[test]
    fn save_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        let params = mlp_init(&MlpSpec::tanh(vec![3, 3]).unwrap(), 1).unwrap();
        save_checkpoint(&a, &params).unwrap();
        save_checkpoint(&b, &params).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn corrupted_payload_is_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let params = mlp_init(&MlpSpec::tanh(vec![2, 2]).unwrap(), 7).unwrap();
        save_checkpoint(&path, &params).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::Integrity(_))
        ));
    }
}
