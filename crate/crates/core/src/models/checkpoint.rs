//! Checkpoint container: a versioned binary file holding the model header and
//! its parameter arrays as little-endian doubles, plus a JSON sidecar with the
//! same header for inspection.

use super::{GetdModel, Model, ModelError, ModelKind, NCpModel, NTuckerModel};
use crate::tensor::{DenseTensor, Mat, TensorRing};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"GETDCKPT";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Header {
    pub format_version: u32,
    pub kind: ModelKind,
    pub arity: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub d_e: usize,
    pub d_r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reshape_shape: Option<Vec<usize>>,
}

fn header_for(model: &Model) -> Header {
    let (d_e, d_r, k, ranks, reshape_shape) = match model {
        Model::Getd(m) => (
            m.d_e(),
            m.d_r(),
            Some(m.k()),
            Some(m.ring().ranks()),
            Some(m.reshape_shape().to_vec()),
        ),
        Model::NTucker(m) => (m.d_e(), m.d_r(), None, None, None),
        Model::NCp(m) => (m.dim(), m.dim(), None, None, None),
    };
    Header {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        arity: model.arity(),
        n_entities: model.n_entities(),
        n_relations: model.n_relations(),
        d_e,
        d_r,
        k,
        ranks,
        reshape_shape,
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

/// Writes the binary checkpoint and its `<path>.json` sidecar.
pub fn save_checkpoint(model: &Model, path: &Path) -> Result<(), CheckpointError> {
    let header = header_for(model);
    let header_json = serde_json::to_vec(&header)?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(header_json.len() as u64).to_le_bytes())?;
    w.write_all(&header_json)?;
    for part in model.param_slices() {
        w.write_all(&(part.len() as u64).to_le_bytes())?;
        for &v in part {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;

    let sidecar = serde_json::to_string_pretty(&header)?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

/// Reads a checkpoint back into a model, validating shapes against the header.
pub fn load_checkpoint(path: &Path) -> Result<Model, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::Format("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let header_len = read_u64(&mut r)? as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;

    let model = match header.kind {
        ModelKind::Getd => {
            let k = header
                .k
                .ok_or_else(|| CheckpointError::Format("getd header missing k".into()))?;
            let ranks = header
                .ranks
                .clone()
                .ok_or_else(|| CheckpointError::Format("getd header missing ranks".into()))?;
            let shape = header.reshape_shape.clone().ok_or_else(|| {
                CheckpointError::Format("getd header missing reshape_shape".into())
            })?;
            if ranks.len() != k || shape.len() != k {
                return Err(CheckpointError::Format(
                    "ranks/reshape_shape length disagrees with k".into(),
                ));
            }
            let entities = read_mat(&mut r, header.n_entities, header.d_e)?;
            let relations = read_mat(&mut r, header.n_relations, header.d_r)?;
            let mut cores = Vec::with_capacity(k);
            for i in 0..k {
                let core_shape = vec![ranks[i], shape[i], ranks[(i + 1) % k]];
                cores.push(read_tensor(&mut r, core_shape)?);
            }
            let ring = TensorRing::new(cores).map_err(ModelError::from)?;
            Model::Getd(GetdModel::new(
                header.arity,
                entities,
                relations,
                ring,
                shape,
            )?)
        }
        ModelKind::NTucker => {
            let entities = read_mat(&mut r, header.n_entities, header.d_e)?;
            let relations = read_mat(&mut r, header.n_relations, header.d_r)?;
            let mut shape = vec![header.d_r];
            shape.extend(std::iter::repeat(header.d_e).take(header.arity));
            let core = read_tensor(&mut r, shape)?;
            Model::NTucker(NTuckerModel::new(header.arity, entities, relations, core)?)
        }
        ModelKind::NCp => {
            let relations = read_mat(&mut r, header.n_relations, header.d_r)?;
            let entities = (0..header.arity)
                .map(|_| read_mat(&mut r, header.n_entities, header.d_e))
                .collect::<Result<Vec<_>, _>>()?;
            Model::NCp(NCpModel::new(relations, entities)?)
        }
    };
    Ok(model)
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, CheckpointError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_array(r: &mut impl Read, expected: usize) -> Result<Vec<f64>, CheckpointError> {
    let len = read_u64(r)? as usize;
    if len != expected {
        return Err(CheckpointError::Format(format!(
            "parameter array holds {len} values, header implies {expected}"
        )));
    }
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_mat(r: &mut impl Read, rows: usize, cols: usize) -> Result<Mat, CheckpointError> {
    let data = read_array(r, rows * cols)?;
    Mat::from_vec(rows, cols, data)
        .map_err(|e| CheckpointError::Format(format!("embedding matrix: {e}")))
}

fn read_tensor(r: &mut impl Read, shape: Vec<usize>) -> Result<DenseTensor, CheckpointError> {
    let len = shape.iter().product();
    let data = read_array(r, len)?;
    DenseTensor::new(shape, data).map_err(|e| CheckpointError::Format(format!("core tensor: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{init_model, InitSpec};

    #[test]
    fn round_trip_preserves_every_parameter() {
        let dir = tempfile::tempdir().unwrap();
        for (kind, d_r) in [
            (ModelKind::Getd, 2),
            (ModelKind::NTucker, 2),
            (ModelKind::NCp, 4),
        ] {
            let model = init_model(&InitSpec {
                kind,
                arity: 3,
                n_entities: 5,
                n_relations: 2,
                d_e: 4,
                d_r,
                k: 4,
                ranks: vec![2, 3, 2, 3],
                seed: 99,
            })
            .unwrap();
            let path = dir.path().join(format!("{kind}.ckpt"));
            save_checkpoint(&model, &path).unwrap();
            let loaded = load_checkpoint(&path).unwrap();
            assert_eq!(model.param_slices(), loaded.param_slices());
            assert_eq!(model.kind(), loaded.kind());
            // sidecar parses as the same header
            let sidecar = std::fs::read_to_string(sidecar_path(&path)).unwrap();
            let h: Header = serde_json::from_str(&sidecar).unwrap();
            assert_eq!(h.kind, model.kind());
            assert_eq!(h.n_entities, 5);
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format(_))
        ));
    }
}
