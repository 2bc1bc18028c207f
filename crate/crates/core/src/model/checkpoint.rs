//! Model checkpoint file: a 4-byte magic, a format version, a JSON header
//! with the configuration, vocabularies, and tensor shapes, then all
//! parameter values as little-endian f64, row major, in header order.
//! Round trips are bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::network::ParserNetwork;
use super::vocab::Vocab;
use super::ModelError;

const MAGIC: &[u8; 4] = b"SGPH";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    vocab: Vocab,
    params: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

pub fn save_model(net: &ParserNetwork, path: &Path) -> Result<(), ModelError> {
    let params = net.params();
    let header = Header {
        config: net.config.clone(),
        vocab: net.vocab.clone(),
        params: params
            .iter()
            .map(|p| TensorInfo {
                name: p.name.clone(),
                rows: p.value.nrows(),
                cols: p.value.ncols(),
            })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for p in params {
        for &v in p.value.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ParserNetwork, ModelError> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let mut len_bytes = [0u8; 8];
    input.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;
    let mut net = ParserNetwork::new(header.config, header.vocab, 0)?;
    {
        let mut params = net.params_mut();
        for info in &header.params {
            let p = params
                .iter_mut()
                .find(|p| p.name == info.name)
                .ok_or_else(|| {
                    ModelError::Checkpoint(format!("unknown parameter {}", info.name))
                })?;
            if p.value.dim() != (info.rows, info.cols) {
                return Err(ModelError::Checkpoint(format!(
                    "parameter {} has shape {:?}, file says ({}, {})",
                    info.name,
                    p.value.dim(),
                    info.rows,
                    info.cols
                )));
            }
            let mut buf = [0u8; 8];
            for v in p.value.iter_mut() {
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        if params.len() != header.params.len() {
            return Err(ModelError::Checkpoint(format!(
                "file holds {} tensors, network has {}",
                header.params.len(),
                params.len()
            )));
        }
    }
    let mut trailer = [0u8; 1];
    if input.read(&mut trailer)? != 0 {
        return Err(ModelError::Checkpoint("trailing bytes after tensors".into()));
    }
    Ok(net)
}
