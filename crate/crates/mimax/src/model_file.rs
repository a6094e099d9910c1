//! Binary model container.
//!
//! Layout: the magic line `MIMAXPOS1\n`, one line of JSON header, the
//! parameter arrays as little-endian `f64` in manifest order, then the
//! vocabulary in its text format. Array offsets are byte offsets from the
//! start of the array section.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mimax_core::corpus::Vocab;
use mimax_core::model::{Hyper, Matrix, ModelParams};

use crate::io::{format_vocab, parse_vocab};
use crate::trainer::TrainConfig;
use crate::{Error, ModelFileError, Result};

pub const MAGIC: &[u8] = b"MIMAXPOS1\n";
const MAGIC_STEM: &[u8] = b"MIMAXPOS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: [usize; 2],
    offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    d: usize,
    #[serde(rename = "H")]
    h: usize,
    m: usize,
    vocab_size: usize,
    char_count: usize,
    arrays: Vec<ArrayEntry>,
    config: Option<TrainConfig>,
}

/// Everything stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub config: Option<TrainConfig>,
}

pub fn encode(params: &ModelParams, vocab: &Vocab, config: Option<&TrainConfig>) -> Vec<u8> {
    let hyper = params.hyper;
    let mut offset = 0;
    let arrays = params
        .arrays()
        .into_iter()
        .map(|(name, m)| {
            let e = ArrayEntry { name, shape: m.shape(), offset };
            offset += m.as_slice().len() * 8;
            e
        })
        .collect();
    let header = Header {
        d: hyper.dim,
        h: hyper.width,
        m: hyper.labels,
        vocab_size: hyper.vocab_size,
        char_count: hyper.char_count,
        arrays,
        config: config.cloned(),
    };
    let mut out = MAGIC.to_vec();
    out.extend(serde_json::to_vec(&header).expect("header is plain data"));
    out.push(b'\n');
    for (_, m) in params.arrays() {
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend(format_vocab(vocab).into_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<ModelFile, ModelFileError> {
    if !bytes.starts_with(MAGIC) {
        let line = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
        let found = String::from_utf8_lossy(&line[..line.len().min(32)]).into_owned();
        return Err(if bytes.starts_with(MAGIC_STEM) {
            ModelFileError::UnsupportedVersion { found }
        } else {
            ModelFileError::BadMagic { found }
        });
    }
    let rest = &bytes[MAGIC.len()..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(ModelFileError::Truncated { needed: bytes.len() + 1, available: bytes.len() })?;
    let header: Header =
        serde_json::from_slice(&rest[..end]).map_err(|e| ModelFileError::Header(e.to_string()))?;
    let hyper = Hyper {
        dim: header.d,
        width: header.h,
        labels: header.m,
        vocab_size: header.vocab_size,
        char_count: header.char_count,
    };
    let mut params = ModelParams::zeros(hyper).map_err(|e| ModelFileError::Header(e.to_string()))?;

    let data = &rest[end + 1..];
    let data_start = bytes.len() - data.len();
    let expected = params.arrays();
    if header.arrays.len() != expected.len() {
        return Err(ModelFileError::Manifest(format!(
            "{} arrays listed, {} expected",
            header.arrays.len(),
            expected.len()
        )));
    }
    let mut offset = 0;
    for (entry, (name, m)) in header.arrays.iter().zip(&expected) {
        if entry.name != *name || entry.shape != m.shape() || entry.offset != offset {
            return Err(ModelFileError::Manifest(format!(
                "entry {:?} {:?} at {} where {name:?} {:?} at {offset} was expected",
                entry.name,
                entry.shape,
                entry.offset,
                m.shape()
            )));
        }
        offset += m.as_slice().len() * 8;
    }
    drop(expected);
    if data.len() < offset {
        return Err(ModelFileError::Truncated { needed: data_start + offset, available: bytes.len() });
    }
    let mut chunks = data[..offset].chunks_exact(8);
    for (_, m) in params.arrays_mut() {
        fill(m, &mut chunks);
    }

    let text = std::str::from_utf8(&data[offset..]).map_err(|e| ModelFileError::Vocab(e.to_string()))?;
    let vocab = parse_vocab(text).map_err(|(line, msg)| ModelFileError::Vocab(format!("line {line}: {msg}")))?;
    if vocab.len() != header.vocab_size || vocab.char_count() != header.char_count {
        return Err(ModelFileError::Manifest(format!(
            "vocabulary has {} words and {} characters, header says {} and {}",
            vocab.len(),
            vocab.char_count(),
            header.vocab_size,
            header.char_count
        )));
    }
    Ok(ModelFile { params, vocab, config: header.config })
}

fn fill(m: &mut Matrix, chunks: &mut std::slice::ChunksExact<'_, u8>) {
    for v in m.as_mut_slice() {
        let b = chunks.next().expect("length checked against the manifest");
        *v = f64::from_le_bytes(b.try_into().expect("chunks of eight"));
    }
}

pub fn save_model(path: &Path, params: &ModelParams, vocab: &Vocab, config: Option<&TrainConfig>) -> Result<()> {
    std::fs::write(path, encode(params, vocab, config)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Model { path: path.into(), source })
}
