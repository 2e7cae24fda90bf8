//! Binary model file format.
//!
//! Layout: magic `LID1` · format version `u32` LE · header length `u64` LE ·
//! UTF-8 JSON header (hyperparameters, language codes in class order,
//! vocabulary characters in index order) · parameter blob: every tensor as
//! `f32` LE in canonical order, row-major.

use super::{HyperParams, LstmDirectionParams, ModelError, ModelParams};
use crate::corpus::{LanguageSet, Vocabulary};
use crate::float::Real;
use crate::fsutil::write_atomic;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"LID1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    hyper: HyperParams,
    languages: Vec<String>,
    vocab_chars: String,
}

/// Serializes a model. Tensors are written as `f32` regardless of the
/// in-memory float type. The write is atomic.
pub fn save_model<F: Real>(params: &ModelParams<F>, path: &Path) -> Result<(), ModelError> {
    let header = Header {
        hyper: params.hyper,
        languages: params.langs.codes().to_vec(),
        vocab_chars: params.vocab.chars().iter().collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| ModelError::CorruptPayload(format!("header serialization: {e}")))?;

    write_atomic(path, |w| {
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        w.write_all(&header_bytes)?;
        let mut buf: Vec<u8> = Vec::new();
        for (_, slice) in params.tensor_slices() {
            buf.clear();
            buf.reserve(slice.len() * 4);
            for &x in slice {
                buf.extend_from_slice(&(x.to_f64() as f32).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    })
    .map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates a model file: magic, version, header consistency,
/// exact payload length, and finiteness of every parameter.
pub fn load_model(path: &Path) -> Result<ModelParams<f32>, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let corrupt = |msg: &str| ModelError::CorruptPayload(msg.to_string());

    if bytes.len() < 16 {
        return Err(if bytes.get(..4) == Some(&MAGIC[..]) {
            corrupt("file truncated before header")
        } else {
            ModelError::BadMagic
        });
    }
    if bytes[..4] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if header_len > body.len() {
        return Err(corrupt("declared header length exceeds file size"));
    }
    let header: Header = serde_json::from_slice(&body[..header_len])
        .map_err(|e| ModelError::CorruptPayload(format!("header JSON: {e}")))?;

    header
        .hyper
        .validate()
        .map_err(|e| ModelError::CorruptPayload(format!("header hyperparameters: {e}")))?;
    let langs = LanguageSet::new(header.languages.clone())
        .map_err(|e| ModelError::CorruptPayload(format!("header languages: {e}")))?;
    let vocab = Vocabulary::from_chars(header.vocab_chars.chars().collect())
        .map_err(|e| ModelError::CorruptPayload(format!("header vocabulary: {e}")))?;
    let hyper = header.hyper;
    if hyper.vocab_size != vocab.size() {
        return Err(corrupt("vocab_size does not match vocabulary length"));
    }
    if hyper.num_langs != langs.len() {
        return Err(corrupt("num_langs does not match language list"));
    }

    let blob = &body[header_len..];
    let (d, h, k, v) = (hyper.embed_dim, hyper.hidden_dim, hyper.num_langs, hyper.vocab_size);
    let dir_len = |input: usize| 4 * h * input + 4 * h * h + 4 * h;
    let expected = v * d + 2 * dir_len(d) + 2 * dir_len(2 * h) + k * 2 * h + k;
    if blob.len() != expected * 4 {
        return Err(corrupt(&format!(
            "parameter blob has {} bytes, expected {}",
            blob.len(),
            expected * 4
        )));
    }
    let mut values = Vec::with_capacity(expected);
    for chunk in blob.chunks_exact(4) {
        let x = f32::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err(corrupt("non-finite parameter value"));
        }
        values.push(x);
    }

    let mut offset = 0usize;
    let embedding = take_matrix(&mut offset, &values, v, d);
    let layer1_fwd = take_direction(&mut offset, &values, d, h);
    let layer1_bwd = take_direction(&mut offset, &values, d, h);
    let layer2_fwd = take_direction(&mut offset, &values, 2 * h, h);
    let layer2_bwd = take_direction(&mut offset, &values, 2 * h, h);
    let head_w = take_matrix(&mut offset, &values, k, 2 * h);
    let head_b = take_vector(&mut offset, &values, k);
    debug_assert_eq!(offset, expected);

    Ok(ModelParams {
        embedding,
        layer1_fwd,
        layer1_bwd,
        layer2_fwd,
        layer2_bwd,
        head_w,
        head_b,
        vocab,
        langs,
        hyper,
    })
}

fn take_matrix(offset: &mut usize, values: &[f32], rows: usize, cols: usize) -> Array2<f32> {
    let slice = &values[*offset..*offset + rows * cols];
    *offset += rows * cols;
    Array2::from_shape_vec((rows, cols), slice.to_vec()).expect("row-major blob")
}

fn take_vector(offset: &mut usize, values: &[f32], len: usize) -> Array1<f32> {
    let slice = &values[*offset..*offset + len];
    *offset += len;
    Array1::from_vec(slice.to_vec())
}

fn take_direction(
    offset: &mut usize,
    values: &[f32],
    input_dim: usize,
    hidden_dim: usize,
) -> LstmDirectionParams<f32> {
    let w = take_matrix(offset, values, 4 * hidden_dim, input_dim);
    let u = take_matrix(offset, values, 4 * hidden_dim, hidden_dim);
    let b = take_vector(offset, values, 4 * hidden_dim);
    LstmDirectionParams { w, u, b }
}
