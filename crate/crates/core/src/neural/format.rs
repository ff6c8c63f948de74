//! Binary weight-file format shared with the trainer.
//!
//! ```text
//! "GBCF"                      magic, 4 bytes
//! u32 version                 little-endian, currently 1
//! u32 header_len
//! header_len bytes            UTF-8 JSON metadata
//! u32 tensor_count
//! tensor_count × {
//!     u32 name_len, name      UTF-8
//!     u32 rank
//!     rank × u64 dims
//!     prod(dims) × f32        row-major, little-endian
//!     u32 crc32               IEEE CRC over every preceding byte of this record
//! }
//! ```
//!
//! Header keys: `d_h`, `n`, `k` (two ints), `power`, `activation` (id),
//! `fe_wiring` (id), `ln_eps`, `ps_eps`, `beta` (N floats), `ps_stats`
//! (N `[mean, var]` pairs) and an optional free-form `training` object.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, WeightsError};
use crate::neural::layers::{Activation, Dense, EncoderHead, FeWiring, FeatureExtractor};
use crate::neural::weights::{tensor_specs, CodecWeights, PsStat};

pub const MAGIC: &[u8; 4] = b"GBCF";
pub const FORMAT_VERSION: u32 = 1;

fn default_ln_eps() -> f64 {
    1e-5
}

fn default_ps_eps() -> f64 {
    1e-6
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    d_h: usize,
    n: usize,
    k: [u32; 2],
    power: f64,
    activation: u8,
    fe_wiring: u8,
    #[serde(default = "default_ln_eps")]
    ln_eps: f64,
    #[serde(default = "default_ps_eps")]
    ps_eps: f64,
    // f32 values widened to f64 so the JSON text round-trips exactly.
    beta: Vec<f64>,
    ps_stats: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training: Option<serde_json::Value>,
}

pub fn to_bytes(weights: &CodecWeights<f32>) -> Vec<u8> {
    let header = Header {
        d_h: weights.d_h,
        n: weights.n,
        k: weights.k,
        power: weights.power,
        activation: weights.activation.id(),
        fe_wiring: weights.fe_wiring.id(),
        ln_eps: weights.ln_eps,
        ps_eps: weights.ps_eps,
        beta: weights.beta.iter().map(|&b| f64::from(b)).collect(),
        ps_stats: weights
            .ps_stats
            .iter()
            .map(|s| [f64::from(s.mean), f64::from(s.var)])
            .collect(),
        training: weights.training.clone(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let tensors = weights.tensor_data();
    let shapes = weights.tensor_specs();

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for ((name, data), (_, dims)) in tensors.into_iter().zip(shapes) {
        let start = out.len();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in &dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WeightsError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| WeightsError::Truncated(what.to_string()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, WeightsError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

struct RawTensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

fn read_tensor(r: &mut Reader<'_>, index: usize) -> Result<(String, RawTensor), WeightsError> {
    let start = r.pos;
    let anon = format!("tensor #{index}");
    let name_len = r.u32(&anon)? as usize;
    let name = std::str::from_utf8(r.take(name_len, &anon)?)
        .map_err(|_| WeightsError::Invalid(format!("{anon}: name is not UTF-8")))?
        .to_string();
    let ctx = format!("tensor `{name}`");
    let rank = r.u32(&ctx)? as usize;
    if rank > 8 {
        return Err(WeightsError::Invalid(format!(
            "{ctx}: rank {rank} too large"
        )));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(usize::try_from(r.u64(&ctx)?).map_err(|_| WeightsError::Truncated(ctx.clone()))?);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| WeightsError::Truncated(ctx.clone()))?;
    let bytes = r.take(count, &ctx)?;
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let body_end = r.pos;
    let crc = r.u32(&ctx)?;
    if crc32fast::hash(&r.buf[start..body_end]) != crc {
        return Err(WeightsError::Checksum(name));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(WeightsError::NonFinite(name));
    }
    Ok((name, RawTensor { dims, data }))
}

/// Decodes and fully validates a weight file image.
pub fn from_bytes(bytes: &[u8]) -> Result<CodecWeights<f32>, WeightsError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(WeightsError::UnsupportedVersion(version));
    }
    let header_len = r.u32("header")? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len, "header")?)
        .map_err(|e| WeightsError::Header(e.to_string()))?;
    let header_floats = header
        .beta
        .iter()
        .chain(header.ps_stats.iter().flatten())
        .chain([&header.power, &header.ln_eps, &header.ps_eps]);
    if header_floats.into_iter().any(|v| !v.is_finite()) {
        return Err(WeightsError::Header("non-finite number".into()));
    }
    let activation = Activation::from_id(header.activation).ok_or_else(|| {
        WeightsError::Header(format!("unknown activation id {}", header.activation))
    })?;
    let fe_wiring = FeWiring::from_id(header.fe_wiring).ok_or_else(|| {
        WeightsError::Header(format!("unknown FE wiring id {}", header.fe_wiring))
    })?;
    if header.n < 2 || header.d_h == 0 || header.k.iter().any(|&k| k == 0 || k > 24) {
        return Err(WeightsError::Header(format!(
            "invalid dimensions d_h={} n={} k={:?}",
            header.d_h, header.n, header.k
        )));
    }

    let count = r.u32("tensor count")? as usize;
    let mut tensors: HashMap<String, RawTensor> = HashMap::with_capacity(count);
    for index in 0..count {
        let (name, tensor) = read_tensor(&mut r, index)?;
        if tensors.insert(name.clone(), tensor).is_some() {
            return Err(WeightsError::Duplicate(name));
        }
    }
    if r.pos != bytes.len() {
        return Err(WeightsError::TrailingBytes);
    }

    let classes = [1usize << header.k[0], 1usize << header.k[1]];
    let specs = tensor_specs(header.d_h, header.n, classes);
    let mut ordered = Vec::with_capacity(specs.len());
    for (name, expected) in &specs {
        let t = tensors
            .remove(name)
            .ok_or_else(|| WeightsError::Missing(name.clone()))?;
        if &t.dims != expected {
            return Err(WeightsError::Shape {
                tensor: name.clone(),
                expected: expected.clone(),
                found: t.dims,
            });
        }
        ordered.push(t.data);
    }
    if let Some(extra) = tensors.into_keys().min() {
        return Err(WeightsError::Unexpected(extra));
    }

    let d_h = header.d_h;
    let mut it = ordered.into_iter();
    let fe_enc = take_fe(&mut it, 3 * (header.n - 1), d_h);
    let mlp_enc = EncoderHead {
        fc1: take_dense(&mut it, d_h, d_h),
        fc2: take_dense(&mut it, d_h, 1),
    };
    let fe_dec1 = take_fe(&mut it, header.n, d_h);
    let mlp_dec1 = take_dense(&mut it, d_h, classes[0]);
    let fe_dec2 = take_fe(&mut it, header.n, d_h);
    let mlp_dec2 = take_dense(&mut it, d_h, classes[1]);

    let weights = CodecWeights {
        d_h,
        n: header.n,
        k: header.k,
        power: header.power,
        activation,
        fe_wiring,
        ln_eps: header.ln_eps,
        ps_eps: header.ps_eps,
        beta: header.beta.iter().map(|&b| b as f32).collect(),
        ps_stats: header
            .ps_stats
            .iter()
            .map(|&[mean, var]| PsStat {
                mean: mean as f32,
                var: var as f32,
            })
            .collect(),
        fe_enc,
        mlp_enc,
        fe_dec: [fe_dec1, fe_dec2],
        mlp_dec: [mlp_dec1, mlp_dec2],
        training: header.training,
    };
    weights.validate()?;
    Ok(weights)
}

fn take_dense(
    it: &mut impl Iterator<Item = Vec<f32>>,
    inputs: usize,
    outputs: usize,
) -> Dense<f32> {
    let weight = it.next().expect("tensor count checked");
    let bias = it.next().expect("tensor count checked");
    Dense::new(inputs, outputs, weight, bias).expect("shape checked")
}

fn take_fe(
    it: &mut impl Iterator<Item = Vec<f32>>,
    inputs: usize,
    d_h: usize,
) -> FeatureExtractor<f32> {
    let fc1 = take_dense(it, inputs, d_h);
    let fc2 = take_dense(it, d_h, d_h);
    FeatureExtractor {
        fc1,
        fc2,
        norm_gain: it.next().expect("tensor count checked"),
        norm_bias: it.next().expect("tensor count checked"),
    }
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<CodecWeights<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes).map_err(|e| Error::WeightFile {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Validates and writes `weights`.
pub fn save_weights(weights: &CodecWeights<f32>, path: impl AsRef<Path>) -> Result<()> {
    weights.validate()?;
    let path = path.as_ref();
    std::fs::write(path, to_bytes(weights)).map_err(|e| Error::io(path, e))
}
