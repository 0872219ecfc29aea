//! Parameter file format.
//!
//! All integers little-endian:
//!
//! | offset | size | content                                                    |
//! |--------|------|------------------------------------------------------------|
//! | 0      | 4    | magic `PDNP`                                               |
//! | 4      | 4    | `u32` format version (currently 1)                         |
//! | 8      | 4    | `u32` header length `H`                                    |
//! | 12     | H    | UTF-8 JSON `{"widths":[..],"activation":"sin","seed":n\|null}` |
//! | 12+H   | 8    | `u64` parameter count `P`                                  |
//! | 20+H   | 8P   | `f64` parameters in flat (layer-major) order               |
//!
//! Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, NetworkParams};
use crate::autodiff::Activation;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PDNP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    widths: Vec<usize>,
    activation: Activation,
    seed: Option<u64>,
}

pub fn encode(params: &NetworkParams) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        widths: params.arch.widths.clone(),
        activation: params.arch.activation,
        seed: params.seed,
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(20 + header.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, field: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(Error::Load {
                field,
                reason: format!(
                    "file truncated: need {len} bytes at offset {}, {} available",
                    self.pos,
                    self.bytes.len().saturating_sub(self.pos)
                ),
            }),
        }
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn u64(&mut self, field: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<NetworkParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Load {
            field: "magic",
            reason: "not a parameter file".into(),
        });
    }
    let version = r.u32("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Incompatible {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let header_len = r.u32("header_len")? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len, "header")?).map_err(|e| Error::Load {
        field: "header",
        reason: e.to_string(),
    })?;
    let arch = Architecture {
        widths: header.widths,
        activation: header.activation,
    };
    arch.validate().map_err(|e| Error::Load {
        field: "header",
        reason: e.to_string(),
    })?;
    let count = r.u64("param_count")?;
    if count != arch.param_count() as u64 {
        return Err(Error::Load {
            field: "param_count",
            reason: format!("{count} parameters, architecture needs {}", arch.param_count()),
        });
    }
    let raw = r.take(8 * count as usize, "params")?;
    if r.pos != bytes.len() {
        return Err(Error::Load {
            field: "params",
            reason: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(NetworkParams::unflatten(values, &arch)?.with_seed(header.seed))
}

pub fn save_params(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(params)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_params(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
