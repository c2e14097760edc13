//! Binary network checkpoints.
//!
//! Layout: `WMHCKPT\0`, u32 LE format version, u32 LE header length, a JSON
//! header (network spec plus name/kind/shape of every parameter in
//! registration order), then every parameter value as f64 LE in that order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arch::{Network, NetworkSpec};
use crate::diff::{ParamKind, Shape4};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"WMHCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    kind: ParamKind,
    shape: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    spec: NetworkSpec,
    params: Vec<ParamEntry>,
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format { kind: "checkpoint", reason: reason.into() }
}

pub fn encode(net: &Network) -> Result<Vec<u8>> {
    let header = Header {
        spec: net.spec,
        params: net
            .params
            .iter()
            .map(|p| ParamEntry { name: p.name.clone(), kind: p.kind, shape: p.value.shape().as_array() })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * net.params.element_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in net.params.iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Rebuild the network from its spec and load the stored values, checking
/// that the parameter table matches the rebuilt network exactly.
pub fn decode(bytes: &[u8]) -> Result<Network> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(format_err("missing magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let json_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let json_end = 16usize.checked_add(json_len).filter(|&e| e <= bytes.len()).ok_or_else(|| format_err("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[16..json_end])?;
    let mut net = Network::new(header.spec)?;
    if header.params.len() != net.params.len() {
        return Err(format_err(format!(
            "{} stored parameters, network has {}",
            header.params.len(),
            net.params.len()
        )));
    }
    let mut payload = bytes[json_end..].chunks_exact(8);
    let expected = net.params.element_count() * 8;
    if bytes.len() - json_end != expected {
        return Err(format_err(format!("payload is {} bytes, expected {expected}", bytes.len() - json_end)));
    }
    for (entry, p) in header.params.iter().zip(net.params.iter_mut()) {
        let [n, c, h, w] = entry.shape;
        if entry.name != p.name || entry.kind != p.kind || Shape4::new(n, c, h, w) != p.value.shape() {
            return Err(format_err(format!("parameter {} does not match the network layout", entry.name)));
        }
        for v in p.value.data_mut() {
            *v = f64::from_le_bytes(payload.next().expect("length checked").try_into().expect("8 bytes"));
        }
    }
    Ok(net)
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(net)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    decode(&fs::read(path)?)
}

/// SHA-256 of the encoded checkpoint, as lowercase hex.
pub fn fingerprint(net: &Network) -> Result<String> {
    Ok(Sha256::digest(encode(net)?).iter().map(|b| format!("{b:02x}")).collect())
}
