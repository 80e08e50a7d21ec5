//! Parameter checkpoints.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"PCLCKPT1"
//! 8       4     u32    header length H in bytes
//! 12      H     UTF-8 JSON header:
//!                 {"version":1,
//!                  "segments":[{"name":..,"shape":[..],"offset":..},..],
//!                  "meta":{"key":"value",..}}
//! 12+H    8     u64    value count V (equals the layout length)
//! 20+H    8·V   f64    parameter values, IEEE-754 little-endian
//! ```
//!
//! `meta` keys are sorted, so identical parameters and metadata always
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layout, ParamVector, Segment};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PCLCKPT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParamVector,
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    segments: Vec<Segment>,
    meta: BTreeMap<String, String>,
}

pub fn encode_checkpoint(params: &ParamVector, meta: &BTreeMap<String, String>) -> Vec<u8> {
    let header = Header {
        version: 1,
        segments: params.layout().segments().to_vec(),
        meta: meta.clone(),
    };
    let header = serde_json::to_vec(&header).expect("header serialization cannot fail");
    let mut out = Vec::with_capacity(20 + header.len() + 8 * params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cursor = bytes;
    let mut magic = [0u8; 8];
    read_exact(&mut cursor, &mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len4 = [0u8; 4];
    read_exact(&mut cursor, &mut len4)?;
    let header_len = u32::from_le_bytes(len4) as usize;
    if cursor.len() < header_len {
        return Err(Error::Format("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&cursor[..header_len])
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    cursor = &cursor[header_len..];
    if header.version != 1 {
        return Err(Error::Format(format!("unsupported version {}", header.version)));
    }
    let layout = Layout::from_segments(header.segments)?;

    let mut len8 = [0u8; 8];
    read_exact(&mut cursor, &mut len8)?;
    let count = u64::from_le_bytes(len8) as usize;
    if count != layout.len() {
        return Err(Error::Format(format!(
            "header layout has {} values, body declares {count}",
            layout.len()
        )));
    }
    if cursor.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} value bytes, found {}",
            count * 8,
            cursor.len()
        )));
    }
    let values = cursor
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint {
        params: ParamVector::from_values(layout, values)?,
        meta: header.meta,
    })
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    cursor
        .read_exact(buf)
        .map_err(|_| Error::Format("unexpected end of checkpoint".into()))
}

pub fn write_checkpoint(
    path: &Path,
    params: &ParamVector,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let bytes = encode_checkpoint(params, meta);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
