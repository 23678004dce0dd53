//! Versioned checkpoint blocks: named little-endian f32 parameter arrays.
//!
//! Stream layout: magic "RDCK" | u32 version | u32 block count |
//! per block: u16 name length | name bytes | u64 element count | f32 data.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const CKPT_MAGIC: [u8; 4] = *b"RDCK";
pub const CKPT_VERSION: u32 = 1;

/// One named parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub values: Vec<f32>,
}

pub fn save_blocks<W: Write>(w: &mut W, blocks: &[ParamBlock]) -> Result<()> {
    w.write_all(&CKPT_MAGIC)?;
    w.write_all(&CKPT_VERSION.to_le_bytes())?;
    w.write_all(&(blocks.len() as u32).to_le_bytes())?;
    for b in blocks {
        let name = b.name.as_bytes();
        if name.len() > u16::MAX as usize {
            return Err(Error::Format(format!("block name too long: {}", b.name)));
        }
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(b.values.len() as u64).to_le_bytes())?;
        for v in &b.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_bytes<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated checkpoint".into())
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

pub fn load_blocks<R: Read>(r: &mut R) -> Result<Vec<ParamBlock>> {
    let magic = read_bytes(r, 4)?;
    if magic != CKPT_MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let version = u32::from_le_bytes(read_bytes(r, 4)?.try_into().unwrap());
    if version != CKPT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = u32::from_le_bytes(read_bytes(r, 4)?.try_into().unwrap()) as usize;
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(read_bytes(r, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(read_bytes(r, name_len)?)
            .map_err(|_| Error::Format("block name is not UTF-8".into()))?;
        let elems = u64::from_le_bytes(read_bytes(r, 8)?.try_into().unwrap()) as usize;
        let bytes = read_bytes(r, elems * 4)?;
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        blocks.push(ParamBlock { name, values });
    }
    Ok(blocks)
}
