//! Binary dataset container.
//!
//! Layout (all little-endian):
//!   header:  magic "RDDS" | u32 version | u32 N | u32 M | u64 record count
//!   record:  I plane (N*M f32, row-major) | Q plane | GT plane | f32 snr_db
//!            | u32 n_targets | f64 phi | per target (f64 b, f64 f1, f64 f2)

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::RdMap;
use crate::sim::{ChannelEstimate, Target, TargetScene};

use super::DatasetRecord;

pub const MAGIC: [u8; 4] = *b"RDDS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub record_count: u64,
}

fn read_exact<R: Read, const K: usize>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated dataset file".into())
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact::<R, 4>(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    Ok(f32::from_le_bytes(read_exact::<R, 4>(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_plane<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated record".into())
        } else {
            Error::Io(e)
        }
    })?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn write_plane<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Streaming reader; yields one record at a time with O(1) memory.
pub struct DatasetReader<R: Read> {
    header: DatasetHeader,
    inner: R,
    remaining: u64,
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        DatasetReader::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DatasetReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let magic = read_exact::<R, 4>(&mut inner)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}, expected \"RDDS\"")));
        }
        let version = read_u32(&mut inner)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut inner)? as usize;
        let m = read_u32(&mut inner)? as usize;
        if n == 0 || m == 0 {
            return Err(Error::Format(format!("degenerate dimensions {n}x{m}")));
        }
        let record_count = read_u64(&mut inner)?;
        Ok(DatasetReader { header: DatasetHeader { version, n, m, record_count }, inner, remaining: record_count })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    fn read_record(&mut self) -> Result<DatasetRecord> {
        let (n, m) = (self.header.n, self.header.m);
        let i_plane = read_plane(&mut self.inner, n * m)?;
        let q_plane = read_plane(&mut self.inner, n * m)?;
        let gt_values = read_plane(&mut self.inner, n * m)?;
        let snr_db = read_f32(&mut self.inner)? as f64;
        let n_targets = read_u32(&mut self.inner)? as usize;
        if n_targets > n * m {
            return Err(Error::Format(format!("implausible target count {n_targets}")));
        }
        let phi = read_f64(&mut self.inner)?;
        let mut targets = Vec::with_capacity(n_targets);
        for _ in 0..n_targets {
            let b = read_f64(&mut self.inner)?;
            let f1 = read_f64(&mut self.inner)?;
            let f2 = read_f64(&mut self.inner)?;
            targets.push(Target { b, f1, f2 });
        }
        Ok(DatasetRecord {
            channel: ChannelEstimate::from_planes(n, m, i_plane, q_plane, snr_db)?,
            gt: RdMap::from_values(n, m, gt_values)?,
            snr_db,
            scene: TargetScene { targets, phi },
        })
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.read_record())
    }
}

/// Writes all records to `path`. Every record must share the dimensions of
/// the first one.
pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let (n, m) = records
        .first()
        .map(|r| (r.channel.n(), r.channel.m()))
        .unwrap_or((1, 1));
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        if r.channel.n() != n || r.channel.m() != m || r.gt.n() != n || r.gt.m() != m {
            return Err(Error::Shape(format!(
                "record dimensions {}x{} do not match file dimensions {}x{}",
                r.channel.n(),
                r.channel.m(),
                n,
                m
            )));
        }
        write_plane(&mut w, r.channel.i_plane())?;
        write_plane(&mut w, r.channel.q_plane())?;
        write_plane(&mut w, r.gt.values())?;
        w.write_all(&(r.snr_db as f32).to_le_bytes())?;
        w.write_all(&(r.scene.targets.len() as u32).to_le_bytes())?;
        w.write_all(&r.scene.phi.to_le_bytes())?;
        for t in &r.scene.targets {
            w.write_all(&t.b.to_le_bytes())?;
            w.write_all(&t.f1.to_le_bytes())?;
            w.write_all(&t.f2.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a whole dataset file into memory.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    DatasetReader::open(path)?.collect()
}
