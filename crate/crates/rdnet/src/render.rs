//! Map serialization and rendering: a small binary container for raw maps
//! and an 8-bit binary PGM (P5) heatmap writer.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::RdMap;

pub const MAP_MAGIC: [u8; 4] = *b"RDMP";
pub const MAP_VERSION: u32 = 1;

/// Writes a raw map: magic, version, N, M (u32 LE), then N*M f64 LE values
/// row-major.
pub fn write_map(map: &RdMap, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&MAP_MAGIC)?;
    w.write_all(&MAP_VERSION.to_le_bytes())?;
    w.write_all(&(map.n() as u32).to_le_bytes())?;
    w.write_all(&(map.m() as u32).to_le_bytes())?;
    for v in map.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_map(path: &Path) -> Result<RdMap> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut head = [0u8; 4];
    r.read_exact(&mut head).map_err(|_| Error::Format("truncated map file".into()))?;
    if head != MAP_MAGIC {
        return Err(Error::Format(format!("bad map magic {head:?}")));
    }
    let mut u32buf = [0u8; 4];
    let mut next_u32 = |r: &mut BufReader<std::fs::File>| -> Result<u32> {
        r.read_exact(&mut u32buf).map_err(|_| Error::Format("truncated map file".into()))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = next_u32(&mut r)?;
    if version != MAP_VERSION {
        return Err(Error::Format(format!("unsupported map version {version}")));
    }
    let n = next_u32(&mut r)? as usize;
    let m = next_u32(&mut r)? as usize;
    let mut values = Vec::with_capacity(n * m);
    let mut f64buf = [0u8; 8];
    for _ in 0..n * m {
        r.read_exact(&mut f64buf).map_err(|_| Error::Format("truncated map file".into()))?;
        values.push(f64::from_le_bytes(f64buf));
    }
    RdMap::from_values(n, m, values)
}

/// 8-bit grayscale quantization, scaled so the map maximum hits 255.
/// Non-positive and all-equal maps render black.
pub fn to_gray8(map: &RdMap) -> Vec<u8> {
    let max = map.max();
    if !(max > 0.0) || !max.is_finite() {
        return vec![0u8; map.values().len()];
    }
    map.values()
        .iter()
        .map(|v| {
            let x = (v / max).clamp(0.0, 1.0);
            (x * 255.0).round() as u8
        })
        .collect()
}

/// Writes a binary PGM (P5): N rows (range bins), M columns (velocity
/// bins), max-normalized.
pub fn write_pgm(map: &RdMap, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", map.m(), map.n())?;
    w.write_all(&to_gray8(map))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_file_roundtrip() {
        let map =
            RdMap::from_values(3, 2, vec![0.0, 1.5, -2.0, 1e-300, f64::MAX, 42.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.rdmp");
        write_map(&map, &path).unwrap();
        let back = read_map(&path).unwrap();
        assert_eq!(map.values(), back.values());
        assert_eq!((back.n(), back.m()), (3, 2));
    }

    #[test]
    fn map_file_rejects_corruption() {
        let map = RdMap::zeros(2, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.rdmp");
        write_map(&map, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_map(&path).is_err());
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_map(&path).is_err());
    }

    #[test]
    fn single_target_renders_single_white_pixel() {
        let mut map = RdMap::zeros(4, 4);
        map.set(2, 1, 239.79);
        let gray = to_gray8(&map);
        assert_eq!(gray.iter().filter(|&&g| g == 255).count(), 1);
        assert_eq!(gray[2 * 4 + 1], 255);
        assert_eq!(gray.iter().filter(|&&g| g == 0).count(), 15);
    }

    #[test]
    fn pgm_header_and_payload() {
        let mut map = RdMap::zeros(2, 3);
        map.set(0, 0, 1.0);
        map.set(1, 2, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        write_pgm(&map, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[255, 0, 0, 0, 0, 128]);
    }

    #[test]
    fn constant_map_renders_black() {
        let map = RdMap::zeros(2, 2);
        assert_eq!(to_gray8(&map), vec![0, 0, 0, 0]);
    }
}
