//! Map persistence.
//!
//! Binary format (little-endian): magic `RMAP`, version `u32 = 1`, width
//! `u32`, height `u32`, cell size `f64` meters, then `width * height` `f32`
//! values row-major. The CSV form is one line per grid row with
//! comma-separated decimal values; it carries no cell size, so imports take
//! one explicitly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::RelevanceMap;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"RMAP";
const VERSION: u32 = 1;

pub fn save_map(map: &RelevanceMap, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(map.width() as u32).to_le_bytes())?;
    w.write_all(&(map.height() as u32).to_le_bytes())?;
    w.write_all(&map.cell_size().to_le_bytes())?;
    for v in map.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<RelevanceMap> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad map magic, expected RMAP".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported map version {version}")));
    }
    let width = read_u32(&mut r)? as usize;
    let height = read_u32(&mut r)? as usize;
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let cell_size = f64::from_le_bytes(buf);
    let mut values = vec![0f32; width.checked_mul(height).ok_or_else(|| {
        Error::Format("map dimensions overflow".into())
    })?];
    let mut b4 = [0u8; 4];
    for v in values.iter_mut() {
        r.read_exact(&mut b4)?;
        *v = f32::from_le_bytes(b4);
    }
    RelevanceMap::new(width, height, cell_size, values)
}

pub fn save_map_csv(map: &RelevanceMap, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in 0..map.height() {
        let line: Vec<String> = (0..map.width())
            .map(|col| map.values()[row * map.width() + col].to_string())
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_map_csv(path: &Path, cell_size: f64) -> Result<RelevanceMap> {
    let r = BufReader::new(File::open(path)?);
    let mut values: Vec<f32> = Vec::new();
    let mut width = None;
    let mut height = 0usize;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f32> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f32>().map_err(|_| {
                    Error::Format(format!("bad value {tok:?} at line {}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format(format!(
                    "ragged csv: line {} has {} values, expected {w}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| Error::Format("empty map csv".into()))?;
    RelevanceMap::new(width, height, cell_size, values)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use crate::relevance::{generate_random_map, MapGenConfig};

    #[test]
    fn binary_roundtrip_is_exact() {
        let grid = GridSpec { width: 24, height: 18, cell_size: 12.5 };
        let map = generate_random_map(4, &MapGenConfig::default(), &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rmap");
        save_map(&map, &path).unwrap();
        let back = load_map(&path).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let grid = GridSpec { width: 9, height: 7, cell_size: 16.0 };
        let map = generate_random_map(8, &MapGenConfig::default(), &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        save_map_csv(&map, &path).unwrap();
        let back = load_map_csv(&path, 16.0).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.rmap");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(load_map(&path), Err(Error::Format(_))));

        let mut payload = Vec::new();
        payload.extend_from_slice(b"RMAP");
        payload.extend_from_slice(&9u32.to_le_bytes());
        std::fs::write(&path, &payload).unwrap();
        assert!(matches!(load_map(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.rmap");
        let mut payload = Vec::new();
        payload.extend_from_slice(b"RMAP");
        payload.extend_from_slice(&1u32.to_le_bytes());
        payload.extend_from_slice(&4u32.to_le_bytes());
        payload.extend_from_slice(&4u32.to_le_bytes());
        payload.extend_from_slice(&1.0f64.to_le_bytes());
        payload.extend_from_slice(&0.5f32.to_le_bytes()); // 1 of 16 values
        std::fs::write(&path, &payload).unwrap();
        assert!(load_map(&path).is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("range.rmap");
        let mut payload = Vec::new();
        payload.extend_from_slice(b"RMAP");
        payload.extend_from_slice(&1u32.to_le_bytes());
        payload.extend_from_slice(&1u32.to_le_bytes());
        payload.extend_from_slice(&1u32.to_le_bytes());
        payload.extend_from_slice(&1.0f64.to_le_bytes());
        payload.extend_from_slice(&1.5f32.to_le_bytes());
        std::fs::write(&path, &payload).unwrap();
        assert!(matches!(load_map(&path), Err(Error::Format(_))));
    }
}
