// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Binary path file shared by forward ensembles and reverse denoising runs.
//!
//! Layout, all little endian:
//!
//! ```text
//! magic        8 bytes  "QDTRAJ01"
//! version      u32      1
//! direction    u8       0 = forward, 1 = reverse
//! reserved     3 bytes
//! n_qubits     u32      0 for plain real-vector paths
//! width        u32      doubles per point, excluding time and norm
//! n_paths      u64
//! n_points     u64      recorded points per path
//! seed         u64
//! digest       32 bytes config digest
//! per path:    id u64, then n_points × (time f64, width × f64, norm f64)
//! ```
//!
//! Quantum states are stored with `(re, im)` interleaved per amplitude.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QDTRAJ01";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathHeader {
    pub direction: Direction,
    pub n_qubits: u32,
    pub width: u32,
    pub n_paths: u64,
    pub n_points: u64,
    pub seed: u64,
    pub digest: [u8; 32],
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub id: u64,
    pub times: Vec<f64>,
    /// `n_points × width` values, row-major by point.
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Parses a 64-character hex digest; anything else maps to zeros.
pub fn digest_bytes(hex_digest: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    if let Ok(bytes) = hex::decode(hex_digest) {
        if bytes.len() == 32 {
            out.copy_from_slice(&bytes);
        }
    }
    out
}

pub fn write_paths<W: Write>(mut w: W, header: &PathHeader, paths: &[PathRecord]) -> Result<()> {
    if paths.len() as u64 != header.n_paths {
        return Err(Error::Format(format!(
            "header announces {} paths, got {}",
            header.n_paths,
            paths.len()
        )));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let dir = match header.direction {
        Direction::Forward => 0u8,
        Direction::Reverse => 1u8,
    };
    w.write_all(&[dir, 0, 0, 0])?;
    w.write_all(&header.n_qubits.to_le_bytes())?;
    w.write_all(&header.width.to_le_bytes())?;
    w.write_all(&header.n_paths.to_le_bytes())?;
    w.write_all(&header.n_points.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    w.write_all(&header.digest)?;
    let width = header.width as usize;
    let n_points = header.n_points as usize;
    for p in paths {
        if p.times.len() != n_points || p.norms.len() != n_points || p.values.len() != n_points * width {
            return Err(Error::Format(format!("path {} has inconsistent lengths", p.id)));
        }
        w.write_all(&p.id.to_le_bytes())?;
        for k in 0..n_points {
            w.write_all(&p.times[k].to_le_bytes())?;
            for v in &p.values[k * width..(k + 1) * width] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&p.norms[k].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_paths<R: Read>(mut r: R) -> Result<(PathHeader, Vec<PathRecord>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a path file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported path file version {version}")));
    }
    let mut flags = [0u8; 4];
    r.read_exact(&mut flags)?;
    let direction = match flags[0] {
        0 => Direction::Forward,
        1 => Direction::Reverse,
        other => return Err(Error::Format(format!("bad direction flag {other}"))),
    };
    let n_qubits = read_u32(&mut r)?;
    let width = read_u32(&mut r)?;
    let n_paths = read_u64(&mut r)?;
    let n_points = read_u64(&mut r)?;
    let seed = read_u64(&mut r)?;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    let header = PathHeader {
        direction,
        n_qubits,
        width,
        n_paths,
        n_points,
        seed,
        digest,
    };
    let (w, np) = (width as usize, n_points as usize);
    let mut paths = Vec::with_capacity(n_paths.min(1 << 20) as usize);
    for _ in 0..n_paths {
        let id = read_u64(&mut r)?;
        let mut times = Vec::with_capacity(np);
        let mut values = Vec::with_capacity(np * w);
        let mut norms = Vec::with_capacity(np);
        for _ in 0..np {
            times.push(read_f64(&mut r)?);
            for _ in 0..w {
                values.push(read_f64(&mut r)?);
            }
            norms.push(read_f64(&mut r)?);
        }
        paths.push(PathRecord {
            id,
            times,
            values,
            norms,
        });
    }
    Ok((header, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let header = PathHeader {
            direction: Direction::Reverse,
            n_qubits: 0,
            width: 2,
            n_paths: 2,
            n_points: 3,
            seed: 99,
            digest: digest_bytes(&"ab".repeat(32)),
        };
        let paths: Vec<_> = (0..2)
            .map(|id| PathRecord {
                id,
                times: vec![0.0, 0.5, 1.0],
                values: (0..6).map(|k| (k + 10 * id) as f64).collect(),
                norms: vec![1.0, 2.0, 3.0],
            })
            .collect();
        let mut buf = Vec::new();
        write_paths(&mut buf, &header, &paths).unwrap();
        assert_eq!(buf.len(), 80 + 2 * (8 + 3 * 4 * 8));
        let (h, p) = read_paths(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(p, paths);
        buf[0] = b'X';
        assert!(read_paths(buf.as_slice()).is_err());
    }
}
