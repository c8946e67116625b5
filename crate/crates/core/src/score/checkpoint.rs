// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Score-network checkpoints.
//!
//! Layout, little endian:
//!
//! ```text
//! magic     8 bytes  "QDSCORE1"
//! version   u32      1
//! d_in      u32
//! d_time    u32
//! hidden    u32
//! t_scale   f64
//! digest    32 bytes config digest
//! n_params  u64
//! params    n_params × f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::net::{ScoreNet, D_TIME};

pub const MAGIC: &[u8; 8] = b"QDSCORE1";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<T: Real, W: Write>(mut w: W, net: &ScoreNet<T>, digest: &[u8; 32]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.d_in() as u32).to_le_bytes())?;
    w.write_all(&(D_TIME as u32).to_le_bytes())?;
    w.write_all(&(net.hidden() as u32).to_le_bytes())?;
    w.write_all(&net.t_scale().as_f64().to_le_bytes())?;
    w.write_all(digest)?;
    w.write_all(&(net.n_params() as u64).to_le_bytes())?;
    for p in net.params() {
        w.write_all(&p.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Returns the network and the config digest it was written with.
pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<(ScoreNet<T>, [u8; 32])> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a score checkpoint".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_field = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut b4)?;
        Ok(u32::from_le_bytes(b4))
    };
    let version = u32_field(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let d_in = u32_field(&mut r)? as usize;
    let d_time = u32_field(&mut r)? as usize;
    let hidden = u32_field(&mut r)? as usize;
    if d_time != D_TIME {
        return Err(Error::Format(format!("checkpoint uses {d_time} time features, expected {D_TIME}")));
    }
    r.read_exact(&mut b8)?;
    let t_scale = f64::from_le_bytes(b8);
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let expected = ScoreNet::<T>::zeros(d_in.max(1), hidden.max(1), T::one())?.n_params();
    if n != expected || d_in == 0 || hidden == 0 {
        return Err(Error::Format(format!(
            "checkpoint holds {n} parameters, widths imply {expected}"
        )));
    }
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        params.push(T::lit(f64::from_le_bytes(b8)));
    }
    Ok((ScoreNet::from_params(d_in, hidden, T::lit(t_scale), params)?, digest))
}
