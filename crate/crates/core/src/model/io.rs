//! Binary channel cache format.
//!
//! ```text
//! magic      8 bytes  "HBFCHAN1"
//! header_len u32 LE   length of the JSON header in bytes
//! header     JSON     {"num_users", "num_rx", "num_tx", "num_paths", "seed",
//!                      "layout": "column-major", "dtype": "complex128-le"}
//! matrices   K blocks of M*N complex entries, column-major, each entry
//!            written as re then im (f64 LE)
//! paths      K*L records of gain.re, gain.im, arrival, departure (f64 LE)
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};

use super::{ChannelSet, Path, PathParams};

const MAGIC: &[u8; 8] = b"HBFCHAN1";
const LAYOUT: &str = "column-major";
const DTYPE: &str = "complex128-le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelHeader {
    pub num_users: usize,
    pub num_rx: usize,
    pub num_tx: usize,
    pub num_paths: usize,
    pub seed: u64,
    pub layout: String,
    pub dtype: String,
}

pub fn write_channels<W: Write>(mut w: W, ch: &ChannelSet) -> Result<()> {
    let (num_rx, num_tx) = ch.h.first().map(|h| h.shape()).unwrap_or((0, 0));
    let header = ChannelHeader {
        num_users: ch.h.len(),
        num_rx,
        num_tx,
        num_paths: ch.params.num_paths,
        seed: ch.seed,
        layout: LAYOUT.into(),
        dtype: DTYPE.into(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for h in &ch.h {
        // nalgebra storage is column-major
        for z in h.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    for user in &ch.params.paths {
        for p in user {
            for v in [p.gain.re, p.gain.im, p.arrival, p.departure] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::ChannelFormat(format!("truncated body: {e}")))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_channels<R: Read>(mut r: R) -> Result<ChannelSet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ChannelFormat("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: ChannelHeader = serde_json::from_slice(&json)?;
    if header.layout != LAYOUT || header.dtype != DTYPE {
        return Err(Error::ChannelFormat(format!("unsupported layout {} / dtype {}", header.layout, header.dtype)));
    }
    let mut h = Vec::with_capacity(header.num_users);
    for _ in 0..header.num_users {
        let mut data = Vec::with_capacity(header.num_rx * header.num_tx);
        for _ in 0..header.num_rx * header.num_tx {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            data.push(c64(re, im));
        }
        h.push(CMat::from_vec(header.num_rx, header.num_tx, data));
    }
    let mut paths = Vec::with_capacity(header.num_users);
    for _ in 0..header.num_users {
        let mut user = Vec::with_capacity(header.num_paths);
        for _ in 0..header.num_paths {
            let gain = c64(read_f64(&mut r)?, read_f64(&mut r)?);
            let arrival = read_f64(&mut r)?;
            let departure = read_f64(&mut r)?;
            user.push(Path { gain, arrival, departure });
        }
        paths.push(user);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::ChannelFormat(format!("{} trailing bytes", rest.len())));
    }
    Ok(ChannelSet { h, params: PathParams { num_paths: header.num_paths, paths }, seed: header.seed })
}
