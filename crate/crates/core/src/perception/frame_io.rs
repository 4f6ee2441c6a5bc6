//! Depth-frame fixture format: one JSON header line
//! `{"width":W,"height":H,"heading_deg":A}` followed by `W*H` little-endian
//! `f32` depths in metres, row-major.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::DepthFrame;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    width: usize,
    height: usize,
    heading_deg: f64,
}

pub fn write_depth_frame<W: Write>(mut w: W, frame: &DepthFrame, heading_deg: f64) -> Result<()> {
    let header = Header {
        width: frame.width,
        height: frame.height,
        heading_deg,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(frame.data.len() * 4);
    for d in &frame.data {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Returns the frame and its view heading in degrees.
pub fn read_depth_frame<R: BufRead>(mut r: R) -> Result<(DepthFrame, f64)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    let n = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::input("depth frame dimensions overflow"))?;
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::input(format!("depth frame payload truncated: {e}")))?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((
        DepthFrame {
            width: header.width,
            height: header.height,
            data,
        },
        header.heading_deg,
    ))
}
