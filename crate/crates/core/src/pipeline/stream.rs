//! Framed depth stream: each frame is a 16-byte header (`TPD1`, u32 width,
//! u32 height, u32 flags, all little-endian) followed by `width · height`
//! little-endian f32 values, row-major.
//!
//! Flag bit 0 marks a normalized payload; the other bits must be zero. In
//! metric frames a zero value means "no reading".

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{freal_apply, RealPipelineConfig, PipelineError};
use crate::render::{DepthImage, DepthUnit};

pub const TPD_MAGIC: &[u8; 4] = b"TPD1";
pub const FLAG_NORMALIZED: u32 = 1;
/// Refuse frames larger than this many pixels.
pub const MAX_PIXELS: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad frame header: {0}")]
    Header(String),
    #[error("truncated frame")]
    Truncated,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<DepthImage>, StreamError> {
    let mut header = [0u8; 16];
    let mut got = 0;
    while got < header.len() {
        match reader.read(&mut header[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(StreamError::Truncated),
            n => got += n,
        }
    }
    if &header[..4] != TPD_MAGIC {
        return Err(StreamError::Header("missing TPD1 magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
    let (w, h, flags) = (word(4) as usize, word(8) as usize, word(12));
    if flags & !FLAG_NORMALIZED != 0 {
        return Err(StreamError::Header(format!("unknown flags {flags:#x}")));
    }
    if w == 0 || h == 0 || w.saturating_mul(h) > MAX_PIXELS {
        return Err(StreamError::Header(format!("unsupported frame size {w}×{h}")));
    }
    let mut payload = vec![0u8; w * h * 4];
    reader.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => StreamError::Truncated,
        _ => StreamError::Io(e),
    })?;
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let unit = if flags & FLAG_NORMALIZED != 0 {
        DepthUnit::Normalized
    } else {
        DepthUnit::Meters
    };
    Ok(Some(DepthImage::from_values(w, h, values, unit)))
}

pub fn write_frame<W: Write>(writer: &mut W, img: &DepthImage) -> Result<(), StreamError> {
    let flags = if img.unit == DepthUnit::Normalized { FLAG_NORMALIZED } else { 0 };
    let mut buf = Vec::with_capacity(16 + img.values.len() * 4);
    buf.extend_from_slice(TPD_MAGIC);
    for v in [img.width as u32, img.height as u32, flags] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (v, ok) in img.values.iter().zip(&img.valid) {
        let x = if *ok || img.unit == DepthUnit::Normalized { *v as f32 } else { 0.0 };
        buf.extend_from_slice(&x.to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

/// Pipes every metric frame through the real-sensor pipeline. Returns the
/// number of frames processed.
pub fn run_real_stream<R: Read, W: Write>(reader: &mut R, writer: &mut W, cfg: &RealPipelineConfig) -> Result<usize, StreamError> {
    let mut count = 0;
    while let Some(frame) = read_frame(reader)? {
        let out = freal_apply(&frame, cfg)?;
        write_frame(writer, &out)?;
        writer.flush()?;
        count += 1;
    }
    Ok(count)
}
