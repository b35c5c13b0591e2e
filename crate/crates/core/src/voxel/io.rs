//! VGRID binary format.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `VGRD`                                 |
//! | 4      | 2    | version (1)                                  |
//! | 6      | 2    | payload kind: 0 binary u8, 1 f32, 2 u32 label |
//! | 8      | 12   | nx, ny, nz as u32                            |
//! | 20     | 4    | pitch as f32                                 |
//! | 24     | ...  | nx·ny·nz elements, z fastest                 |
//!
//! Binary payloads store solid as `0xFF` and void as `0x00`.

use std::fs;
use std::path::Path;

use super::grid::{LabeledVolume, VoxelGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VGRD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum PayloadKind {
    Binary = 0,
    Float = 1,
    Labels = 2,
}

impl PayloadKind {
    fn element_size(self) -> usize {
        match self {
            PayloadKind::Binary => 1,
            PayloadKind::Float | PayloadKind::Labels => 4,
        }
    }
}

fn header(kind: PayloadKind, dims: [usize; 3], pitch: f32) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(kind as u16).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&pitch.to_le_bytes());
    out
}

/// Serializes a grid; binary grids use the 1-byte payload.
pub fn encode_grid(grid: &VoxelGrid) -> Vec<u8> {
    let kind = if grid.is_binary() {
        PayloadKind::Binary
    } else {
        PayloadKind::Float
    };
    let mut out = header(kind, grid.dims(), grid.pitch());
    match kind {
        PayloadKind::Binary => out.extend(
            grid.data()
                .iter()
                .map(|&v| if v == 1.0 { 0xFFu8 } else { 0x00 }),
        ),
        _ => {
            out.reserve(grid.len() * 4);
            for v in grid.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn encode_labels(labels: &LabeledVolume) -> Vec<u8> {
    let mut out = header(PayloadKind::Labels, labels.dims(), 1.0);
    out.reserve(labels.labels().len() * 4);
    for l in labels.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

struct Header {
    kind: PayloadKind,
    dims: [usize; 3],
    pitch: f32,
    count: usize,
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"VGRD\""));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let kind = match u16_at(bytes, 6) {
        0 => PayloadKind::Binary,
        1 => PayloadKind::Float,
        2 => PayloadKind::Labels,
        k => return Err(Error::format(6, format!("unknown payload kind {k}"))),
    };
    let mut dims = [0usize; 3];
    for (axis, d) in dims.iter_mut().enumerate() {
        let v = u32_at(bytes, 8 + 4 * axis);
        if v == 0 {
            return Err(Error::format(8 + 4 * axis as u64, "zero dimension"));
        }
        *d = v as usize;
    }
    let count = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .and_then(|c| c.checked_mul(kind.element_size() as u64))
        .filter(|&bytes| bytes <= isize::MAX as u64)
        .ok_or_else(|| Error::format(8, format!("dimensions {dims:?} overflow")))?;
    let count = (count / kind.element_size() as u64) as usize;
    let pitch = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
    if !(pitch.is_finite() && pitch > 0.0) {
        return Err(Error::format(20, format!("pitch {pitch} must be positive")));
    }
    let expected = HEADER_LEN + count * kind.element_size();
    if bytes.len() < expected {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated payload: expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(expected as u64, "trailing bytes after payload"));
    }
    Ok(Header {
        kind,
        dims,
        pitch,
        count,
    })
}

pub fn decode_grid(bytes: &[u8]) -> Result<VoxelGrid> {
    let h = parse_header(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let data = match h.kind {
        PayloadKind::Binary => payload
            .iter()
            .enumerate()
            .map(|(i, &b)| match b {
                0x00 => Ok(0.0),
                0xFF => Ok(1.0),
                _ => Err(Error::format(
                    (HEADER_LEN + i) as u64,
                    format!("binary voxel byte {b:#04x} is neither 0x00 nor 0xFF"),
                )),
            })
            .collect::<Result<Vec<f32>>>()?,
        PayloadKind::Float => payload
            .chunks_exact(4)
            .enumerate()
            .map(|(i, c)| {
                let v = f32::from_le_bytes(c.try_into().unwrap());
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(Error::format(
                        (HEADER_LEN + 4 * i) as u64,
                        format!("voxel value {v} outside [0, 1]"),
                    ))
                }
            })
            .collect::<Result<Vec<f32>>>()?,
        PayloadKind::Labels => {
            return Err(Error::format(6, "payload holds labels, not occupancy"));
        }
    };
    debug_assert_eq!(data.len(), h.count);
    VoxelGrid::new(h.dims, data, h.pitch)
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabeledVolume> {
    let h = parse_header(bytes)?;
    if h.kind != PayloadKind::Labels {
        return Err(Error::format(6, "payload holds occupancy, not labels"));
    }
    let labels: Vec<u32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    LabeledVolume::new(h.dims, labels)
        .map_err(|e| Error::format(HEADER_LEN as u64, e.to_string()))
}

pub fn save_grid(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<()> {
    fs::write(path, encode_grid(grid))?;
    Ok(())
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    decode_grid(&fs::read(path)?)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabeledVolume) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabeledVolume> {
    decode_labels(&fs::read(path)?)
}
