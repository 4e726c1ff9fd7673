//! IDX dataset files (the MNIST container format), optionally gzipped.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use fpeng::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Row-major 8-bit images stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len().checked_div(self.rows * self.cols).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.pixels.chunks_exact((self.rows * self.cols).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Idx {
    Images(IdxImages),
    Labels(Vec<u8>),
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("IDX header is truncated".into()))
}

pub fn parse_idx(bytes: &[u8]) -> Result<Idx> {
    let magic = read_u32(bytes, 0)?;
    let (dims, body_len) = match magic {
        IMAGES_MAGIC => {
            let dims = [read_u32(bytes, 4)?, read_u32(bytes, 8)?, read_u32(bytes, 12)?].map(|d| d as usize);
            (dims.to_vec(), dims.iter().product::<usize>())
        }
        LABELS_MAGIC => {
            let n = read_u32(bytes, 4)? as usize;
            (vec![n], n)
        }
        other => return Err(Error::Format(format!("unexpected IDX magic {other:#010x}"))),
    };
    let header = 4 + 4 * dims.len();
    let body = &bytes[header..];
    if body.len() < body_len {
        return Err(Error::Format(format!(
            "IDX data is truncated: expected {body_len} bytes, found {}",
            body.len()
        )));
    }
    if body.len() > body_len {
        return Err(Error::Format(format!(
            "{} trailing bytes after IDX data",
            body.len() - body_len
        )));
    }
    Ok(match magic {
        IMAGES_MAGIC => Idx::Images(IdxImages {
            rows: dims[1],
            cols: dims[2],
            pixels: body.to_vec(),
        }),
        _ => Idx::Labels(body.to_vec()),
    })
}

/// Reads an IDX file, inflating it first when it starts with the gzip magic.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Idx> {
    let path = path.as_ref();
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: bad gzip stream: {e}", path.display())))?;
        parse_idx(&out)
    } else {
        parse_idx(&raw)
    }
}

pub fn load_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    match load_idx(path)? {
        Idx::Images(images) => Ok(images),
        Idx::Labels(_) => Err(Error::Format("expected an IDX image file, found labels".into())),
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    match load_idx(path)? {
        Idx::Labels(labels) => Ok(labels),
        Idx::Images(_) => Err(Error::Format("expected an IDX label file, found images".into())),
    }
}
