//! Binary greyscale PGM (P5, maxval 255).

use std::path::Path;

use fpeng::{Error, Result};

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::Dimension {
            expected: width * height,
            found: pixels.len(),
        });
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(width, height, pixels)?).map_err(|e| Error::io(path, e))
}

/// Parses the header layout written by [`encode_pgm`]: three whitespace
/// separated fields, one whitespace byte, then the raster.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |msg: &str| Error::Format(format!("PGM: {msg}"));
    let mut pos = 0;
    let mut field = || -> Result<&[u8]> {
        while bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            pos += 1;
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("header is truncated"));
        }
        Ok(&bytes[start..pos])
    };
    if field()? != b"P5" {
        return Err(bad("not a binary greymap"));
    }
    let mut number = |what: &str| -> Result<usize> {
        std::str::from_utf8(field()?)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(&format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    if number("maxval")? != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let raster = bytes.get(pos + 1..).unwrap_or_default();
    if raster.len() != width * height {
        return Err(bad(&format!(
            "expected {} raster bytes, found {}",
            width * height,
            raster.len()
        )));
    }
    Ok((width, height, raster.to_vec()))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    parse_pgm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
