//! Binary PBM (`P4`): ASCII header, then rows packed MSB-first, each row
//! padded to a whole byte.

use std::io::Write;
use std::path::Path;

use super::{Raster, RasterConfig, RasterError};

pub fn write_pbm(r: &Raster, out: &mut impl Write) -> Result<(), RasterError> {
    let (w, h) = (r.width(), r.height());
    let row_bytes = w.div_ceil(8);
    let mut buf = Vec::with_capacity(16 + row_bytes * h);
    write!(buf, "P4\n{w} {h}\n")?;
    for i in 0..h {
        let start = buf.len();
        buf.resize(start + row_bytes, 0);
        for j in 0..w {
            if r.get(i, j) {
                buf[start + j / 8] |= 0x80 >> (j % 8);
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Parses a `P4` image; `resolution` is the mm/px to attach, since PBM does
/// not carry one.
pub fn read_pbm(bytes: &[u8], resolution: f64) -> Result<Raster, RasterError> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != b"P4" {
        return Err(RasterError::Pbm(format!(
            "expected magic P4, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = header_number(bytes, &mut pos)?;
    let height = header_number(bytes, &mut pos)?;
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(RasterError::Pbm("missing whitespace after header".into())),
    }
    let row_bytes = width.div_ceil(8);
    let data = &bytes[pos..];
    if data.len() < row_bytes * height {
        return Err(RasterError::Pbm(format!(
            "truncated raster: need {} bytes, have {}",
            row_bytes * height,
            data.len()
        )));
    }
    let config = RasterConfig {
        width,
        height,
        resolution,
    };
    Ok(Raster::from_pixel_fn(config, |i, j| {
        data[i * row_bytes + j / 8] & (0x80 >> (j % 8)) != 0
    }))
}

pub fn write_pbm_file(r: &Raster, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let mut buf = Vec::new();
    write_pbm(r, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_pbm_file(path: impl AsRef<Path>, resolution: f64) -> Result<Raster, RasterError> {
    read_pbm(&std::fs::read(path)?, resolution)
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while let Some(&b) = bytes.get(*pos) {
        if b == b'#' {
            while bytes.get(*pos).is_some_and(|&c| c != b'\n') {
                *pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], RasterError> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        *pos += 1;
    }
    if start == *pos {
        return Err(RasterError::Pbm("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, RasterError> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| RasterError::Pbm(format!("bad dimension {:?}", String::from_utf8_lossy(tok))))
}
