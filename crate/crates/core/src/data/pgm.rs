//! Portable graymap (PGM) reader and writer, 8-bit only.
//!
//! Both the ASCII (`P2`) and binary (`P5`) flavors are supported. Header
//! comments (`#` to end of line) are honored. Maxval must fit in 8 bits;
//! pixels are preserved exactly with no rescaling.

use std::fs;
use std::path::Path;

use super::DataError;
use crate::texture::GrayImage;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PgmFlavor {
    Ascii,
    #[default]
    Binary,
}

/// Pull the next whitespace-delimited token, skipping `#` comments.
fn next_token(data: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
    while *pos < data.len() {
        let b = data[*pos];
        if b == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
    if *pos >= data.len() {
        return None;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() && data[*pos] != b'#' {
        *pos += 1;
    }
    Some(data[start..*pos].to_vec())
}

fn parse_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize, DataError> {
    let tok = next_token(data, pos).ok_or_else(|| DataError::CorruptHeader(format!("missing {what}")))?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| DataError::CorruptHeader(format!("{what} is not a number")))
}

pub fn load_image(path: &Path) -> Result<GrayImage, DataError> {
    let data = fs::read(path)?;
    parse_pgm(&data)
}

pub(crate) fn parse_pgm(data: &[u8]) -> Result<GrayImage, DataError> {
    if data.len() < 2 {
        return Err(DataError::CorruptHeader("file shorter than a magic number".into()));
    }
    let flavor = match &data[..2] {
        b"P2" => PgmFlavor::Ascii,
        b"P5" => PgmFlavor::Binary,
        magic => {
            return Err(DataError::UnsupportedFormat(format!(
                "magic {:?}; only P2/P5 graymaps are supported",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut pos = 2usize;
    let width = parse_number(data, &mut pos, "width")?;
    let height = parse_number(data, &mut pos, "height")?;
    let maxval = parse_number(data, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(DataError::UnsupportedFormat(format!("maxval {maxval}; only 8-bit (<= 255) supported")));
    }
    if width == 0 || height == 0 {
        return Err(DataError::CorruptHeader(format!("degenerate dimensions {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| DataError::CorruptHeader(format!("dimensions {width}x{height} overflow")))?;
    // A pixel costs at least one byte in either flavor, so a header that
    // promises more pixels than remaining bytes is truncated. This also
    // bounds the allocation below by the actual file size.
    let remaining = data.len().saturating_sub(pos);
    if expected > remaining {
        return Err(DataError::TruncatedData { expected, got: remaining });
    }

    let pixels = match flavor {
        PgmFlavor::Ascii => {
            let mut pixels = Vec::with_capacity(expected);
            while pixels.len() < expected {
                let Some(tok) = next_token(data, &mut pos) else { break };
                let v: usize = std::str::from_utf8(&tok)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| DataError::CorruptHeader("non-numeric pixel".into()))?;
                if v > maxval {
                    return Err(DataError::CorruptHeader(format!("pixel {v} exceeds maxval {maxval}")));
                }
                pixels.push(v as u8);
            }
            pixels
        }
        PgmFlavor::Binary => {
            // Exactly one whitespace byte separates the header from the raster.
            pos += 1;
            let end = (pos.saturating_add(expected)).min(data.len());
            data[pos.min(end)..end].to_vec()
        }
    };
    if pixels.len() < expected {
        return Err(DataError::TruncatedData { expected, got: pixels.len() });
    }
    GrayImage::new(width, height, pixels)
        .map_err(|e| DataError::CorruptHeader(e.to_string()))
}

pub fn save_image(img: &GrayImage, path: &Path, flavor: PgmFlavor) -> Result<(), DataError> {
    let mut out: Vec<u8> = Vec::new();
    match flavor {
        PgmFlavor::Ascii => {
            out.extend_from_slice(format!("P2\n{} {}\n255\n", img.width(), img.height()).as_bytes());
            for r in 0..img.height() {
                let row: Vec<String> =
                    (0..img.width()).map(|c| img.at(r, c).to_string()).collect();
                out.extend_from_slice(row.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PgmFlavor::Binary => {
            out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width(), img.height()).as_bytes());
            out.extend_from_slice(img.pixels());
        }
    }
    fs::write(path, out)?;
    Ok(())
}
