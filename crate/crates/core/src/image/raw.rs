//! Lossless "SCNR" container: magic, u32 LE height, u32 LE width, then
//! row-major f32 LE samples.

use std::fs;
use std::path::Path;

use super::{Image, ImageError};

const MAGIC: &[u8; 4] = b"SCNR";
const HEADER_LEN: usize = 12;

pub fn encode_raw_f32(image: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * image.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(image.height() as u32).to_le_bytes());
    out.extend_from_slice(&(image.width() as u32).to_le_bytes());
    for v in image.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raw_f32(bytes: &[u8]) -> Result<Image, ImageError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ImageError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(ImageError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if height == 0 || width == 0 {
        return Err(ImageError::ZeroDimension { height, width });
    }
    let expected = height * width * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(ImageError::SizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Image::from_parts(height, width, data))
}

pub fn load_raw_f32(path: &Path) -> Result<Image, ImageError> {
    decode_raw_f32(&fs::read(path)?)
}

pub fn save_raw_f32(image: &Image, path: &Path) -> Result<(), ImageError> {
    fs::write(path, encode_raw_f32(image))?;
    Ok(())
}
