//! WBMP type 0: `TypeField mbi(0) | FixHeader 0x00 | mbi(width) | mbi(height)`
//! followed by rows padded to whole bytes, most significant bit first,
//! 1 = white.

use super::mbi::{decode_mbi, encode_mbi};
use super::{Bitmap, MediaError};

pub fn row_bytes(width: u32) -> usize {
    (width as usize).div_ceil(8)
}

pub fn encode_wbmp(b: &Bitmap) -> Vec<u8> {
    let stride = row_bytes(b.width());
    let mut out = encode_mbi(0);
    out.push(0x00);
    out.extend(encode_mbi(b.width()));
    out.extend(encode_mbi(b.height()));
    out.reserve(stride * b.height() as usize);
    for row in b.pixels().chunks(b.width() as usize) {
        let mut packed = vec![0u8; stride];
        for (x, _) in row.iter().enumerate().filter(|(_, white)| **white) {
            packed[x / 8] |= 0x80 >> (x % 8);
        }
        out.extend(packed);
    }
    out
}

pub fn decode_wbmp(bytes: &[u8]) -> Result<Bitmap, MediaError> {
    let (kind, mut pos) = decode_mbi(bytes, 0)?;
    if kind != 0 {
        return Err(MediaError::UnsupportedType(kind));
    }
    let fix = *bytes.get(pos).ok_or(MediaError::Truncated)?;
    if fix != 0 {
        // Extension headers only exist for types other than 0.
        return Err(MediaError::UnsupportedType(kind));
    }
    pos += 1;
    let (width, n) = decode_mbi(bytes, pos)?;
    pos += n;
    let (height, n) = decode_mbi(bytes, pos)?;
    pos += n;
    if width == 0 || height == 0 {
        return Err(MediaError::BadDimensions { width, height });
    }
    let stride = row_bytes(width);
    let needed = stride
        .checked_mul(height as usize)
        .ok_or(MediaError::BadDimensions { width, height })?;
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() < needed {
        return Err(MediaError::Truncated);
    }
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for row in data[..needed].chunks(stride) {
        pixels.extend((0..width as usize).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
    }
    Bitmap::new(width, height, pixels)
}
