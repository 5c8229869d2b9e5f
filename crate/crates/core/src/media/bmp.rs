//! Uncompressed 24-bit BMP in and out, thresholded to monochrome on input.

use super::{Bitmap, MediaError};

const FILE_HEADER: usize = 14;
const INFO_HEADER: usize = 40;
/// 72 DPI.
const PIXELS_PER_METRE: u32 = 2835;

fn row_stride(width: u32) -> usize {
    (width as usize * 3).div_ceil(4) * 4
}

/// Integer luma with 299/587/114 weights.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b)) / 1000) as u8
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn format(msg: impl Into<String>) -> MediaError {
    MediaError::Format(msg.into())
}

/// Pixels whose luma is at least `threshold` become white.
pub fn bmp_to_bitmap(bytes: &[u8], threshold: u8) -> Result<Bitmap, MediaError> {
    if bytes.len() < FILE_HEADER + INFO_HEADER {
        return Err(format("file shorter than its headers"));
    }
    if &bytes[..2] != b"BM" {
        return Err(format("bad magic (expected `BM`)"));
    }
    let data_offset = read_u32(bytes, 10) as usize;
    let info_size = read_u32(bytes, 14) as usize;
    if info_size < INFO_HEADER {
        return Err(format(format!("unsupported info header size {info_size}")));
    }
    let width = read_u32(bytes, 18) as i32;
    let raw_height = read_u32(bytes, 22) as i32;
    let bpp = read_u16(bytes, 28);
    let compression = read_u32(bytes, 30);
    if compression != 0 {
        return Err(format(format!("compression {compression} is not supported")));
    }
    if bpp != 24 {
        return Err(format(format!("bit depth {bpp} is not supported")));
    }
    if width <= 0 || raw_height == 0 || raw_height == i32::MIN {
        return Err(format(format!("bad dimensions {width}x{raw_height}")));
    }
    let width = width as u32;
    let bottom_up = raw_height > 0;
    let height = raw_height.unsigned_abs();

    let stride = row_stride(width);
    let needed = stride
        .checked_mul(height as usize)
        .and_then(|n| n.checked_add(data_offset))
        .ok_or_else(|| format("pixel array size overflows"))?;
    if data_offset < FILE_HEADER + info_size || bytes.len() < needed {
        return Err(format("truncated pixel array"));
    }

    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height as usize {
        let stored = if bottom_up { height as usize - 1 - y } else { y };
        let row = &bytes[data_offset + stored * stride..];
        pixels.extend(
            row[..width as usize * 3]
                .chunks_exact(3)
                .map(|bgr| luma(bgr[2], bgr[1], bgr[0]) >= threshold),
        );
    }
    Bitmap::new(width, height, pixels)
}

pub fn bitmap_to_bmp(b: &Bitmap) -> Vec<u8> {
    let stride = row_stride(b.width());
    let image_size = stride * b.height() as usize;
    let file_size = FILE_HEADER + INFO_HEADER + image_size;

    let mut out = Vec::with_capacity(file_size);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_size as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&((FILE_HEADER + INFO_HEADER) as u32).to_le_bytes());

    out.extend_from_slice(&(INFO_HEADER as u32).to_le_bytes());
    out.extend_from_slice(&(b.width() as i32).to_le_bytes());
    out.extend_from_slice(&(b.height() as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(image_size as u32).to_le_bytes());
    out.extend_from_slice(&PIXELS_PER_METRE.to_le_bytes());
    out.extend_from_slice(&PIXELS_PER_METRE.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());

    let pad = stride - b.width() as usize * 3;
    for y in (0..b.height()).rev() {
        for x in 0..b.width() {
            let v = if b.get(x, y) { 0xff } else { 0x00 };
            out.extend_from_slice(&[v, v, v]);
        }
        out.extend(std::iter::repeat_n(0u8, pad));
    }
    out
}
