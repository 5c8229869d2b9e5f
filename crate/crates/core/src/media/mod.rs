//! WAP image content: WBMP type 0 and its conversion to and from 24-bit BMP.

pub mod bmp;
pub mod mbi;
pub mod wbmp;

use thiserror::Error;

pub use bmp::{bitmap_to_bmp, bmp_to_bitmap};
pub use mbi::{decode_mbi, encode_mbi};
pub use wbmp::{decode_wbmp, encode_wbmp};

pub const WBMP_CONTENT_TYPE: &str = "image/vnd.wap.wbmp";
pub const BMP_CONTENT_TYPE: &str = "image/bmp";
pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MediaError {
    #[error("truncated input")]
    Truncated,
    #[error("multi-byte integer longer than 5 bytes or wider than 32 bits")]
    Overlong,
    #[error("unsupported WBMP type {0}")]
    UnsupportedType(u32),
    #[error("invalid bitmap dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("BMP format error: {0}")]
    Format(String),
}

/// Monochrome raster, row-major, `true` = white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    pixels: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32, pixels: Vec<bool>) -> Result<Self, MediaError> {
        let expected = (width as u64) * (height as u64);
        if width == 0 || height == 0 || pixels.len() as u64 != expected {
            return Err(MediaError::BadDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, white: bool) -> Result<Self, MediaError> {
        let n = (width as usize)
            .checked_mul(height as usize)
            .ok_or(MediaError::BadDimensions { width, height })?;
        Self::new(width, height, vec![white; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, white: bool) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = white;
    }
}
