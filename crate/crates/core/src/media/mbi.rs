//! Multi-byte integers: big-endian 7-bit groups, high bit set on every byte
//! except the last.

use super::MediaError;

const MAX_LEN: usize = 5;

pub fn encode_mbi(n: u32) -> Vec<u8> {
    let mut groups = vec![(n & 0x7f) as u8];
    let mut rest = n >> 7;
    while rest != 0 {
        groups.push((rest & 0x7f) as u8 | 0x80);
        rest >>= 7;
    }
    groups.reverse();
    groups
}

/// Returns the value and the number of bytes consumed from `offset`.
pub fn decode_mbi(bytes: &[u8], offset: usize) -> Result<(u32, usize), MediaError> {
    let mut value: u64 = 0;
    for (i, &b) in bytes.get(offset..).unwrap_or_default().iter().enumerate() {
        if i == MAX_LEN {
            return Err(MediaError::Overlong);
        }
        value = (value << 7) | u64::from(b & 0x7f);
        if b & 0x80 == 0 {
            let value = u32::try_from(value).map_err(|_| MediaError::Overlong)?;
            return Ok((value, i + 1));
        }
    }
    Err(MediaError::Truncated)
}
