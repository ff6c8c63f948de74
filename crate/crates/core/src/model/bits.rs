use crate::error::{Error, Result};
use crate::model::MAX_BITS;

/// MSB-first natural binary: `[1, 0, 1]` is index 5.
pub fn bits_to_index(bits: &[u8]) -> Result<u32> {
    if bits.is_empty() || bits.len() > MAX_BITS as usize {
        return Err(Error::invalid(format!(
            "bit vector length must lie in 1..={MAX_BITS}, got {}",
            bits.len()
        )));
    }
    bits.iter().try_fold(0u32, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | u32::from(b)),
        other => Err(Error::invalid(format!("bit value {other} is not 0 or 1"))),
    })
}

/// Inverse of [`bits_to_index`].
pub fn index_to_bits(index: u32, bits: u32) -> Result<Vec<u8>> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::invalid(format!(
            "bit count must lie in 1..={MAX_BITS}, got {bits}"
        )));
    }
    if index >= 1 << bits {
        return Err(Error::invalid(format!(
            "index {index} does not fit in {bits} bits"
        )));
    }
    Ok((0..bits).rev().map(|s| ((index >> s) & 1) as u8).collect())
}
