use core::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::math;
use crate::rng;

/// The contiguous block a scramble touched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScrambleBlock {
    pub range: Range<usize>,
}

/// Chooses the block for a sequence of `len` tokens: `⌈fraction·len⌉` tokens
/// at an offset drawn uniformly from the valid starts.
pub fn scramble_block(len: usize, fraction: f64, rng: &mut rng::Rng) -> ScrambleBlock {
    let fraction = fraction.clamp(0.0, 1.0);
    let raw = fraction * len as f64;
    // 0.3 * 10 is 3.0000000000000004 in binary; do not round that up to 4.
    let size = (math::ceil(raw - 1e-9 * raw.max(1.0)) as usize).min(len);
    if size == 0 {
        return ScrambleBlock { range: 0..0 };
    }
    let start = rng.gen_range(0..=len - size);
    ScrambleBlock {
        range: start..start + size,
    }
}

/// Shuffles one randomly placed block covering `fraction` of `tokens`.
pub fn scramble_in_place<T>(tokens: &mut [T], fraction: f64, seed: u64) -> ScrambleBlock {
    let mut rng = rng::rng(seed);
    let block = scramble_block(tokens.len(), fraction, &mut rng);
    tokens[block.range.clone()].shuffle(&mut rng);
    block
}

/// Copying variant of [`scramble_in_place`].
pub fn scramble<T: Clone>(tokens: &[T], fraction: f64, seed: u64) -> alloc::vec::Vec<T> {
    let mut out = tokens.to_vec();
    scramble_in_place(&mut out, fraction, seed);
    out
}
