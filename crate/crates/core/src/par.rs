//! Deterministic parallelism helper.
//!
//! Accumulations over time steps run in parallel over fixed-size index
//! blocks whose partial results are merged in block order. The split does
//! not depend on the worker count, so results are bit-identical for any
//! number of threads.

use std::ops::Range;

/// Fixed block length used by the per-step accumulation loops.
pub(crate) const BLOCK: usize = 1024;

/// Split `0..count` into consecutive ranges of at most `block` elements.
pub(crate) fn block_ranges(count: usize, block: usize) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(count.div_ceil(block));
    let mut start = 0;
    while start < count {
        let end = (start + block).min(count);
        out.push(start..end);
        start = end;
    }
    out
}
