//! Repair of non-ascending per-block maximizers by pooling adjacent
//! violators.
//!
//! Each index `k` has its own objective `Y_k` with maximizer `ŷ_k`. When the
//! maximizers are not ascending, the leftmost maximal non-increasing run
//! (with a strict drop) is merged into one block whose members share the
//! maximizer of the block's summed objective. Runs are re-scanned after
//! every merge until the sequence ascends. For concave (or, for the
//! boundary objectives, unimodal-sum) objectives the fixed point maximizes
//! `Σ Y_k(y_k)` subject to `y_1 ≤ … ≤ y_K`.

use std::ops::Range;

use crate::error::Result;

/// Ascending sequence produced by pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub values: Vec<f64>,
    /// Index ranges that were merged into a common value.
    pub pooled_blocks: Vec<Range<usize>>,
}

/// `block_argmax(range)` must return the maximizer of the objectives in
/// `range` summed.
pub fn repair_monotone<F>(candidates: &[f64], mut block_argmax: F) -> Result<Pooled>
where
    F: FnMut(Range<usize>) -> Result<f64>,
{
    let mut blocks: Vec<(Range<usize>, f64)> = candidates.iter().enumerate().map(|(i, &v)| (i..i + 1, v)).collect();
    while let Some(start) = blocks.windows(2).position(|w| w[0].1 > w[1].1) {
        let mut end = start + 1;
        while end + 1 < blocks.len() && blocks[end].1 >= blocks[end + 1].1 {
            end += 1;
        }
        let range = blocks[start].0.start..blocks[end].0.end;
        let value = block_argmax(range.clone())?;
        blocks.splice(start..=end, std::iter::once((range, value)));
    }
    let mut values = Vec::with_capacity(candidates.len());
    let mut pooled_blocks = Vec::new();
    for (range, v) in blocks {
        if range.len() > 1 {
            pooled_blocks.push(range.clone());
        }
        values.extend(std::iter::repeat_n(v, range.len()));
    }
    Ok(Pooled { values, pooled_blocks })
}
