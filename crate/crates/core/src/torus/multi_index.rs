//! Strictly increasing multi-indices encoded as bitmasks.
//!
//! An index set `{i₁ < … < i_p} ⊆ {0, …, d−1}` is stored as the `u32` with
//! those bits set. Masks of equal popcount are ordered numerically, which
//! fixes the canonical position of every wedge monomial `dz_I ∧ dz̄_J`.

/// All masks over `d` slots with exactly `p` bits, in increasing numeric
/// order.
pub fn masks(d: usize, p: usize) -> Vec<u32> {
    assert!(d <= 16, "dimension too large for mask indices");
    (0u32..(1 << d)).filter(|m| m.count_ones() as usize == p).collect()
}

/// Binomial coefficient; the number of masks of size `p`.
pub fn count(d: usize, p: usize) -> usize {
    if p > d {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..p {
        acc = acc * (d - i) / (i + 1);
    }
    acc
}

/// Position of `mask` within `masks(d, popcount)`.
///
/// Counts smaller masks of the same popcount directly; index spaces here are
/// tiny so a combinatorial ranking is not worth the bookkeeping.
pub fn position(d: usize, mask: u32) -> usize {
    let p = mask.count_ones();
    (0u32..mask).filter(|m| m.count_ones() == p).count().min(count(d, p as usize))
}

/// Lookup table mask → position for one (d, p) pair.
#[derive(Debug, Clone)]
pub struct MaskTable {
    pub masks: Vec<u32>,
    positions: Vec<usize>,
}

impl MaskTable {
    pub fn new(d: usize, p: usize) -> Self {
        let masks = masks(d, p);
        let mut positions = vec![usize::MAX; 1 << d];
        for (i, &m) in masks.iter().enumerate() {
            positions[m as usize] = i;
        }
        Self { masks, positions }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn position(&self, mask: u32) -> usize {
        self.positions[mask as usize]
    }
}

/// Inserts index `j` into `mask`: returns the sign `(−1)^{#{i ∈ mask : i < j}}`
/// and the enlarged mask, or `None` when `j` is already present.
pub fn insert(mask: u32, j: usize) -> Option<(f64, u32)> {
    let bit = 1u32 << j;
    if mask & bit != 0 {
        return None;
    }
    let below = (mask & (bit - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mask | bit))
}

/// Removes index `i` from `mask`: the sign of moving it to the front,
/// `(−1)^{#{i' ∈ mask : i' < i}}`, and the reduced mask. `None` when absent.
pub fn remove(mask: u32, i: usize) -> Option<(f64, u32)> {
    let bit = 1u32 << i;
    if mask & bit == 0 {
        return None;
    }
    let below = (mask & (bit - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mask & !bit))
}

/// Merges two disjoint masks as a wedge `e_A ∧ e_B`: the shuffle sign and the
/// union, or `None` when they intersect.
pub fn merge(a: u32, b: u32) -> Option<(f64, u32)> {
    if a & b != 0 {
        return None;
    }
    // Count inversions: pairs (i ∈ a, j ∈ b) with j < i.
    let mut inversions = 0u32;
    let mut rest = a;
    while rest != 0 {
        let i = rest.trailing_zeros();
        inversions += (b & ((1 << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, a | b))
}

/// Iterates the set bits of a mask from lowest to highest.
pub fn bits(mask: u32) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

/// Formats a mask as 1-based indices, e.g. `{0, 2} → "1 3"`.
pub fn format_mask(mask: u32) -> String {
    bits(mask).map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
}
