//! Basis-state labels of arbitrary register width.
//!
//! A label is the full bit string across every register in the layout,
//! stored as little-endian 64-bit limbs. Pipelines accumulate garbage
//! registers, so labels routinely exceed 64 bits; field access works on
//! spans of up to 64 bits at a time.

use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;

/// A contiguous range of qubit positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub width: usize,
}

impl Span {
    pub fn new(offset: usize, width: usize) -> Self {
        Self { offset, width }
    }

    pub fn end(&self) -> usize {
        self.offset + self.width
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.offset < other.end() && other.offset < self.end()
    }

    pub fn contains_bit(&self, bit: usize) -> bool {
        bit >= self.offset && bit < self.end()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    limbs: SmallVec<[u64; 4]>,
}

impl BasisLabel {
    pub fn zero(limb_count: usize) -> Self {
        Self { limbs: smallvec::smallvec![0; limb_count.max(1)] }
    }

    pub fn limb_count(&self) -> usize {
        self.limbs.len()
    }

    /// Grows the label to `limb_count` limbs, padding with zero bits.
    pub fn extend_limbs(&mut self, limb_count: usize) {
        while self.limbs.len() < limb_count {
            self.limbs.push(0);
        }
    }

    pub fn bit(&self, pos: usize) -> bool {
        (self.limbs[pos / 64] >> (pos % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, pos: usize, value: bool) {
        let mask = 1u64 << (pos % 64);
        if value {
            self.limbs[pos / 64] |= mask;
        } else {
            self.limbs[pos / 64] &= !mask;
        }
    }

    pub fn flip_bit(&mut self, pos: usize) {
        self.limbs[pos / 64] ^= 1u64 << (pos % 64);
    }

    /// Reads a field of up to 64 bits.
    pub fn field(&self, span: Span) -> u64 {
        debug_assert!(span.width >= 1 && span.width <= 64);
        let limb = span.offset / 64;
        let bit = span.offset % 64;
        let mut v = self.limbs[limb] >> bit;
        if bit != 0 && limb + 1 < self.limbs.len() {
            v |= self.limbs[limb + 1] << (64 - bit);
        }
        if span.width < 64 {
            v &= (1u64 << span.width) - 1;
        }
        v
    }

    /// Writes a field of up to 64 bits.
    pub fn set_field(&mut self, span: Span, value: u64) {
        debug_assert!(span.width >= 1 && span.width <= 64);
        debug_assert!(span.width == 64 || value < (1u64 << span.width));
        let limb = span.offset / 64;
        let bit = span.offset % 64;
        let mask = if span.width == 64 { u64::MAX } else { (1u64 << span.width) - 1 };
        self.limbs[limb] = (self.limbs[limb] & !(mask << bit)) | (value << bit);
        let spill = bit + span.width;
        if spill > 64 {
            let hi_bits = spill - 64;
            let hi_mask = (1u64 << hi_bits) - 1;
            self.limbs[limb + 1] =
                (self.limbs[limb + 1] & !hi_mask) | (value >> (64 - bit));
        }
    }

    pub fn xor_field(&mut self, span: Span, value: u64) {
        let cur = self.field(span);
        self.set_field(span, cur ^ value);
    }

    /// Swaps two equal-width fields.
    pub fn swap_fields(&mut self, a: Span, b: Span) {
        debug_assert_eq!(a.width, b.width);
        let va = self.field(a);
        let vb = self.field(b);
        self.set_field(a, vb);
        self.set_field(b, va);
    }

    /// Hex rendering of the whole label, most significant limb first.
    pub fn to_hex(&self, width: usize) -> String {
        let nibbles = width.div_ceil(4).max(1);
        let mut s = String::with_capacity(nibbles);
        for i in (0..nibbles).rev() {
            let nib = (self.limbs[i / 16] >> ((i % 16) * 4)) & 0xf;
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }
}

impl Ord for BasisLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.limbs.len().max(other.limbs.len());
        for i in (0..n).rev() {
            let a = self.limbs.get(i).copied().unwrap_or(0);
            let b = other.limbs.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for BasisLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex(self.limbs.len() * 64))
    }
}

impl From<u64> for BasisLabel {
    fn from(v: u64) -> Self {
        Self { limbs: smallvec::smallvec![v] }
    }
}
