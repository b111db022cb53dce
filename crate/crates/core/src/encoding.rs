//! Two's-complement fixed-point encoding of grid values.
//!
//! Grid values live in k-bit data registers as two's-complement words with
//! `frac` fractional bits. Rounding is half-to-even everywhere, so the word
//! arithmetic performed branch-by-branch in the quantum pipelines and the
//! classical reference solvers is bit-identical by construction. The solver
//! kernels at the bottom of this module are that shared arithmetic: they
//! work on exact wide integers and round once.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// What to do when a value falls outside the representable range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    #[default]
    Error,
    Saturate,
}

/// k-bit two's-complement format with a fixed binary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointFormat {
    bits: u8,
    frac: u8,
    overflow: OverflowPolicy,
}

impl FixedPointFormat {
    /// Requires `1 <= frac < bits <= 16`.
    pub fn new(bits: u8, frac: u8) -> Result<Self> {
        if !(1..=16).contains(&bits) || frac == 0 || frac >= bits {
            return Err(Error::InvalidFormat(format!(
                "need 1 <= frac < bits <= 16, got bits={bits} frac={frac}"
            )));
        }
        Ok(Self { bits, frac, overflow: OverflowPolicy::Error })
    }

    pub fn with_overflow(mut self, policy: OverflowPolicy) -> Self {
        self.overflow = policy;
        self
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn frac(&self) -> u8 {
        self.frac
    }

    pub fn overflow(&self) -> OverflowPolicy {
        self.overflow
    }

    /// Smallest representable raw value (as a signed integer).
    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.bits - 1))
    }

    /// Largest representable raw value.
    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 / self.scale()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 / self.scale()
    }

    /// 2^frac.
    pub fn scale(&self) -> f64 {
        (1u64 << self.frac) as f64
    }

    /// Resolution of the format, 2^-frac.
    pub fn ulp(&self) -> f64 {
        1.0 / self.scale()
    }

    /// Nearest representable value, ties to even.
    pub fn encode(&self, x: f64) -> Result<DataWord> {
        let raw = round_half_even(x * self.scale());
        if !raw.is_finite() {
            return Err(Error::InvalidArgument(format!("cannot encode {x}")));
        }
        self.word_from_raw(raw as i64)
    }

    /// Builds a word from a raw integer, applying the overflow policy.
    pub fn word_from_raw(&self, raw: i64) -> Result<DataWord> {
        let clamped = if raw < self.min_raw() || raw > self.max_raw() {
            match self.overflow {
                OverflowPolicy::Saturate => raw.clamp(self.min_raw(), self.max_raw()),
                OverflowPolicy::Error => {
                    return Err(Error::Overflow {
                        value: raw as f64 / self.scale(),
                        min: self.min_value(),
                        max: self.max_value(),
                    })
                }
            }
        } else {
            raw
        };
        let mask = (1u32 << self.bits) - 1;
        Ok(DataWord { bits: (clamped as u32 & mask) as u16, fmt: *self })
    }

    /// Reinterprets a k-bit pattern (e.g. read out of a data register).
    pub fn word_from_bits(&self, bits: u16) -> DataWord {
        let mask = ((1u32 << self.bits) - 1) as u16;
        DataWord { bits: bits & mask, fmt: *self }
    }

    /// Zero word.
    pub fn zero(&self) -> DataWord {
        DataWord { bits: 0, fmt: *self }
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fixed{}.{}", self.bits, self.frac)
    }
}

/// Accepts the `fixed<k>.<fb>` notation used in configs, e.g. `fixed8.6`.
impl FromStr for FixedPointFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .strip_prefix("fixed")
            .ok_or_else(|| Error::InvalidFormat(format!("expected fixed<k>.<fb>, got `{s}`")))?;
        let (k, fb) = rest
            .split_once('.')
            .ok_or_else(|| Error::InvalidFormat(format!("expected fixed<k>.<fb>, got `{s}`")))?;
        let bits = k
            .parse::<u8>()
            .map_err(|_| Error::InvalidFormat(format!("bad bit count in `{s}`")))?;
        let frac = fb
            .parse::<u8>()
            .map_err(|_| Error::InvalidFormat(format!("bad fraction bits in `{s}`")))?;
        Self::new(bits, frac)
    }
}

/// A k-bit word together with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataWord {
    bits: u16,
    fmt: FixedPointFormat,
}

impl DataWord {
    /// Raw register bit pattern (low k bits).
    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn format(&self) -> FixedPointFormat {
        self.fmt
    }

    /// Sign-extended integer numerator.
    pub fn raw(&self) -> i64 {
        let shift = 64 - self.fmt.bits as u32;
        ((self.bits as i64) << shift) >> shift
    }

    /// Exact rational value raw / 2^frac.
    pub fn value(&self) -> f64 {
        self.raw() as f64 / self.fmt.scale()
    }

    fn check_same_format(&self, other: &DataWord) -> Result<()> {
        if self.fmt != other.fmt {
            return Err(Error::InvalidArgument(format!(
                "format mismatch: {} vs {}",
                self.fmt, other.fmt
            )));
        }
        Ok(())
    }

    /// Exact two's-complement addition, overflow per the format policy.
    pub fn add(&self, other: &DataWord) -> Result<DataWord> {
        self.check_same_format(other)?;
        self.fmt.word_from_raw(self.raw() + other.raw())
    }

    pub fn sub(&self, other: &DataWord) -> Result<DataWord> {
        self.check_same_format(other)?;
        self.fmt.word_from_raw(self.raw() - other.raw())
    }

    pub fn neg(&self) -> Result<DataWord> {
        self.fmt.word_from_raw(-self.raw())
    }

    /// Scales by 2^exp. Left shifts are exact (overflow-checked); right
    /// shifts round half-to-even.
    pub fn scale_pow2(&self, exp: i32) -> Result<DataWord> {
        let raw = if exp >= 0 {
            self.raw() << exp.min(48)
        } else {
            round_half_even_shift(self.raw(), (-exp) as u32)
        };
        self.fmt.word_from_raw(raw)
    }
}

/// Round to nearest integer, ties to even.
pub fn round_half_even(x: f64) -> f64 {
    let f = x.floor();
    let d = x - f;
    if d > 0.5 {
        f + 1.0
    } else if d < 0.5 {
        f
    } else if (f as i64) % 2 == 0 {
        f
    } else {
        f + 1.0
    }
}

/// Divides by 2^shift rounding half-to-even.
pub fn round_half_even_shift(raw: i64, shift: u32) -> i64 {
    if shift == 0 {
        return raw;
    }
    let div = 1i64 << shift;
    let q = raw.div_euclid(div);
    let rem = raw.rem_euclid(div);
    let half = div / 2;
    if rem > half {
        q + 1
    } else if rem < half {
        q
    } else {
        q + (q & 1)
    }
}

// --- Shared solver kernels -------------------------------------------------
//
// All grid updates reduce to these wide-integer forms. Inputs are raw
// numerators (sign-extended); intermediates are exact; each kernel rounds at
// most once. `rhs_scaled` is the right-hand side already multiplied by the
// level's dx^2 (see `rhs_scaled_raw`).

/// Jacobi update: round((left + right - rhs_scaled) / 2).
pub fn jacobi_raw(left: i64, right: i64, rhs_scaled: i64) -> i64 {
    round_half_even_shift(left + right - rhs_scaled, 1)
}

/// dx^2-scaled residual: rhs_scaled - left - right + 2*center. Exact.
pub fn residual_scaled_raw(center: i64, left: i64, right: i64, rhs_scaled: i64) -> i64 {
    rhs_scaled - left - right + 2 * center
}

/// Full-weighting restriction: round((left + 2*center + right) / 4).
pub fn restrict_raw(left: i64, center: i64, right: i64) -> i64 {
    round_half_even_shift(left + 2 * center + right, 2)
}

/// Midpoint interpolation: round((left + right) / 2).
pub fn halve_pair_raw(left: i64, right: i64) -> i64 {
    round_half_even_shift(left + right, 1)
}

/// Quantizes the top-level right-hand side f(i) * dx^2 once.
pub fn rhs_scaled_raw(f_value: f64, dx2: f64, fmt: &FixedPointFormat) -> Result<i64> {
    Ok(fmt.encode(f_value * dx2)?.raw())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt86() -> FixedPointFormat {
        FixedPointFormat::new(8, 6).unwrap()
    }

    #[test]
    fn encode_zero_is_all_zero_word() {
        assert_eq!(fmt86().encode(0.0).unwrap().bits(), 0);
    }

    #[test]
    fn encode_half_at_fixed8_6() {
        // 0.5 * 2^6 = 32 = 0b00100000
        assert_eq!(fmt86().encode(0.5).unwrap().bits(), 0b0010_0000);
    }

    #[test]
    fn encode_one_third_rounds_to_nearest() {
        // 64/3 = 21.33.. -> 21, decode 21/64 = 0.328125
        let w = fmt86().encode(1.0 / 3.0).unwrap();
        assert_eq!(w.bits(), 21);
        assert_eq!(w.value(), 0.328125);
        assert!((w.value() - 1.0 / 3.0).abs() <= 1.0 / 128.0);
    }

    #[test]
    fn decode_sign_extends() {
        // 0b11000000 is -64 in 8-bit two's complement: -64/2^6 = -1.0
        let w = fmt86().word_from_bits(0b1100_0000);
        assert_eq!(w.value(), -1.0);
    }

    #[test]
    fn representable_range_bounds() {
        let f = fmt86();
        assert_eq!(f.min_value(), -2.0);
        assert_eq!(f.max_value(), 2.0 - 1.0 / 64.0);
    }

    #[test]
    fn overflow_is_hard_error_by_default() {
        assert!(matches!(fmt86().encode(3.0), Err(Error::Overflow { .. })));
    }

    #[test]
    fn overflow_saturates_when_configured() {
        let f = fmt86().with_overflow(OverflowPolicy::Saturate);
        assert_eq!(f.encode(3.0).unwrap().value(), f.max_value());
        assert_eq!(f.encode(-3.0).unwrap().value(), -2.0);
    }

    #[test]
    fn add_zero_is_identity() {
        let f = fmt86();
        let a = f.encode(0.75).unwrap();
        assert_eq!(a.add(&f.zero()).unwrap(), a);
    }

    #[test]
    fn quarter_plus_quarter_is_half_exactly() {
        let f = fmt86();
        let q = f.encode(0.25).unwrap();
        assert_eq!(q.add(&q).unwrap(), f.encode(0.5).unwrap());
    }

    #[test]
    fn scale_pow2_halves_exactly() {
        let f = fmt86();
        let w = f.encode(0.75).unwrap();
        assert_eq!(w.scale_pow2(-1).unwrap(), f.encode(0.375).unwrap());
    }

    #[test]
    fn format_string_round_trips() {
        let f: FixedPointFormat = "fixed8.6".parse().unwrap();
        assert_eq!(f, fmt86());
        assert_eq!(f.to_string(), "fixed8.6");
        assert!("fixed8".parse::<FixedPointFormat>().is_err());
        assert!("fixed4.9".parse::<FixedPointFormat>().is_err());
    }

    #[test]
    fn format_validation() {
        assert!(FixedPointFormat::new(17, 6).is_err());
        assert!(FixedPointFormat::new(8, 0).is_err());
        assert!(FixedPointFormat::new(8, 8).is_err());
        assert!(FixedPointFormat::new(8, 9).is_err());
    }

    #[test]
    fn half_even_shift_matches_float_rounding() {
        for raw in -4096i64..=4096 {
            for shift in 1..=4u32 {
                let exact = raw as f64 / (1i64 << shift) as f64;
                assert_eq!(
                    round_half_even_shift(raw, shift),
                    round_half_even(exact) as i64,
                    "raw={raw} shift={shift}"
                );
            }
        }
    }

    #[test]
    fn ties_round_to_even() {
        assert_eq!(round_half_even(0.5), 0.0);
        assert_eq!(round_half_even(1.5), 2.0);
        assert_eq!(round_half_even(-0.5), 0.0);
        assert_eq!(round_half_even(-1.5), -2.0);
        assert_eq!(round_half_even(2.5), 2.0);
    }

    proptest! {
        #[test]
        fn quantization_error_bounded(x in -1.9f64..1.9) {
            let f = fmt86();
            let w = f.encode(x).unwrap();
            prop_assert!((w.value() - x).abs() <= 0.5 / 64.0 + 1e-15);
        }

        #[test]
        fn sign_symmetry(x in -1.9f64..1.9) {
            let f = fmt86();
            let pos = f.encode(x).unwrap();
            let neg = f.encode(-x).unwrap();
            prop_assert_eq!(pos.raw(), -neg.raw());
        }

        #[test]
        fn in_range_addition_is_exact(a in -128i64..127, b in -128i64..127) {
            let f = fmt86();
            let sum = a + b;
            prop_assume!(sum >= f.min_raw() && sum <= f.max_raw());
            let wa = f.word_from_raw(a).unwrap();
            let wb = f.word_from_raw(b).unwrap();
            prop_assert_eq!(wa.add(&wb).unwrap().raw(), sum);
        }

        #[test]
        fn round_trip_within_half_ulp(x in -1.98f64..1.98) {
            let f = fmt86();
            let w = f.encode(x).unwrap();
            prop_assert!((w.value() - x).abs() <= f.ulp() / 2.0 + 1e-15);
        }
    }
}
