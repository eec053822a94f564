//! Deterministic bit-level encoding primitives.
//!
//! Unaligned, MSB-first bit packing. Constrained integers are encoded as
//! the offset from the lower bound in exactly `ceil(log2(range_size))`
//! bits (zero bits for a singleton range). Character strings carry a
//! constrained length field followed by one octet per character. Reals
//! are IEEE-754 binary64, big-endian. Finalized messages are padded with
//! zero bits to the next octet boundary; decoders reject non-zero padding
//! and trailing data so every valid encoding is canonical.

use thiserror::Error;

/// Errors raised by the bit-level primitives and the schema codecs built
/// on top of them.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("{field}: value {value} outside [{lb}, {ub}]")]
    OutOfRange {
        field: &'static str,
        value: u64,
        lb: u64,
        ub: u64,
    },
    #[error("{field}: need {needed} bits, {remaining} remain")]
    Truncated {
        field: &'static str,
        needed: usize,
        remaining: usize,
    },
    #[error("{field}: length {len} outside [{min}, {max}]")]
    LengthOutOfBounds {
        field: &'static str,
        len: usize,
        min: usize,
        max: usize,
    },
    #[error("{field}: character {ch:?} does not fit in 8 bits")]
    CharTooWide { field: &'static str, ch: char },
    #[error("{field}: choice index {index} has no alternative (only {alternatives})")]
    BadChoice {
        field: &'static str,
        index: u64,
        alternatives: u64,
    },
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("non-zero padding bits after message body")]
    NonZeroPadding,
    #[error("{remaining} unconsumed bits after message body")]
    TrailingData { remaining: usize },
    #[error("invalid hex: {0}")]
    BadHex(String),
}

/// Bits needed for a constrained value in `[lb, ub]`: `ceil(log2(ub-lb+1))`,
/// zero when the range is a singleton.
pub fn constrained_width(lb: u64, ub: u64) -> u32 {
    let span = ub - lb;
    if span == 0 {
        0
    } else {
        64 - span.leading_zeros()
    }
}

/// Append-only bit sequence during encode; cursor-driven reader during
/// decode. Pad bits past `bit_len` are always zero by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitBuffer {
    bytes: Vec<u8>,
    bit_len: usize,
    cursor: usize,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Decode-mode constructor: every bit of `octets` is readable.
    pub fn from_octets(octets: &[u8]) -> Self {
        Self {
            bytes: octets.to_vec(),
            bit_len: octets.len() * 8,
            cursor: 0,
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.bit_len - self.cursor
    }

    pub fn append_bit(&mut self, bit: bool) {
        let idx = self.bit_len / 8;
        if idx == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[idx] |= 0x80 >> (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn append_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.append_bit(value >> i & 1 == 1);
        }
    }

    /// Appends `value - lb` in `constrained_width(lb, ub)` bits.
    pub fn append_constrained_uint(
        &mut self,
        field: &'static str,
        value: u64,
        lb: u64,
        ub: u64,
    ) -> Result<(), CodecError> {
        if lb > ub || value < lb || value > ub {
            return Err(CodecError::OutOfRange {
                field,
                value,
                lb,
                ub,
            });
        }
        self.append_bits(value - lb, constrained_width(lb, ub));
        Ok(())
    }

    /// Appends exactly 64 bits, big-endian.
    pub fn append_fixed_uint64(&mut self, value: u64) {
        self.append_bits(value, 64);
    }

    pub fn append_bool(&mut self, value: bool) {
        self.append_bit(value);
    }

    /// IEEE-754 binary64, 64 bits big-endian.
    pub fn append_real(&mut self, value: f64) {
        self.append_bits(value.to_bits(), 64);
    }

    /// Constrained length field (lb = `min_len`, ub = `max_len`) followed
    /// by one octet per character. Characters above U+00FF are rejected.
    pub fn append_chars(
        &mut self,
        field: &'static str,
        s: &str,
        min_len: usize,
        max_len: usize,
    ) -> Result<(), CodecError> {
        let len = s.chars().count();
        if len < min_len || len > max_len {
            return Err(CodecError::LengthOutOfBounds {
                field,
                len,
                min: min_len,
                max: max_len,
            });
        }
        self.append_constrained_uint(field, len as u64, min_len as u64, max_len as u64)?;
        for ch in s.chars() {
            let code = ch as u32;
            if code > 0xFF {
                return Err(CodecError::CharTooWide { field, ch });
            }
            self.append_bits(code as u64, 8);
        }
        Ok(())
    }

    /// Constrained length field followed by the raw octets.
    pub fn append_octet_string(
        &mut self,
        field: &'static str,
        octets: &[u8],
        min_len: usize,
        max_len: usize,
    ) -> Result<(), CodecError> {
        if octets.len() < min_len || octets.len() > max_len {
            return Err(CodecError::LengthOutOfBounds {
                field,
                len: octets.len(),
                min: min_len,
                max: max_len,
            });
        }
        self.append_constrained_uint(field, octets.len() as u64, min_len as u64, max_len as u64)?;
        for &b in octets {
            self.append_bits(b as u64, 8);
        }
        Ok(())
    }

    pub fn read_bit(&mut self, field: &'static str) -> Result<bool, CodecError> {
        if self.cursor >= self.bit_len {
            return Err(CodecError::Truncated {
                field,
                needed: 1,
                remaining: 0,
            });
        }
        let bit = self.bytes[self.cursor / 8] & (0x80 >> (self.cursor % 8)) != 0;
        self.cursor += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, field: &'static str, width: u32) -> Result<u64, CodecError> {
        debug_assert!(width <= 64);
        if self.remaining() < width as usize {
            return Err(CodecError::Truncated {
                field,
                needed: width as usize,
                remaining: self.remaining(),
            });
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = value << 1 | self.read_bit(field)? as u64;
        }
        Ok(value)
    }

    /// Reads `constrained_width(lb, ub)` bits and returns `lb + offset`;
    /// offsets past `ub` (possible when the range is not a power of two)
    /// are rejected.
    pub fn read_constrained_uint(
        &mut self,
        field: &'static str,
        lb: u64,
        ub: u64,
    ) -> Result<u64, CodecError> {
        let offset = self.read_bits(field, constrained_width(lb, ub))?;
        let value = lb.checked_add(offset).ok_or(CodecError::OutOfRange {
            field,
            value: u64::MAX,
            lb,
            ub,
        })?;
        if value > ub {
            return Err(CodecError::OutOfRange {
                field,
                value,
                lb,
                ub,
            });
        }
        Ok(value)
    }

    pub fn read_fixed_uint64(&mut self, field: &'static str) -> Result<u64, CodecError> {
        self.read_bits(field, 64)
    }

    pub fn read_bool(&mut self, field: &'static str) -> Result<bool, CodecError> {
        self.read_bit(field)
    }

    pub fn read_real(&mut self, field: &'static str) -> Result<f64, CodecError> {
        Ok(f64::from_bits(self.read_bits(field, 64)?))
    }

    pub fn read_chars(
        &mut self,
        field: &'static str,
        min_len: usize,
        max_len: usize,
    ) -> Result<String, CodecError> {
        let len = self.read_constrained_uint(field, min_len as u64, max_len as u64)?;
        let mut s = String::with_capacity(len as usize);
        for _ in 0..len {
            s.push(char::from(self.read_bits(field, 8)? as u8));
        }
        Ok(s)
    }

    pub fn read_octet_string(
        &mut self,
        field: &'static str,
        min_len: usize,
        max_len: usize,
    ) -> Result<Vec<u8>, CodecError> {
        let len = self.read_constrained_uint(field, min_len as u64, max_len as u64)?;
        let mut out = Vec::with_capacity(len as usize);
        for _ in 0..len {
            out.push(self.read_bits(field, 8)? as u8);
        }
        Ok(out)
    }

    /// Pads with zero bits to the next octet boundary and returns the
    /// octets. `bit_len` stays available as metadata on the buffer.
    pub fn finalize(&self) -> Vec<u8> {
        self.bytes.clone()
    }

    /// Decode-side closing check: fewer than 8 bits may remain and all of
    /// them must be zero.
    pub fn finish(&mut self) -> Result<(), CodecError> {
        if self.remaining() >= 8 {
            return Err(CodecError::TrailingData {
                remaining: self.remaining(),
            });
        }
        while self.remaining() > 0 {
            if self.read_bit("padding")? {
                return Err(CodecError::NonZeroPadding);
            }
        }
        Ok(())
    }
}

/// Uppercase hex, no separators.
pub fn to_hex(octets: &[u8]) -> String {
    hex::encode_upper(octets)
}

pub fn from_hex(s: &str) -> Result<Vec<u8>, CodecError> {
    hex::decode(s).map_err(|e| CodecError::BadHex(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constrained_uint_listing2_anchor() {
        // 1000 in [1, 65536] encodes as the two octets 0x03 0xE7
        let mut buf = BitBuffer::new();
        buf.append_constrained_uint("period", 1000, 1, 65536)
            .unwrap();
        assert_eq!(buf.bit_len(), 16);
        assert_eq!(buf.finalize(), vec![0x03, 0xE7]);
        assert_eq!(to_hex(&buf.finalize()), "03E7");
    }

    #[test]
    fn singleton_range_appends_no_bits() {
        let mut buf = BitBuffer::new();
        buf.append_constrained_uint("x", 7, 7, 7).unwrap();
        assert_eq!(buf.bit_len(), 0);
        assert_eq!(buf.finalize(), Vec::<u8>::new());
        // and reads back without moving the cursor
        let mut rd = BitBuffer::from_octets(&[]);
        assert_eq!(rd.read_constrained_uint("x", 5, 5).unwrap(), 5);
        assert_eq!(rd.cursor(), 0);
    }

    #[test]
    fn width_is_ceil_log2_of_range_size() {
        let mut buf = BitBuffer::new();
        buf.append_constrained_uint("x", 3, 0, 4).unwrap();
        assert_eq!(buf.bit_len(), 3); // ceil(log2 5) = 3, offset 3 = 011
        assert_eq!(buf.finalize(), vec![0b0110_0000]);
        assert_eq!(constrained_width(1, 65536), 16);
        assert_eq!(constrained_width(1, 150), 8);
        assert_eq!(constrained_width(0, u64::MAX), 64);
    }

    #[test]
    fn out_of_range_error_names_field_and_bounds() {
        let mut buf = BitBuffer::new();
        let err = buf
            .append_constrained_uint("style_id", 9, 0, 4)
            .unwrap_err();
        assert_eq!(
            err,
            CodecError::OutOfRange {
                field: "style_id",
                value: 9,
                lb: 0,
                ub: 4
            }
        );
        assert!(err.to_string().contains("style_id"));
    }

    #[test]
    fn truncation_error_reports_bit_counts() {
        let mut rd = BitBuffer::from_octets(&[0x03]);
        let err = rd.read_constrained_uint("period", 1, 65536).unwrap_err();
        assert_eq!(
            err,
            CodecError::Truncated {
                field: "period",
                needed: 16,
                remaining: 8
            }
        );
    }

    #[test]
    fn decode_rejects_offset_past_upper_bound() {
        // 3 bits for [0,4]; offset 7 has no value
        let mut buf = BitBuffer::new();
        buf.append_bits(7, 3);
        let mut rd = BitBuffer::from_octets(&buf.finalize());
        assert!(matches!(
            rd.read_constrained_uint("x", 0, 4),
            Err(CodecError::OutOfRange { .. })
        ));
    }

    #[test]
    fn fixed_uint64_edges() {
        let mut buf = BitBuffer::new();
        buf.append_fixed_uint64(0);
        assert_eq!(buf.finalize(), vec![0u8; 8]);
        let mut buf = BitBuffer::new();
        buf.append_fixed_uint64(1);
        assert_eq!(buf.finalize(), vec![0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn chars_listing2_metric_name() {
        // length range [1,150] -> 8-bit length field, then 8 bits per char
        let mut buf = BitBuffer::new();
        buf.append_chars("name", "DRB.UEThpDl", 1, 150).unwrap();
        assert_eq!(buf.bit_len(), 8 + 11 * 8);
        let mut rd = BitBuffer::from_octets(&buf.finalize());
        assert_eq!(rd.read_chars("name", 1, 150).unwrap(), "DRB.UEThpDl");
    }

    #[test]
    fn empty_string_with_zero_bounds_appends_nothing() {
        let mut buf = BitBuffer::new();
        buf.append_chars("s", "", 0, 0).unwrap();
        assert_eq!(buf.bit_len(), 0);
    }

    #[test]
    fn wide_char_rejected() {
        let mut buf = BitBuffer::new();
        let err = buf.append_chars("s", "é✓", 0, 10).unwrap_err();
        assert!(matches!(
            err,
            CodecError::CharTooWide {
                field: "s",
                ch: '✓'
            }
        ));
    }

    #[test]
    fn finalize_pads_with_zeros() {
        let mut buf = BitBuffer::new();
        buf.append_bits(0b101, 3);
        assert_eq!(buf.finalize(), vec![0xA0]);
        assert_eq!(buf.bit_len(), 3);
        // empty buffer finalizes to an empty octet array
        assert_eq!(BitBuffer::new().finalize(), Vec::<u8>::new());
    }

    #[test]
    fn finish_rejects_nonzero_padding_and_trailing_data() {
        let mut rd = BitBuffer::from_octets(&[0xA0]);
        rd.read_bits("x", 3).unwrap();
        assert_eq!(rd.finish(), Ok(()));

        let mut rd = BitBuffer::from_octets(&[0xA1]);
        rd.read_bits("x", 3).unwrap();
        assert_eq!(rd.finish(), Err(CodecError::NonZeroPadding));

        let mut rd = BitBuffer::from_octets(&[0xA0, 0x00]);
        rd.read_bits("x", 3).unwrap();
        assert_eq!(rd.finish(), Err(CodecError::TrailingData { remaining: 13 }));
    }

    #[test]
    fn hex_round_trip_uppercase() {
        assert_eq!(to_hex(&[0x03, 0xE7]), "03E7");
        assert_eq!(from_hex("03E7").unwrap(), vec![0x03, 0xE7]);
        assert!(from_hex("0G").is_err());
        assert!(from_hex("ABC").is_err());
    }

    proptest! {
        #[test]
        fn constrained_uint_round_trip(lb in 0u64..1 << 48, span in 0u64..1 << 16, off in 0u64..1 << 16) {
            let ub = lb + span;
            let value = lb + off.min(span);
            let mut buf = BitBuffer::new();
            buf.append_constrained_uint("v", value, lb, ub).unwrap();
            prop_assert_eq!(buf.bit_len(), constrained_width(lb, ub) as usize);
            let mut rd = BitBuffer::from_octets(&buf.finalize());
            prop_assert_eq!(rd.read_constrained_uint("v", lb, ub).unwrap(), value);
            prop_assert_eq!(rd.cursor(), constrained_width(lb, ub) as usize);
            rd.finish().unwrap();
        }

        #[test]
        fn fixed_uint64_round_trip(v in any::<u64>()) {
            let mut buf = BitBuffer::new();
            buf.append_fixed_uint64(v);
            let mut rd = BitBuffer::from_octets(&buf.finalize());
            prop_assert_eq!(rd.read_fixed_uint64("v").unwrap(), v);
        }

        #[test]
        fn chars_round_trip(s in "[ -~]{0,40}") {
            let mut buf = BitBuffer::new();
            buf.append_chars("s", &s, 0, 40).unwrap();
            let mut rd = BitBuffer::from_octets(&buf.finalize());
            prop_assert_eq!(rd.read_chars("s", 0, 40).unwrap(), s);
            rd.finish().unwrap();
        }

        #[test]
        fn real_round_trip(v in any::<f64>().prop_filter("no NaN", |v| !v.is_nan())) {
            let mut buf = BitBuffer::new();
            buf.append_real(v);
            let mut rd = BitBuffer::from_octets(&buf.finalize());
            prop_assert_eq!(rd.read_real("v").unwrap().to_bits(), v.to_bits());
        }
    }
}
