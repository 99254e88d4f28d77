//! Downlink feedback after the preamble phase.
//!
//! Two formats are supported:
//!
//! * **Full**: every channel's preamble count `k_m` as a fixed-width unsigned
//!   field of `⌈log₂(max_k+1)⌉` bits.
//! * **Reduced**: one bit per channel (`b_m = 1` iff `k_m = 1`) followed by the
//!   number of contending users `W` in a `⌈log₂(max_w+1)⌉`-bit field.
//!
//! Layout is normative: channel 0 first, every field most-significant bit
//! first. As bytes, a message is packed MSB-first and zero-padded at the end
//! to a byte boundary; decoders reject nonzero padding.
//!
//! Channel indices are zero-based throughout.

use std::fmt;
use std::str::FromStr;

use crate::analytic::field_width;
use crate::error::{Error, Result};

/// An ordered sequence of bits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Appends the low `width` bits of `value`, MSB first.
    pub fn push_field(&mut self, value: u64, width: u32) {
        for shift in (0..width).rev() {
            self.bits.push((value >> shift) & 1 == 1);
        }
    }

    fn read_field(&self, start: usize, width: u32) -> u64 {
        self.bits[start..start + width as usize]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Packs MSB-first, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |byte, (i, &b)| byte | (u8::from(b) << (7 - i)))
            })
            .collect()
    }

    /// Inverse of [`to_bytes`](Self::to_bytes) for a message of `bit_len` bits.
    pub fn from_bytes(bytes: &[u8], bit_len: usize) -> Result<Self> {
        let expected = bit_len.div_ceil(8);
        if bytes.len() != expected {
            return Err(Error::LengthMismatch {
                expected: expected * 8,
                actual: bytes.len() * 8,
            });
        }
        let bits: Vec<bool> = (0..bytes.len() * 8)
            .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
            .collect();
        if bits[bit_len..].iter().any(|&b| b) {
            return Err(Error::NonZeroPadding);
        }
        Ok(Self {
            bits: bits[..bit_len].to_vec(),
        })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid("bits", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(|bits| Self { bits })
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

/// Per-channel preamble counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullFeedback {
    pub counts: Vec<u32>,
}

impl FullFeedback {
    pub fn channels(&self) -> usize {
        self.counts.len()
    }

    /// Reduces to the bitmap + W form. `W = Σ k_m - Σ b_m`.
    pub fn reduce(&self) -> ReducedFeedback {
        ReducedFeedback::from_counts(&self.counts)
    }
}

/// Singleton bitmap plus the number of users in contention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedFeedback {
    pub bitmap: Vec<bool>,
    pub contending: u64,
}

impl ReducedFeedback {
    pub fn from_counts(counts: &[u32]) -> Self {
        let bitmap: Vec<bool> = counts.iter().map(|&k| k == 1).collect();
        let total: u64 = counts.iter().map(|&k| u64::from(k)).sum();
        let singletons = bitmap.iter().filter(|&&b| b).count() as u64;
        Self {
            bitmap,
            contending: total - singletons,
        }
    }

    pub fn channels(&self) -> usize {
        self.bitmap.len()
    }

    pub fn singletons(&self) -> usize {
        self.bitmap.iter().filter(|&&b| b).count()
    }

    /// Channels left for contention, `L_free = M - Σ b_m`.
    pub fn free_channels(&self) -> usize {
        self.channels() - self.singletons()
    }

    /// Channels with `b_m = 0`, in ascending order.
    pub fn contended_channels(&self) -> Vec<usize> {
        self.bitmap
            .iter()
            .enumerate()
            .filter_map(|(m, &b)| (!b).then_some(m))
            .collect()
    }
}

/// A decoded downlink message in either format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedbackMessage {
    Full(FullFeedback),
    Reduced(ReducedFeedback),
}

impl FeedbackMessage {
    /// Everything a user needs for the data-phase decision.
    pub fn reduced(&self) -> ReducedFeedback {
        match self {
            FeedbackMessage::Full(full) => full.reduce(),
            FeedbackMessage::Reduced(r) => r.clone(),
        }
    }
}

pub fn encode_full(counts: &[u32], max_k: u64) -> Result<BitString> {
    if max_k == 0 {
        return Err(Error::invalid("max_k", "must be at least 1"));
    }
    let width = field_width(max_k);
    let mut out = BitString::new();
    for &k in counts {
        if u64::from(k) > max_k {
            return Err(Error::FieldOverflow {
                value: u64::from(k),
                max: max_k,
            });
        }
        out.push_field(u64::from(k), width);
    }
    Ok(out)
}

pub fn decode_full(bits: &BitString, channels: usize, max_k: u64) -> Result<FullFeedback> {
    if max_k == 0 {
        return Err(Error::invalid("max_k", "must be at least 1"));
    }
    let width = field_width(max_k);
    let expected = channels * width as usize;
    if bits.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: bits.len(),
        });
    }
    let counts = (0..channels)
        .map(|m| {
            let v = bits.read_field(m * width as usize, width);
            if v > max_k {
                Err(Error::FieldOverflow { value: v, max: max_k })
            } else {
                Ok(v as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FullFeedback { counts })
}

pub fn encode_reduced(fb: &ReducedFeedback, max_w: u64) -> Result<BitString> {
    if max_w == 0 {
        return Err(Error::invalid("max_w", "must be at least 1"));
    }
    if fb.contending > max_w {
        return Err(Error::FieldOverflow {
            value: fb.contending,
            max: max_w,
        });
    }
    let mut out = BitString::from(fb.bitmap.clone());
    out.push_field(fb.contending, field_width(max_w));
    Ok(out)
}

pub fn decode_reduced(bits: &BitString, channels: usize, max_w: u64) -> Result<ReducedFeedback> {
    if max_w == 0 {
        return Err(Error::invalid("max_w", "must be at least 1"));
    }
    let width = field_width(max_w);
    let expected = channels + width as usize;
    if bits.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: bits.len(),
        });
    }
    let contending = bits.read_field(channels, width);
    if contending > max_w {
        return Err(Error::FieldOverflow {
            value: contending,
            max: max_w,
        });
    }
    Ok(ReducedFeedback {
        bitmap: bits.bits()[..channels].to_vec(),
        contending,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// Alone on its channel; transmits there without contention.
    ContentionFree,
    /// Shares its channel; contends for the free channels.
    InContention,
}

/// A user's reading of the reduced feedback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserView {
    pub group: Group,
    pub contended_channels: Vec<usize>,
    pub free_channels: usize,
    pub contending: u64,
}

pub fn derive_user_view(fb: &ReducedFeedback, my_channel: usize) -> Result<UserView> {
    let Some(&single) = fb.bitmap.get(my_channel) else {
        return Err(Error::IndexOutOfRange {
            index: my_channel,
            len: fb.channels(),
        });
    };
    Ok(UserView {
        group: if single {
            Group::ContentionFree
        } else {
            Group::InContention
        },
        contended_channels: fb.contended_channels(),
        free_channels: fb.free_channels(),
        contending: fb.contending,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::feedback_bits;
    use proptest::prelude::*;

    const SCENARIO: [u32; 4] = [0, 0, 1, 2];

    #[test]
    fn scenario_full_encoding() {
        let bits = encode_full(&SCENARIO, 3).unwrap();
        assert_eq!(bits.to_string(), "00000110");
        assert_eq!(decode_full(&bits, 4, 3).unwrap().counts, SCENARIO);
    }

    #[test]
    fn zero_counts_encode_to_zeros() {
        let bits = encode_full(&[0; 7], 5).unwrap();
        assert_eq!(bits.len(), 21);
        assert!(bits.bits().iter().all(|&b| !b));
    }

    #[test]
    fn full_rejects_overflow_and_bad_length() {
        assert_eq!(encode_full(&[0, 4], 3), Err(Error::FieldOverflow { value: 4, max: 3 }));
        let bits: BitString = "0000011".parse().unwrap();
        assert!(matches!(decode_full(&bits, 4, 3), Err(Error::LengthMismatch { .. })));
        // Field value 3 with max_k = 2 (width 2) is out of range.
        let bits: BitString = "11".parse().unwrap();
        assert!(matches!(decode_full(&bits, 1, 2), Err(Error::FieldOverflow { .. })));
    }

    #[test]
    fn scenario_reduced_encoding() {
        let fb = ReducedFeedback::from_counts(&SCENARIO);
        assert_eq!(fb.bitmap, vec![false, false, true, false]);
        assert_eq!(fb.contending, 2);
        let bits = encode_reduced(&fb, 8).unwrap();
        assert_eq!(bits.to_string(), "00100010");
        assert_eq!(decode_reduced(&bits, 4, 8).unwrap(), fb);
    }

    #[test]
    fn reduced_all_singletons() {
        let fb = ReducedFeedback::from_counts(&[1, 1, 1]);
        assert_eq!(fb.contending, 0);
        let bits = encode_reduced(&fb, 4).unwrap();
        assert_eq!(bits.to_string(), "111000");
        assert_eq!(decode_reduced(&bits, 3, 4).unwrap(), fb);
    }

    #[test]
    fn reduced_rejects_overflow_and_bad_length() {
        let fb = ReducedFeedback {
            bitmap: vec![false; 3],
            contending: 9,
        };
        assert!(matches!(encode_reduced(&fb, 8), Err(Error::FieldOverflow { .. })));
        let bits: BitString = "0010001".parse().unwrap();
        assert!(matches!(decode_reduced(&bits, 4, 8), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn user_views_for_scenario() {
        let fb = ReducedFeedback::from_counts(&SCENARIO);
        let lone = derive_user_view(&fb, 2).unwrap();
        assert_eq!(lone.group, Group::ContentionFree);
        let shared = derive_user_view(&fb, 3).unwrap();
        assert_eq!(shared.group, Group::InContention);
        assert_eq!(shared.contended_channels, vec![0, 1, 3]);
        assert_eq!(shared.free_channels, 3);
        assert_eq!(shared.contending, 2);
        assert!(derive_user_view(&fb, 4).is_err());
    }

    #[test]
    fn all_singletons_view() {
        let fb = ReducedFeedback::from_counts(&[1, 1, 1, 1]);
        for m in 0..4 {
            let v = derive_user_view(&fb, m).unwrap();
            assert_eq!(v.group, Group::ContentionFree);
            assert_eq!(v.free_channels, 0);
            assert!(v.contended_channels.is_empty());
        }
    }

    #[test]
    fn byte_packing() {
        let bits: BitString = "1010000011".parse().unwrap();
        let bytes = bits.to_bytes();
        assert_eq!(bytes, vec![0b1010_0000, 0b1100_0000]);
        assert_eq!(BitString::from_bytes(&bytes, 10).unwrap(), bits);
        assert_eq!(
            BitString::from_bytes(&[0b1010_0000, 0b1110_0000], 10),
            Err(Error::NonZeroPadding)
        );
        assert!(matches!(
            BitString::from_bytes(&[0], 10),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(BitString::new().to_bytes().is_empty());
    }

    fn full_case() -> impl Strategy<Value = (u64, Vec<u32>)> {
        (1u64..40).prop_flat_map(|max_k| (Just(max_k), prop::collection::vec(0..=max_k as u32, 1..80)))
    }

    fn reduced_case() -> impl Strategy<Value = (u64, ReducedFeedback)> {
        (1u64..500).prop_flat_map(|max_w| {
            (Just(max_w), prop::collection::vec(any::<bool>(), 1..80), 0..=max_w)
                .prop_map(|(max_w, bitmap, contending)| (max_w, ReducedFeedback { bitmap, contending }))
        })
    }

    proptest! {
        #[test]
        fn full_roundtrip((max_k, counts) in full_case()) {
            let bits = encode_full(&counts, max_k).unwrap();
            let expected = feedback_bits(counts.len() as u64, max_k, 1).unwrap().full;
            prop_assert_eq!(bits.len() as u64, expected);
            let bytes = bits.to_bytes();
            let back = BitString::from_bytes(&bytes, bits.len()).unwrap();
            prop_assert_eq!(decode_full(&back, counts.len(), max_k).unwrap().counts, counts);
        }

        #[test]
        fn reduced_roundtrip((max_w, fb) in reduced_case()) {
            let bits = encode_reduced(&fb, max_w).unwrap();
            let expected = feedback_bits(fb.channels() as u64, 1, max_w).unwrap().reduced;
            prop_assert_eq!(bits.len() as u64, expected);
            let back = decode_reduced(&bits, fb.channels(), max_w).unwrap();
            for m in 0..fb.channels() {
                prop_assert_eq!(derive_user_view(&back, m).unwrap(), derive_user_view(&fb, m).unwrap());
            }
            prop_assert_eq!(back, fb);
        }
    }
}
