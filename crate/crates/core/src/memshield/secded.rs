//! Extended Hamming (39,32) SECDED code.
//!
//! Layout: codeword bit `i` (0-based) holds Hamming position `i + 1` for
//! positions 1..=38; positions 1, 2, 4, 8, 16 and 32 carry check bits and
//! the remaining 32 positions carry the data bits in ascending order. Bit 38
//! (the 39th bit) is the overall parity of bits 0..=37.

use serde::Serialize;

pub const CODEWORD_BITS: u32 = 39;
const HAMMING_BITS: u32 = 38;
const CHECK_POSITIONS: [u32; 6] = [1, 2, 4, 8, 16, 32];

/// Hamming positions (1-based) of data bits 0..32.
const DATA_POSITIONS: [u32; 32] = data_positions();

const fn data_positions() -> [u32; 32] {
    let mut out = [0u32; 32];
    let mut pos = 1;
    let mut i = 0;
    while i < 32 {
        if pos & (pos - 1) != 0 {
            out[i] = pos;
            i += 1;
        }
        pos += 1;
    }
    out
}

/// A 39-bit SECDED codeword, stored in the low bits of a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecdedWord(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecdedStatus {
    Clean,
    Corrected,
    DetectedUncorrectable,
}

impl SecdedWord {
    pub fn from_bits(bits: u64) -> Self {
        SecdedWord(bits & ((1 << CODEWORD_BITS) - 1))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn flip(self, bit: u32) -> Self {
        assert!(bit < CODEWORD_BITS);
        SecdedWord(self.0 ^ (1 << bit))
    }

    /// Data bits read straight out of the data positions.
    pub fn data(self) -> u32 {
        DATA_POSITIONS
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &pos)| acc | (((self.0 >> (pos - 1)) & 1) as u32) << i)
    }

    pub fn is_check_bit(bit: u32) -> bool {
        bit == HAMMING_BITS || CHECK_POSITIONS.contains(&(bit + 1))
    }
}

/// XOR of the positions of all set bits in the Hamming part.
fn syndrome(bits: u64) -> u32 {
    let mut s = 0;
    let mut rest = bits & ((1 << HAMMING_BITS) - 1);
    while rest != 0 {
        let i = rest.trailing_zeros();
        s ^= i + 1;
        rest &= rest - 1;
    }
    s
}

pub fn secded_encode(w: u32) -> SecdedWord {
    let mut bits = 0u64;
    for (i, &pos) in DATA_POSITIONS.iter().enumerate() {
        bits |= (((w >> i) & 1) as u64) << (pos - 1);
    }
    let s = syndrome(bits);
    for &p in &CHECK_POSITIONS {
        if s & p != 0 {
            bits |= 1 << (p - 1);
        }
    }
    let overall = (bits.count_ones() & 1) as u64;
    SecdedWord(bits | overall << HAMMING_BITS)
}

pub fn secded_decode(c: SecdedWord) -> (u32, SecdedStatus) {
    let s = syndrome(c.0);
    let odd = c.0.count_ones() & 1 == 1;
    match (s, odd) {
        (0, false) => (c.data(), SecdedStatus::Clean),
        // only the overall parity bit flipped; the data is intact
        (0, true) => (c.data(), SecdedStatus::Corrected),
        (s, true) if s <= HAMMING_BITS => (SecdedWord(c.0 ^ 1 << (s - 1)).data(), SecdedStatus::Corrected),
        _ => (c.data(), SecdedStatus::DetectedUncorrectable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_encodes_to_zero() {
        assert_eq!(secded_encode(0).bits(), 0);
    }

    #[test]
    fn layout_is_systematic() {
        for w in [0u32, 1, 0x8000_0000, 0xdead_beef, u32::MAX] {
            assert_eq!(secded_encode(w).data(), w);
        }
        assert_eq!(DATA_POSITIONS[0], 3);
        assert_eq!(DATA_POSITIONS[31], 38);
        let checks = (0..CODEWORD_BITS).filter(|&b| SecdedWord::is_check_bit(b)).count();
        assert_eq!(checks, 7);
    }

    #[test]
    fn single_flips_are_corrected() {
        let c = secded_encode(0x1234_5678);
        for bit in 0..CODEWORD_BITS {
            assert_eq!(secded_decode(c.flip(bit)), (0x1234_5678, SecdedStatus::Corrected));
        }
    }

    #[test]
    fn syndrome_beyond_codeword_is_uncorrectable() {
        // positions 37 and 2 sum (xor) to 39, outside the Hamming range, with
        // an odd flip count made up by the parity bit
        let c = secded_encode(0).flip(36).flip(1).flip(38);
        assert_eq!(secded_decode(c).1, SecdedStatus::DetectedUncorrectable);
    }
}
