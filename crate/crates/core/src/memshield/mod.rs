//! Storage protection models: parity-protected L1 caches with
//! invalidate-and-refetch recovery, and a (39,32) SECDED code.

mod cache;
mod secded;

pub use cache::{Backing, Cache, CacheConfig, CacheError, ParityLine, WritePolicy, LINE_WORDS};
pub use secded::{secded_decode, secded_encode, SecdedStatus, SecdedWord, CODEWORD_BITS};

/// Even parity bit of a word: set when the popcount is odd.
pub fn parity_encode(w: u32) -> bool {
    w.count_ones() & 1 == 1
}

#[cfg(test)]
mod tests {
    use super::parity_encode;

    #[test]
    fn parity_examples() {
        assert!(!parity_encode(0));
        assert!(parity_encode(0x8000_0000));
        assert!(!parity_encode(0xac));
    }
}
