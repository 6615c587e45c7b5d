use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("line {line}: expected 8 hex digits, found `{text}`")]
    BadHexLine { line: usize, text: String },
    #[error("binary image length {0} is not a multiple of 4")]
    RaggedBinary(usize),
    #[error("base address {0:#010x} is not 4-byte aligned")]
    MisalignedBase(u32),
    #[error("program is empty")]
    Empty,
}

/// A flat program image: little-endian words loaded contiguously at `base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    base: u32,
    words: Vec<u32>,
}

impl Program {
    pub fn new(base: u32, words: Vec<u32>) -> Result<Self, ProgramError> {
        if base & 3 != 0 {
            return Err(ProgramError::MisalignedBase(base));
        }
        if words.is_empty() {
            return Err(ProgramError::Empty);
        }
        Ok(Program { base, words })
    }

    /// Parses the line-oriented hex format: one 8-digit word per line,
    /// `#` starts a comment, blank lines are skipped.
    pub fn from_hex(base: u32, text: &str) -> Result<Self, ProgramError> {
        let mut words = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let digits = line.strip_prefix("0x").unwrap_or(line);
            let word = (digits.len() == 8)
                .then(|| u32::from_str_radix(digits, 16).ok())
                .flatten()
                .ok_or_else(|| ProgramError::BadHexLine { line: i + 1, text: raw.to_string() })?;
            words.push(word);
        }
        Program::new(base, words)
    }

    /// Flat little-endian binary image.
    pub fn from_bin(base: u32, bytes: &[u8]) -> Result<Self, ProgramError> {
        if !bytes.len().is_multiple_of(4) {
            return Err(ProgramError::RaggedBinary(bytes.len()));
        }
        let words = bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Program::new(base, words)
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            let _ = writeln!(s, "{w:08x}");
        }
        s
    }

    pub fn to_bin(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    /// One past the last byte of the image.
    pub fn end(&self) -> u64 {
        self.base as u64 + 4 * self.words.len() as u64
    }

    /// Same image placed at another base address.
    pub fn rebased(&self, base: u32) -> Result<Self, ProgramError> {
        Program::new(base, self.words.clone())
    }
}
