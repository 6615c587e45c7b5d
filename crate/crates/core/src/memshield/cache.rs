use thiserror::Error;

use super::parity_encode;

/// Words per cache line. Fixed so flip enumeration covers whole lines.
pub const LINE_WORDS: usize = 8;
const LINE_BYTES: u32 = 4 * LINE_WORDS as u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CacheError {
    #[error("address {0:#010x} is outside the backing store")]
    AccessFault(u32),
    #[error("address {0:#010x} is not word aligned")]
    Misaligned(u32),
    #[error("write to a read-only cache")]
    PolicyViolation,
    #[error("line count {0} is not a non-zero power of two")]
    BadGeometry(usize),
}

/// Word-granular backing store ("upper levels of the hierarchy").
pub trait Backing {
    fn read_word(&self, addr: u32) -> Option<u32>;
    fn write_word(&mut self, addr: u32, value: u32) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WritePolicy {
    ReadOnly,
    WriteThrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheConfig {
    pub lines: usize,
    pub policy: WritePolicy,
}

impl CacheConfig {
    pub fn new(lines: usize, policy: WritePolicy) -> Result<Self, CacheError> {
        if lines == 0 || !lines.is_power_of_two() {
            return Err(CacheError::BadGeometry(lines));
        }
        Ok(CacheConfig { lines, policy })
    }
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { lines: 16, policy: WritePolicy::ReadOnly }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParityLine {
    pub tag: u32,
    pub valid: bool,
    pub words: [u32; LINE_WORDS],
    pub parity: [bool; LINE_WORDS],
}

impl ParityLine {
    pub fn parity_ok(&self, word: usize) -> bool {
        parity_encode(self.words[word]) == self.parity[word]
    }
}

/// Direct-mapped cache with per-word even parity and no-write-allocate
/// write-through semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cache {
    config: CacheConfig,
    lines: Vec<ParityLine>,
    recoveries: u64,
}

impl Cache {
    pub fn new(config: CacheConfig) -> Self {
        Cache { config, lines: vec![ParityLine::default(); config.lines], recoveries: 0 }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    /// Parity-triggered invalidate-and-refetch events so far.
    pub fn recoveries(&self) -> u64 {
        self.recoveries
    }

    pub fn lines(&self) -> &[ParityLine] {
        &self.lines
    }

    fn locate(&self, addr: u32) -> (usize, u32, usize) {
        let line_addr = addr / LINE_BYTES;
        let index = line_addr as usize % self.config.lines;
        let tag = line_addr / self.config.lines as u32;
        let word = (addr % LINE_BYTES / 4) as usize;
        (index, tag, word)
    }

    fn fill(&mut self, addr: u32, backing: &impl Backing) -> Result<(), CacheError> {
        let (index, tag, _) = self.locate(addr);
        let base = addr & !(LINE_BYTES - 1);
        let mut line = ParityLine { tag, valid: true, ..Default::default() };
        for i in 0..LINE_WORDS {
            let a = base + 4 * i as u32;
            let w = backing.read_word(a).ok_or(CacheError::AccessFault(a))?;
            line.words[i] = w;
            line.parity[i] = parity_encode(w);
        }
        self.lines[index] = line;
        Ok(())
    }

    fn resident(&self, addr: u32) -> Option<(usize, usize)> {
        let (index, tag, word) = self.locate(addr);
        let line = &self.lines[index];
        (line.valid && line.tag == tag).then_some((index, word))
    }

    /// Parity-checked read. A word failing its check is never returned: the
    /// line is invalidated and refetched from `backing` instead.
    pub fn read(&mut self, addr: u32, backing: &impl Backing) -> Result<u32, CacheError> {
        self.read_inner(addr, backing, true)
    }

    /// Read that trusts the stored data; used for copies that are checked by
    /// other means.
    pub fn read_unchecked(&mut self, addr: u32, backing: &impl Backing) -> Result<u32, CacheError> {
        self.read_inner(addr, backing, false)
    }

    fn read_inner(&mut self, addr: u32, backing: &impl Backing, check: bool) -> Result<u32, CacheError> {
        if addr & 3 != 0 {
            return Err(CacheError::Misaligned(addr));
        }
        if backing.read_word(addr).is_none() {
            return Err(CacheError::AccessFault(addr));
        }
        match self.resident(addr) {
            Some((index, word)) if !check || self.lines[index].parity_ok(word) => {
                Ok(self.lines[index].words[word])
            }
            Some((index, _)) => {
                self.lines[index].valid = false;
                self.recoveries += 1;
                self.fill(addr, backing)?;
                Ok(self.resident(addr).map(|(i, w)| self.lines[i].words[w]).expect("filled"))
            }
            None => {
                self.fill(addr, backing)?;
                Ok(self.resident(addr).map(|(i, w)| self.lines[i].words[w]).expect("filled"))
            }
        }
    }

    /// Write-through store: the backing store is updated immediately and a
    /// resident copy is kept in sync. Misses do not allocate.
    pub fn write(&mut self, addr: u32, value: u32, backing: &mut impl Backing) -> Result<(), CacheError> {
        if self.config.policy == WritePolicy::ReadOnly {
            return Err(CacheError::PolicyViolation);
        }
        if addr & 3 != 0 {
            return Err(CacheError::Misaligned(addr));
        }
        if !backing.write_word(addr, value) {
            return Err(CacheError::AccessFault(addr));
        }
        self.update_if_resident(addr, value);
        Ok(())
    }

    /// Resident word at `addr`, without a parity check or a fill.
    pub fn peek(&self, addr: u32) -> Option<u32> {
        self.resident(addr & !3).map(|(i, w)| self.lines[i].words[w])
    }

    /// Refreshes a resident copy without touching the backing store.
    pub fn update_if_resident(&mut self, addr: u32, value: u32) {
        if let Some((index, word)) = self.resident(addr & !3) {
            self.lines[index].words[word] = value;
            self.lines[index].parity[word] = parity_encode(value);
        }
    }

    /// Flips one stored data bit, leaving its parity bit untouched.
    pub fn corrupt(&mut self, line: usize, word: usize, mask: u32) -> bool {
        match self.lines.get_mut(line) {
            Some(l) if word < LINE_WORDS => {
                l.words[word] ^= mask;
                true
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat(Vec<u32>);

    impl Backing for Flat {
        fn read_word(&self, addr: u32) -> Option<u32> {
            self.0.get(addr as usize / 4).copied()
        }
        fn write_word(&mut self, addr: u32, value: u32) -> bool {
            match self.0.get_mut(addr as usize / 4) {
                Some(w) => {
                    *w = value;
                    true
                }
                None => false,
            }
        }
    }

    fn backing() -> Flat {
        Flat((0..256u32).map(|i| i.wrapping_mul(0x9e37_79b9)).collect())
    }

    #[test]
    fn clean_hit_keeps_count() {
        let mem = backing();
        let mut c = Cache::new(CacheConfig::default());
        assert_eq!(c.read(0x24, &mem).unwrap(), mem.0[9]);
        assert_eq!(c.read(0x24, &mem).unwrap(), mem.0[9]);
        assert_eq!(c.recoveries(), 0);
    }

    #[test]
    fn single_flip_is_recovered() {
        let mem = backing();
        let mut c = Cache::new(CacheConfig::default());
        c.read(0x24, &mem).unwrap();
        assert!(c.corrupt(1, 1, 1 << 17));
        assert_eq!(c.read(0x24, &mem).unwrap(), mem.0[9]);
        assert_eq!(c.recoveries(), 1);
    }

    #[test]
    fn double_flip_slips_through() {
        let mem = backing();
        let mut c = Cache::new(CacheConfig::default());
        c.read(0x24, &mem).unwrap();
        c.corrupt(1, 1, 0b11);
        assert_eq!(c.read(0x24, &mem).unwrap(), mem.0[9] ^ 0b11);
        assert_eq!(c.recoveries(), 0);
    }

    #[test]
    fn write_through_semantics() {
        let mut mem = backing();
        let mut ro = Cache::new(CacheConfig::default());
        assert_eq!(ro.write(0, 1, &mut mem), Err(CacheError::PolicyViolation));

        let mut c = Cache::new(CacheConfig::new(16, WritePolicy::WriteThrough).unwrap());
        // miss: backing updated, nothing allocated
        c.write(0x40, 0xabcd, &mut mem).unwrap();
        assert_eq!(mem.0[0x10], 0xabcd);
        assert!(c.lines().iter().all(|l| !l.valid));
        // hit: resident copy follows
        c.read(0x40, &mem).unwrap();
        c.write(0x44, 7, &mut mem).unwrap();
        assert_eq!(c.read(0x44, &mem).unwrap(), 7);
        assert!(c.lines()[2].parity_ok(1));
    }

    #[test]
    fn out_of_range_is_access_fault() {
        let mem = backing();
        let mut c = Cache::new(CacheConfig::default());
        assert_eq!(c.read(0x400, &mem), Err(CacheError::AccessFault(0x400)));
        assert_eq!(c.read(0x2, &mem), Err(CacheError::Misaligned(2)));
    }

    #[test]
    fn geometry_must_be_power_of_two() {
        assert_eq!(CacheConfig::new(12, WritePolicy::ReadOnly), Err(CacheError::BadGeometry(12)));
    }
}
