use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Sbu,
    Mbu,
    Ccf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Head,
    Shadow,
    Both,
}

/// A bit position inside one replicated structure. Cache locations name a
/// `(line, word, bit)` triple of the instruction or data L1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Reg { index: u8, bit: u8 },
    Pc { bit: u8 },
    InQ { slot: u8, bit: u8 },
    OutQ { slot: u8, bit: u8 },
    ICache { line: u16, word: u8, bit: u8 },
    DCache { line: u16, word: u8, bit: u8 },
}

impl Location {
    pub fn bit(&self) -> u8 {
        match *self {
            Location::Reg { bit, .. }
            | Location::Pc { bit }
            | Location::InQ { bit, .. }
            | Location::OutQ { bit, .. }
            | Location::ICache { bit, .. }
            | Location::DCache { bit, .. } => bit,
        }
    }

    /// Width in bits of the field the location points into.
    pub fn field_width(&self) -> u32 {
        match self {
            Location::InQ { .. } => crate::isa::INPUT_BITS,
            Location::OutQ { .. } => crate::isa::OUTPUT_BITS,
            _ => 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub target: Target,
    pub location: Location,
    pub cycle: u64,
    /// Adjacent bits flipped, starting at the location's bit. 1 unless
    /// `kind` is MBU.
    pub width: u8,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("malformed fault `{0}`: expected `<kind>[/<width>] <target> <location> @<cycle>`")]
    Syntax(String),
    #[error("unknown fault kind `{0}`")]
    Kind(String),
    #[error("unknown target `{0}`")]
    Target(String),
    #[error("bad location `{0}`")]
    Location(String),
    #[error("{kind} faults cannot target {target}")]
    KindTarget { kind: &'static str, target: &'static str },
    #[error("MBU width must be 2..=4, got {0}")]
    Width(u8),
    #[error("bits {bit}..{end} exceed the {width}-bit field")]
    Range { bit: u8, end: u32, width: u32 },
}

impl FaultKind {
    pub fn name(self) -> &'static str {
        match self {
            FaultKind::Sbu => "sbu",
            FaultKind::Mbu => "mbu",
            FaultKind::Ccf => "ccf",
        }
    }
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Head => "head",
            Target::Shadow => "shadow",
            Target::Both => "both",
        }
    }
}

impl FaultSpec {
    pub fn sbu(target: Target, location: Location, cycle: u64) -> Self {
        FaultSpec { kind: FaultKind::Sbu, target, location, cycle, width: 1 }
    }

    pub fn mbu(target: Target, location: Location, cycle: u64, width: u8) -> Self {
        FaultSpec { kind: FaultKind::Mbu, target, location, cycle, width }
    }

    pub fn ccf(location: Location, cycle: u64) -> Self {
        FaultSpec { kind: FaultKind::Ccf, target: Target::Both, location, cycle, width: 1 }
    }

    /// Checks the kind/target pairing and that the flipped bits fit.
    pub fn validate(&self) -> Result<(), SpecError> {
        let pair_ok = match self.kind {
            FaultKind::Ccf => self.target == Target::Both,
            _ => self.target != Target::Both,
        };
        if !pair_ok {
            return Err(SpecError::KindTarget { kind: self.kind.name(), target: self.target.name() });
        }
        let expected = matches!(self.kind, FaultKind::Mbu).then_some(2..=4).unwrap_or(1..=1);
        if !expected.contains(&self.width) {
            return Err(SpecError::Width(self.width));
        }
        let end = self.location.bit() as u32 + self.width as u32;
        let width = self.location.field_width();
        if end > width {
            return Err(SpecError::Range { bit: self.location.bit(), end, width });
        }
        Ok(())
    }

    /// The XOR mask applied to the field.
    pub fn mask(&self) -> u128 {
        ((1u128 << self.width) - 1) << self.location.bit()
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Reg { index, bit } => write!(f, "reg:{index}:{bit}"),
            Location::Pc { bit } => write!(f, "pc:{bit}"),
            Location::InQ { slot, bit } => write!(f, "in_q:{slot}:{bit}"),
            Location::OutQ { slot, bit } => write!(f, "out_q:{slot}:{bit}"),
            Location::ICache { line, word, bit } => write!(f, "icache:{line}:{word}:{bit}"),
            Location::DCache { line, word, bit } => write!(f, "dcache:{line}:{word}:{bit}"),
        }
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if self.kind == FaultKind::Mbu {
            write!(f, "/{}", self.width)?;
        }
        write!(f, " {} {} @{}", self.target.name(), self.location, self.cycle)
    }
}

impl FromStr for Location {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let bad = || SpecError::Location(s.to_string());
        let mut parts = s.split(':');
        let name = parts.next().ok_or_else(bad)?;
        let nums = parts.map(|p| p.parse::<u16>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
        let small = |v: u16| u8::try_from(v).map_err(|_| bad());
        let loc = match (name, nums.as_slice()) {
            ("reg", &[index, bit]) if index < 32 => Location::Reg { index: small(index)?, bit: small(bit)? },
            ("pc", &[bit]) => Location::Pc { bit: small(bit)? },
            ("in_q", &[slot, bit]) => Location::InQ { slot: small(slot)?, bit: small(bit)? },
            ("out_q", &[slot, bit]) => Location::OutQ { slot: small(slot)?, bit: small(bit)? },
            ("icache", &[line, word, bit]) => Location::ICache { line, word: small(word)?, bit: small(bit)? },
            ("dcache", &[line, word, bit]) => Location::DCache { line, word: small(word)?, bit: small(bit)? },
            _ => return Err(bad()),
        };
        if loc.bit() as u32 >= loc.field_width() {
            return Err(bad());
        }
        Ok(loc)
    }
}

impl FromStr for FaultSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let syntax = || SpecError::Syntax(s.to_string());
        let fields: Vec<&str> = s.split_whitespace().collect();
        let &[kind, target, location, cycle] = fields.as_slice() else {
            return Err(syntax());
        };
        let (kind, width) = match kind.split_once('/') {
            Some((k, w)) => (k, Some(w.parse::<u8>().map_err(|_| syntax())?)),
            None => (kind, None),
        };
        let kind = match kind {
            "sbu" => FaultKind::Sbu,
            "mbu" => FaultKind::Mbu,
            "ccf" => FaultKind::Ccf,
            other => return Err(SpecError::Kind(other.to_string())),
        };
        let target = match target {
            "head" => Target::Head,
            "shadow" => Target::Shadow,
            "both" => Target::Both,
            other => return Err(SpecError::Target(other.to_string())),
        };
        let location = location.parse()?;
        let cycle = cycle.strip_prefix('@').and_then(|c| c.parse().ok()).ok_or_else(syntax)?;
        let width = match (kind, width) {
            (FaultKind::Mbu, Some(w)) => w,
            (FaultKind::Mbu, None) => 2,
            (_, None) => 1,
            (_, Some(_)) => return Err(syntax()),
        };
        let spec = FaultSpec { kind, target, location, cycle, width };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for text in [
            "sbu shadow reg:5:0 @6",
            "sbu head pc:31 @0",
            "mbu/3 head out_q:1:112 @40",
            "ccf both in_q:0:74 @2",
            "sbu head icache:15:7:31 @9",
            "ccf both dcache:0:0:0 @1",
        ] {
            let spec: FaultSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn pairing_rules() {
        assert!(matches!("ccf head pc:2 @1".parse::<FaultSpec>(), Err(SpecError::KindTarget { .. })));
        assert!(matches!("sbu both pc:2 @1".parse::<FaultSpec>(), Err(SpecError::KindTarget { .. })));
        assert_eq!("mbu/5 head pc:2 @1".parse::<FaultSpec>(), Err(SpecError::Width(5)));
        assert!(matches!("mbu/4 head pc:30 @1".parse::<FaultSpec>(), Err(SpecError::Range { .. })));
        assert!("sbu head reg:32:0 @1".parse::<FaultSpec>().is_err());
        assert!("sbu head pc:32 @1".parse::<FaultSpec>().is_err());
        assert!("sbu head pc:3".parse::<FaultSpec>().is_err());
    }

    #[test]
    fn masks() {
        assert_eq!(FaultSpec::sbu(Target::Head, Location::Pc { bit: 2 }, 0).mask(), 4);
        assert_eq!(FaultSpec::mbu(Target::Head, Location::Reg { index: 1, bit: 4 }, 0, 3).mask(), 0x70);
    }
}
