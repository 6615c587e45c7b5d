use std::ops::Range;

use super::{FaultKind, FaultSpec, GoldenTrace, Location, Target};
use crate::isa::{INPUT_BITS, OUTPUT_BITS};
use crate::lockstep::StaggerConfig;
use crate::memshield::LINE_WORDS;
use crate::platform::{PlatformConfig, SphereMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocationClass {
    Reg,
    Pc,
    InQ,
    OutQ,
    ICache,
    DCache,
}

impl LocationClass {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "reg" => LocationClass::Reg,
            "pc" => LocationClass::Pc,
            "in_q" => LocationClass::InQ,
            "out_q" => LocationClass::OutQ,
            "icache" => LocationClass::ICache,
            "dcache" => LocationClass::DCache,
            _ => return None,
        })
    }
}

/// Injection cycles considered by a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CycleWindow {
    /// From cycle 0 up to and including the cycle the pair delivers its
    /// final output.
    #[default]
    Auto,
    /// Half-open range of absolute cycles.
    Range { start: u64, end: u64 },
}

impl CycleWindow {
    pub fn cycles(&self, golden: &GoldenTrace, stagger: StaggerConfig) -> Range<u64> {
        match *self {
            CycleWindow::Auto => 0..golden.halt_cycle + stagger.cycles() as u64 + 1,
            CycleWindow::Range { start, end } => start..end,
        }
    }
}

/// The cross product of targets, locations, bits and cycles a campaign
/// draws from. Queue locations always cover every bit of the stored vector;
/// `bits` restricts register, pc and cache-word locations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultSpace {
    pub kind: FaultKind,
    /// Flip width for MBU faults.
    pub width: u8,
    /// Ignored for CCF, which always hits both cores.
    pub targets: Vec<Target>,
    pub locations: Vec<LocationClass>,
    pub regs: Vec<u8>,
    pub bits: Vec<u8>,
    pub cycles: CycleWindow,
}

impl FaultSpace {
    /// Every register bit of either core at every cycle.
    pub fn register_sbu() -> Self {
        FaultSpace {
            kind: FaultKind::Sbu,
            width: 1,
            targets: vec![Target::Head, Target::Shadow],
            locations: vec![LocationClass::Reg],
            regs: (0..32).collect(),
            bits: (0..32).collect(),
            cycles: CycleWindow::Auto,
        }
    }

    /// Identical flips of pc and register bits in both cores.
    pub fn ccf() -> Self {
        FaultSpace {
            kind: FaultKind::Ccf,
            targets: vec![Target::Both],
            locations: vec![LocationClass::Pc, LocationClass::Reg],
            ..FaultSpace::register_sbu()
        }
    }

    fn width(&self) -> u8 {
        if self.kind == FaultKind::Mbu {
            self.width
        } else {
            1
        }
    }

    fn targets(&self) -> Vec<Target> {
        if self.kind == FaultKind::Ccf {
            vec![Target::Both]
        } else {
            let mut t: Vec<Target> = self.targets.iter().copied().filter(|&t| t != Target::Both).collect();
            t.dedup();
            t
        }
    }

    /// All `(target, location)` pairs that exist for this stagger and
    /// platform, in a fixed order.
    pub fn sites(&self, stagger: StaggerConfig, platform: &PlatformConfig) -> Vec<(Target, Location)> {
        let width = self.width() as u32;
        let word_bits: Vec<u8> = self.bits.iter().copied().filter(|&b| b as u32 + width <= 32).collect();
        let s = stagger.cycles() as u8;
        let ccf = self.kind == FaultKind::Ccf;
        let mut out = Vec::new();
        for target in self.targets() {
            for &class in &self.locations {
                let mut push = |loc: Location| out.push((target, loc));
                match class {
                    LocationClass::Reg => {
                        for &index in self.regs.iter().filter(|&&r| r < 32) {
                            word_bits.iter().for_each(|&bit| push(Location::Reg { index, bit }));
                        }
                    }
                    LocationClass::Pc => word_bits.iter().for_each(|&bit| push(Location::Pc { bit })),
                    LocationClass::InQ if target == Target::Shadow => {
                        for slot in 0..s {
                            (0..=(INPUT_BITS - width) as u8)
                                .for_each(|bit| push(Location::InQ { slot, bit }));
                        }
                    }
                    LocationClass::OutQ if target == Target::Head => {
                        for slot in 0..s {
                            (0..=(OUTPUT_BITS - width) as u8)
                                .for_each(|bit| push(Location::OutQ { slot, bit }));
                        }
                    }
                    LocationClass::InQ | LocationClass::OutQ => {}
                    LocationClass::ICache | LocationClass::DCache => {
                        let Some(l1) = platform.l1 else { continue };
                        let replicated = l1.sphere == SphereMode::CorePlusL1;
                        if !replicated && (ccf || target == Target::Shadow) {
                            continue;
                        }
                        for line in 0..l1.lines as u16 {
                            for word in 0..LINE_WORDS as u8 {
                                for &bit in &word_bits {
                                    push(if class == LocationClass::ICache {
                                        Location::ICache { line, word, bit }
                                    } else {
                                        Location::DCache { line, word, bit }
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn fault(&self, site: (Target, Location), cycle: u64) -> FaultSpec {
        FaultSpec { kind: self.kind, target: site.0, location: site.1, cycle, width: self.width() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::L1Config;

    #[test]
    fn register_space_size() {
        let sites = FaultSpace::register_sbu().sites(StaggerConfig::default(), &PlatformConfig::default());
        assert_eq!(sites.len(), 2 * 32 * 32);
    }

    #[test]
    fn queue_sites_follow_stagger() {
        let space = FaultSpace {
            targets: vec![Target::Head, Target::Shadow],
            locations: vec![LocationClass::InQ, LocationClass::OutQ],
            ..FaultSpace::register_sbu()
        };
        let p = PlatformConfig::default();
        assert!(space.sites(StaggerConfig::new(0).unwrap(), &p).is_empty());
        let sites = space.sites(StaggerConfig::new(2).unwrap(), &p);
        assert_eq!(sites.len(), 2 * (INPUT_BITS + OUTPUT_BITS) as usize);
        assert!(sites.iter().all(|(t, l)| match l {
            Location::InQ { .. } => *t == Target::Shadow,
            _ => *t == Target::Head,
        }));
    }

    #[test]
    fn mbu_bits_stay_in_field() {
        let space = FaultSpace {
            kind: FaultKind::Mbu,
            width: 4,
            locations: vec![LocationClass::Pc],
            ..FaultSpace::register_sbu()
        };
        let sites = space.sites(StaggerConfig::default(), &PlatformConfig::default());
        assert_eq!(sites.len(), 2 * 29);
    }

    #[test]
    fn shared_cache_has_one_copy() {
        let mut p = PlatformConfig::default();
        let space = FaultSpace {
            locations: vec![LocationClass::ICache],
            bits: vec![0],
            ..FaultSpace::register_sbu()
        };
        assert!(space.sites(StaggerConfig::default(), &p).is_empty());
        p.l1 = Some(L1Config { sphere: SphereMode::CoreOnly, lines: 16 });
        assert_eq!(space.sites(StaggerConfig::default(), &p).len(), 16 * 8);
        p.l1 = Some(L1Config { sphere: SphereMode::CorePlusL1, lines: 16 });
        assert_eq!(space.sites(StaggerConfig::default(), &p).len(), 2 * 16 * 8);
        let ccf = FaultSpace { kind: FaultKind::Ccf, ..space };
        assert_eq!(ccf.sites(StaggerConfig::default(), &p).len(), 16 * 8);
    }
}
