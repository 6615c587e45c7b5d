//! Line-oriented `section.key = value` configuration.
//!
//! `#` starts a comment. Every key has a default; unknown keys and
//! duplicate keys are errors. Lists are comma separated.

use std::collections::HashSet;
use std::fmt;

use safels_core::faultlab::{CycleWindow, FaultKind, FaultSpace, FaultSpec, LocationClass, Target};
use safels_core::platform::{IrqSchedule, SlotKind, SphereMode};
use safels_core::StaggerConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Campaign {
    pub space: FaultSpace,
    pub staggers: Option<Vec<StaggerConfig>>,
    pub samples: u64,
    pub max_exhaustive: u64,
    pub seed: u64,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub reset_pc: u32,
    pub memory_size: usize,
    pub max_cycles: u64,
    pub stagger: StaggerConfig,
    /// `None` unless `soc.slots` was given.
    pub slots: Option<Vec<SlotKind>>,
    pub sphere: SphereMode,
    pub cache_enabled: bool,
    pub cache_lines: usize,
    pub program_paths: Vec<String>,
    pub program_bases: Vec<u32>,
    pub irq: Option<IrqSchedule>,
    pub campaign: Campaign,
    pub period: u64,
    pub deadline: u64,
    pub retries: u32,
    pub cycles_per_ms: u64,
    pub inject: Option<FaultSpec>,
    pub inject_slot: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reset_pc: 0,
            memory_size: 0x4000,
            max_cycles: 1_000_000,
            stagger: StaggerConfig::default(),
            slots: None,
            sphere: SphereMode::CorePlusL1,
            cache_enabled: false,
            cache_lines: 16,
            program_paths: Vec::new(),
            program_bases: Vec::new(),
            irq: None,
            campaign: Campaign {
                space: FaultSpace::register_sbu(),
                staggers: None,
                samples: 10_000,
                max_exhaustive: 250_000,
                seed: 0,
                budget: None,
            },
            period: 50,
            deadline: 200,
            retries: 1,
            cycles_per_ms: 1000,
            inject: None,
            inject_slot: 0,
        }
    }
}

/// The default slot list: two lockstep pairs and two plain cores.
pub fn default_slots(stagger: StaggerConfig) -> Vec<SlotKind> {
    let pair = SlotKind::Lockstep(stagger);
    vec![pair, pair, SlotKind::Regular, SlotKind::Regular]
}

fn parse_u64(v: &str) -> Result<u64, String> {
    let v = v.replace('_', "");
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => v.parse(),
    };
    parsed.map_err(|_| format!("`{v}` is not an unsigned integer"))
}

fn parse_u32(v: &str) -> Result<u32, String> {
    let n = parse_u64(v)?;
    u32::try_from(n).map_err(|_| format!("{n} does not fit in 32 bits"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_stagger(v: &str) -> Result<StaggerConfig, String> {
    StaggerConfig::new(parse_u32(v)?).map_err(|e| e.to_string())
}

/// `0-31,40` style lists of small integers, each below `limit`.
fn parse_set(v: &str, limit: u32) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for item in list(v) {
        let (lo, hi) = match item.split_once('-') {
            Some((a, b)) => (parse_u32(a)?, parse_u32(b)?),
            None => (parse_u32(item)?, parse_u32(item)?),
        };
        if lo > hi || hi >= limit {
            return Err(format!("`{item}` is outside 0..{limit}"));
        }
        out.extend((lo..=hi).map(|x| x as u8));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_slots(v: &str, stagger: StaggerConfig) -> Result<Vec<SlotKind>, String> {
    let slots = list(v)
        .map(|s| match s.split_once(':') {
            Some(("lockstep", n)) => parse_stagger(n).map(SlotKind::Lockstep),
            None if s == "lockstep" => Ok(SlotKind::Lockstep(stagger)),
            None if s == "regular" => Ok(SlotKind::Regular),
            _ => Err(format!("unknown slot kind `{s}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if slots.is_empty() {
        return Err("at least one slot is required".into());
    }
    Ok(slots)
}

fn parse_irq(v: &str) -> Result<IrqSchedule, String> {
    let events = list(v)
        .map(|e| {
            let (c, l) = e.split_once(':').ok_or_else(|| format!("`{e}` is not cycle:line"))?;
            let line = parse_u32(l)?;
            if line >= 8 {
                return Err(format!("interrupt line {line} is not in 0..8"));
            }
            Ok((parse_u64(c)?, line as u8))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(IrqSchedule::new(events))
}

fn parse_cycles(v: &str) -> Result<CycleWindow, String> {
    if v == "auto" {
        return Ok(CycleWindow::Auto);
    }
    let (a, b) = v.split_once('-').ok_or_else(|| format!("`{v}` is not `auto` or `start-end`"))?;
    let (start, end) = (parse_u64(a)?, parse_u64(b)?);
    if start >= end {
        return Err(format!("empty cycle window `{v}`"));
    }
    Ok(CycleWindow::Range { start, end })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        // slot kinds may refer to lockstep.stagger, which can come later
        let mut slots_text = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim().trim_matches('"')))
                .ok_or_else(|| err(format!("expected `section.key = value`, found `{line}`")))?;
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            if key == "soc.slots" {
                slots_text = Some((line_no, value.to_string()));
                continue;
            }
            cfg.set(key, value).map_err(|m| err(format!("{key}: {m}")))?;
        }
        if let Some((line, v)) = slots_text {
            cfg.slots = Some(
                parse_slots(&v, cfg.stagger)
                    .map_err(|m| ConfigError { line, message: format!("soc.slots: {m}") })?,
            );
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let c = &mut self.campaign;
        match key {
            "core.reset_pc" => self.reset_pc = parse_u32(v)?,
            "core.memory_size" => self.memory_size = parse_u64(v)? as usize,
            "core.max_cycles" => self.max_cycles = parse_u64(v)?,
            "lockstep.stagger" => self.stagger = parse_stagger(v)?,
            "soc.sphere" => {
                self.sphere = match v {
                    "core_plus_l1" => SphereMode::CorePlusL1,
                    "core_only" => SphereMode::CoreOnly,
                    _ => return Err(format!("unknown sphere `{v}`")),
                }
            }
            "cache.enabled" => self.cache_enabled = parse_bool(v)?,
            "cache.lines" => {
                let n = parse_u64(v)? as usize;
                if n == 0 || !n.is_power_of_two() {
                    return Err(format!("{n} is not a power of two"));
                }
                self.cache_lines = n;
            }
            "cache.line_words" => {
                if parse_u64(v)? != 8 {
                    return Err("only 8 words per line are supported".into());
                }
            }
            "program.path" => self.program_paths = list(v).map(String::from).collect(),
            "program.base" => self.program_bases = list(v).map(parse_u32).collect::<Result<_, _>>()?,
            "irq.schedule" => self.irq = Some(parse_irq(v)?),
            "campaign.kind" => {
                c.space.kind = match v {
                    "sbu" => FaultKind::Sbu,
                    "mbu" => FaultKind::Mbu,
                    "ccf" => FaultKind::Ccf,
                    _ => return Err(format!("unknown fault kind `{v}`")),
                };
                if c.space.kind == FaultKind::Mbu && c.space.width == 1 {
                    c.space.width = 2;
                }
            }
            "campaign.targets" => {
                c.space.targets = list(v)
                    .map(|t| match t {
                        "head" => Ok(Target::Head),
                        "shadow" => Ok(Target::Shadow),
                        _ => Err(format!("unknown target `{t}`")),
                    })
                    .collect::<Result<_, _>>()?
            }
            "campaign.locations" => {
                c.space.locations = list(v)
                    .map(|l| LocationClass::parse(l).ok_or_else(|| format!("unknown location `{l}`")))
                    .collect::<Result<_, _>>()?
            }
            "campaign.regs" => c.space.regs = parse_set(v, 32)?,
            "campaign.bits" => c.space.bits = parse_set(v, 32)?,
            "campaign.cycles" => c.space.cycles = parse_cycles(v)?,
            "campaign.mbu_width" => {
                let w = parse_u32(v)?;
                if !(2..=4).contains(&w) {
                    return Err(format!("width {w} is not in 2..=4"));
                }
                c.space.width = w as u8;
            }
            "campaign.samples" => c.samples = parse_u64(v)?,
            "campaign.max_exhaustive" => c.max_exhaustive = parse_u64(v)?,
            "campaign.seed" => c.seed = parse_u64(v)?,
            "campaign.budget" => c.budget = Some(parse_u64(v)?),
            "campaign.staggers" => c.staggers = Some(list(v).map(parse_stagger).collect::<Result<_, _>>()?),
            "timing.period" => self.period = parse_u64(v)?,
            "timing.deadline" => self.deadline = parse_u64(v)?,
            "timing.retries" => self.retries = parse_u32(v)?,
            "timing.cycles_per_ms" => {
                self.cycles_per_ms = parse_u64(v)?;
                if self.cycles_per_ms == 0 {
                    return Err("must be positive".into());
                }
            }
            "debug.inject" => self.inject = Some(v.parse::<FaultSpec>().map_err(|e| e.to_string())?),
            "debug.slot" => self.inject_slot = parse_u64(v)? as usize,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}
