//! The mixed SoC: lockstep pairs and plain cores behind one arbiter, the
//! two sphere-of-replication variants, and the re-execution timing check.

use std::fmt;

use thiserror::Error;

use crate::faultlab::{run_campaign, CampaignConfig, CampaignReport, FaultClass, FaultError, Location};
use crate::isa::Program;
use crate::lockstep::StaggerConfig;
use crate::platform::{
    IrqSchedule, L1Config, PlatformConfig, PlatformError, SlotKind, SlotResult, SlotSpec, Soc, SphereMode,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SocError {
    #[error("{expected} slots configured but {got} programs given")]
    SlotCount { expected: usize, got: usize },
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error("the fault space differs between sphere modes ({plus_l1} vs {core_only} injections)")]
    ModeMismatch { plus_l1: usize, core_only: usize },
    #[error("timing needs period > 0 and deadline >= period (got {period} and {deadline})")]
    Timing { period: u64, deadline: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocConfig {
    pub slots: Vec<SlotKind>,
    pub sphere: SphereMode,
    pub memory_size: usize,
    /// L1 line count; `None` runs without caches.
    pub cache_lines: Option<usize>,
}

impl Default for SocConfig {
    fn default() -> Self {
        let pair = SlotKind::Lockstep(StaggerConfig::default());
        SocConfig {
            slots: vec![pair, pair, SlotKind::Regular, SlotKind::Regular],
            sphere: SphereMode::CorePlusL1,
            memory_size: 0x4000,
            cache_lines: None,
        }
    }
}

impl SocConfig {
    pub fn platform(&self) -> PlatformConfig {
        PlatformConfig {
            memory_size: self.memory_size,
            l1: self.cache_lines.map(|lines| L1Config { sphere: self.sphere, lines }),
        }
    }

    /// Builds the SoC with one `(program, interrupts)` pair per slot.
    pub fn build(&self, programs: &[(Program, IrqSchedule)]) -> Result<Soc, SocError> {
        if programs.len() != self.slots.len() {
            return Err(SocError::SlotCount { expected: self.slots.len(), got: programs.len() });
        }
        let specs: Vec<SlotSpec> = self
            .slots
            .iter()
            .zip(programs)
            .map(|(&kind, (program, irq))| SlotSpec { kind, program: program.clone(), irq: irq.clone() })
            .collect();
        Ok(Soc::new(&self.platform(), &specs)?)
    }
}

/// Runs every slot to completion or until `budget` cycles have passed.
pub fn soc_run(
    config: &SocConfig,
    programs: &[(Program, IrqSchedule)],
    budget: u64,
) -> Result<Vec<SlotResult>, SocError> {
    Ok(config.build(programs)?.run(budget))
}

/// Job timing of a periodic task, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimingSpec {
    period: u64,
    deadline: u64,
    retries: u32,
}

impl TimingSpec {
    pub fn new(period: u64, deadline: u64, retries: u32) -> Result<Self, SocError> {
        if period == 0 || deadline < period {
            return Err(SocError::Timing { period, deadline });
        }
        Ok(TimingSpec { period, deadline, retries })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn deadline(&self) -> u64 {
        self.deadline
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }
}

/// Converts a cycle count to milliseconds at `cycles_per_ms`.
pub fn cycles_to_ms(cycles: u64, cycles_per_ms: u64) -> f64 {
    cycles as f64 / cycles_per_ms as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    pub attempts: u64,
    pub period: u64,
    /// Worst-case completion time, `attempts × period`.
    pub bound: u64,
    pub deadline: u64,
}

impl fmt::Display for Feasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (verdict, op) = if self.feasible { ("feasible", "≤") } else { ("infeasible", ">") };
        write!(f, "{verdict}: {}×{}={} {op} {}", self.attempts, self.period, self.bound, self.deadline)
    }
}

/// An error found at the end of a job costs one more period per retry; the
/// job still meets its deadline if all attempts fit.
pub fn feasible_reexec(t: &TimingSpec) -> Feasibility {
    let attempts = t.retries as u64 + 1;
    let bound = attempts.saturating_mul(t.period);
    Feasibility { feasible: bound <= t.deadline, attempts, period: t.period, bound, deadline: t.deadline }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereComparison {
    pub core_plus_l1: CampaignReport,
    pub core_only: CampaignReport,
    /// Cache faults under `core_only` that ended masked after at least one
    /// parity recovery, i.e. were handled without the comparator.
    pub parity_resolved: u64,
}

/// Runs the same campaign with the L1 inside and outside the sphere of
/// replication. Caches default to 16 lines when the workload has none.
pub fn sphere_mode_compare(config: &CampaignConfig, seed: u64) -> Result<SphereComparison, SocError> {
    let lines = config.workload.platform.l1.map_or(16, |l| l.lines);
    let run = |sphere| {
        let mut c = config.clone();
        c.workload.platform.l1 = Some(L1Config { sphere, lines });
        run_campaign(&c, seed)
    };
    let core_plus_l1 = run(SphereMode::CorePlusL1)?;
    let core_only = run(SphereMode::CoreOnly)?;
    if core_plus_l1.records.len() != core_only.records.len() {
        return Err(SocError::ModeMismatch {
            plus_l1: core_plus_l1.records.len(),
            core_only: core_only.records.len(),
        });
    }
    let parity_resolved = core_only
        .records
        .iter()
        .filter(|r| matches!(r.fault.location, Location::ICache { .. } | Location::DCache { .. }))
        .filter(|r| r.class == FaultClass::Masked && r.recoveries > 0)
        .count() as u64;
    Ok(SphereComparison { core_plus_l1, core_only, parity_resolved })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn braking_example() {
        let f = feasible_reexec(&TimingSpec::new(50, 200, 1).unwrap());
        assert!(f.feasible);
        assert_eq!(f.to_string(), "feasible: 2×50=100 ≤ 200");
        let f = feasible_reexec(&TimingSpec::new(100, 200, 1).unwrap());
        assert!(f.feasible && f.bound == 200);
        let f = feasible_reexec(&TimingSpec::new(150, 200, 1).unwrap());
        assert_eq!(f.to_string(), "infeasible: 2×150=300 > 200");
    }

    #[test]
    fn timing_preconditions() {
        assert!(TimingSpec::new(0, 200, 1).is_err());
        assert!(TimingSpec::new(300, 200, 1).is_err());
        assert_eq!(cycles_to_ms(50_000, 1000), 50.0);
    }

    #[test]
    fn program_count_must_match() {
        let err = soc_run(&SocConfig::default(), &[], 10).unwrap_err();
        assert_eq!(err, SocError::SlotCount { expected: 4, got: 0 });
    }
}
