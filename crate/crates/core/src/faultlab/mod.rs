//! Fault injection: fault models, the fault-free reference run, outcome
//! classification and seeded campaigns.
//!
//! A fault with cycle `c` is applied to the machine state between cycles
//! `c - 1` and `c`, i.e. just before the step of cycle `c`. A run is then
//! classified at the slot's external boundary:
//!
//! * `detected`: the comparator raised its error interrupt;
//! * `masked`: the run ended with exactly the golden output trace and
//!   memory image;
//! * `sdc`: the run ended without an interrupt but something differs;
//! * `hang`: the cycle budget ran out.

mod campaign;
mod space;
mod spec;

pub use campaign::{run_campaign, CampaignConfig, CampaignReport, ClassCounts, Record};
pub use space::{CycleWindow, FaultSpace, LocationClass};
pub use spec::{FaultKind, FaultSpec, Location, SpecError, Target};

use serde::Serialize;
use thiserror::Error;

use crate::isa::{OutputVector, Program};
use crate::lockstep::StaggerConfig;
use crate::platform::{
    CacheSel, CoreSel, IrqSchedule, PlatformConfig, PlatformError, SlotKind, SlotSpec, SlotStatus, Soc,
    SphereMode,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FaultError {
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("golden run did not finish within {0} cycles")]
    OracleHang(u64),
    #[error("fault `{0}` does not exist in this configuration")]
    InvalidLocation(String),
    #[error("the fault space is empty")]
    EmptySpace,
    #[error("fault cycle {cycle} is not below the budget of {budget} cycles")]
    BeyondBudget { cycle: u64, budget: u64 },
}

/// A program plus the platform and interrupt environment it runs in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub program: Program,
    pub platform: PlatformConfig,
    pub irq: IrqSchedule,
}

impl Workload {
    pub fn new(program: Program) -> Self {
        Workload { program, platform: PlatformConfig::default(), irq: IrqSchedule::default() }
    }

    fn soc(&self, kind: SlotKind) -> Result<Soc, PlatformError> {
        let spec = SlotSpec { kind, program: self.program.clone(), irq: self.irq.clone() };
        Soc::new(&self.platform, &[spec])
    }
}

/// The fault-free single-core reference execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenTrace {
    /// One output per cycle, the last one carrying halt or trap.
    pub outputs: Vec<OutputVector>,
    pub memory: Vec<u8>,
    /// Cycle of the final (halting or trapping) output.
    pub halt_cycle: u64,
    pub trapped: bool,
}

impl GoldenTrace {
    /// Default hang budget: ten times the golden run, at least 10,000 cycles.
    pub fn default_budget(&self) -> u64 {
        (10 * (self.halt_cycle + 1)).max(10_000)
    }
}

pub fn run_golden(workload: &Workload, budget: u64) -> Result<GoldenTrace, FaultError> {
    let mut soc = workload.soc(SlotKind::Regular)?;
    let result = soc.run(budget).remove(0);
    match result.status {
        SlotStatus::Halted | SlotStatus::Trapped => Ok(GoldenTrace {
            halt_cycle: result.end_cycle.expect("finished slot has an end cycle"),
            trapped: result.status == SlotStatus::Trapped,
            outputs: result.delivered,
            memory: soc.memory().bytes().to_vec(),
        }),
        _ => Err(FaultError::OracleHang(budget)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultClass {
    Masked,
    Detected,
    Sdc,
    Hang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub class: FaultClass,
    /// Error cycle minus injection cycle; present only for `Detected`.
    pub latency: Option<u64>,
    pub injected_at: u64,
    /// Parity recoveries performed by the slot's caches during the run.
    pub recoveries: u64,
}

/// Applies `fault` to slot `slot` of `soc` right now.
pub fn apply_fault(soc: &mut Soc, slot: usize, fault: &FaultSpec) -> Result<(), FaultError> {
    fault.validate()?;
    let invalid = || FaultError::InvalidLocation(fault.to_string());
    let cores: &[CoreSel] = match fault.target {
        Target::Head => &[CoreSel::Head],
        Target::Shadow => &[CoreSel::Shadow],
        Target::Both => &[CoreSel::Head, CoreSel::Shadow],
    };
    let mask = fault.mask();
    let sphere = soc_sphere(soc);
    for &core in cores {
        match fault.location {
            Location::Reg { index, .. } => {
                soc.arch_mut(slot, core).ok_or_else(invalid)?.regs[index as usize] ^= mask as u32;
            }
            Location::Pc { .. } => soc.arch_mut(slot, core).ok_or_else(invalid)?.pc ^= mask as u32,
            Location::InQ { slot: entry, .. } | Location::OutQ { slot: entry, .. } => {
                let is_in = matches!(fault.location, Location::InQ { .. });
                let owner = if is_in { CoreSel::Shadow } else { CoreSel::Head };
                if fault.target != owner.into() {
                    return Err(invalid());
                }
                let ls = soc.lockstep_mut(slot).ok_or_else(invalid)?;
                let q = if is_in { &mut ls.in_q } else { &mut ls.out_q };
                if !q.corrupt(entry as usize, mask) {
                    return Err(invalid());
                }
            }
            Location::ICache { line, word, .. } | Location::DCache { line, word, .. } => {
                // a shared L1 exists once, so it cannot take a common-cause hit
                if fault.kind == FaultKind::Ccf && sphere != Some(SphereMode::CorePlusL1) {
                    return Err(invalid());
                }
                let which = match fault.location {
                    Location::ICache { .. } => CacheSel::Instruction,
                    _ => CacheSel::Data,
                };
                let cache = soc.cache_mut(slot, which, core).ok_or_else(invalid)?;
                if !cache.corrupt(line as usize, word as usize, mask as u32) {
                    return Err(invalid());
                }
            }
        }
    }
    Ok(())
}

fn soc_sphere(soc: &Soc) -> Option<SphereMode> {
    soc.platform().l1.map(|l| l.sphere)
}

impl From<CoreSel> for Target {
    fn from(c: CoreSel) -> Self {
        match c {
            CoreSel::Head => Target::Head,
            CoreSel::Shadow => Target::Shadow,
        }
    }
}

/// Runs the workload on a lockstep pair with `fault` applied and classifies
/// the result against `golden`.
pub fn inject_and_run(
    workload: &Workload,
    stagger: StaggerConfig,
    fault: &FaultSpec,
    golden: &GoldenTrace,
    budget: u64,
) -> Result<Outcome, FaultError> {
    if fault.cycle >= budget {
        return Err(FaultError::BeyondBudget { cycle: fault.cycle, budget });
    }
    let mut soc = workload.soc(SlotKind::Lockstep(stagger))?;
    while soc.cycle() < fault.cycle && !soc.all_done() {
        soc.step();
    }
    if !soc.all_done() {
        apply_fault(&mut soc, 0, fault)?;
    }
    let result = soc.run(budget).remove(0);
    let class = match result.status {
        SlotStatus::Detected => FaultClass::Detected,
        SlotStatus::Hang | SlotStatus::Running => FaultClass::Hang,
        SlotStatus::Halted | SlotStatus::Trapped => {
            if result.delivered == golden.outputs && soc.memory().bytes() == golden.memory.as_slice() {
                FaultClass::Masked
            } else {
                FaultClass::Sdc
            }
        }
    };
    Ok(Outcome {
        class,
        latency: result.error_cycle.map(|e| e.saturating_sub(fault.cycle)),
        injected_at: fault.cycle,
        recoveries: result.recoveries,
    })
}
