//! Shared inputs for the benchmarks.

use safels_core::corpus::{self, CorpusProgram};
use safels_core::faultlab::Workload;
use safels_core::platform::IrqSchedule;
use safels_core::Program;

pub fn workload(p: &CorpusProgram) -> Workload {
    let mut w = Workload::new(p.program.clone());
    w.irq = p.irq.clone();
    w
}

/// The default four-slot mix, one program per 4 KiB page.
pub fn soc_programs() -> Vec<(Program, IrqSchedule)> {
    [
        corpus::arith_loop(0),
        corpus::checksum(0x1000),
        corpus::branch_heavy(0x2000),
        corpus::store_heavy(0x3000),
    ]
    .into_iter()
    .map(|p| (p.program, p.irq))
    .collect()
}
