use serde::Serialize;
use sha2::{Digest, Sha256};

use safels_core::platform::{IrqSchedule, SlotKind, SlotResult, SlotStatus};
use safels_core::soc::{cycles_to_ms, SocConfig};
use safels_core::Program;

#[derive(Debug, Serialize)]
pub struct SlotReport {
    pub slot: usize,
    pub kind: String,
    pub status: &'static str,
    pub first_delivery: Option<u64>,
    pub end_cycle: Option<u64>,
    pub end_ms: Option<f64>,
    pub error_cycle: Option<u64>,
    pub recoveries: u64,
    pub operations: usize,
    /// Delivered output vectors, canonical encoding in hex.
    pub trace: Vec<String>,
}

/// Report of a single `run`. Field order is the serialized order.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_digest: String,
    pub class: &'static str,
    pub slots: Vec<SlotReport>,
}

fn status_name(s: SlotStatus) -> &'static str {
    match s {
        SlotStatus::Running => "running",
        SlotStatus::Halted => "halted",
        SlotStatus::Trapped => "trapped",
        SlotStatus::Detected => "detected",
        SlotStatus::Hang => "hang",
    }
}

impl RunReport {
    pub fn new(
        config_text: &str,
        soc: &SocConfig,
        programs: &[(Program, IrqSchedule)],
        results: &[SlotResult],
        cycles_per_ms: u64,
    ) -> Self {
        let mut h = Sha256::new();
        h.update(config_text.as_bytes());
        for (p, irq) in programs {
            h.update(format!("\n@{:#x}\n{}{:?}", p.base(), p.to_hex(), irq.events()).as_bytes());
        }
        let any = |s: SlotStatus| results.iter().any(|r| r.status == s);
        let class = if any(SlotStatus::Detected) {
            "detected"
        } else if any(SlotStatus::Hang) {
            "hang"
        } else if any(SlotStatus::Trapped) {
            "trapped"
        } else {
            "clean"
        };
        let slots = results
            .iter()
            .zip(&soc.slots)
            .enumerate()
            .map(|(slot, (r, kind))| SlotReport {
                slot,
                kind: match kind {
                    SlotKind::Regular => "regular".to_string(),
                    SlotKind::Lockstep(s) => format!("lockstep:{}", s.cycles()),
                },
                status: status_name(r.status),
                first_delivery: r.first_delivery,
                end_cycle: r.end_cycle,
                end_ms: r.end_cycle.map(|c| cycles_to_ms(c + 1, cycles_per_ms)),
                error_cycle: r.error_cycle,
                recoveries: r.recoveries,
                operations: r.operations().len(),
                trace: r.delivered.iter().map(|o| format!("{:029x}", o.encode())).collect(),
            })
            .collect();
        RunReport { schema_version: 1, config_digest: hex::encode(h.finalize()), class, slots }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per slot for the terminal.
    pub fn summary(&self) -> String {
        self.slots
            .iter()
            .map(|s| {
                format!(
                    "slot {} ({}): {} at cycle {}",
                    s.slot,
                    s.kind,
                    s.status,
                    s.end_cycle.map_or("-".to_string(), |c| c.to_string())
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
