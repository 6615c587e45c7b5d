//! The lockstep wrapper: two copies of the core, a delay line on the shadow
//! core's inputs, a matching delay line on the head core's outputs, and a
//! comparator that gates what leaves the pair.
//!
//! The head core sees the external inputs immediately. The shadow core sees
//! the same inputs `s` cycles later. The head's outputs are held for `s`
//! cycles and then compared bit for bit with the shadow's outputs; only a
//! matching vector is delivered, so externally the pair looks like a single
//! core running `s` cycles late. The reset line travels through the input
//! delay line like every other input, which keeps the shadow in reset for
//! the first `s` cycles.

use std::collections::VecDeque;

use thiserror::Error;

use crate::isa::{reset, ArchState, CoreConfig, InputVector, OutputVector};

pub const MAX_STAGGER: u8 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StaggerError {
    #[error("stagger {0} exceeds the maximum of {MAX_STAGGER} cycles")]
    OutOfRange(u32),
}

/// Number of cycles the shadow core runs behind the head core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StaggerConfig(u8);

impl StaggerConfig {
    pub fn new(cycles: u32) -> Result<Self, StaggerError> {
        if cycles > MAX_STAGGER as u32 {
            return Err(StaggerError::OutOfRange(cycles));
        }
        Ok(StaggerConfig(cycles as u8))
    }

    pub fn cycles(self) -> u32 {
        self.0 as u32
    }
}

impl Default for StaggerConfig {
    fn default() -> Self {
        StaggerConfig(2)
    }
}

/// Fixed-length shift register of encoded signal vectors.
///
/// Slot 0 is the oldest entry, the one the next [`shift`](Self::shift)
/// returns. A zero-capacity queue passes values straight through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayQueue {
    slots: VecDeque<u128>,
}

impl DelayQueue {
    pub fn new(capacity: usize, fill: u128) -> Self {
        DelayQueue { slots: std::iter::repeat_n(fill, capacity).collect() }
    }

    pub fn shift(&mut self, value: u128) -> u128 {
        if self.slots.is_empty() {
            return value;
        }
        let out = self.slots.pop_front().expect("non-empty queue");
        self.slots.push_back(value);
        out
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, slot: usize) -> Option<u128> {
        self.slots.get(slot).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = u128> + '_ {
        self.slots.iter().copied()
    }

    /// XORs `mask` into one slot. Returns false if the slot does not exist.
    pub fn corrupt(&mut self, slot: usize, mask: u128) -> bool {
        match self.slots.get_mut(slot) {
            Some(v) => {
                *v ^= mask;
                true
            }
            None => false,
        }
    }
}

/// What the rest of the system sees from the pair in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExternalOutcome {
    pub output: Option<OutputVector>,
    pub error_irq: bool,
}

/// Everything that happened inside the pair in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleDetail {
    pub outcome: ExternalOutcome,
    /// The head core's undelayed outputs (its bus port).
    pub head_out: OutputVector,
    /// The shadow core's outputs; they only ever reach the comparator.
    pub shadow_out: OutputVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockstepState {
    core: CoreConfig,
    stagger: StaggerConfig,
    pub head: ArchState,
    pub shadow: ArchState,
    pub in_q: DelayQueue,
    pub out_q: DelayQueue,
    error_latched: bool,
    cycle: u64,
}

/// Bitwise comparison of the canonical encodings.
pub fn compare(a: &OutputVector, b: &OutputVector) -> bool {
    a.encode() == b.encode()
}

/// Bit-level difference between the two halves of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StateDistance {
    /// Hamming distance between the head and shadow architectural states.
    pub arch: u32,
    /// Bits in flight in the delay lines that differ from the oldest entry of
    /// the same line, i.e. how much the two ends of each line disagree.
    pub queues: u32,
}

impl StateDistance {
    pub fn total(&self) -> u32 {
        self.arch + self.queues
    }
}

pub fn ls_reset(core: CoreConfig, stagger: StaggerConfig) -> LockstepState {
    let s = stagger.cycles() as usize;
    LockstepState {
        core,
        stagger,
        head: reset(&core),
        shadow: reset(&core),
        in_q: DelayQueue::new(s, InputVector::in_reset().encode()),
        out_q: DelayQueue::new(s, OutputVector::default().encode()),
        error_latched: false,
        cycle: 0,
    }
}

impl LockstepState {
    pub fn stagger(&self) -> StaggerConfig {
        self.stagger
    }

    pub fn core_config(&self) -> &CoreConfig {
        &self.core
    }

    pub fn error_latched(&self) -> bool {
        self.error_latched
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Advances the pair by one cycle.
    pub fn ls_step(&mut self, ext_input: &InputVector) -> ExternalOutcome {
        self.step_with(ext_input, |_| {}).outcome
    }

    /// Like [`ls_step`](Self::ls_step), but lets the caller rewrite the
    /// delayed input just before the shadow consumes it. Used when private
    /// caches sit inside the pair and answer the shadow's own requests.
    pub fn step_with(
        &mut self,
        ext_input: &InputVector,
        shadow_input: impl FnOnce(&mut InputVector),
    ) -> CycleDetail {
        let cycle = self.cycle;
        self.cycle += 1;
        if self.error_latched {
            return CycleDetail {
                outcome: ExternalOutcome { output: None, error_irq: true },
                head_out: OutputVector::default(),
                shadow_out: OutputVector::default(),
            };
        }

        let head_out = self.head.advance(&self.core, ext_input);
        let mut delayed_in = InputVector::decode(self.in_q.shift(ext_input.encode()));
        shadow_input(&mut delayed_in);
        let shadow_out = self.shadow.advance(&self.core, &delayed_in);
        let delayed_out = self.out_q.shift(head_out.encode());

        let outcome = if cycle < self.stagger.cycles() as u64 {
            ExternalOutcome::default()
        } else if delayed_out == shadow_out.encode() {
            ExternalOutcome { output: Some(OutputVector::decode(delayed_out)), error_irq: false }
        } else {
            self.error_latched = true;
            ExternalOutcome { output: None, error_irq: true }
        };
        CycleDetail { outcome, head_out, shadow_out }
    }

    pub fn observable_state_distance(&self) -> StateDistance {
        let spread = |q: &DelayQueue| -> u32 {
            let first = q.get(0).unwrap_or(0);
            q.iter().map(|v| (v ^ first).count_ones()).sum()
        };
        StateDistance {
            arch: self.head.hamming_distance(&self.shadow),
            queues: spread(&self.in_q) + spread(&self.out_q),
        }
    }
}
