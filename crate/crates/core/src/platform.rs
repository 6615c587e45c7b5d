//! Cycle engine shared by single runs, fault campaigns and the SoC model.
//!
//! A [`Soc`] is a set of slots (plain cores or lockstep pairs) sharing one
//! backing memory. Each cycle every running slot is stepped with the input
//! vector prepared for it during the previous cycle; afterwards a
//! round-robin arbiter grants one pending read (fetch or load) and its
//! response is placed in the granted slot's next input. Writes use a
//! separate posted path and never wait for the arbiter.
//!
//! For a lockstep slot only the head core's port is connected to the bus;
//! the shadow sees the same responses s cycles later. Head writes are
//! held in a per-slot store buffer and only reach memory once the
//! comparator has delivered them; head loads are forwarded from that buffer.
//! On a detected error the buffer is dropped.

use std::collections::VecDeque;

use thiserror::Error;

use crate::isa::{ArchState, ConfigError, CoreConfig, InputVector, MemReq, MemWidth, OutputVector, Program};
use crate::lockstep::{ls_reset, LockstepState, StaggerConfig};
use crate::memshield::{Backing, Cache, CacheConfig, WritePolicy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlatformError {
    #[error("program at {base:#010x}..{end:#x} does not fit in {size} bytes of memory")]
    ProgramOutOfBounds { base: u32, end: u64, size: usize },
    #[error("programs of slots {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("memory size {0} is not a non-zero multiple of 4")]
    BadMemorySize(usize),
    #[error("no slots configured")]
    NoSlots,
    #[error(transparent)]
    Core(#[from] ConfigError),
}

/// Flat little-endian backing memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    bytes: Vec<u8>,
}

impl Memory {
    pub fn new(size: usize) -> Result<Self, PlatformError> {
        if size == 0 || !size.is_multiple_of(4) {
            return Err(PlatformError::BadMemorySize(size));
        }
        Ok(Memory { bytes: vec![0; size] })
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn load(&mut self, program: &Program) -> Result<(), PlatformError> {
        let base = program.base() as usize;
        if program.end() > self.bytes.len() as u64 {
            return Err(PlatformError::ProgramOutOfBounds {
                base: program.base(),
                end: program.end(),
                size: self.bytes.len(),
            });
        }
        let image = program.to_bin();
        self.bytes[base..base + image.len()].copy_from_slice(&image);
        Ok(())
    }

    fn range(&self, addr: u32, width: MemWidth) -> Option<std::ops::Range<usize>> {
        let start = addr as usize;
        let end = start.checked_add(width.bytes() as usize)?;
        (end <= self.bytes.len()).then_some(start..end)
    }

    /// Zero-extended read of `width` bytes.
    pub fn read(&self, addr: u32, width: MemWidth) -> Option<u32> {
        let r = self.range(addr, width)?;
        Some(self.bytes[r].iter().rev().fold(0u32, |acc, &b| acc << 8 | b as u32))
    }

    pub fn write(&mut self, addr: u32, width: MemWidth, value: u32) -> bool {
        match self.range(addr, width) {
            Some(r) => {
                for (i, b) in self.bytes[r].iter_mut().enumerate() {
                    *b = (value >> (8 * i)) as u8;
                }
                true
            }
            None => false,
        }
    }
}

impl Backing for Memory {
    fn read_word(&self, addr: u32) -> Option<u32> {
        self.read(addr, MemWidth::Word)
    }

    fn write_word(&mut self, addr: u32, value: u32) -> bool {
        self.write(addr, MemWidth::Word, value)
    }
}

/// Places a sub-word write into the aligned word that contains it.
pub fn merge_write(word: u32, req: &MemReq) -> u32 {
    let shift = 8 * (req.addr & 3);
    let mask = req.width.mask() << shift;
    (word & !mask) | ((req.wdata << shift) & mask)
}

/// Extracts the zero-extended bytes a read of `req` returns from `word`.
fn extract_read(word: u32, req: &MemReq) -> u32 {
    (word >> (8 * (req.addr & 3))) & req.width.mask()
}

/// Where the sphere of replication ends for lockstep slots with L1 caches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SphereMode {
    /// Each core of a pair has private L1 copies inside the comparator
    /// boundary; those copies rely on the comparator, not on parity.
    CorePlusL1,
    /// One parity-protected L1 per pair, outside the comparator boundary.
    CoreOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct L1Config {
    pub sphere: SphereMode,
    pub lines: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlatformConfig {
    pub memory_size: usize,
    pub l1: Option<L1Config>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig { memory_size: 0x4000, l1: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Regular,
    Lockstep(StaggerConfig),
}

/// Interrupt assertions as `(cycle, line)` pairs. An asserted line stays
/// high until the visible core acknowledges it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IrqSchedule {
    events: Vec<(u64, u8)>,
}

impl IrqSchedule {
    pub fn new(mut events: Vec<(u64, u8)>) -> Self {
        events.retain(|&(_, line)| line < 8);
        events.sort_unstable();
        IrqSchedule { events }
    }

    pub fn events(&self) -> &[(u64, u8)] {
        &self.events
    }

    fn lines_at(&self, cycle: u64) -> u8 {
        self.events.iter().filter(|e| e.0 == cycle).fold(0, |m, e| m | 1 << e.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSpec {
    pub kind: SlotKind,
    pub program: Program,
    pub irq: IrqSchedule,
}

impl SlotSpec {
    pub fn new(kind: SlotKind, program: Program) -> Self {
        SlotSpec { kind, program, irq: IrqSchedule::default() }
    }
}

/// Selects one core of a slot. For a plain core only `Head` exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoreSel {
    Head,
    Shadow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CacheSel {
    Instruction,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotStatus {
    Running,
    /// Delivered an output with `halted` set.
    Halted,
    /// Delivered an output carrying a trap.
    Trapped,
    /// The comparator raised its error interrupt.
    Detected,
    /// Still running when the cycle budget ran out.
    Hang,
}

/// Everything observed at one slot's external boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotResult {
    pub status: SlotStatus,
    /// Delivered outputs, one per cycle starting at `first_delivery`.
    pub delivered: Vec<OutputVector>,
    pub first_delivery: Option<u64>,
    pub error_cycle: Option<u64>,
    /// Cycle in which the slot stopped (halt, trap or error).
    pub end_cycle: Option<u64>,
    /// Parity recoveries performed by this slot's caches.
    pub recoveries: u64,
}

impl SlotResult {
    pub fn error_irq(&self) -> bool {
        self.error_cycle.is_some()
    }

    /// Delivered outputs with stall cycles removed.
    pub fn operations(&self) -> Vec<OutputVector> {
        self.delivered.iter().copied().filter(|o| !o.is_idle()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReadReq {
    Fetch(u32),
    Data(MemReq),
}

#[derive(Debug, Clone)]
struct L1Copy {
    icache: Cache,
    dcache: Cache,
}

impl L1Copy {
    fn new(lines: usize) -> Self {
        L1Copy {
            icache: Cache::new(CacheConfig { lines, policy: WritePolicy::ReadOnly }),
            dcache: Cache::new(CacheConfig { lines, policy: WritePolicy::WriteThrough }),
        }
    }

    fn recoveries(&self) -> u64 {
        self.icache.recoveries() + self.dcache.recoveries()
    }
}

#[derive(Debug, Clone)]
enum SlotL1 {
    None,
    Shared(L1Copy),
    Replicated { head: L1Copy, shadow: L1Copy },
}

#[derive(Debug, Clone)]
enum Machine {
    Single(ArchState),
    Pair(Box<LockstepState>),
}

#[derive(Debug, Clone)]
struct Slot {
    core: CoreConfig,
    machine: Machine,
    l1: SlotL1,
    store_buffer: VecDeque<MemReq>,
    pending_read: Option<ReadReq>,
    shadow_wait: Option<ReadReq>,
    next_input: InputVector,
    irq: IrqSchedule,
    irq_lines: u8,
    status: SlotStatus,
    delivered: Vec<OutputVector>,
    first_delivery: Option<u64>,
    error_cycle: Option<u64>,
    end_cycle: Option<u64>,
}

/// Round-robin grant of one request per cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arbiter {
    slots: usize,
    next: usize,
}

impl Arbiter {
    pub fn new(slots: usize) -> Self {
        Arbiter { slots, next: 0 }
    }

    /// Grants the first requesting slot at or after the rotating pointer.
    pub fn grant(&mut self, requesting: impl Fn(usize) -> bool) -> Option<usize> {
        let winner = (0..self.slots).map(|k| (self.next + k) % self.slots).find(|&i| requesting(i))?;
        self.next = (winner + 1) % self.slots;
        Some(winner)
    }
}

#[derive(Debug, Clone)]
pub struct Soc {
    config: PlatformConfig,
    memory: Memory,
    slots: Vec<Slot>,
    arbiter: Arbiter,
    cycle: u64,
}

impl Soc {
    pub fn new(config: &PlatformConfig, specs: &[SlotSpec]) -> Result<Self, PlatformError> {
        if specs.is_empty() {
            return Err(PlatformError::NoSlots);
        }
        let mut memory = Memory::new(config.memory_size)?;
        for (i, a) in specs.iter().enumerate() {
            memory.load(&a.program)?;
            for (j, b) in specs.iter().enumerate().skip(i + 1) {
                let (pa, pb) = (&a.program, &b.program);
                if (pa.base() as u64) < pb.end() && (pb.base() as u64) < pa.end() {
                    return Err(PlatformError::Overlap(i, j));
                }
            }
        }
        let slots = specs
            .iter()
            .map(|spec| {
                let core = CoreConfig::new(spec.program.base())?;
                let machine = match spec.kind {
                    SlotKind::Regular => Machine::Single(crate::isa::reset(&core)),
                    SlotKind::Lockstep(s) => Machine::Pair(Box::new(ls_reset(core, s))),
                };
                let l1 = match (config.l1, spec.kind) {
                    (None, _) => SlotL1::None,
                    (Some(l1), SlotKind::Lockstep(_)) if l1.sphere == SphereMode::CorePlusL1 => {
                        SlotL1::Replicated { head: L1Copy::new(l1.lines), shadow: L1Copy::new(l1.lines) }
                    }
                    (Some(l1), _) => SlotL1::Shared(L1Copy::new(l1.lines)),
                };
                let irq_lines = spec.irq.lines_at(0);
                Ok(Slot {
                    core,
                    machine,
                    l1,
                    store_buffer: VecDeque::new(),
                    pending_read: None,
                    shadow_wait: None,
                    next_input: InputVector { irq_lines, ..Default::default() },
                    irq: spec.irq.clone(),
                    irq_lines,
                    status: SlotStatus::Running,
                    delivered: Vec::new(),
                    first_delivery: None,
                    error_cycle: None,
                    end_cycle: None,
                })
            })
            .collect::<Result<Vec<_>, PlatformError>>()?;
        Ok(Soc { config: *config, memory, arbiter: Arbiter::new(slots.len()), slots, cycle: 0 })
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn platform(&self) -> &PlatformConfig {
        &self.config
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn status(&self, slot: usize) -> SlotStatus {
        self.slots[slot].status
    }

    pub fn all_done(&self) -> bool {
        self.slots.iter().all(|s| s.status != SlotStatus::Running)
    }

    pub fn arch_mut(&mut self, slot: usize, core: CoreSel) -> Option<&mut ArchState> {
        match (&mut self.slots.get_mut(slot)?.machine, core) {
            (Machine::Single(s), CoreSel::Head) => Some(s),
            (Machine::Single(_), CoreSel::Shadow) => None,
            (Machine::Pair(ls), CoreSel::Head) => Some(&mut ls.head),
            (Machine::Pair(ls), CoreSel::Shadow) => Some(&mut ls.shadow),
        }
    }

    pub fn lockstep(&self, slot: usize) -> Option<&LockstepState> {
        match &self.slots.get(slot)?.machine {
            Machine::Pair(ls) => Some(ls),
            Machine::Single(_) => None,
        }
    }

    pub fn lockstep_mut(&mut self, slot: usize) -> Option<&mut LockstepState> {
        match &mut self.slots.get_mut(slot)?.machine {
            Machine::Pair(ls) => Some(ls),
            Machine::Single(_) => None,
        }
    }

    /// The cache copy serving `core`. A shared L1 is reachable as `Head`.
    pub fn cache_mut(&mut self, slot: usize, which: CacheSel, core: CoreSel) -> Option<&mut Cache> {
        let copy = match (&mut self.slots.get_mut(slot)?.l1, core) {
            (SlotL1::None, _) => return None,
            (SlotL1::Shared(c), CoreSel::Head) => c,
            (SlotL1::Shared(_), CoreSel::Shadow) => return None,
            (SlotL1::Replicated { head, .. }, CoreSel::Head) => head,
            (SlotL1::Replicated { shadow, .. }, CoreSel::Shadow) => shadow,
        };
        Some(match which {
            CacheSel::Instruction => &mut copy.icache,
            CacheSel::Data => &mut copy.dcache,
        })
    }

    pub fn recoveries(&self, slot: usize) -> u64 {
        match &self.slots[slot].l1 {
            SlotL1::None => 0,
            SlotL1::Shared(c) => c.recoveries(),
            SlotL1::Replicated { head, shadow } => head.recoveries() + shadow.recoveries(),
        }
    }

    pub fn result(&self, slot: usize) -> SlotResult {
        let s = &self.slots[slot];
        SlotResult {
            status: s.status,
            delivered: s.delivered.clone(),
            first_delivery: s.first_delivery,
            error_cycle: s.error_cycle,
            end_cycle: s.end_cycle,
            recoveries: self.recoveries(slot),
        }
    }

    /// Runs until every slot stopped or `budget` cycles have elapsed in
    /// total; slots still running at that point are marked as hung.
    pub fn run(&mut self, budget: u64) -> Vec<SlotResult> {
        while !self.all_done() && self.cycle < budget {
            self.step();
        }
        self.finish()
    }

    /// Marks running slots as hung and collects the per-slot results.
    pub fn finish(&mut self) -> Vec<SlotResult> {
        for s in &mut self.slots {
            if s.status == SlotStatus::Running {
                s.status = SlotStatus::Hang;
            }
        }
        (0..self.slots.len()).map(|i| self.result(i)).collect()
    }

    /// Advances the whole system by one cycle.
    pub fn step(&mut self) {
        let t = self.cycle;
        let memory = &mut self.memory;
        for slot in self.slots.iter_mut().filter(|s| s.status == SlotStatus::Running) {
            slot.cycle(t, memory);
        }
        let slots = &mut self.slots;
        let granted =
            self.arbiter.grant(|i| slots[i].status == SlotStatus::Running && slots[i].pending_read.is_some());
        if let Some(i) = granted {
            slots[i].service_read(&self.memory);
        }
        self.cycle += 1;
    }
}

impl Slot {
    fn cycle(&mut self, t: u64, memory: &mut Memory) {
        let input = std::mem::take(&mut self.next_input);
        let (head_out, delivered, error) = match &mut self.machine {
            Machine::Single(state) => {
                let out = state.advance(&self.core, &input);
                (out, Some(out), false)
            }
            Machine::Pair(ls) => {
                let detail = match &mut self.l1 {
                    SlotL1::Replicated { shadow, .. } => {
                        let wait = &mut self.shadow_wait;
                        let mem: &Memory = memory;
                        ls.step_with(&input, |inp| shadow_lookup(shadow, mem, wait, inp))
                    }
                    _ => ls.step_with(&input, |_| {}),
                };
                if let SlotL1::Replicated { shadow, .. } = &mut self.l1 {
                    let out = detail.shadow_out;
                    if let Some(a) = out.fetch_req {
                        self.shadow_wait = Some(ReadReq::Fetch(a));
                    }
                    if let Some(m) = out.mem_req {
                        if m.is_write {
                            if let Some(word) = shadow.dcache.peek(m.addr) {
                                shadow.dcache.update_if_resident(m.addr, merge_write(word, &m));
                            }
                        } else {
                            self.shadow_wait = Some(ReadReq::Data(m));
                        }
                    }
                }
                (detail.head_out, detail.outcome.output, detail.outcome.error_irq)
            }
        };
        let single = matches!(self.machine, Machine::Single(_));

        if let Some(m) = head_out.mem_req {
            if !m.is_write {
                self.pending_read = Some(ReadReq::Data(m));
            } else if !single {
                self.store_buffer.push_back(m);
            }
        }
        if let Some(addr) = head_out.fetch_req {
            self.pending_read = Some(ReadReq::Fetch(addr));
        }

        if error {
            self.status = SlotStatus::Detected;
            self.error_cycle = Some(t);
            self.end_cycle = Some(t);
            self.store_buffer.clear();
            self.pending_read = None;
            return;
        }
        if let Some(out) = delivered {
            self.first_delivery.get_or_insert(t);
            self.delivered.push(out);
            if let Some(w) = out.write() {
                if !single {
                    let head = self.store_buffer.pop_front();
                    debug_assert_eq!(head, Some(w), "delivered write must match the store buffer");
                }
                self.commit(&w, memory);
            }
            if out.halted || out.trap_out.is_some() {
                self.status = if out.halted { SlotStatus::Halted } else { SlotStatus::Trapped };
                self.end_cycle = Some(t);
                return;
            }
        }

        self.irq_lines &= !head_out.irq_ack;
        self.irq_lines |= self.irq.lines_at(t + 1);
        self.next_input.irq_lines = self.irq_lines;
    }

    fn commit(&mut self, w: &MemReq, memory: &mut Memory) {
        let addr = w.addr & !3;
        let Some(old) = memory.read_word(addr) else { return };
        let merged = merge_write(old, w);
        let dcache = match &mut self.l1 {
            SlotL1::None => {
                memory.write_word(addr, merged);
                return;
            }
            SlotL1::Shared(c) => &mut c.dcache,
            SlotL1::Replicated { head, .. } => &mut head.dcache,
        };
        let _ = dcache.write(addr, merged, memory);
    }

    fn service_read(&mut self, memory: &Memory) {
        let Some(req) = self.pending_read.take() else { return };
        match req {
            ReadReq::Fetch(addr) => {
                let word = match &mut self.l1 {
                    SlotL1::None => memory.read_word(addr),
                    SlotL1::Shared(c) => c.icache.read(addr, memory).ok(),
                    SlotL1::Replicated { head, .. } => head.icache.read_unchecked(addr, memory).ok(),
                };
                self.next_input.instr_response = Some(word.unwrap_or(0));
            }
            ReadReq::Data(m) => {
                let addr = m.addr & !3;
                let word = match &mut self.l1 {
                    SlotL1::None => memory.read_word(addr),
                    SlotL1::Shared(c) => c.dcache.read(addr, memory).ok(),
                    SlotL1::Replicated { head, .. } => head.dcache.read_unchecked(addr, memory).ok(),
                };
                let word = self
                    .store_buffer
                    .iter()
                    .filter(|w| w.addr & !3 == addr)
                    .fold(word.unwrap_or(0), merge_write);
                self.next_input.data_response = Some(extract_read(word, &m));
            }
        }
    }
}

/// Answers the shadow's own outstanding request from its private L1 copy,
/// keeping the timing of the replicated response.
fn shadow_lookup(copy: &mut L1Copy, memory: &Memory, wait: &mut Option<ReadReq>, input: &mut InputVector) {
    match *wait {
        Some(ReadReq::Fetch(addr)) if input.instr_response.is_some() => {
            input.instr_response = Some(copy.icache.read_unchecked(addr, memory).unwrap_or(0));
            *wait = None;
        }
        Some(ReadReq::Data(m)) if input.data_response.is_some() => {
            let word = copy.dcache.read_unchecked(m.addr & !3, memory).unwrap_or(0);
            input.data_response = Some(extract_read(word, &m));
            *wait = None;
        }
        _ => {}
    }
}
