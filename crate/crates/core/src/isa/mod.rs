//! Minimal deterministic RV32I core model.
//!
//! The core talks to the outside world only through [`InputVector`] and
//! [`OutputVector`], one of each per cycle. Everything the core needs from
//! memory arrives through the input vector, so duplicating the input stream
//! is enough to duplicate the core's behaviour.
//!
//! Timing: a fetch request issued at cycle `t` is answered in the input of
//! cycle `t + 1` at the earliest; the core stalls while a response is
//! absent. Non-memory instructions retire in the cycle their instruction
//! word arrives and the next fetch is issued in that same cycle, so straight
//! line code runs at one instruction per cycle. Loads take one extra
//! exchange, stores occupy their own cycle.

mod decode;
mod program;

pub use decode::{
    decode, BranchKind, ImmOp, Instruction, LoadKind, MemWidth, RegOp, StoreKind, ECALL_WORD, MRET_WORD,
};
pub use program::{Program, ProgramError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offset of the interrupt vector from the reset address.
pub const IRQ_VECTOR_OFFSET: u32 = 0x40;

/// Width in bits of the canonical [`OutputVector`] encoding.
pub const OUTPUT_BITS: u32 = 115;
/// Width in bits of the canonical [`InputVector`] encoding.
pub const INPUT_BITS: u32 = 75;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("reset pc {0:#010x} is not 4-byte aligned")]
    MisalignedResetPc(u32),
}

/// 4-bit trap cause, using the RISC-V exception numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrapCode(u8);

impl TrapCode {
    pub const INSTR_MISALIGNED: TrapCode = TrapCode(0);
    pub const ILLEGAL_INSTRUCTION: TrapCode = TrapCode(2);
    pub const LOAD_MISALIGNED: TrapCode = TrapCode(4);
    pub const STORE_MISALIGNED: TrapCode = TrapCode(6);

    pub fn new(code: u8) -> Self {
        TrapCode(code & 0xf)
    }

    pub fn code(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CoreConfig {
    reset_pc: u32,
}

impl CoreConfig {
    pub fn new(reset_pc: u32) -> Result<Self, ConfigError> {
        if reset_pc & 3 != 0 {
            return Err(ConfigError::MisalignedResetPc(reset_pc));
        }
        Ok(CoreConfig { reset_pc })
    }

    pub fn reset_pc(&self) -> u32 {
        self.reset_pc
    }

    pub fn irq_vector(&self) -> u32 {
        self.reset_pc.wrapping_add(IRQ_VECTOR_OFFSET)
    }
}

/// What the core is waiting for between cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// About to start the instruction at `pc`.
    Fetch,
    /// Fetch for `pc` issued, waiting for the instruction word.
    AwaitInstr,
    /// Load issued, waiting for data. `pc` already points past the load.
    AwaitData { rd: u8, kind: LoadKind },
}

/// Full architectural state of one core; the fault-injection target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArchState {
    pub pc: u32,
    pub regs: [u32; 32],
    pub halted: bool,
    pub trap_pending: Option<TrapCode>,
    pub phase: Phase,
    /// Return address saved when an interrupt is taken.
    pub epc: u32,
    /// Set while the interrupt handler runs; masks further interrupts.
    pub irq_active: bool,
}

/// A memory request as it appears on the core's output pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemReq {
    pub addr: u32,
    pub wdata: u32,
    pub width: MemWidth,
    pub is_write: bool,
}

/// Signals entering a core in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct InputVector {
    pub instr_response: Option<u32>,
    pub data_response: Option<u32>,
    pub irq_lines: u8,
    pub reset: bool,
}

/// Signals leaving a core in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OutputVector {
    pub fetch_req: Option<u32>,
    pub mem_req: Option<MemReq>,
    pub trap_out: Option<TrapCode>,
    pub irq_ack: u8,
    pub halted: bool,
}

impl InputVector {
    /// No responses, no interrupts, reset held asserted.
    pub fn in_reset() -> Self {
        InputVector { reset: true, ..Default::default() }
    }

    /// Canonical 75-bit encoding, most significant field first:
    /// instr present (1) + word (32), data present (1) + word (32),
    /// irq lines (8), reset (1).
    pub fn encode(&self) -> u128 {
        let mut b = BitPacker::default();
        b.opt(self.instr_response.map(u128::from), 32);
        b.opt(self.data_response.map(u128::from), 32);
        b.put(self.irq_lines as u128, 8);
        b.put(self.reset as u128, 1);
        b.bits
    }

    /// Inverse of [`encode`](Self::encode). Payload bits behind a cleared
    /// present flag are ignored.
    pub fn decode(bits: u128) -> Self {
        let mut u = BitUnpacker::new(bits, INPUT_BITS);
        InputVector {
            instr_response: u.opt(32).map(|v| v as u32),
            data_response: u.opt(32).map(|v| v as u32),
            irq_lines: u.take(8) as u8,
            reset: u.take(1) != 0,
        }
    }
}

impl OutputVector {
    pub fn halted() -> Self {
        OutputVector { halted: true, ..Default::default() }
    }

    /// True when the vector carries nothing at all (a stall cycle).
    pub fn is_idle(&self) -> bool {
        *self == OutputVector::default()
    }

    pub fn write(&self) -> Option<MemReq> {
        self.mem_req.filter(|m| m.is_write)
    }

    /// Canonical 115-bit encoding, most significant field first:
    /// fetch present (1) + addr (32); mem present (1) + addr (32) +
    /// wdata (32) + width (2) + is_write (1); trap present (1) + code (4);
    /// irq_ack (8); halted (1). Absent fields are zero-padded.
    pub fn encode(&self) -> u128 {
        let mut b = BitPacker::default();
        b.opt(self.fetch_req.map(u128::from), 32);
        match self.mem_req {
            Some(m) => {
                b.put(1, 1);
                b.put(m.addr as u128, 32);
                b.put(m.wdata as u128, 32);
                b.put(m.width.to_bits(), 2);
                b.put(m.is_write as u128, 1);
            }
            None => b.put(0, 68),
        }
        b.opt(self.trap_out.map(|t| t.0 as u128), 4);
        b.put(self.irq_ack as u128, 8);
        b.put(self.halted as u128, 1);
        b.bits
    }

    pub fn decode(bits: u128) -> Self {
        let mut u = BitUnpacker::new(bits, OUTPUT_BITS);
        let fetch_req = u.opt(32).map(|v| v as u32);
        let mem_present = u.take(1) != 0;
        let addr = u.take(32) as u32;
        let wdata = u.take(32) as u32;
        let width = MemWidth::from_bits(u.take(2));
        let is_write = u.take(1) != 0;
        OutputVector {
            fetch_req,
            mem_req: mem_present.then_some(MemReq { addr, wdata, width, is_write }),
            trap_out: u.opt(4).map(|c| TrapCode(c as u8)),
            irq_ack: u.take(8) as u8,
            halted: u.take(1) != 0,
        }
    }
}

#[derive(Default)]
struct BitPacker {
    bits: u128,
}

impl BitPacker {
    fn put(&mut self, v: u128, width: u32) {
        self.bits = (self.bits << width) | (v & ((1u128 << width) - 1));
    }

    fn opt(&mut self, v: Option<u128>, width: u32) {
        match v {
            Some(v) => {
                self.put(1, 1);
                self.put(v, width);
            }
            None => self.put(0, width + 1),
        }
    }
}

struct BitUnpacker {
    bits: u128,
    remaining: u32,
}

impl BitUnpacker {
    fn new(bits: u128, width: u32) -> Self {
        BitUnpacker { bits, remaining: width }
    }

    fn take(&mut self, width: u32) -> u128 {
        self.remaining -= width;
        (self.bits >> self.remaining) & ((1u128 << width) - 1)
    }

    fn opt(&mut self, width: u32) -> Option<u128> {
        let present = self.take(1) != 0;
        let v = self.take(width);
        present.then_some(v)
    }
}

/// Architectural state right after reset.
pub fn reset(config: &CoreConfig) -> ArchState {
    ArchState {
        pc: config.reset_pc,
        regs: [0; 32],
        halted: false,
        trap_pending: None,
        phase: Phase::Fetch,
        epc: 0,
        irq_active: false,
    }
}

impl ArchState {
    /// Pure single-cycle transition.
    pub fn step(&self, config: &CoreConfig, input: &InputVector) -> (ArchState, OutputVector) {
        let mut next = *self;
        let out = next.advance(config, input);
        (next, out)
    }

    /// In-place form of [`step`](Self::step).
    pub fn advance(&mut self, config: &CoreConfig, input: &InputVector) -> OutputVector {
        if input.reset {
            *self = reset(config);
            return OutputVector::default();
        }
        if self.halted {
            return OutputVector::halted();
        }
        if let Some(code) = self.trap_pending {
            return OutputVector { trap_out: Some(code), ..Default::default() };
        }
        let mut out = OutputVector::default();
        match self.phase {
            Phase::Fetch => self.begin_instruction(config, input.irq_lines, &mut out),
            Phase::AwaitInstr => {
                if let Some(word) = input.instr_response {
                    self.execute(config, word, input.irq_lines, &mut out);
                }
            }
            Phase::AwaitData { rd, kind } => {
                if let Some(raw) = input.data_response {
                    self.write_reg(rd, kind.extend(raw));
                    self.begin_instruction(config, input.irq_lines, &mut out);
                }
            }
        }
        self.regs[0] = 0;
        out
    }

    fn reg(&self, idx: u8) -> u32 {
        if idx == 0 {
            0
        } else {
            self.regs[idx as usize]
        }
    }

    fn write_reg(&mut self, idx: u8, v: u32) {
        if idx != 0 {
            self.regs[idx as usize] = v;
        }
    }

    fn trap(&mut self, code: TrapCode, out: &mut OutputVector) {
        self.trap_pending = Some(code);
        self.phase = Phase::Fetch;
        out.trap_out = Some(code);
    }

    /// Instruction boundary: take a pending interrupt or issue the fetch.
    fn begin_instruction(&mut self, config: &CoreConfig, irq_lines: u8, out: &mut OutputVector) {
        self.phase = Phase::Fetch;
        if !self.irq_active && irq_lines != 0 {
            let line = irq_lines.trailing_zeros();
            out.irq_ack = 1 << line;
            self.epc = self.pc;
            self.pc = config.irq_vector();
            self.irq_active = true;
            return;
        }
        if self.pc & 3 != 0 {
            self.trap(TrapCode::INSTR_MISALIGNED, out);
            return;
        }
        out.fetch_req = Some(self.pc);
        self.phase = Phase::AwaitInstr;
    }

    fn jump(
        &mut self,
        config: &CoreConfig,
        target: u32,
        link: Option<u8>,
        irq_lines: u8,
        out: &mut OutputVector,
    ) {
        if target & 3 != 0 {
            self.trap(TrapCode::INSTR_MISALIGNED, out);
            return;
        }
        if let Some(rd) = link {
            self.write_reg(rd, self.pc.wrapping_add(4));
        }
        self.pc = target;
        self.begin_instruction(config, irq_lines, out);
    }

    fn execute(&mut self, config: &CoreConfig, word: u32, irq_lines: u8, out: &mut OutputVector) {
        let pc = self.pc;
        match decode(word) {
            Instruction::Illegal => self.trap(TrapCode::ILLEGAL_INSTRUCTION, out),
            Instruction::Ecall => {
                self.halted = true;
                self.phase = Phase::Fetch;
                out.halted = true;
            }
            Instruction::Mret => {
                self.irq_active = false;
                let target = self.epc;
                self.jump(config, target, None, irq_lines, out);
            }
            Instruction::Lui { rd, imm } => {
                self.write_reg(rd, imm);
                self.pc = pc.wrapping_add(4);
                self.begin_instruction(config, irq_lines, out);
            }
            Instruction::Auipc { rd, imm } => {
                self.write_reg(rd, pc.wrapping_add(imm));
                self.pc = pc.wrapping_add(4);
                self.begin_instruction(config, irq_lines, out);
            }
            Instruction::Jal { rd, imm } => self.jump(config, pc.wrapping_add(imm), Some(rd), irq_lines, out),
            Instruction::Jalr { rd, rs1, imm } => {
                let target = self.reg(rs1).wrapping_add(imm) & !1;
                self.jump(config, target, Some(rd), irq_lines, out)
            }
            Instruction::Branch { kind, rs1, rs2, imm } => {
                let (a, b) = (self.reg(rs1), self.reg(rs2));
                let taken = match kind {
                    BranchKind::Beq => a == b,
                    BranchKind::Bne => a != b,
                    BranchKind::Blt => (a as i32) < (b as i32),
                    BranchKind::Bge => (a as i32) >= (b as i32),
                    BranchKind::Bltu => a < b,
                    BranchKind::Bgeu => a >= b,
                };
                let target = if taken { pc.wrapping_add(imm) } else { pc.wrapping_add(4) };
                self.jump(config, target, None, irq_lines, out)
            }
            Instruction::Load { kind, rd, rs1, imm } => {
                let addr = self.reg(rs1).wrapping_add(imm);
                let width = kind.width();
                if addr % width.bytes() != 0 {
                    self.trap(TrapCode::LOAD_MISALIGNED, out);
                    return;
                }
                out.mem_req = Some(MemReq { addr, wdata: 0, width, is_write: false });
                self.pc = pc.wrapping_add(4);
                self.phase = Phase::AwaitData { rd, kind };
            }
            Instruction::Store { kind, rs1, rs2, imm } => {
                let addr = self.reg(rs1).wrapping_add(imm);
                let width = kind.width();
                if addr % width.bytes() != 0 {
                    self.trap(TrapCode::STORE_MISALIGNED, out);
                    return;
                }
                let wdata = self.reg(rs2) & width.mask();
                out.mem_req = Some(MemReq { addr, wdata, width, is_write: true });
                self.pc = pc.wrapping_add(4);
                self.phase = Phase::Fetch;
            }
            Instruction::OpImm { op, rd, rs1, imm } => {
                let a = self.reg(rs1);
                let v = match op {
                    ImmOp::Addi => a.wrapping_add(imm),
                    ImmOp::Slti => ((a as i32) < (imm as i32)) as u32,
                    ImmOp::Sltiu => (a < imm) as u32,
                    ImmOp::Xori => a ^ imm,
                    ImmOp::Ori => a | imm,
                    ImmOp::Andi => a & imm,
                    ImmOp::Slli => a << imm,
                    ImmOp::Srli => a >> imm,
                    ImmOp::Srai => ((a as i32) >> imm) as u32,
                };
                self.write_reg(rd, v);
                self.pc = pc.wrapping_add(4);
                self.begin_instruction(config, irq_lines, out);
            }
            Instruction::Op { op, rd, rs1, rs2 } => {
                let (a, b) = (self.reg(rs1), self.reg(rs2));
                let sh = b & 0x1f;
                let v = match op {
                    RegOp::Add => a.wrapping_add(b),
                    RegOp::Sub => a.wrapping_sub(b),
                    RegOp::Sll => a << sh,
                    RegOp::Slt => ((a as i32) < (b as i32)) as u32,
                    RegOp::Sltu => (a < b) as u32,
                    RegOp::Xor => a ^ b,
                    RegOp::Srl => a >> sh,
                    RegOp::Sra => ((a as i32) >> sh) as u32,
                    RegOp::Or => a | b,
                    RegOp::And => a & b,
                };
                self.write_reg(rd, v);
                self.pc = pc.wrapping_add(4);
                self.begin_instruction(config, irq_lines, out);
            }
        }
    }

    /// Number of differing bits between two states under a fixed field
    /// layout (pc, registers, flags, trap, phase, epc).
    pub fn hamming_distance(&self, other: &ArchState) -> u32 {
        let words_a = self.encode_words();
        let words_b = other.encode_words();
        words_a.iter().zip(words_b.iter()).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    fn encode_words(&self) -> [u32; 36] {
        let mut w = [0u32; 36];
        w[0] = self.pc;
        w[1..33].copy_from_slice(&self.regs);
        let trap = self.trap_pending.map_or(0, |t| 0x10 | t.0 as u32);
        let phase = match self.phase {
            Phase::Fetch => 0,
            Phase::AwaitInstr => 1,
            Phase::AwaitData { rd, kind } => 2 | (rd as u32) << 2 | kind.code() << 7,
        };
        w[33] = self.halted as u32 | (self.irq_active as u32) << 1 | trap << 2;
        w[34] = phase;
        w[35] = self.epc;
        w
    }
}
