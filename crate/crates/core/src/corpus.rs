//! Built-in RV32I test programs.
//!
//! Every program keeps its data at `base + 0x400` and its interrupt handler
//! (if any) at `base + 0x40`, so a copy fits in a 2 KiB window and several
//! copies can share one memory at different bases.

use crate::asm::*;
use crate::isa::{Program, IRQ_VECTOR_OFFSET};
use crate::platform::IrqSchedule;

/// Offset of each program's data area from its base.
pub const DATA_OFFSET: u32 = 0x400;

/// A named program together with the interrupts its environment raises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub program: Program,
    pub irq: IrqSchedule,
}

impl CorpusProgram {
    fn new(name: &'static str, base: u32, words: Vec<u32>) -> Self {
        CorpusProgram {
            name,
            program: Program::new(base, words).expect("corpus programs are well formed"),
            irq: IrqSchedule::default(),
        }
    }
}

#[derive(Default)]
struct Builder {
    words: Vec<u32>,
}

impl Builder {
    fn emit(&mut self, w: u32) -> &mut Self {
        self.words.push(w);
        self
    }

    fn li(&mut self, rd: u8, value: u32) -> &mut Self {
        self.words.extend(li(rd, value));
        self
    }

    fn pad_to(&mut self, offset: u32) -> &mut Self {
        assert!(self.words.len() * 4 <= offset as usize, "code overruns {offset:#x}");
        self.words.resize(offset as usize / 4, 0);
        self
    }

    fn here(&self) -> i32 {
        4 * self.words.len() as i32
    }

    fn finish(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.words)
    }
}

/// Sums 10 + 9 + ... + 1 and stores the result.
pub fn arith_loop(base: u32) -> CorpusProgram {
    let mut b = Builder::default();
    b.li(3, base + DATA_OFFSET).emit(addi(1, 0, 10)).emit(addi(2, 0, 0));
    let top = b.here();
    b.emit(add(2, 2, 1)).emit(addi(1, 1, -1));
    let off = top - b.here();
    b.emit(bne(1, 0, off)).emit(sw(2, 3, 0)).emit(ecall());
    CorpusProgram::new("arith_loop", base, b.finish())
}

const CHECKSUM_TABLE: [u32; 8] =
    [0x1234_5678, 0x9abc_def0, 0x0f1e_2d3c, 0x4b5a_6978, 0xdead_beef, 0x00c0_ffee, 0x1357_9bdf, 0x2468_ace0];

/// Rotate-and-xor checksum over an 8-word table, then a few sub-word loads
/// of the result.
pub fn checksum(base: u32) -> CorpusProgram {
    let mut b = Builder::default();
    b.li(3, base + 0x80).li(4, base + DATA_OFFSET).emit(addi(5, 0, 8)).emit(addi(6, 0, 0));
    let top = b.here();
    b.emit(lw(7, 3, 0))
        .emit(slli(8, 6, 1))
        .emit(srli(9, 6, 31))
        .emit(or(6, 8, 9))
        .emit(xor(6, 6, 7))
        .emit(addi(3, 3, 4))
        .emit(addi(5, 5, -1));
    let off = top - b.here();
    b.emit(bne(5, 0, off))
        .emit(sw(6, 4, 0))
        .emit(lbu(10, 4, 3))
        .emit(lh(11, 4, 2))
        .emit(sw(10, 4, 4))
        .emit(sw(11, 4, 8))
        .emit(ecall())
        .pad_to(0x80);
    b.words.extend(CHECKSUM_TABLE);
    CorpusProgram::new("checksum", base, b.finish())
}

/// Xorshift sequence with data-dependent branches of every kind, plus a
/// pair of forward jumps over illegal words.
pub fn branch_heavy(base: u32) -> CorpusProgram {
    let mut b = Builder::default();
    b.li(1, 0x9e37_79b9)
        .li(3, base + DATA_OFFSET)
        .emit(addi(4, 0, 16))
        .emit(addi(2, 0, 0))
        .emit(addi(5, 0, 0));
    let top = b.here();
    b.emit(bge(1, 0, 8))
        .emit(addi(2, 2, 1))
        .emit(andi(6, 1, 1))
        .emit(beq(6, 0, 8))
        .emit(addi(5, 5, 1))
        .emit(sltu(7, 2, 5))
        .emit(bltu(7, 4, 8))
        .emit(addi(5, 5, 100))
        .emit(bgeu(5, 2, 8))
        .emit(addi(2, 2, 100))
        .emit(slli(8, 1, 13))
        .emit(xor(1, 1, 8))
        .emit(srli(8, 1, 17))
        .emit(xor(1, 1, 8))
        .emit(slli(8, 1, 5))
        .emit(xor(1, 1, 8))
        .emit(addi(4, 4, -1));
    let off = top - b.here();
    b.emit(blt(0, 4, off))
        .emit(sw(2, 3, 0))
        .emit(sw(5, 3, 4))
        .emit(sw(1, 3, 8))
        .emit(jal(0, 8))
        .emit(0)
        .emit(jal(9, 8))
        .emit(0)
        .emit(sw(9, 3, 12))
        .emit(ecall());
    CorpusProgram::new("branch_heavy", base, b.finish())
}

/// Spins until two interrupts have been handled. The handler counts
/// interrupts in x10 and accumulates the interrupted loop counter in x11.
pub fn irq(base: u32) -> CorpusProgram {
    let mut b = Builder::default();
    b.li(3, base + DATA_OFFSET).emit(addi(5, 0, 0)).emit(addi(6, 0, 2));
    let top = b.here();
    b.emit(addi(5, 5, 1));
    let off = top - b.here();
    b.emit(blt(10, 6, off))
        .emit(sw(5, 3, 0))
        .emit(sw(10, 3, 4))
        .emit(sw(11, 3, 8))
        .emit(ecall())
        .pad_to(IRQ_VECTOR_OFFSET)
        .emit(addi(10, 10, 1))
        .emit(add(11, 11, 5))
        .emit(mret());
    let mut p = CorpusProgram::new("irq", base, b.finish());
    p.irq = IrqSchedule::new(vec![(6, 0), (25, 2)]);
    p
}

/// Word, half and byte stores followed by sign-extending reloads.
pub fn store_heavy(base: u32) -> CorpusProgram {
    let mut b = Builder::default();
    b.li(3, base + DATA_OFFSET)
        .li(1, 0x8899_aabb)
        .emit(sw(1, 3, 0))
        .emit(sh(1, 3, 4))
        .emit(sh(1, 3, 6))
        .emit(sb(1, 3, 8))
        .emit(srli(2, 1, 8))
        .emit(sb(2, 3, 9))
        .emit(lw(4, 3, 8))
        .emit(lh(5, 3, 4))
        .emit(lb(6, 3, 0))
        .emit(add(7, 4, 5))
        .emit(add(7, 7, 6))
        .emit(sw(7, 3, 12))
        .emit(ecall());
    CorpusProgram::new("store_heavy", base, b.finish())
}

/// The five standard programs, all placed at `base`.
pub fn standard(base: u32) -> Vec<CorpusProgram> {
    vec![arith_loop(base), checksum(base), branch_heavy(base), irq(base), store_heavy(base)]
}

pub fn by_name(name: &str, base: u32) -> Option<CorpusProgram> {
    standard(base).into_iter().chain(adversarial()).find(|p| p.name == name)
}

// The adversarial programs address their data through x0, so they only run
// at base 0. Each keeps a single live register that reaches the outputs at
// least every second cycle: a copy of that register that drifts out of step
// with the other core cannot stay hidden for longer than the stagger.

/// Eight word stores of one constant.
pub fn ccf_store_burst() -> CorpusProgram {
    let mut b = Builder::default();
    b.emit(addi(1, 0, 0x5a5));
    for k in 0..8 {
        b.emit(sw(1, 0, 0x400 + 4 * k));
    }
    b.emit(ecall());
    CorpusProgram::new("ccf_store_burst", 0, b.finish())
}

/// Stores interleaved with arithmetic right shifts of a negative value.
pub fn ccf_sra_store() -> CorpusProgram {
    let mut b = Builder::default();
    b.emit(addi(1, 0, -0x5a5));
    for k in 0..6 {
        b.emit(sw(1, 0, 0x400 + 4 * k)).emit(srai(1, 1, 1));
    }
    b.emit(sw(1, 0, 0x420)).emit(ecall());
    CorpusProgram::new("ccf_sra_store", 0, b.finish())
}

/// Stores interleaved with left shifts of the stored register.
pub fn ccf_shift_store() -> CorpusProgram {
    let mut b = Builder::default();
    b.emit(addi(1, 0, 0x5a5));
    for k in 0..6 {
        b.emit(sw(1, 0, 0x400 + 4 * k)).emit(slli(1, 1, 1));
    }
    b.emit(sw(1, 0, 0x420)).emit(ecall());
    CorpusProgram::new("ccf_shift_store", 0, b.finish())
}

/// Straight-line programs used to show what staggering buys against
/// common-cause faults.
pub fn adversarial() -> Vec<CorpusProgram> {
    vec![ccf_store_burst(), ccf_shift_store(), ccf_sra_store()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_fit_their_window() {
        for p in standard(0x1000).into_iter().chain(adversarial()) {
            let len = 4 * p.program.words().len() as u32;
            assert!(len <= DATA_OFFSET, "{} is {len:#x} bytes", p.name);
        }
    }

    #[test]
    fn irq_handler_sits_at_vector() {
        let p = irq(0x2000);
        let at = (IRQ_VECTOR_OFFSET / 4) as usize;
        assert_eq!(p.program.words()[at], addi(10, 10, 1));
        assert_eq!(p.program.words()[at + 2], mret());
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = standard(0).iter().chain(&adversarial()).map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 8);
    }
}
