//! RV32I instruction decoding.
//!
//! Decoding is total: every 32-bit word maps either to a supported
//! instruction or to [`Instruction::Illegal`].

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadKind {
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
}

impl LoadKind {
    pub fn width(self) -> MemWidth {
        match self {
            LoadKind::Lb | LoadKind::Lbu => MemWidth::Byte,
            LoadKind::Lh | LoadKind::Lhu => MemWidth::Half,
            LoadKind::Lw => MemWidth::Word,
        }
    }

    /// Extends a zero-extended raw load value to the register value.
    pub fn extend(self, raw: u32) -> u32 {
        match self {
            LoadKind::Lb => raw as u8 as i8 as i32 as u32,
            LoadKind::Lh => raw as u16 as i16 as i32 as u32,
            LoadKind::Lbu => raw & 0xff,
            LoadKind::Lhu => raw & 0xffff,
            LoadKind::Lw => raw,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            LoadKind::Lb => 0,
            LoadKind::Lh => 1,
            LoadKind::Lw => 2,
            LoadKind::Lbu => 4,
            LoadKind::Lhu => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    Sb,
    Sh,
    Sw,
}

impl StoreKind {
    pub fn width(self) -> MemWidth {
        match self {
            StoreKind::Sb => MemWidth::Byte,
            StoreKind::Sh => MemWidth::Half,
            StoreKind::Sw => MemWidth::Word,
        }
    }
}

/// Access width of a memory request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemWidth {
    Byte,
    Half,
    Word,
}

impl MemWidth {
    pub fn bytes(self) -> u32 {
        match self {
            MemWidth::Byte => 1,
            MemWidth::Half => 2,
            MemWidth::Word => 4,
        }
    }

    pub fn mask(self) -> u32 {
        match self {
            MemWidth::Byte => 0xff,
            MemWidth::Half => 0xffff,
            MemWidth::Word => 0xffff_ffff,
        }
    }

    pub(crate) fn to_bits(self) -> u128 {
        match self {
            MemWidth::Byte => 0,
            MemWidth::Half => 1,
            MemWidth::Word => 2,
        }
    }

    /// The unused code 3 decodes as `Word`; comparisons are made on raw bits,
    /// so this only matters for display of corrupted vectors.
    pub(crate) fn from_bits(bits: u128) -> Self {
        match bits & 3 {
            0 => MemWidth::Byte,
            1 => MemWidth::Half,
            _ => MemWidth::Word,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImmOp {
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

/// A decoded instruction. Register fields are 5-bit indices; immediates are
/// already sign-extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Lui {
        rd: u8,
        imm: u32,
    },
    Auipc {
        rd: u8,
        imm: u32,
    },
    Jal {
        rd: u8,
        imm: u32,
    },
    Jalr {
        rd: u8,
        rs1: u8,
        imm: u32,
    },
    Branch {
        kind: BranchKind,
        rs1: u8,
        rs2: u8,
        imm: u32,
    },
    Load {
        kind: LoadKind,
        rd: u8,
        rs1: u8,
        imm: u32,
    },
    Store {
        kind: StoreKind,
        rs1: u8,
        rs2: u8,
        imm: u32,
    },
    OpImm {
        op: ImmOp,
        rd: u8,
        rs1: u8,
        imm: u32,
    },
    Op {
        op: RegOp,
        rd: u8,
        rs1: u8,
        rs2: u8,
    },
    Ecall,
    /// Return from the interrupt handler.
    Mret,
    Illegal,
}

pub const ECALL_WORD: u32 = 0x0000_0073;
pub const MRET_WORD: u32 = 0x3020_0073;

fn rd(w: u32) -> u8 {
    ((w >> 7) & 0x1f) as u8
}
fn rs1(w: u32) -> u8 {
    ((w >> 15) & 0x1f) as u8
}
fn rs2(w: u32) -> u8 {
    ((w >> 20) & 0x1f) as u8
}
fn funct3(w: u32) -> u32 {
    (w >> 12) & 7
}
fn funct7(w: u32) -> u32 {
    w >> 25
}

fn imm_i(w: u32) -> u32 {
    ((w as i32) >> 20) as u32
}

fn imm_s(w: u32) -> u32 {
    ((((w as i32) >> 25) << 5) as u32) | ((w >> 7) & 0x1f)
}

fn imm_b(w: u32) -> u32 {
    let sign = (((w as i32) >> 31) as u32) << 12;
    sign | ((w & 0x80) << 4) | ((w >> 20) & 0x7e0) | ((w >> 7) & 0x1e)
}

fn imm_u(w: u32) -> u32 {
    w & 0xffff_f000
}

fn imm_j(w: u32) -> u32 {
    let sign = (((w as i32) >> 31) as u32) << 20;
    sign | (w & 0x000f_f000) | ((w >> 9) & 0x800) | ((w >> 20) & 0x7fe)
}

pub fn decode(w: u32) -> Instruction {
    use Instruction::*;
    match w & 0x7f {
        0x37 => Lui { rd: rd(w), imm: imm_u(w) },
        0x17 => Auipc { rd: rd(w), imm: imm_u(w) },
        0x6f => Jal { rd: rd(w), imm: imm_j(w) },
        0x67 if funct3(w) == 0 => Jalr { rd: rd(w), rs1: rs1(w), imm: imm_i(w) },
        0x63 => {
            let kind = match funct3(w) {
                0 => BranchKind::Beq,
                1 => BranchKind::Bne,
                4 => BranchKind::Blt,
                5 => BranchKind::Bge,
                6 => BranchKind::Bltu,
                7 => BranchKind::Bgeu,
                _ => return Illegal,
            };
            Branch { kind, rs1: rs1(w), rs2: rs2(w), imm: imm_b(w) }
        }
        0x03 => {
            let kind = match funct3(w) {
                0 => LoadKind::Lb,
                1 => LoadKind::Lh,
                2 => LoadKind::Lw,
                4 => LoadKind::Lbu,
                5 => LoadKind::Lhu,
                _ => return Illegal,
            };
            Load { kind, rd: rd(w), rs1: rs1(w), imm: imm_i(w) }
        }
        0x23 => {
            let kind = match funct3(w) {
                0 => StoreKind::Sb,
                1 => StoreKind::Sh,
                2 => StoreKind::Sw,
                _ => return Illegal,
            };
            Store { kind, rs1: rs1(w), rs2: rs2(w), imm: imm_s(w) }
        }
        0x13 => {
            let (op, imm) = match (funct3(w), funct7(w)) {
                (0, _) => (ImmOp::Addi, imm_i(w)),
                (2, _) => (ImmOp::Slti, imm_i(w)),
                (3, _) => (ImmOp::Sltiu, imm_i(w)),
                (4, _) => (ImmOp::Xori, imm_i(w)),
                (6, _) => (ImmOp::Ori, imm_i(w)),
                (7, _) => (ImmOp::Andi, imm_i(w)),
                (1, 0) => (ImmOp::Slli, (w >> 20) & 0x1f),
                (5, 0) => (ImmOp::Srli, (w >> 20) & 0x1f),
                (5, 0x20) => (ImmOp::Srai, (w >> 20) & 0x1f),
                _ => return Illegal,
            };
            OpImm { op, rd: rd(w), rs1: rs1(w), imm }
        }
        0x33 => {
            let op = match (funct3(w), funct7(w)) {
                (0, 0) => RegOp::Add,
                (0, 0x20) => RegOp::Sub,
                (1, 0) => RegOp::Sll,
                (2, 0) => RegOp::Slt,
                (3, 0) => RegOp::Sltu,
                (4, 0) => RegOp::Xor,
                (5, 0) => RegOp::Srl,
                (5, 0x20) => RegOp::Sra,
                (6, 0) => RegOp::Or,
                (7, 0) => RegOp::And,
                _ => return Illegal,
            };
            Op { op, rd: rd(w), rs1: rs1(w), rs2: rs2(w) }
        }
        0x73 if w == ECALL_WORD => Ecall,
        0x73 if w == MRET_WORD => Mret,
        _ => Illegal,
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Instruction::*;
        match *self {
            Lui { rd, imm } => write!(f, "lui x{rd}, {:#x}", imm >> 12),
            Auipc { rd, imm } => write!(f, "auipc x{rd}, {:#x}", imm >> 12),
            Jal { rd, imm } => write!(f, "jal x{rd}, {}", imm as i32),
            Jalr { rd, rs1, imm } => write!(f, "jalr x{rd}, {}(x{rs1})", imm as i32),
            Branch { kind, rs1, rs2, imm } => {
                write!(f, "{} x{rs1}, x{rs2}, {}", format!("{kind:?}").to_lowercase(), imm as i32)
            }
            Load { kind, rd, rs1, imm } => {
                write!(f, "{} x{rd}, {}(x{rs1})", format!("{kind:?}").to_lowercase(), imm as i32)
            }
            Store { kind, rs1, rs2, imm } => {
                write!(f, "{} x{rs2}, {}(x{rs1})", format!("{kind:?}").to_lowercase(), imm as i32)
            }
            OpImm { op, rd, rs1, imm } => {
                write!(f, "{} x{rd}, x{rs1}, {}", format!("{op:?}").to_lowercase(), imm as i32)
            }
            Op { op, rd, rs1, rs2 } => {
                write!(f, "{} x{rd}, x{rs1}, x{rs2}", format!("{op:?}").to_lowercase())
            }
            Ecall => f.write_str("ecall"),
            Mret => f.write_str("mret"),
            Illegal => f.write_str("illegal"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addi_x1_x0_5() {
        assert_eq!(decode(0x0050_0093), Instruction::OpImm { op: ImmOp::Addi, rd: 1, rs1: 0, imm: 5 });
    }

    #[test]
    fn zero_word_is_illegal() {
        assert_eq!(decode(0), Instruction::Illegal);
        assert_eq!(decode(0xffff_ffff), Instruction::Illegal);
    }

    #[test]
    fn jal_self_loop() {
        assert_eq!(decode(0x0000_006f), Instruction::Jal { rd: 0, imm: 0 });
    }

    #[test]
    fn negative_immediates() {
        // addi x1, x1, -1
        assert_eq!(decode(0xfff0_8093), Instruction::OpImm { op: ImmOp::Addi, rd: 1, rs1: 1, imm: u32::MAX });
        // bne x1, x0, -8
        assert_eq!(
            decode(0xfe00_9ce3),
            Instruction::Branch { kind: BranchKind::Bne, rs1: 1, rs2: 0, imm: (-8i32) as u32 }
        );
        // sw x5, -4(x2)
        assert_eq!(
            decode(0xfe51_2e23),
            Instruction::Store { kind: StoreKind::Sw, rs1: 2, rs2: 5, imm: (-4i32) as u32 }
        );
        // jal x1, -16
        assert_eq!(decode(0xff1f_f0ef), Instruction::Jal { rd: 1, imm: (-16i32) as u32 });
    }

    #[test]
    fn shift_funct7_is_checked() {
        // slli x1, x1, 3 with a stray funct7 bit
        assert_eq!(decode(0x0230_9093), Instruction::Illegal);
        assert_eq!(decode(0x4030_d093), Instruction::OpImm { op: ImmOp::Srai, rd: 1, rs1: 1, imm: 3 });
    }

    #[test]
    fn system_words() {
        assert_eq!(decode(ECALL_WORD), Instruction::Ecall);
        assert_eq!(decode(MRET_WORD), Instruction::Mret);
        // ebreak is not supported
        assert_eq!(decode(0x0010_0073), Instruction::Illegal);
    }
}
