//! Tiny RV32I encoder used to build the program corpus and test programs.
//!
//! Register arguments are plain indices (`1` is `x1`). Branch and jump
//! offsets are byte offsets relative to the instruction itself.

fn r_type(funct7: u32, rs2: u8, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    funct7 << 25
        | (rs2 as u32 & 0x1f) << 20
        | (rs1 as u32 & 0x1f) << 15
        | funct3 << 12
        | (rd as u32 & 0x1f) << 7
        | opcode
}

fn i_type(imm: i32, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    assert!((-2048..2048).contains(&imm), "I-immediate {imm} out of range");
    ((imm as u32) & 0xfff) << 20 | (rs1 as u32 & 0x1f) << 15 | funct3 << 12 | (rd as u32 & 0x1f) << 7 | opcode
}

fn s_type(imm: i32, rs2: u8, rs1: u8, funct3: u32) -> u32 {
    assert!((-2048..2048).contains(&imm), "S-immediate {imm} out of range");
    let imm = imm as u32;
    (imm >> 5 & 0x7f) << 25
        | (rs2 as u32 & 0x1f) << 20
        | (rs1 as u32 & 0x1f) << 15
        | funct3 << 12
        | (imm & 0x1f) << 7
        | 0x23
}

fn b_type(offset: i32, rs2: u8, rs1: u8, funct3: u32) -> u32 {
    assert!(offset % 2 == 0 && (-4096..4096).contains(&offset), "branch offset {offset}");
    let imm = offset as u32;
    (imm >> 12 & 1) << 31
        | (imm >> 5 & 0x3f) << 25
        | (rs2 as u32 & 0x1f) << 20
        | (rs1 as u32 & 0x1f) << 15
        | funct3 << 12
        | (imm >> 1 & 0xf) << 8
        | (imm >> 11 & 1) << 7
        | 0x63
}

fn shift(funct7: u32, shamt: u32, rs1: u8, funct3: u32, rd: u8) -> u32 {
    assert!(shamt < 32);
    funct7 << 25 | shamt << 20 | (rs1 as u32 & 0x1f) << 15 | funct3 << 12 | (rd as u32 & 0x1f) << 7 | 0x13
}

pub fn lui(rd: u8, upper: u32) -> u32 {
    (upper & 0xfffff) << 12 | (rd as u32 & 0x1f) << 7 | 0x37
}
pub fn auipc(rd: u8, upper: u32) -> u32 {
    (upper & 0xfffff) << 12 | (rd as u32 & 0x1f) << 7 | 0x17
}
pub fn jal(rd: u8, offset: i32) -> u32 {
    assert!(offset % 2 == 0 && (-(1 << 20)..(1 << 20)).contains(&offset));
    let imm = offset as u32;
    (imm >> 20 & 1) << 31
        | (imm >> 1 & 0x3ff) << 21
        | (imm >> 11 & 1) << 20
        | (imm >> 12 & 0xff) << 12
        | (rd as u32 & 0x1f) << 7
        | 0x6f
}
pub fn jalr(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 0, rd, 0x67)
}

pub fn beq(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 0)
}
pub fn bne(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 1)
}
pub fn blt(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 4)
}
pub fn bge(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 5)
}
pub fn bltu(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 6)
}
pub fn bgeu(rs1: u8, rs2: u8, offset: i32) -> u32 {
    b_type(offset, rs2, rs1, 7)
}

pub fn lb(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 0, rd, 0x03)
}
pub fn lh(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 1, rd, 0x03)
}
pub fn lw(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 2, rd, 0x03)
}
pub fn lbu(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 4, rd, 0x03)
}
pub fn lhu(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 5, rd, 0x03)
}

pub fn sb(rs2: u8, rs1: u8, imm: i32) -> u32 {
    s_type(imm, rs2, rs1, 0)
}
pub fn sh(rs2: u8, rs1: u8, imm: i32) -> u32 {
    s_type(imm, rs2, rs1, 1)
}
pub fn sw(rs2: u8, rs1: u8, imm: i32) -> u32 {
    s_type(imm, rs2, rs1, 2)
}

pub fn addi(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 0, rd, 0x13)
}
pub fn slti(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 2, rd, 0x13)
}
pub fn sltiu(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 3, rd, 0x13)
}
pub fn xori(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 4, rd, 0x13)
}
pub fn ori(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 6, rd, 0x13)
}
pub fn andi(rd: u8, rs1: u8, imm: i32) -> u32 {
    i_type(imm, rs1, 7, rd, 0x13)
}
pub fn slli(rd: u8, rs1: u8, shamt: u32) -> u32 {
    shift(0, shamt, rs1, 1, rd)
}
pub fn srli(rd: u8, rs1: u8, shamt: u32) -> u32 {
    shift(0, shamt, rs1, 5, rd)
}
pub fn srai(rd: u8, rs1: u8, shamt: u32) -> u32 {
    shift(0x20, shamt, rs1, 5, rd)
}

pub fn add(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 0, rd, 0x33)
}
pub fn sub(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0x20, rs2, rs1, 0, rd, 0x33)
}
pub fn sll(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 1, rd, 0x33)
}
pub fn slt(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 2, rd, 0x33)
}
pub fn sltu(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 3, rd, 0x33)
}
pub fn xor(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 4, rd, 0x33)
}
pub fn srl(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 5, rd, 0x33)
}
pub fn sra(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0x20, rs2, rs1, 5, rd, 0x33)
}
pub fn or(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 6, rd, 0x33)
}
pub fn and(rd: u8, rs1: u8, rs2: u8) -> u32 {
    r_type(0, rs2, rs1, 7, rd, 0x33)
}

pub fn ecall() -> u32 {
    crate::isa::ECALL_WORD
}
pub fn mret() -> u32 {
    crate::isa::MRET_WORD
}
pub fn nop() -> u32 {
    addi(0, 0, 0)
}

/// Two-instruction constant load (`lui` + `addi`), always two words so
/// program layouts stay fixed regardless of the constant.
pub fn li(rd: u8, value: u32) -> [u32; 2] {
    let lo = ((value & 0xfff) as i32) << 20 >> 20;
    let hi = value.wrapping_sub(lo as u32) >> 12;
    [lui(rd, hi), addi(rd, rd, lo)]
}
