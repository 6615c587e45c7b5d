//! Cross-checks the pin-level core against a plain instruction-at-a-time
//! interpreter that shares no code with it.

use proptest::prelude::*;
use safels_core::asm::*;
use safels_core::platform::{CoreSel, PlatformConfig, SlotKind, SlotSpec, SlotStatus, Soc};
use safels_core::Program;

const MEM: usize = 0x4000;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Store {
    addr: u32,
    value: u32,
    bytes: u32,
}

struct Reference {
    pc: u32,
    x: [u32; 32],
    mem: Vec<u8>,
    stores: Vec<Store>,
}

fn sext(v: u32, bits: u32) -> u32 {
    ((v << (32 - bits)) as i32 >> (32 - bits)) as u32
}

impl Reference {
    fn new(base: u32, words: &[u32]) -> Self {
        let mut mem = vec![0u8; MEM];
        for (i, w) in words.iter().enumerate() {
            let a = base as usize + 4 * i;
            mem[a..a + 4].copy_from_slice(&w.to_le_bytes());
        }
        Reference { pc: base, x: [0; 32], mem, stores: Vec::new() }
    }

    fn load(&self, addr: u32, bytes: u32) -> u32 {
        (0..bytes).fold(0, |acc, i| acc | (self.mem[(addr + i) as usize] as u32) << (8 * i))
    }

    /// Runs to `ecall`; `None` on anything else (trap, runaway).
    fn run(&mut self, max_steps: usize) -> Option<()> {
        for _ in 0..max_steps {
            let w = self.load(self.pc, 4);
            let rd = ((w >> 7) & 31) as usize;
            let rs1 = self.x[((w >> 15) & 31) as usize];
            let rs2 = self.x[((w >> 20) & 31) as usize];
            let f3 = (w >> 12) & 7;
            let f7 = w >> 25;
            let imm_i = sext(w >> 20, 12);
            let imm_s = sext((w >> 25) << 5 | (w >> 7) & 31, 12);
            let imm_b = sext(
                (w >> 31) << 12 | ((w >> 7) & 1) << 11 | ((w >> 25) & 63) << 5 | ((w >> 8) & 15) << 1,
                13,
            );
            let imm_j = sext(
                (w >> 31) << 20 | ((w >> 12) & 255) << 12 | ((w >> 20) & 1) << 11 | ((w >> 21) & 1023) << 1,
                21,
            );
            let mut next = self.pc.wrapping_add(4);
            let mut result = None;
            match w & 0x7f {
                0x37 => result = Some(w & 0xffff_f000),
                0x17 => result = Some(self.pc.wrapping_add(w & 0xffff_f000)),
                0x6f => {
                    result = Some(next);
                    next = self.pc.wrapping_add(imm_j);
                }
                0x67 => {
                    result = Some(next);
                    next = rs1.wrapping_add(imm_i) & !1;
                }
                0x63 => {
                    let taken = match f3 {
                        0 => rs1 == rs2,
                        1 => rs1 != rs2,
                        4 => (rs1 as i32) < rs2 as i32,
                        5 => (rs1 as i32) >= rs2 as i32,
                        6 => rs1 < rs2,
                        7 => rs1 >= rs2,
                        _ => return None,
                    };
                    if taken {
                        next = self.pc.wrapping_add(imm_b);
                    }
                }
                0x03 => {
                    let addr = rs1.wrapping_add(imm_i);
                    let (bytes, signed) = match f3 {
                        0 => (1, true),
                        1 => (2, true),
                        2 => (4, false),
                        4 => (1, false),
                        5 => (2, false),
                        _ => return None,
                    };
                    if !addr.is_multiple_of(bytes) || addr as usize + bytes as usize > MEM {
                        return None;
                    }
                    let v = self.load(addr, bytes);
                    result = Some(if signed { sext(v, 8 * bytes) } else { v });
                }
                0x23 => {
                    let addr = rs1.wrapping_add(imm_s);
                    let bytes = match f3 {
                        0 => 1,
                        1 => 2,
                        2 => 4,
                        _ => return None,
                    };
                    if !addr.is_multiple_of(bytes) || addr as usize + bytes as usize > MEM {
                        return None;
                    }
                    let value = if bytes == 4 { rs2 } else { rs2 & ((1 << (8 * bytes)) - 1) };
                    for i in 0..bytes {
                        self.mem[(addr + i) as usize] = (value >> (8 * i)) as u8;
                    }
                    self.stores.push(Store { addr, value, bytes });
                }
                0x13 => {
                    let sh = (w >> 20) & 31;
                    result = Some(match (f3, f7) {
                        (0, _) => rs1.wrapping_add(imm_i),
                        (2, _) => ((rs1 as i32) < imm_i as i32) as u32,
                        (3, _) => (rs1 < imm_i) as u32,
                        (4, _) => rs1 ^ imm_i,
                        (6, _) => rs1 | imm_i,
                        (7, _) => rs1 & imm_i,
                        (1, 0) => rs1 << sh,
                        (5, 0) => rs1 >> sh,
                        (5, 0x20) => ((rs1 as i32) >> sh) as u32,
                        _ => return None,
                    });
                }
                0x33 => {
                    let sh = rs2 & 31;
                    result = Some(match (f3, f7) {
                        (0, 0) => rs1.wrapping_add(rs2),
                        (0, 0x20) => rs1.wrapping_sub(rs2),
                        (1, 0) => rs1 << sh,
                        (2, 0) => ((rs1 as i32) < rs2 as i32) as u32,
                        (3, 0) => (rs1 < rs2) as u32,
                        (4, 0) => rs1 ^ rs2,
                        (5, 0) => rs1 >> sh,
                        (5, 0x20) => ((rs1 as i32) >> sh) as u32,
                        (6, 0) => rs1 | rs2,
                        (7, 0) => rs1 & rs2,
                        _ => return None,
                    });
                }
                0x73 if w == 0x73 => return Some(()),
                _ => return None,
            }
            if !next.is_multiple_of(4) {
                return None;
            }
            if let Some(v) = result {
                if rd != 0 {
                    self.x[rd] = v;
                }
            }
            self.pc = next;
        }
        None
    }
}

/// Runs the program on a single core of the platform; returns the final
/// register file and the write requests in the order they appeared.
fn run_core(base: u32, words: &[u32]) -> (SlotStatus, [u32; 32], Vec<Store>) {
    let spec = SlotSpec::new(SlotKind::Regular, Program::new(base, words.to_vec()).unwrap());
    let mut soc = Soc::new(&PlatformConfig::default(), &[spec]).unwrap();
    let result = soc.run(100_000).remove(0);
    let stores = result
        .delivered
        .iter()
        .filter_map(|o| o.write())
        .map(|m| Store { addr: m.addr, value: m.wdata, bytes: m.width.bytes() })
        .collect();
    (result.status, soc.arch_mut(0, CoreSel::Head).unwrap().regs, stores)
}

#[test]
fn twelve_instruction_mix() {
    // counts down from 3, storing each value; a JAL skips a poison store,
    // then the stored words are summed back via LW
    let words = vec![
        addi(1, 0, 3),     // 0x00
        addi(2, 0, 0x400), // 0x04
        sw(1, 2, 0),       // 0x08 loop
        addi(2, 2, 4),     // 0x0c
        addi(1, 1, -1),    // 0x10
        beq(1, 0, 8),      // 0x14 -> 0x1c
        jal(0, -16),       // 0x18 -> 0x08
        jal(5, 8),         // 0x1c -> 0x24, x5 = 0x20
        sw(5, 0, 0x500),   // 0x20 skipped
        lw(3, 0, 0x400),   // 0x24
        lw(4, 0, 0x408),   // 0x28
        sw(3, 2, 0),       // 0x2c  mem[0x40c] = 3
        ecall(),           // 0x30
    ];
    assert_eq!(words.len(), 13, "12 instructions plus the final ecall");
    let mut oracle = Reference::new(0, &words);
    oracle.run(1000).expect("oracle halts");
    let (status, regs, stores) = run_core(0, &words);
    assert_eq!(status, SlotStatus::Halted);
    assert_eq!(regs, oracle.x);
    assert_eq!(stores, oracle.stores);
    // hand-derived values
    assert_eq!(&oracle.x[1..6], &[0, 0x40c, 3, 1, 0x20]);
    let addrs: Vec<u32> = stores.iter().map(|s| s.addr).collect();
    assert_eq!(addrs, vec![0x400, 0x404, 0x408, 0x40c]);
}

/// Random programs over a safe instruction mix: ALU operations on x1..x7,
/// loads and stores into a 256-byte window addressed through x8, and short
/// forward branches.
fn instruction() -> impl Strategy<Value = u32> {
    let r = 1u8..8;
    let any_r = 0u8..8;
    prop_oneof![
        (r.clone(), any_r.clone(), -2048i32..2048).prop_map(|(d, s, i)| addi(d, s, i)),
        (r.clone(), any_r.clone(), any_r.clone(), 0usize..10)
            .prop_map(|(d, a, b, k)| { [add, sub, sll, slt, sltu, xor, srl, sra, or, and][k](d, a, b) }),
        (r.clone(), any_r.clone(), -2048i32..2048, 0usize..6)
            .prop_map(|(d, s, i, k)| { [slti, sltiu, xori, ori, andi, addi][k](d, s, i) }),
        (r.clone(), any_r.clone(), 0u32..32, 0usize..3)
            .prop_map(|(d, s, sh, k)| [slli, srli, srai][k](d, s, sh)),
        (r.clone(), 0u32..0x100000).prop_map(|(d, u)| lui(d, u)),
        (r.clone(), 0u32..0x100000).prop_map(|(d, u)| auipc(d, u)),
        (r.clone(), 0i32..64, 0usize..5).prop_map(|(d, off, k)| {
            let align = [1, 2, 4, 1, 2][k];
            [lb, lh, lw, lbu, lhu][k](d, 8, off * 4 / align * align % 256)
        }),
        (any_r.clone(), 0i32..64, 0usize..3).prop_map(|(s, off, k)| [sb, sh, sw][k](s, 8, off * 4)),
        (any_r.clone(), any_r, 0usize..6).prop_map(|(a, b, k)| [beq, bne, blt, bge, bltu, bgeu][k](a, b, 8)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_programs_match_reference(body in prop::collection::vec(instruction(), 1..60)) {
        let mut words = li(8, 0x800).to_vec();
        words.extend(&body);
        // a branch in the last body slot lands on the second ecall
        words.extend([ecall(), ecall()]);
        let mut oracle = Reference::new(0x100, &words);
        prop_assert!(oracle.run(10_000).is_some());
        let (status, regs, stores) = run_core(0x100, &words);
        prop_assert_eq!(status, SlotStatus::Halted);
        prop_assert_eq!(regs, oracle.x);
        // every write appears exactly once, in program order
        prop_assert_eq!(stores, oracle.stores);
    }
}
