//! The pair driven through a bare memory harness, without the platform.

use proptest::prelude::*;
use safels_core::asm::*;
use safels_core::corpus;
use safels_core::isa::reset;
use safels_core::{ls_reset, ArchState, CoreConfig, InputVector, OutputVector, StaggerConfig};

const MEM: usize = 0x4000;

/// Flat memory that answers every request one cycle later.
struct Harness {
    mem: Vec<u8>,
}

impl Harness {
    fn new(words: &[u32]) -> Self {
        let mut mem = vec![0u8; MEM];
        for (i, w) in words.iter().enumerate() {
            mem[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
        }
        Harness { mem }
    }

    fn word(&self, addr: u32) -> u32 {
        let a = (addr as usize & !3) % MEM;
        u32::from_le_bytes(self.mem[a..a + 4].try_into().unwrap())
    }

    fn respond(&mut self, out: &OutputVector) -> InputVector {
        let mut next =
            InputVector { instr_response: out.fetch_req.map(|a| self.word(a)), ..Default::default() };
        if let Some(m) = out.mem_req {
            if m.is_write {
                for i in 0..m.width.bytes() {
                    self.mem[(m.addr + i) as usize % MEM] = (m.wdata >> (8 * i)) as u8;
                }
            } else {
                next.data_response = Some(self.word(m.addr) >> (8 * (m.addr & 3)));
            }
        }
        next
    }
}

/// Single-core outputs per cycle, up to and including the first halted one.
fn golden(words: &[u32], limit: usize) -> Vec<OutputVector> {
    let config = CoreConfig::default();
    let mut core: ArchState = reset(&config);
    let mut h = Harness::new(words);
    let mut input = InputVector::default();
    let mut outs = Vec::new();
    while outs.len() < limit {
        let out = core.advance(&config, &input);
        input = h.respond(&out);
        outs.push(out);
        if out.halted {
            break;
        }
    }
    outs
}

struct Pair {
    ls: safels_core::LockstepState,
    h: Harness,
    input: InputVector,
}

impl Pair {
    fn new(words: &[u32], s: u32) -> Self {
        Pair {
            ls: ls_reset(CoreConfig::default(), StaggerConfig::new(s).unwrap()),
            h: Harness::new(words),
            input: InputVector::default(),
        }
    }

    fn step(&mut self) -> (Option<OutputVector>, bool) {
        let d = self.ls.step_with(&self.input, |_| {});
        self.input = self.h.respond(&d.head_out);
        (d.outcome.output, d.outcome.error_irq)
    }
}

fn five() -> Vec<u32> {
    vec![addi(5, 0, 0x55), addi(6, 0, 1), addi(7, 0, 2), sw(5, 0, 0x100), ecall()]
}

#[test]
fn zero_stagger_passes_outputs_through() {
    let g = golden(&five(), 1000);
    let mut p = Pair::new(&five(), 0);
    for (t, want) in g.iter().enumerate() {
        assert_eq!(p.step(), (Some(*want), false), "cycle {t}");
    }
}

#[test]
fn stagger_two_shifts_the_trace() {
    let g = golden(&five(), 1000);
    let mut p = Pair::new(&five(), 2);
    assert_eq!(p.step(), (None, false));
    assert_eq!(p.step(), (None, false));
    for (t, want) in g.iter().enumerate() {
        assert_eq!(p.step(), (Some(*want), false), "delivered at cycle {}", t + 2);
    }
}

#[test]
fn corrupted_shadow_register_fires_at_store_plus_stagger() {
    let g = golden(&five(), 1000);
    let store_cycle = g.iter().position(|o| o.write().is_some()).unwrap() as u64;
    for s in 1..=4u32 {
        let mut p = Pair::new(&five(), s);
        // the shadow issues the store at store_cycle + s; corrupt just before
        let corrupt_at = store_cycle + s as u64 - 1;
        let mut fired = None;
        for t in 0..60u64 {
            if t == corrupt_at {
                p.ls.shadow.regs[5] ^= 1;
            }
            let (_, err) = p.step();
            if err && fired.is_none() {
                fired = Some(t);
            }
        }
        assert_eq!(fired, Some(store_cycle + s as u64), "s={s}");
    }
}

#[test]
fn distance_grows_from_zero() {
    let words = corpus::arith_loop(0).program.words().to_vec();
    let mut p = Pair::new(&words, 2);
    assert_eq!(p.ls.observable_state_distance().total(), 0);
    for _ in 0..10 {
        p.step();
    }
    assert!(p.ls.observable_state_distance().total() > 0);
}

/// With s >= 1 the two halves never share a full state while the program
/// is running, so one common-cause upset cannot hit both identically.
#[test]
fn staggered_halves_stay_apart() {
    for prog in corpus::standard(0) {
        if !prog.irq.events().is_empty() {
            continue;
        }
        let words = prog.program.words().to_vec();
        let halt = golden(&words, 100_000).len() as u64;
        for s in 1..=4u32 {
            let mut p = Pair::new(&words, s);
            for t in 0..halt {
                p.step();
                let d = p.ls.observable_state_distance();
                assert!(d.total() > 0, "{} s={s} cycle {t}", prog.name);
            }
        }
    }
}

proptest! {
    #[test]
    fn error_latch_is_monotonic(reg in 1usize..32, bit in 0u32..32, at in 0u64..40, s in 0u32..5) {
        let words = corpus::store_heavy(0).program.words().to_vec();
        let mut p = Pair::new(&words, s);
        let mut latched = false;
        for t in 0..120u64 {
            if t == at {
                p.ls.shadow.regs[reg] ^= 1 << bit;
            }
            let (out, err) = p.step();
            if latched {
                prop_assert!(err && out.is_none());
            }
            latched |= err;
            prop_assert_eq!(latched, p.ls.error_latched());
        }
    }
}

/// Fault-free, the shadow at cycle t is the head at cycle t - s.
#[test]
fn shadow_replays_the_head() {
    for prog in corpus::standard(0) {
        if !prog.irq.events().is_empty() {
            continue;
        }
        let words = prog.program.words().to_vec();
        for s in 0..=4u32 {
            let mut p = Pair::new(&words, s);
            let mut history = vec![p.ls.head];
            for t in 0..300usize {
                p.step();
                history.push(p.ls.head);
                if t + 1 >= s as usize {
                    assert_eq!(p.ls.shadow, history[t + 1 - s as usize], "{} s={s} t={t}", prog.name);
                }
            }
        }
    }
}

/// Straight-line ALU code: each pc is held for exactly two cycles, so any
/// stagger of two or more keeps the program counters apart.
#[test]
fn straight_line_pcs_differ() {
    let mut words: Vec<u32> = (1..20).map(|i| addi(i as u8, 0, i)).collect();
    words.push(ecall());
    let halt = golden(&words, 1000).len() as u64;
    for s in 2..=4u32 {
        let mut p = Pair::new(&words, s);
        for t in 0..halt {
            p.step();
            if t + 1 >= s as u64 && !p.ls.head.halted {
                assert_ne!(p.ls.head.pc, p.ls.shadow.pc, "s={s} cycle {t}");
            }
        }
    }
}
