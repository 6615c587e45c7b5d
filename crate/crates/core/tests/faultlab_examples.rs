use safels_core::asm::*;
use safels_core::corpus;
use safels_core::faultlab::*;
use safels_core::{Program, StaggerConfig};

fn stagger(s: u32) -> StaggerConfig {
    StaggerConfig::new(s).unwrap()
}

fn workload(words: Vec<u32>) -> Workload {
    Workload::new(Program::new(0, words).unwrap())
}

fn once(w: &Workload, s: u32, fault: &str) -> Outcome {
    let g = run_golden(w, 10_000).unwrap();
    inject_and_run(w, stagger(s), &fault.parse().unwrap(), &g, g.default_budget()).unwrap()
}

#[test]
fn flip_in_dead_register_is_masked() {
    let w = workload(vec![addi(5, 0, 0x55), sw(5, 0, 0x100), ecall()]);
    for s in 0..=3 {
        for target in ["head", "shadow"] {
            let o = once(&w, s, &format!("sbu {target} reg:20:7 @1"));
            assert_eq!(o.class, FaultClass::Masked);
            assert_eq!(o.latency, None);
        }
    }
}

#[test]
fn hand_computed_latency() {
    // x5 is written at cycle 1 and stored at cycle 9; the head issues that
    // store at cycle 5 and the comparator sees it two cycles later
    let w = workload(vec![
        addi(5, 0, 0x55),
        addi(6, 0, 1),
        addi(7, 0, 2),
        addi(8, 0, 3),
        sw(5, 0, 0x100),
        ecall(),
    ]);
    let o = once(&w, 2, "sbu head reg:5:0 @2");
    assert_eq!(o.class, FaultClass::Detected);
    assert_eq!(o.latency, Some(5));
    assert_eq!(o.injected_at, 2);
}

#[test]
fn common_cause_pc_flip_needs_stagger() {
    let w = Workload::new(corpus::ccf_store_burst().program);
    assert_eq!(once(&w, 0, "ccf both pc:2 @3").class, FaultClass::Sdc);
    assert_eq!(once(&w, 2, "ccf both pc:2 @3").class, FaultClass::Detected);
}

#[test]
fn ten_cycle_register_space() {
    let space = FaultSpace { cycles: CycleWindow::Range { start: 0, end: 10 }, ..FaultSpace::register_sbu() };
    let mut config = CampaignConfig::new(Workload::new(corpus::arith_loop(0).program), space);
    config.max_exhaustive = 100_000;
    let r = run_campaign(&config, 0).unwrap();
    assert_eq!(r.records.len(), 2 * 32 * 32 * 10);
    assert_eq!(r.counts.sdc, 0);
}

/// Every register and pc bit of either core, every cycle up to halt.
fn single_core_space() -> FaultSpace {
    FaultSpace { locations: vec![LocationClass::Reg, LocationClass::Pc], ..FaultSpace::register_sbu() }
}

#[test]
fn single_core_faults_never_escape() {
    for prog in corpus::standard(0) {
        let mut config = CampaignConfig::new(Workload::new(prog.program.clone()), single_core_space());
        config.workload.irq = prog.irq.clone();
        config.samples = 20_000;
        let r = run_campaign(&config, 11).unwrap();
        assert_eq!(r.counts.sdc, 0, "{}", prog.name);
        assert_eq!(r.counts.hang, 0, "{}", prog.name);
        assert_eq!(r.counts.masked + r.counts.detected, r.counts.total());
    }
}

#[test]
fn detection_latency_is_bounded_by_stagger_plus_trace() {
    let w = Workload::new(corpus::store_heavy(0).program);
    let mut config = CampaignConfig::new(w, FaultSpace::register_sbu());
    config.staggers = vec![stagger(0), stagger(3)];
    let r = run_campaign(&config, 0).unwrap();
    let g = run_golden(&config.workload, 10_000).unwrap();
    for rec in &r.records {
        match rec.class {
            FaultClass::Detected => {
                let l = rec.latency.unwrap();
                assert!(l <= g.halt_cycle + rec.stagger.cycles() as u64 + 1, "{}", rec.fault);
            }
            _ => assert_eq!(rec.latency, None),
        }
    }
}
