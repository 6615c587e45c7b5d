use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use safels_bench::{soc_programs, workload};
use safels_core::asm::addi;
use safels_core::corpus;
use safels_core::faultlab::{run_campaign, CampaignConfig, CycleWindow, FaultSpace};
use safels_core::isa::reset;
use safels_core::memshield::{secded_decode, secded_encode};
use safels_core::soc::SocConfig;
use safels_core::{ls_reset, CoreConfig, InputVector, StaggerConfig};

fn core_step(c: &mut Criterion) {
    let config = CoreConfig::default();
    let word = InputVector { instr_response: Some(addi(1, 1, 1)), ..Default::default() };
    c.bench_function("core_step_alu", |b| {
        b.iter_batched(
            || {
                let mut s = reset(&config);
                s.advance(&config, &InputVector::default());
                s
            },
            |mut s| black_box(s.advance(&config, black_box(&word))),
            BatchSize::SmallInput,
        )
    });
}

fn ls_step(c: &mut Criterion) {
    let mut ls = ls_reset(CoreConfig::default(), StaggerConfig::default());
    let idle = InputVector::default();
    c.bench_function("ls_step_stall", |b| b.iter(|| black_box(ls.ls_step(black_box(&idle)))));
}

fn secded(c: &mut Criterion) {
    c.bench_function("secded_encode", |b| b.iter(|| secded_encode(black_box(0xdead_beef))));
    let cw = secded_encode(0xdead_beef).flip(17);
    c.bench_function("secded_decode_single_error", |b| b.iter(|| secded_decode(black_box(cw))));
}

fn soc_run(c: &mut Criterion) {
    let programs = soc_programs();
    let config = SocConfig::default();
    c.bench_function("soc_run_default_mix", |b| {
        b.iter(|| black_box(config.build(&programs).unwrap().run(100_000)))
    });
}

fn campaign(c: &mut Criterion) {
    let space = FaultSpace { cycles: CycleWindow::Range { start: 0, end: 8 }, ..FaultSpace::register_sbu() };
    let config = CampaignConfig::new(workload(&corpus::store_heavy(0)), space);
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    group.bench_function("register_sbu_16k", |b| b.iter(|| black_box(run_campaign(&config, 1).unwrap())));
    group.finish();
}

criterion_group!(benches, core_step, ls_step, secded, soc_run, campaign);
criterion_main!(benches);
