mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safels_core::corpus;
use safels_core::faultlab::{apply_fault, run_campaign, CampaignConfig, Workload};
use safels_core::platform::{IrqSchedule, L1Config, PlatformConfig, SlotKind, SlotStatus};
use safels_core::soc::{feasible_reexec, SocConfig, TimingSpec};
use safels_core::{Program, StaggerConfig};

use config::{default_slots, RunConfig};
use report::RunReport;

const EXIT_SDC: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DETECTED: u8 = 3;
const EXIT_HANG: u8 = 4;

/// Time-staggered dual-core lockstep simulator.
#[derive(Parser)]
#[command(name = "safels", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run programs on a lockstep pair or the configured SoC.
    Run(Common),
    /// Run a fault-injection campaign and write its report.
    Campaign(Common),
    /// Check whether one re-execution fits before the deadline.
    Feasibility {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Task period in ms (default: timing.period).
        period: Option<u64>,
        /// Deadline in ms (default: timing.deadline).
        deadline: Option<u64>,
        /// Consecutive errors to tolerate (default: timing.retries).
        retries: Option<u32>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Program file (.hex or .bin) or `corpus:<name>`; repeat for SoC slots.
    #[arg(long)]
    program: Vec<String>,
    /// Load address per program, in hex.
    #[arg(long, value_parser = parse_hex)]
    base: Vec<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides lockstep.stagger and campaign.staggers.
    #[arg(long)]
    stagger: Option<u32>,
}

fn parse_hex(s: &str) -> Result<u32, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u32::from_str_radix(digits, 16).map_err(|e| format!("`{s}`: {e}"))
}

/// A failure that maps to an exit code, with its diagnostic.
struct Failure(u8, String);

fn config_error(msg: impl ToString) -> Failure {
    Failure(EXIT_CONFIG, msg.to_string())
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, String, PathBuf), Failure> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), String::new(), PathBuf::from(".")));
    };
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, text, dir))
}

fn load_program(source: &str, base: u32) -> Result<(Program, Option<IrqSchedule>), Failure> {
    if let Some(name) = source.strip_prefix("corpus:") {
        let p =
            corpus::by_name(name, base).ok_or_else(|| config_error(format!("no corpus program `{name}`")))?;
        return Ok((p.program, Some(p.irq)));
    }
    let bytes = fs::read(source).map_err(|e| config_error(format!("{source}: {e}")))?;
    let program = if source.ends_with(".bin") {
        Program::from_bin(base, &bytes)
    } else {
        Program::from_hex(base, &String::from_utf8_lossy(&bytes))
    };
    Ok((program.map_err(|e| config_error(format!("{source}: {e}")))?, None))
}

/// Programs from `--program`, or from `program.path` relative to the
/// config file. Unspecified bases continue from `core.reset_pc` in 4 KiB
/// steps.
fn load_programs(
    cfg: &RunConfig,
    common: &Common,
    config_dir: &Path,
) -> Result<Vec<(Program, IrqSchedule)>, Failure> {
    let sources: Vec<String> = if common.program.is_empty() {
        cfg.program_paths
            .iter()
            .map(|p| match p.starts_with("corpus:") || Path::new(p).is_absolute() {
                true => p.clone(),
                false => config_dir.join(p).to_string_lossy().into_owned(),
            })
            .collect()
    } else {
        common.program.clone()
    };
    if sources.is_empty() {
        return Err(config_error("no program given (use --program or program.path)"));
    }
    let bases = if common.base.is_empty() { &cfg.program_bases } else { &common.base };
    sources
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let base = bases.get(i).copied().unwrap_or(cfg.reset_pc.wrapping_add(0x1000 * i as u32));
            let (program, irq) = load_program(src, base)?;
            Ok((program, cfg.irq.clone().or(irq).unwrap_or_default()))
        })
        .collect()
}

fn stagger_override(common: &Common) -> Result<Option<StaggerConfig>, Failure> {
    common.stagger.map(StaggerConfig::new).transpose().map_err(config_error)
}

fn platform(cfg: &RunConfig) -> PlatformConfig {
    PlatformConfig {
        memory_size: cfg.memory_size,
        l1: cfg.cache_enabled.then_some(L1Config { sphere: cfg.sphere, lines: cfg.cache_lines }),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| config_error(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(common: &Common) -> Result<u8, Failure> {
    let (cfg, text, dir) = load_config(common.config.as_deref())?;
    let programs = load_programs(&cfg, common, &dir)?;
    let stagger = stagger_override(common)?.unwrap_or(cfg.stagger);
    let slots = match &cfg.slots {
        Some(slots) if common.stagger.is_some() => slots
            .iter()
            .map(|k| match k {
                SlotKind::Lockstep(_) => SlotKind::Lockstep(stagger),
                SlotKind::Regular => SlotKind::Regular,
            })
            .collect(),
        Some(slots) => slots.clone(),
        None if programs.len() > 1 => default_slots(stagger),
        None => vec![SlotKind::Lockstep(stagger)],
    };
    let soc_config = SocConfig {
        slots,
        sphere: cfg.sphere,
        memory_size: cfg.memory_size,
        cache_lines: cfg.cache_enabled.then_some(cfg.cache_lines),
    };
    let mut soc = soc_config.build(&programs).map_err(config_error)?;
    if let Some(fault) = &cfg.inject {
        if cfg.inject_slot >= soc.slot_count() {
            return Err(config_error(format!("debug.slot {} does not exist", cfg.inject_slot)));
        }
        while soc.cycle() < fault.cycle && !soc.all_done() && soc.cycle() < cfg.max_cycles {
            soc.step();
        }
        if soc.status(cfg.inject_slot) == SlotStatus::Running {
            apply_fault(&mut soc, cfg.inject_slot, fault).map_err(config_error)?;
        }
    }
    let results = soc.run(cfg.max_cycles);
    let report = RunReport::new(&text, &soc_config, &programs, &results, cfg.cycles_per_ms);
    write_output(common.out.as_deref(), &report.to_json())?;
    eprintln!("{}", report.summary());
    let any = |s: SlotStatus| results.iter().any(|r| r.status == s);
    Ok(if any(SlotStatus::Detected) {
        EXIT_DETECTED
    } else if any(SlotStatus::Hang) {
        EXIT_HANG
    } else if any(SlotStatus::Trapped) {
        EXIT_SDC
    } else {
        0
    })
}

fn cmd_campaign(common: &Common) -> Result<u8, Failure> {
    let (cfg, _, dir) = load_config(common.config.as_deref())?;
    let mut programs = load_programs(&cfg, common, &dir)?;
    if programs.len() != 1 {
        return Err(config_error("a campaign takes exactly one program"));
    }
    let (program, irq) = programs.remove(0);
    let c = &cfg.campaign;
    let staggers = match stagger_override(common)? {
        Some(s) => vec![s],
        None => c.staggers.clone().unwrap_or_else(|| vec![cfg.stagger]),
    };
    let campaign = CampaignConfig {
        workload: Workload { program, platform: platform(&cfg), irq },
        staggers,
        space: c.space.clone(),
        samples: c.samples,
        max_exhaustive: c.max_exhaustive,
        budget: c.budget,
    };
    let report = run_campaign(&campaign, common.seed.unwrap_or(c.seed)).map_err(config_error)?;
    write_output(common.out.as_deref(), &report.to_json())?;
    let n = report.counts;
    eprintln!(
        "{} injections: masked {} detected {} sdc {} hang {}",
        n.total(),
        n.masked,
        n.detected,
        n.sdc,
        n.hang
    );
    Ok(if n.sdc > 0 { EXIT_SDC } else { 0 })
}

fn cmd_feasibility(
    config: Option<&Path>,
    period: Option<u64>,
    deadline: Option<u64>,
    retries: Option<u32>,
) -> Result<u8, Failure> {
    let (cfg, _, _) = load_config(config)?;
    let timing = TimingSpec::new(
        period.unwrap_or(cfg.period),
        deadline.unwrap_or(cfg.deadline),
        retries.unwrap_or(cfg.retries),
    )
    .map_err(config_error)?;
    let verdict = feasible_reexec(&timing);
    println!("{verdict}");
    Ok(if verdict.feasible { 0 } else { EXIT_SDC })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Campaign(c) => cmd_campaign(c),
        Command::Feasibility { config, period, deadline, retries } => {
            cmd_feasibility(config.as_deref(), *period, *deadline, *retries)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
