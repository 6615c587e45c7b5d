use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{inject_and_run, run_golden, FaultClass, FaultError, FaultSpace, FaultSpec, Outcome, Workload};
use crate::lockstep::StaggerConfig;

/// Cycle limit for the golden run when no explicit budget is configured.
const GOLDEN_LIMIT: u64 = 1_000_000;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    pub workload: Workload,
    /// Each stagger runs the whole fault space; records are concatenated.
    pub staggers: Vec<StaggerConfig>,
    pub space: FaultSpace,
    /// Injections drawn when the space is too large to enumerate.
    pub samples: u64,
    /// Largest space size that is enumerated exhaustively.
    pub max_exhaustive: u64,
    /// Per-injection cycle budget; derived from the golden run if absent.
    pub budget: Option<u64>,
}

impl CampaignConfig {
    pub fn new(workload: Workload, space: FaultSpace) -> Self {
        CampaignConfig {
            workload,
            staggers: vec![StaggerConfig::default()],
            space,
            samples: 10_000,
            max_exhaustive: 250_000,
            budget: None,
        }
    }

    /// Stable textual form of everything that influences the results.
    pub fn canonical(&self) -> String {
        let w = &self.workload;
        format!(
            "program@{:#x}:{}\nplatform:{:?}\nirq:{:?}\nstaggers:{:?}\nspace:{:?}\nsamples:{} max_exhaustive:{} budget:{:?}\n",
            w.program.base(),
            w.program.to_hex().replace('\n', ","),
            w.platform,
            w.irq.events(),
            self.staggers.iter().map(|s| s.cycles()).collect::<Vec<_>>(),
            self.space,
            self.samples,
            self.max_exhaustive,
            self.budget,
        )
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn as_display<S: Serializer>(f: &FaultSpec, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(f)
}

fn stagger_cycles<S: Serializer>(st: &StaggerConfig, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u32(st.cycles())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub index: u64,
    #[serde(serialize_with = "stagger_cycles")]
    pub stagger: StaggerConfig,
    #[serde(serialize_with = "as_display")]
    pub fault: FaultSpec,
    pub class: FaultClass,
    pub latency: Option<u64>,
    pub injected_at: u64,
    pub recoveries: u64,
}

impl Record {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            class: self.class,
            latency: self.latency,
            injected_at: self.injected_at,
            recoveries: self.recoveries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClassCounts {
    pub masked: u64,
    pub detected: u64,
    pub sdc: u64,
    pub hang: u64,
}

impl ClassCounts {
    pub fn add(&mut self, class: FaultClass) {
        match class {
            FaultClass::Masked => self.masked += 1,
            FaultClass::Detected => self.detected += 1,
            FaultClass::Sdc => self.sdc += 1,
            FaultClass::Hang => self.hang += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.masked + self.detected + self.sdc + self.hang
    }
}

/// Campaign results. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub counts: ClassCounts,
    /// `(latency, count)` pairs in ascending latency order.
    pub latency_histogram: Vec<(u64, u64)>,
    pub records: Vec<Record>,
}

impl CampaignReport {
    pub fn from_records(config_digest: String, seed: u64, records: Vec<Record>) -> Self {
        let mut counts = ClassCounts::default();
        let mut hist = BTreeMap::new();
        for r in &records {
            counts.add(r.class);
            if let Some(l) = r.latency {
                *hist.entry(l).or_insert(0u64) += 1;
            }
        }
        CampaignReport {
            schema_version: SCHEMA_VERSION,
            config_digest,
            seed,
            counts,
            latency_histogram: hist.into_iter().collect(),
            records,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Picks the injections: every point of the space when it is small enough,
/// otherwise `samples` uniform draws. Draw `i` comes from its own ChaCha
/// stream, so any single injection can be reproduced from `(seed, i)`.
fn select(size: u64, first_index: u64, config: &CampaignConfig, seed: u64) -> Vec<u64> {
    if size <= config.max_exhaustive {
        return (0..size).collect();
    }
    (0..config.samples)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(first_index + i);
            rng.random_range(0..size)
        })
        .collect()
}

pub fn run_campaign(config: &CampaignConfig, seed: u64) -> Result<CampaignReport, FaultError> {
    let golden = run_golden(&config.workload, config.budget.unwrap_or(GOLDEN_LIMIT))?;
    let budget = config.budget.unwrap_or_else(|| golden.default_budget());

    let mut plan: Vec<(u64, StaggerConfig, FaultSpec)> = Vec::new();
    for &stagger in &config.staggers {
        let sites = config.space.sites(stagger, &config.workload.platform);
        let cycles = config.space.cycles.cycles(&golden, stagger);
        let span = cycles.end.saturating_sub(cycles.start);
        let size = sites.len() as u64 * span;
        for point in select(size, plan.len() as u64, config, seed) {
            let site = sites[(point / span) as usize];
            let fault = config.space.fault(site, cycles.start + point % span);
            plan.push((plan.len() as u64, stagger, fault));
        }
    }
    if plan.is_empty() {
        return Err(FaultError::EmptySpace);
    }

    let records = plan
        .into_par_iter()
        .map(|(index, stagger, fault)| {
            let o = inject_and_run(&config.workload, stagger, &fault, &golden, budget)?;
            Ok(Record {
                index,
                stagger,
                fault,
                class: o.class,
                latency: o.latency,
                injected_at: o.injected_at,
                recoveries: o.recoveries,
            })
        })
        .collect::<Result<Vec<_>, FaultError>>()?;
    Ok(CampaignReport::from_records(config.digest(), seed, records))
}
