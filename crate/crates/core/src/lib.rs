//! Cycle-stepped model of a time-staggered dual-core lockstep pair around a
//! small RV32I core, with fault injection, cache parity and SECDED models,
//! and a multi-slot SoC harness.

pub mod asm;
pub mod corpus;
pub mod faultlab;
pub mod isa;
pub mod lockstep;
pub mod memshield;
pub mod platform;
pub mod soc;

pub use isa::{ArchState, CoreConfig, InputVector, OutputVector, Program};
pub use lockstep::{ls_reset, ExternalOutcome, LockstepState, StaggerConfig};
