//! Tabular episodic-MDP simulation core.
//!
//! Everything in this crate is deterministic given its inputs: the exact
//! dynamic-programming oracles ([`mdp`]), the per-state-action bucket ledger
//! and its hierarchical transition estimates ([`samples`]), the exploration
//! bonus arithmetic ([`bonus`]), the successive-refinement optimistic planner
//! ([`planner`]), the episode-loop agents ([`agent`]), and the synthetic
//! environment generators ([`envs`]). IO, CSV emission, and the CLI live in
//! the companion `vucq-harness` crate.
//!
//! The crate is `no_std` (with `alloc`) so the algorithmic core carries no
//! IO surface; all randomness flows through caller-seeded ChaCha streams.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agent;
pub mod bonus;
pub mod envs;
pub mod mdp;
pub mod planner;
pub mod samples;

pub use agent::{AgentConfig, Algorithm, EpisodeRecord, InitialStateRule, RegretLog};
pub use bonus::{BonusConfig, BonusInputs, BonusMode};
pub use envs::{ChainSpec, EnvSpec, RandomDenseSpec};
pub use mdp::{Mdp, MdpError, Policy, ValueTables};
pub use planner::{PlanError, PlanResult};
pub use samples::{BucketLedger, LedgerView, LevelEstimates, SampleError};
