//! Executable OSPF models.
//!
//! Two protocol models are provided as pure state machines: a simplified one
//! ([`simple`]) and a detailed one with the full adjacency and database
//! exchange machinery ([`detailed`]). The [`engine`] runs either of them over
//! a topology in synchronous discrete time, and the [`explorer`] enumerates
//! every schedule of the simplified model on small networks.
//!
//! ```
//! use ospf_models::{Engine, EngineConfig, Model, Topology, Verdict};
//!
//! let engine = Engine::new(EngineConfig::new(Model::Detailed), Topology::line(2)).unwrap();
//! let run = engine.run();
//! assert!(matches!(run.verdict, Verdict::Converged { .. }));
//! ```

pub mod cli;
pub mod config;
pub mod detailed;
pub mod engine;
pub mod explorer;
pub mod lsdb;
pub mod neighbor;
pub mod scenario;
pub mod simple;
pub mod trace;
pub mod types;

pub use config::{AdjPolicy, EngineConfig, Model, Timing, Topology};
pub use engine::{DefaultScheduler, Engine, RunResult, Scheduler, SimState, Verdict};
pub use lsdb::{install, newer_age, Freshness};
pub use trace::{MessageCounts, TraceEvent};
pub use types::{Lsa, LsaHeader, Lsdb, Message, NeighborState, NodeId, TimeStamp};
