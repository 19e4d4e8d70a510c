//! Mining of system-level message flows from interleaved communication
//! traces.
//!
//! The pipeline runs in three stages. [`local::local_mine`] slices every
//! trace by interface, scores causal message pairs and selects a minimal
//! high-confidence cover. [`energy::global_mine`] builds a causality graph
//! over all unique messages, prunes the edges local mining rejected and ranks
//! every root-to-terminal path by energy. [`eval::evaluate`] walks each trace
//! once, bounds each flow instance by its matched terminal position and
//! accepts the lowest-energy path that strands the fewest messages.
//!
//! ```
//! use flowmine::{fixtures, pipeline};
//!
//! let traces = fixtures::trace_four();
//! let run = pipeline::mine(&traces, &fixtures::roles(), &Default::default()).unwrap();
//! assert_eq!(run.report.aggregate_ratio, 1.0);
//! assert_eq!(run.model.len(), 4);
//! ```

pub mod ablation;
pub mod cover;
pub mod energy;
pub mod error;
pub mod eval;
pub mod export;
pub mod fixtures;
pub mod graph;
pub mod local;
pub mod matching;
pub mod message;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use message::{Alphabet, InterfaceId, Kind, Message, MsgId};
pub use trace::{MessageRoleConfig, Roles, Trace, TraceEvent, TraceSet};
