//! Cost-driven dynamic replication of objects in a distributed system.
//!
//! The crate simulates read/write request streams against an allocation
//! scheme per object and accounts every message, I/O and transfer. Three
//! policies are provided: ORAD (sliding windows with temporary copies and
//! invalidation), ADRW (windowed add/drop without temporary copies) and a
//! static allocation.

pub mod audit;
pub mod baseline;
pub mod cost;
pub mod engine;
pub mod model;
pub mod orad;
pub mod policy;
pub mod report;
pub mod state;
pub mod window;
pub mod workload;

pub use cost::{event_cost, ChargeItem, ChargeLabel, CostLedger, CostTariff};
pub use engine::{check_consistency, run, RunError, RunResult, Violation, ViolationKind};
pub use model::{AdrwRule, NodeId, ObjectId, Request, RequestKind, Role, SystemConfig};
pub use policy::PolicyKind;
pub use state::{route, Locus, ObjectState};
pub use window::{derive_counters, DecisionCounters, MessageRequestWindow, WindowEvent, WindowRole};
