//! MST-based datapath programming for IoT data collection.
//!
//! Compiles collection requests into per-switch LPM flow rules that route
//! traffic along a minimum spanning tree, and verifies them by forwarding
//! packets through a deterministic match-action switch simulator — including
//! dynamic root re-election through a control-plane emulation and in-network
//! aggregation with jitter measurement.
//!
//! Modules, bottom-up:
//! - [`topology`]: the network model and its JSON file format
//! - [`mst`]: spanning tree computation, orientation, path queries
//! - [`ruleplan`]: flow-rule synthesis, runtime files, rule diffs
//! - [`pipeline`]: the match-action switch simulator and packet tracing
//! - [`controller`]: static/dynamic rule installation and scenarios
//! - [`request`]: request planning, aggregation, rate and jitter checks
//! - [`testgen`]: deterministic random-instance generators for tests

pub mod controller;
pub mod mst;
pub mod pipeline;
pub mod request;
pub mod ruleplan;
pub mod testgen;
pub mod topology;

pub use topology::{load_topology, load_topology_str, MacAddr, NodeId, Topology, Weight};
