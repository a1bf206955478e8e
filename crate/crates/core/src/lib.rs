//! Runtime attestation for MAVLink GCS↔UAV links.
//!
//! Sub-protocols are written as session types whose messages carry refinement
//! predicates over payload values, loop variables, and vehicle state. A
//! monitor steps through the protocol as messages are observed and flags any
//! message that arrives out of order, in the wrong direction, or with a
//! payload that fails its refinement. An in-line UDP proxy uses the monitor
//! verdicts to drop (or log) non-compliant traffic between a ground control
//! station and an autopilot.
//!
//! Module map:
//! - [`refinement`]: predicate language — values, expression AST, evaluator.
//! - [`session`]: protocol AST (Offer/Mu/Recur/End) and the attestation monitor.
//! - [`dialect`]: MAVLink dialect XML → schema registry + canonical schema document.
//! - [`wire`]: MAVLink v2 framing and payload codec.
//! - [`statectx`]: vehicle-state and parameter shadow fed by observed telemetry.
//! - [`protocols`]: builders for the shipped protocol specs.
//! - [`protofile`]: declarative protocol definition files.
//! - [`proxy`]: routing core and the live UDP enforcement proxy.
//! - [`harness`]: scenario generator, trace replay, and benchmark.
//! - [`cli`]: the `mavguard` command line.

pub mod cli;
pub mod dialect;
pub mod harness;
pub mod protocols;
pub mod protofile;
pub mod proxy;
pub mod refinement;
pub mod session;
pub mod statectx;
pub mod wire;
