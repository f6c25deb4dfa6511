//! Event-aware dataflow analysis for EVL programs.
//!
//! An IFDS problem over an event-driven program is solved twice: once as-is
//! over a supergraph that lets the event loop dispatch any handler at any
//! time, and once lifted into an IDE problem whose values track the state of
//! every event handler. Facts that only arrive along orderings in which some
//! handler runs before it was registered and its event emitted are filtered.

pub mod corpus;
pub mod event_lattice;
pub mod event_model;
pub mod gen;
pub mod ide;
pub mod ifds;
pub mod lang;
pub mod oracle;
pub mod report;
pub mod supergraph;
pub mod transform;
pub mod uninit;
