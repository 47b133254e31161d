//! Latch-based logic locking (LBLL) and a two-phase oracle-less attack on it.
//!
//! The library is organized around a small gate-level netlist model:
//!
//! - [`netlist`] — circuit data model plus a `.bench`-dialect parser/writer
//! - [`locker`] — produces locked circuits with ground truth (FF splitting,
//!   delay/logic decoy insertion, key slot assignment)
//! - [`seqgraph`] — sequential-graph extraction and the 14 per-latch
//!   structural features
//! - [`ml`] — from-scratch random forest and MLP classifiers
//! - [`simplify`] — logic-decoy removal and constant propagation
//! - [`ilp`] — 0-1 ILP over latch types/colors with an exact top-k solver
//! - [`eval`] — keyed two-phase simulation, functional corruptibility,
//!   attack driver and ablations
//! - [`gen`] — seeded synthetic benchmark circuits for tests and experiments
//! - [`experiment`] — leave-one-circuit-out experiment matrix

pub mod eval;
pub mod experiment;
pub mod gen;
pub mod ilp;
pub mod locker;
pub mod ml;
pub mod netlist;
pub mod seqgraph;
pub mod simplify;
