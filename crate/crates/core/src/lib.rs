//! Consistency testing for execution graphs under release-acquire (SRA, RA,
//! WRA), relaxed and causal (CC, CM, CCv) memory models.

pub mod axioms;
pub mod harness;
pub mod model;
pub mod onewriter;
pub mod oracle;
pub mod reductions;
pub mod trace_io;
pub mod verdict;

pub use axioms::{check_axiom, compute_ob, hb_reaches, replay, verify, CheckError, ObAnchor};
pub use model::{
    rf_leq, rf_min, Access, Event, EventId, Graph, MemoryModel, ModelError, ModificationOrder,
    Op, ReadsFrom,
};
pub use verdict::{Axiom, EdgeLabel, Refutation, Step, Verdict, Violation};
