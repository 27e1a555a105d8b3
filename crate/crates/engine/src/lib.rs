//! Timed P systems with active membranes.
//!
//! The engine executes a rule system under seeded nondeterministic maximal
//! parallelism with per-rule execution durations: started instances bind
//! their objects and lock their subject membrane until the completion
//! instant, products become visible at the beginning of the following step.

pub mod config;
pub mod multiset;
pub mod runner;
pub mod schedule;
pub mod system;
pub mod trace;

pub use config::{Configuration, Membrane, MembraneId, RegionRef};
pub use multiset::Multiset;
pub use runner::{answer_of, Answer, Effect, RunResult, Runner, StepReport, TimeMapping};
pub use schedule::{
    build_candidates, enabled_instances, select_assignment, Assignment, Binding, RecordId,
    SchedulePolicy, SelectionCtx,
};
pub use system::{
    validate_system, Charge, ChildSpec, Label, MembraneSpec, Rule, RuleDef, RuleId, RuleKind,
    RuleSpec, SymbolId, System, SystemDefinition, ValidationError,
};
