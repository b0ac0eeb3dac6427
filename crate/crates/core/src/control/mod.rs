//! Session control loop: phases, effects, scripts and a virtual-time runner.

pub mod machine;
pub mod runner;
pub mod script;
mod types;

pub use machine::{plan_round, LoopSetup, PlannedHand, RoundPlan, SessionMachine};
pub use runner::{run_to_completion, EndReason, RunError, RunLimits, TraceEntry, Transcript};
pub use script::{Script, ScriptAction, ScriptEntry, ScriptError};
pub use types::*;
