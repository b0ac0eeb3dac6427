//! Drives a [`SessionMachine`] alone on a virtual clock.
//!
//! Device traffic is not simulated here: a `kill` in the script reaches the
//! machine directly as a kill-switch event. The full rig lives in the
//! service crate.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::machine::{LoopSetup, SessionMachine};
use super::script::{Script, ScriptAction};
use super::types::*;
use crate::clock::Millis;
use crate::game::GameRules;

/// Four virtual hours.
pub const DEFAULT_HORIZON_MS: Millis = 4 * 60 * 60 * 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub horizon_ms: Millis,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            horizon_ms: DEFAULT_HORIZON_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEntry {
    Event {
        t_ms: Millis,
        event: SessionEvent,
    },
    Rejected {
        t_ms: Millis,
        event: SessionEvent,
    },
    Phase {
        t_ms: Millis,
        from: SessionPhase,
        to: SessionPhase,
    },
    Effect {
        t_ms: Millis,
        effect: Effect,
    },
}

impl TraceEntry {
    pub fn t_ms(&self) -> Millis {
        match self {
            TraceEntry::Event { t_ms, .. }
            | TraceEntry::Rejected { t_ms, .. }
            | TraceEntry::Phase { t_ms, .. }
            | TraceEntry::Effect { t_ms, .. } => *t_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    SafeOff,
    /// The script ran out while the machine was waiting on a person.
    ScriptExhausted {
        phase: SessionPhase,
    },
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TraceEntry>,
    pub end: EndReason,
    pub end_ms: Millis,
}

impl Transcript {
    pub fn effects(&self) -> impl Iterator<Item = (Millis, &Effect)> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Effect { t_ms, effect } => Some((*t_ms, effect)),
            _ => None,
        })
    }

    pub fn phases(&self) -> impl Iterator<Item = (Millis, &SessionPhase, &SessionPhase)> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Phase { t_ms, from, to } => Some((*t_ms, from, to)),
            _ => None,
        })
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("trace entries serialize"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&(&self.end, self.end_ms)).expect("end serializes"));
        out.push('\n');
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("no pending timers or input in phase {0}")]
    ScriptDeadlock(SessionPhase),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Timer(DeadlineId),
    Script(usize),
}

struct Driver {
    machine: SessionMachine,
    queue: BinaryHeap<Reverse<(Millis, u64, Item)>>,
    seq: u64,
    entries: Vec<TraceEntry>,
}

impl Driver {
    fn push(&mut self, t: Millis, item: Item) {
        self.queue.push(Reverse((t, self.seq, item)));
        self.seq += 1;
    }

    fn deliver(
        &mut self,
        event: SessionEvent,
        t: Millis,
        from_script: bool,
    ) -> Result<(), RunError> {
        let before = self.machine.phase().clone();
        match self.machine.advance(event, t) {
            Ok(effects) => {
                if from_script {
                    self.entries.push(TraceEntry::Event { t_ms: t, event });
                }
                if *self.machine.phase() != before {
                    let to = self.machine.phase().clone();
                    self.entries.push(TraceEntry::Phase {
                        t_ms: t,
                        from: before,
                        to,
                    });
                }
                for effect in effects {
                    if let Effect::ArmTimer { id, ms } = effect {
                        self.push(t + ms, Item::Timer(id));
                    }
                    self.entries.push(TraceEntry::Effect { t_ms: t, effect });
                }
                Ok(())
            }
            Err(ControlError::InvalidEvent { .. }) if from_script => {
                self.entries.push(TraceEntry::Rejected { t_ms: t, event });
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Presses Start at t = 0, then feeds timers and the script until the
/// session ends. Script events the machine rejects are recorded, not fatal.
pub fn run_to_completion(
    setup: LoopSetup,
    rules: GameRules,
    seed: u64,
    script: &Script,
    limits: RunLimits,
) -> Result<(SessionMachine, Transcript), RunError> {
    let mut d = Driver {
        machine: SessionMachine::new(setup, rules, seed),
        queue: BinaryHeap::new(),
        seq: 0,
        entries: Vec::new(),
    };
    for (i, e) in script.entries.iter().enumerate() {
        d.push(e.t_ms, Item::Script(i));
    }
    d.deliver(ScriptAction::Start.as_event(), 0, true)?;
    let mut now: Millis = 0;

    let end = loop {
        match d.machine.phase() {
            SessionPhase::Completed => break EndReason::Completed,
            SessionPhase::SafeOff => break EndReason::SafeOff,
            _ => {}
        }
        let Some(Reverse((t, _, item))) = d.queue.pop() else {
            let phase = d.machine.phase().clone();
            if matches!(phase, SessionPhase::Paused { .. }) {
                break EndReason::ScriptExhausted { phase };
            }
            return Err(RunError::ScriptDeadlock(phase));
        };
        if t > limits.horizon_ms {
            now = limits.horizon_ms;
            break EndReason::Horizon;
        }
        now = t;
        let (event, from_script) = match item {
            Item::Timer(id) => (SessionEvent::TimerElapsed(id), false),
            Item::Script(i) => (script.entries[i].action.as_event(), true),
        };
        d.deliver(event, t, from_script)?;
    };

    Ok((
        d.machine,
        Transcript {
            entries: d.entries,
            end,
            end_ms: now,
        },
    ))
}
