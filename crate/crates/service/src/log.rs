//! Session log: a header line followed by one JSON record per line.
//!
//! ```text
//! {"format":"thea-log/1","session_id":...,"clock":"virtual","start_ms":0,"seed":42,...}
//! {"seq":0,"t_ms":0,"session_id":"...","kind":"session_started","detail":{...}}
//! {"seq":1,"t_ms":0,"session_id":"...","kind":"input","detail":{"action":"start"}}
//! ```
//!
//! `seq` starts at 0 and increases by one per record; `t_ms` never
//! decreases. Records are only ever appended.

use serde::{Deserialize, Serialize};
use thea_core::clock::{ClockMode, Millis};
use thea_core::control::SoundMode;
use thea_core::control::{Effect, ScriptAction, SessionPhase};
use thea_core::device::{DeviceEvent, DeviceState};
use thea_core::game::{
    GameConfig, GameKind, GameMode, Gesture, HandId, PerHand, RoundResult, Side,
};
use thea_core::wire::{Completeness, Diagnostic, TransportParams};

use crate::config::{Assignment, SessionConfig};
use crate::error::ServiceError;

pub const LOG_FORMAT: &str = "thea-log/1";

/// A device as it was when the session took it over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSetup {
    pub state: DeviceState,
    pub transport: TransportParams,
}

/// Everything needed to rerun the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub session_id: String,
    pub clock: ClockMode,
    pub start_ms: Millis,
    pub seed: u64,
    pub rng: String,
    pub config: SessionConfig,
    pub rules: GameConfig,
    pub devices: PerHand<DeviceSetup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    SafeOff,
    /// Nothing left to do and no input arriving (idle or paused).
    InputExhausted,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkDirection {
    Downlink,
    Uplink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RecordKind {
    SessionStarted {
        nicknames: Vec<String>,
        game: GameKind,
        mode: GameMode,
        sound: SoundMode,
        assignment: Assignment,
        hands: PerHand<HandId>,
    },
    PhaseChanged {
        from: SessionPhase,
        to: SessionPhase,
    },
    /// Something a person (or the script standing in for one) did.
    Input {
        #[serde(flatten)]
        action: ScriptAction,
    },
    EventRejected {
        #[serde(flatten)]
        action: ScriptAction,
        reason: String,
    },
    Effect {
        #[serde(flatten)]
        effect: Effect,
    },
    GestureShown {
        hand: HandId,
        gesture: Gesture,
        completeness: Completeness,
    },
    RoundResolved {
        result: RoundResult,
    },
    RevealUsed,
    Paused,
    Resumed,
    KillSwitch {
        hand: HandId,
    },
    UsageLimit,
    Device {
        side: Side,
        device_id: String,
        #[serde(flatten)]
        event: DeviceEvent,
    },
    LinkDiagnostic {
        side: Side,
        direction: LinkDirection,
        #[serde(flatten)]
        diagnostic: Diagnostic,
    },
    SessionEnded {
        duration_ms: Millis,
        reason: EndReason,
    },
}

impl RecordKind {
    pub fn name(&self) -> &'static str {
        match self {
            RecordKind::SessionStarted { .. } => "session_started",
            RecordKind::PhaseChanged { .. } => "phase_changed",
            RecordKind::Input { .. } => "input",
            RecordKind::EventRejected { .. } => "event_rejected",
            RecordKind::Effect { .. } => "effect",
            RecordKind::GestureShown { .. } => "gesture_shown",
            RecordKind::RoundResolved { .. } => "round_resolved",
            RecordKind::RevealUsed => "reveal_used",
            RecordKind::Paused => "paused",
            RecordKind::Resumed => "resumed",
            RecordKind::KillSwitch { .. } => "kill_switch",
            RecordKind::UsageLimit => "usage_limit",
            RecordKind::Device { .. } => "device",
            RecordKind::LinkDiagnostic { .. } => "link_diagnostic",
            RecordKind::SessionEnded { .. } => "session_ended",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub t_ms: Millis,
    pub session_id: String,
    #[serde(flatten)]
    pub kind: RecordKind,
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }
}

impl LogHeader {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log headers serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn to_jsonl(&self) -> String {
        render(&self.header, &self.records)
    }

    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| ServiceError::BadLog("empty log".into()))?;
        let header: LogHeader = serde_json::from_str(first)
            .map_err(|e| ServiceError::BadLog(format!("line 1: {e}")))?;
        if header.format != LOG_FORMAT {
            return Err(ServiceError::BadLog(format!(
                "unsupported format {:?}",
                header.format
            )));
        }
        let records = lines
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| ServiceError::BadLog(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<LogRecord>, _>>()?;
        let log = SessionLog { header, records };
        log.check_order()?;
        Ok(log)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check_order(&self) -> Result<(), ServiceError> {
        for (i, pair) in self.records.windows(2).enumerate() {
            if pair[1].seq != pair[0].seq + 1 || pair[1].t_ms < pair[0].t_ms {
                return Err(ServiceError::BadLog(format!(
                    "record {} is out of order",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Timestamped inputs, in the order they were applied.
    pub fn inputs(&self) -> Vec<(Millis, ScriptAction)> {
        self.records
            .iter()
            .filter_map(|r| match r.kind {
                RecordKind::Input { action } => Some((r.t_ms, action)),
                _ => None,
            })
            .collect()
    }

    pub fn ended(&self) -> Option<(Millis, EndReason)> {
        self.records.iter().rev().find_map(|r| match r.kind {
            RecordKind::SessionEnded {
                duration_ms,
                reason,
            } => Some((duration_ms, reason)),
            _ => None,
        })
    }
}

pub fn render(header: &LogHeader, records: &[LogRecord]) -> String {
    let mut out = header.to_line();
    out.push('\n');
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}
