use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Channel, GameError, Gesture, RoundResult, Side};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Idle,
    Breathing,
    Countdown(u8),
    AwaitRound,
    FirstPitch,
    Actuating,
    InterpretWindow,
    Revealed,
    Paused { resume_to: Box<SessionPhase> },
    Completed,
    SafeOff,
}

impl SessionPhase {
    pub fn name(&self) -> &'static str {
        match self {
            SessionPhase::Idle => "idle",
            SessionPhase::Breathing => "breathing",
            SessionPhase::Countdown(_) => "countdown",
            SessionPhase::AwaitRound => "await_round",
            SessionPhase::FirstPitch => "first_pitch",
            SessionPhase::Actuating => "actuating",
            SessionPhase::InterpretWindow => "interpret_window",
            SessionPhase::Revealed => "revealed",
            SessionPhase::Paused { .. } => "paused",
            SessionPhase::Completed => "completed",
            SessionPhase::SafeOff => "safe_off",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, SessionPhase::Completed | SessionPhase::SafeOff)
    }
}

impl fmt::Display for SessionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionPhase::Countdown(t) => write!(f, "countdown({t})"),
            SessionPhase::Paused { resume_to } => write!(f, "paused(-> {resume_to})"),
            other => f.write_str(other.name()),
        }
    }
}

/// The three sound feedback options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoundMode {
    /// A cue before each actuation plus a per-gesture tone.
    TwoPitch,
    /// Only the cue before each actuation.
    FirstPitchOnly,
    Off,
}

impl SoundMode {
    pub fn first_pitch(self) -> bool {
        !matches!(self, SoundMode::Off)
    }

    pub fn second_pitch(self) -> bool {
        matches!(self, SoundMode::TwoPitch)
    }
}

impl std::str::FromStr for SoundMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-pitch" => Ok(SoundMode::TwoPitch),
            "first-pitch" | "first-pitch-only" => Ok(SoundMode::FirstPitchOnly),
            "off" => Ok(SoundMode::Off),
            other => Err(format!(
                "unknown sound mode {other:?} (expected two-pitch, first-pitch or off)"
            )),
        }
    }
}

/// Phase durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub countdown_tick_ms: u64,
    pub actuation_ms: u64,
    pub interpret_window_ms: u64,
    pub reveal_ms: u64,
    pub breathing_max_ms: u64,
    pub inter_round_gap_ms: u64,
    /// How long the first pitch sounds before the hands are taken over.
    pub first_pitch_ms: u64,
}

/// Hard ceiling on a single actuation.
pub const ACTUATION_CEILING_MS: u64 = 2000;

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            countdown_tick_ms: 1000,
            actuation_ms: 2000,
            interpret_window_ms: 3000,
            reveal_ms: 2000,
            breathing_max_ms: 30_000,
            inter_round_gap_ms: 1000,
            first_pitch_ms: 500,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("countdown_tick_ms", self.countdown_tick_ms),
            ("actuation_ms", self.actuation_ms),
            ("interpret_window_ms", self.interpret_window_ms),
            ("reveal_ms", self.reveal_ms),
            ("breathing_max_ms", self.breathing_max_ms),
            ("inter_round_gap_ms", self.inter_round_gap_ms),
            ("first_pitch_ms", self.first_pitch_ms),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(format!("timing.{name} must be positive"));
        }
        if self.actuation_ms > ACTUATION_CEILING_MS {
            return Err(format!(
                "timing.actuation_ms = {} exceeds the {ACTUATION_CEILING_MS} ms ceiling",
                self.actuation_ms
            ));
        }
        Ok(())
    }
}

/// Identifies one armed timer. A timer whose id is no longer the one the
/// machine is waiting on is stale and ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeadlineId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceCommand {
    Stop,
    Pause,
    Resume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", content = "arg", rename_all = "snake_case")]
pub enum SessionEvent {
    StartPressed,
    SkipBreathing,
    TimerElapsed(DeadlineId),
    VoiceCommand(VoiceCommand),
    RevealPressed,
    ActuationAcked(Side),
    KillSwitch(Side),
    UsageLimitReached,
}

/// Records the machine asks the host to append to the session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum SessionNote {
    Paused,
    Resumed,
    RoundResolved { result: RoundResult },
    KillSwitch { hand: Side },
    UsageLimit,
}

/// Work for the host. Effects are executed in order, outside the machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    PlayFirstPitch,
    PlaySecondPitch {
        gesture: Gesture,
    },
    PlayCountdownSound {
        tick: u8,
    },
    SendActuate {
        hand: Side,
        channel: Channel,
        duration_ms: u64,
    },
    SendStopAll,
    ShowBreathing,
    ShowCountdown {
        tick: u8,
    },
    HideResult,
    ShowResult {
        result: RoundResult,
        duration_ms: u64,
    },
    ArmTimer {
        id: DeadlineId,
        ms: u64,
    },
    AppendLog {
        note: SessionNote,
    },
    NotifyUsageLimit,
}

impl Effect {
    pub fn is_actuation(&self) -> bool {
        matches!(self, Effect::SendActuate { .. })
    }

    /// Effects that reach the EMS hardware.
    pub fn is_device_bound(&self) -> bool {
        matches!(self, Effect::SendActuate { .. } | Effect::SendStopAll)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("event {event:?} is not valid in phase {phase}")]
    InvalidEvent {
        phase: SessionPhase,
        event: SessionEvent,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}
