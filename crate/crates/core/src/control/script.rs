//! Timed input scripts for headless runs.
//!
//! One event per line: `<t_ms> <event> [arg]`. Blank lines and `#` comments
//! are ignored. Events: `start`, `skip`, `reveal`, `stop`, `pause`, `resume`
//! (also `voice stop|pause|resume`), `kill <left|right>`, `ack <left|right>`,
//! `usage-limit`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{SessionEvent, VoiceCommand};
use crate::clock::Millis;
use crate::game::Side;

/// What a participant or the environment does, as opposed to timer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "action", content = "arg", rename_all = "snake_case")]
pub enum ScriptAction {
    Start,
    SkipBreathing,
    Reveal,
    Voice(VoiceCommand),
    /// Toggles the hardware kill switch on that hand's device.
    Kill(Side),
    Ack(Side),
    UsageLimit,
}

impl ScriptAction {
    /// The machine event this action becomes when nothing sits in between.
    pub fn as_event(self) -> SessionEvent {
        match self {
            ScriptAction::Start => SessionEvent::StartPressed,
            ScriptAction::SkipBreathing => SessionEvent::SkipBreathing,
            ScriptAction::Reveal => SessionEvent::RevealPressed,
            ScriptAction::Voice(v) => SessionEvent::VoiceCommand(v),
            ScriptAction::Kill(s) => SessionEvent::KillSwitch(s),
            ScriptAction::Ack(s) => SessionEvent::ActuationAcked(s),
            ScriptAction::UsageLimit => SessionEvent::UsageLimitReached,
        }
    }
}

impl fmt::Display for ScriptAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptAction::Start => f.write_str("start"),
            ScriptAction::SkipBreathing => f.write_str("skip"),
            ScriptAction::Reveal => f.write_str("reveal"),
            ScriptAction::Voice(VoiceCommand::Stop) => f.write_str("stop"),
            ScriptAction::Voice(VoiceCommand::Pause) => f.write_str("pause"),
            ScriptAction::Voice(VoiceCommand::Resume) => f.write_str("resume"),
            ScriptAction::Kill(s) => write!(f, "kill {}", s.name()),
            ScriptAction::Ack(s) => write!(f, "ack {}", s.name()),
            ScriptAction::UsageLimit => f.write_str("usage-limit"),
        }
    }
}

impl FromStr for ScriptAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let side = |w: Option<&&str>| -> Result<Side, String> {
            w.ok_or_else(|| "missing hand".to_string())?
                .parse::<Side>()
                .map_err(|_| format!("unknown hand {:?}", w.unwrap()))
        };
        let voice = |w: &str| match w {
            "stop" => Some(VoiceCommand::Stop),
            "pause" => Some(VoiceCommand::Pause),
            "resume" => Some(VoiceCommand::Resume),
            _ => None,
        };
        let (action, arity) = match words.first().copied() {
            None => return Err("empty event".into()),
            Some("start") => (ScriptAction::Start, 1),
            Some("skip" | "skip-breathing") => (ScriptAction::SkipBreathing, 1),
            Some("reveal") => (ScriptAction::Reveal, 1),
            Some("usage-limit") => (ScriptAction::UsageLimit, 1),
            Some("kill") => (ScriptAction::Kill(side(words.get(1))?), 2),
            Some("ack") => (ScriptAction::Ack(side(words.get(1))?), 2),
            Some("voice") => {
                let w = words.get(1).ok_or("missing voice command")?;
                let v = voice(w).ok_or_else(|| format!("unknown voice command {w:?}"))?;
                (ScriptAction::Voice(v), 2)
            }
            Some(w) => match voice(w) {
                Some(v) => (ScriptAction::Voice(v), 1),
                None => return Err(format!("unknown event {w:?}")),
            },
        };
        if words.len() > arity {
            return Err(format!("unexpected argument {:?}", words[arity]));
        }
        Ok(action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub t_ms: Millis,
    pub action: ScriptAction,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("script line {line}: {reason}")]
pub struct ScriptError {
    pub line: usize,
    pub reason: String,
}

/// Entries ordered by time; ties keep file order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub entries: Vec<ScriptEntry>,
}

impl Script {
    pub fn new(mut entries: Vec<ScriptEntry>) -> Self {
        entries.sort_by_key(|e| e.t_ms);
        Self { entries }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ScriptError {
                line: i + 1,
                reason,
            };
            let (t, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `<t_ms> <event>`".into()))?;
            let t_ms = t
                .parse::<Millis>()
                .map_err(|_| err(format!("bad time {t:?}")))?;
            let action = rest.parse::<ScriptAction>().map_err(err)?;
            entries.push(ScriptEntry { t_ms, action });
        }
        Ok(Self::new(entries))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{} {}", e.t_ms, e.action)?;
        }
        Ok(())
    }
}

impl FromStr for Script {
    type Err = ScriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        let text = "\
# warm-up
0 skip
7000 reveal   # mid-round
9000 voice pause
9500 resume
12000 kill right
12000 ack L
20000 usage-limit
";
        let s = Script::parse(text).unwrap();
        let actions: Vec<_> = s.entries.iter().map(|e| e.action).collect();
        assert_eq!(
            actions,
            vec![
                ScriptAction::SkipBreathing,
                ScriptAction::Reveal,
                ScriptAction::Voice(VoiceCommand::Pause),
                ScriptAction::Voice(VoiceCommand::Resume),
                ScriptAction::Kill(Side::Right),
                ScriptAction::Ack(Side::Left),
                ScriptAction::UsageLimit,
            ]
        );
    }

    #[test]
    fn sorts_stably_by_time() {
        let s = Script::parse("5 reveal\n1 skip\n5 pause\n").unwrap();
        let got: Vec<_> = s.entries.iter().map(|e| (e.t_ms, e.action)).collect();
        assert_eq!(
            got,
            vec![
                (1, ScriptAction::SkipBreathing),
                (5, ScriptAction::Reveal),
                (5, ScriptAction::Voice(VoiceCommand::Pause)),
            ]
        );
    }

    #[test]
    fn reports_line_numbers() {
        let e = Script::parse("0 skip\n\n10 dance\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(Script::parse("x skip").is_err());
        assert!(Script::parse("5 kill").is_err());
        assert!(Script::parse("5 kill up").is_err());
        assert!(Script::parse("5 reveal now").is_err());
        assert!(Script::parse("5").is_err());
    }

    #[test]
    fn display_round_trips() {
        let s = Script::parse("0 start\n3 voice stop\n4 ack right\n9 usage-limit\n").unwrap();
        assert_eq!(Script::parse(&s.to_string()).unwrap(), s);
    }
}
