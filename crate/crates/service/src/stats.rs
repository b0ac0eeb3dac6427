//! Engagement statistics, folded from session logs alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thea_core::clock::Millis;
use thea_core::game::GameKind;

use crate::log::{EndReason, RecordKind, SessionLog};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameStats {
    /// Sessions that ended, however they ended.
    pub count: u64,
    /// Of those, the ones that reached the end of the game.
    pub completed: u64,
    pub total_duration_ms: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerStats {
    pub player: String,
    pub games: BTreeMap<GameKind, GameStats>,
}

/// What a finished session contributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Play {
    pub nicknames: Vec<String>,
    pub game: GameKind,
    pub duration_ms: Millis,
    pub reason: EndReason,
}

impl Play {
    /// `None` while the session is still running.
    pub fn from_log(log: &SessionLog) -> Option<Play> {
        let (nicknames, game) = log.records.iter().find_map(|r| match &r.kind {
            RecordKind::SessionStarted {
                nicknames, game, ..
            } => Some((nicknames.clone(), *game)),
            _ => None,
        })?;
        let (duration_ms, reason) = log.ended()?;
        Some(Play {
            nicknames,
            game,
            duration_ms,
            reason,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsIndex {
    players: BTreeMap<String, BTreeMap<GameKind, GameStats>>,
}

impl StatsIndex {
    pub fn from_logs<'a>(logs: impl IntoIterator<Item = &'a SessionLog>) -> Self {
        let mut s = Self::default();
        for log in logs {
            if let Some(p) = Play::from_log(log) {
                s.add(&p);
            }
        }
        s
    }

    pub fn add(&mut self, play: &Play) {
        let mut names = play.nicknames.clone();
        names.sort();
        names.dedup();
        for n in names {
            let g = self
                .players
                .entry(n)
                .or_default()
                .entry(play.game)
                .or_default();
            g.count += 1;
            g.completed += (play.reason == EndReason::Completed) as u64;
            g.total_duration_ms += play.duration_ms;
        }
    }

    /// Every game is listed; unknown players get zeros.
    pub fn player(&self, name: &str) -> PlayerStats {
        let known = self.players.get(name);
        let games = [GameKind::Godai, GameKind::Epta, GameKind::Idio]
            .into_iter()
            .map(|g| {
                let s = known.and_then(|m| m.get(&g)).copied().unwrap_or_default();
                (g, s)
            })
            .collect();
        PlayerStats {
            player: name.to_string(),
            games,
        }
    }

    pub fn players(&self) -> impl Iterator<Item = &str> {
        self.players.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_player_is_all_zero() {
        let s = StatsIndex::default().player("nobody");
        assert_eq!(s.games.len(), 3);
        assert!(s.games.values().all(|g| *g == GameStats::default()));
    }

    #[test]
    fn shared_sessions_count_for_both() {
        let mut s = StatsIndex::default();
        s.add(&Play {
            nicknames: vec!["a".into(), "b".into()],
            game: GameKind::Idio,
            duration_ms: 100,
            reason: EndReason::Completed,
        });
        s.add(&Play {
            nicknames: vec!["a".into()],
            game: GameKind::Idio,
            duration_ms: 50,
            reason: EndReason::SafeOff,
        });
        let a = s.player("a").games[&GameKind::Idio];
        assert_eq!((a.count, a.completed, a.total_duration_ms), (2, 1, 150));
        let b = s.player("b").games[&GameKind::Idio];
        assert_eq!((b.count, b.completed, b.total_duration_ms), (1, 1, 100));
    }
}
