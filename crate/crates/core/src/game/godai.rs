//! Godai: five-element rock-paper-scissors, both hands at once.

use serde::{Deserialize, Serialize};

use super::gesture::{Element, Gesture, Side};
use super::rules::{DominanceMatrix, GameRules};
use super::{GameError, GameMode, PerHand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    LeftWins,
    RightWins,
    Tie,
}

impl RoundOutcome {
    pub fn winner(self) -> Option<Side> {
        match self {
            RoundOutcome::LeftWins => Some(Side::Left),
            RoundOutcome::RightWins => Some(Side::Right),
            RoundOutcome::Tie => None,
        }
    }

    /// The outcome with the hands swapped.
    pub fn mirrored(self) -> Self {
        match self {
            RoundOutcome::LeftWins => RoundOutcome::RightWins,
            RoundOutcome::RightWins => RoundOutcome::LeftWins,
            RoundOutcome::Tie => RoundOutcome::Tie,
        }
    }
}

/// Winner of one Godai exchange.
pub fn resolve(left: Element, right: Element, m: &DominanceMatrix) -> RoundOutcome {
    if left == right {
        RoundOutcome::Tie
    } else if m.beats(left, right) {
        RoundOutcome::LeftWins
    } else {
        RoundOutcome::RightWins
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GodaiRound {
    /// 1-based round number. A tied round is replayed under the same number.
    pub round: u32,
    pub left: Gesture,
    pub right: Gesture,
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GodaiState {
    pub mode: GameMode,
    pub score: PerHand<u32>,
    pub history: Vec<GodaiRound>,
}

impl GodaiState {
    pub fn new(mode: GameMode) -> Self {
        Self {
            mode,
            score: PerHand::default(),
            history: Vec::new(),
        }
    }

    /// Score that wins the match, if the mode has one.
    pub fn target(&self) -> Option<u32> {
        self.mode.best_of().map(|n| n.div_ceil(2))
    }

    pub fn is_finished(&self) -> bool {
        self.winner().is_some()
    }

    pub fn winner(&self) -> Option<Side> {
        let target = self.target()?;
        Side::BOTH.into_iter().find(|s| self.score[*s] >= target)
    }

    /// Score as announced, leader first: "2 to 1".
    pub fn score_line(&self) -> String {
        let (a, b) = (self.score.left, self.score.right);
        format!("{} to {}", a.max(b), a.min(b))
    }

    /// Number of the next round to be played.
    pub fn next_round(&self) -> u32 {
        self.score.left + self.score.right + 1
    }

    pub fn apply(
        &self,
        rules: &GameRules,
        left: Gesture,
        right: Gesture,
    ) -> Result<GodaiState, GameError> {
        if self.is_finished() {
            return Err(GameError::AlreadyFinished);
        }
        let outcome = resolve(rules.element(left), rules.element(right), rules.dominance());
        let mut next = self.clone();
        next.history.push(GodaiRound {
            round: self.next_round(),
            left,
            right,
            outcome,
        });
        if let Some(side) = outcome.winner() {
            next.score[side] += 1;
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::rules::GameRules;
    use crate::rng::SessionRng;
    use Element::*;

    fn gesture_of(rules: &GameRules, e: Element) -> Gesture {
        Gesture::ALL
            .into_iter()
            .find(|g| rules.element(*g) == e)
            .unwrap()
    }

    #[test]
    fn resolve_examples() {
        let m = DominanceMatrix::default();
        assert_eq!(resolve(Metal, Earth, &m), RoundOutcome::LeftWins);
        assert_eq!(resolve(Metal, Fire, &m), RoundOutcome::RightWins);
        assert_eq!(resolve(Earth, Metal, &m), RoundOutcome::RightWins);
        assert_eq!(resolve(Wood, Wood, &m), RoundOutcome::Tie);
    }

    #[test]
    fn resolve_is_antisymmetric() {
        let m = DominanceMatrix::default();
        for a in Element::ALL {
            for b in Element::ALL {
                assert_eq!(resolve(a, b, &m), resolve(b, a, &m).mirrored());
            }
        }
    }

    #[test]
    fn three_round_match_ends_two_to_one() {
        let rules = GameRules::default();
        let g = |e| gesture_of(&rules, e);
        let mut s = GodaiState::new(GameMode::BestOf3);
        for (left, right) in [(Metal, Earth), (Metal, Fire), (Earth, Metal)] {
            s = s.apply(&rules, g(left), g(right)).unwrap();
        }
        assert_eq!(s.score.right, 2);
        assert_eq!(s.score.left, 1);
        assert_eq!(s.winner(), Some(Side::Right));
        assert_eq!(
            s.apply(&rules, g(Wood), g(Fire)),
            Err(GameError::AlreadyFinished)
        );
    }

    #[test]
    fn tie_awards_nothing_and_replays_round() {
        let rules = GameRules::default();
        let s = GodaiState::new(GameMode::BestOf3);
        let s = s
            .apply(&rules, Gesture::OpenPalm, Gesture::OpenPalm)
            .unwrap();
        assert_eq!(s.score, PerHand::default());
        assert_eq!(s.history[0].outcome, RoundOutcome::Tie);
        assert_eq!(s.next_round(), 1);
    }

    #[test]
    fn free_play_never_finishes() {
        let rules = GameRules::default();
        let mut rng = SessionRng::new(5);
        let mut s = GodaiState::new(GameMode::FreePlay);
        for _ in 0..500 {
            let l = Gesture::ALL[rng.below(5) as usize];
            let r = Gesture::ALL[rng.below(5) as usize];
            s = s.apply(&rules, l, r).unwrap();
            assert!(!s.is_finished());
        }
    }

    #[test]
    fn random_best_of_five_matches_terminate_at_three() {
        let rules = GameRules::default();
        let mut rng = SessionRng::new(2024);
        for _ in 0..10_000 {
            let mut s = GodaiState::new(GameMode::BestOf5);
            let mut rounds = 0;
            while !s.is_finished() {
                let l = Gesture::ALL[rng.below(5) as usize];
                let r = Gesture::ALL[rng.below(5) as usize];
                s = s.apply(&rules, l, r).unwrap();
                rounds += 1;
                assert!(s.score.left <= 3 && s.score.right <= 3);
                assert!(rounds < 10_000, "match did not terminate");
            }
            assert_eq!(s.score.left.max(s.score.right), 3);
            let decisive = s
                .history
                .iter()
                .filter(|r| r.outcome != RoundOutcome::Tie)
                .count();
            assert_eq!((s.score.left + s.score.right) as usize, decisive);
        }
    }
}
