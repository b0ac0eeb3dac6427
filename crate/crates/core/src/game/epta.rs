//! Eptá: hands take turns revealing numbers; exactly seven wins, over seven loses.

use serde::{Deserialize, Serialize};

use super::gesture::Side;
use super::rules::{GameRules, EPTA_TARGET};
use super::{GameError, PerHand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "hand")]
pub enum EptaOutcome {
    Ongoing,
    Won(Side),
    Lost(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EptaReveal {
    pub hand: Side,
    pub number: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EptaState {
    pub sums: PerHand<u32>,
    pub turn: Side,
    pub history: Vec<EptaReveal>,
    pub outcome: EptaOutcome,
}

impl Default for EptaState {
    fn default() -> Self {
        Self::new()
    }
}

impl EptaState {
    /// The right hand reveals first.
    pub fn new() -> Self {
        Self {
            sums: PerHand::default(),
            turn: Side::Right,
            history: Vec::new(),
            outcome: EptaOutcome::Ongoing,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.outcome != EptaOutcome::Ongoing
    }

    /// The hand that won the game, counting a bust as a win for the other hand.
    pub fn winner(&self) -> Option<Side> {
        match self.outcome {
            EptaOutcome::Ongoing => None,
            EptaOutcome::Won(s) => Some(s),
            EptaOutcome::Lost(s) => Some(s.other()),
        }
    }

    pub fn apply(&self, rules: &GameRules, n: u32) -> Result<EptaState, GameError> {
        if self.is_finished() {
            return Err(GameError::GameOver);
        }
        if rules.gesture_for_number(n).is_none() {
            return Err(GameError::IllegalNumber(n));
        }
        let hand = self.turn;
        let mut next = self.clone();
        next.sums[hand] += n;
        next.history.push(EptaReveal { hand, number: n });
        let sum = next.sums[hand];
        if sum == EPTA_TARGET {
            next.outcome = EptaOutcome::Won(hand);
        } else if sum > EPTA_TARGET {
            next.outcome = EptaOutcome::Lost(hand);
        } else {
            next.turn = hand.other();
        }
        Ok(next)
    }

    /// Rebuilds a state by folding `history` from the empty game.
    pub fn replay(rules: &GameRules, history: &[EptaReveal]) -> Result<EptaState, GameError> {
        history.iter().try_fold(EptaState::new(), |s, r| {
            if r.hand != s.turn {
                return Err(GameError::OutOfTurn(r.hand));
            }
            s.apply(rules, r.number)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_reveals_left_reaches_seven() {
        let rules = GameRules::default();
        let mut s = EptaState::new();
        for n in [1, 5, 0, 0, 1, 2] {
            s = s.apply(&rules, n).unwrap();
        }
        assert_eq!(s.outcome, EptaOutcome::Won(Side::Left));
        assert_eq!(s.sums.left, 7);
        assert_eq!(s.sums.right, 2);
        assert_eq!(s.apply(&rules, 0), Err(GameError::GameOver));
    }

    #[test]
    fn six_plus_five_busts() {
        let rules = GameRules::default();
        let s = EptaState {
            sums: PerHand { left: 0, right: 6 },
            ..EptaState::new()
        };
        let s = s.apply(&rules, 5).unwrap();
        assert_eq!(s.outcome, EptaOutcome::Lost(Side::Right));
        assert_eq!(s.winner(), Some(Side::Left));
    }

    #[test]
    fn illegal_number_rejected() {
        let rules = GameRules::default();
        assert_eq!(
            EptaState::new().apply(&rules, 4),
            Err(GameError::IllegalNumber(4))
        );
    }

    #[test]
    fn turns_alternate_until_terminal() {
        let rules = GameRules::default();
        let mut s = EptaState::new();
        let mut expected = Side::Right;
        for n in [0, 0, 1, 1, 2, 2] {
            assert_eq!(s.turn, expected);
            s = s.apply(&rules, n).unwrap();
            expected = expected.other();
        }
        assert_eq!(EptaState::replay(&rules, &s.history).unwrap(), s);
    }

    #[test]
    fn replay_rejects_out_of_turn_history() {
        let rules = GameRules::default();
        let bad = [EptaReveal {
            hand: Side::Left,
            number: 1,
        }];
        assert_eq!(
            EptaState::replay(&rules, &bad),
            Err(GameError::OutOfTurn(Side::Left))
        );
    }

    /// Breadth-first expansion of every reveal sequence up to depth 12.
    #[test]
    fn reachable_sums_bounded_by_six_plus_max_number() {
        let rules = GameRules::default();
        let numbers = rules.epta_numbers();
        let bound = 6 + numbers.iter().max().unwrap();
        let mut frontier = vec![EptaState::new()];
        let mut seen = std::collections::HashSet::new();
        for _depth in 0..12 {
            let mut next = Vec::new();
            for s in &frontier {
                for &n in &numbers {
                    let t = s.apply(&rules, n).unwrap();
                    assert!(t.sums.left <= bound && t.sums.right <= bound);
                    let won = matches!(t.outcome, EptaOutcome::Won(h) if t.sums[h] == 7);
                    let lost = matches!(t.outcome, EptaOutcome::Lost(h) if t.sums[h] > 7);
                    assert!(t.outcome == EptaOutcome::Ongoing || won || lost);
                    assert!(t.sums.left >= s.sums.left && t.sums.right >= s.sums.right);
                    if !t.is_finished() && seen.insert((t.sums.left, t.sums.right, t.turn)) {
                        next.push(t);
                    }
                }
            }
            frontier = next;
        }
    }
}
