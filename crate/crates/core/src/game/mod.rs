//! The three Thea hand games.
//!
//! All transitions are pure: each `apply` takes a state by reference and
//! returns a new one, touching no clock and no RNG. Randomness enters only
//! through [`draw_gesture`].

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SessionRng;

pub mod epta;
pub mod gesture;
pub mod godai;
pub mod idio;
pub mod rules;

pub use epta::{EptaOutcome, EptaReveal, EptaState};
pub use gesture::{Channel, Element, Gesture, GestureMeaning, HandId, Side};
pub use godai::{resolve as godai_resolve, GodaiRound, GodaiState, RoundOutcome};
pub use idio::IdioState;
pub use rules::{ConfigError, DominanceMatrix, GameConfig, GameRules, EPTA_TARGET};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("match is already finished")]
    AlreadyFinished,
    #[error("game is over")]
    GameOver,
    #[error("{0} is not a legal Eptá number")]
    IllegalNumber(u32),
    #[error("it is not the {0} hand's turn")]
    OutOfTurn(Side),
    #[error("gesture {0} has already been struck off")]
    StruckGestureShown(Gesture),
    #[error("expected {expected} hands, got {got}")]
    WrongHandCount { expected: usize, got: usize },
    #[error("every gesture has been struck off")]
    NoGesturesRemaining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Godai,
    Epta,
    Idio,
}

impl GameKind {
    pub const ALL: [GameKind; 3] = [GameKind::Godai, GameKind::Epta, GameKind::Idio];

    pub fn name(self) -> &'static str {
        match self {
            GameKind::Godai => "godai",
            GameKind::Epta => "epta",
            GameKind::Idio => "idio",
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "godai" => Ok(GameKind::Godai),
            "epta" | "eptá" => Ok(GameKind::Epta),
            "idio" | "ídio" => Ok(GameKind::Idio),
            other => Err(format!("unknown game {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameMode {
    #[serde(rename = "bo3")]
    BestOf3,
    #[serde(rename = "bo5")]
    BestOf5,
    #[serde(rename = "free")]
    FreePlay,
}

impl GameMode {
    pub fn best_of(self) -> Option<u32> {
        match self {
            GameMode::BestOf3 => Some(3),
            GameMode::BestOf5 => Some(5),
            GameMode::FreePlay => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameMode::BestOf3 => "bo3",
            GameMode::BestOf5 => "bo5",
            GameMode::FreePlay => "free",
        }
    }
}

impl fmt::Display for GameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bo3" => Ok(GameMode::BestOf3),
            "bo5" => Ok(GameMode::BestOf5),
            "free" => Ok(GameMode::FreePlay),
            other => Err(format!(
                "unknown mode {other:?} (expected bo3, bo5 or free)"
            )),
        }
    }
}

/// A value for each hand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerHand<T> {
    pub left: T,
    pub right: T,
}

impl<T> PerHand<T> {
    pub fn new(left: T, right: T) -> Self {
        Self { left, right }
    }
}

impl<T> Index<Side> for PerHand<T> {
    type Output = T;

    fn index(&self, side: Side) -> &T {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

impl<T> IndexMut<Side> for PerHand<T> {
    fn index_mut(&mut self, side: Side) -> &mut T {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum GameState {
    Godai(GodaiState),
    Epta(EptaState),
    Idio(IdioState),
}

/// What a round did to the game, as shown behind the reveal button.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum RoundResult {
    Godai {
        round: u32,
        left: Gesture,
        right: Gesture,
        left_element: Element,
        right_element: Element,
        outcome: RoundOutcome,
        score: PerHand<u32>,
        match_winner: Option<Side>,
    },
    Epta {
        hand: Side,
        gesture: Gesture,
        number: u32,
        sums: PerHand<u32>,
        outcome: EptaOutcome,
    },
    Idio {
        round: u32,
        shown: Vec<Gesture>,
        newly_struck: Vec<Gesture>,
        struck: Vec<Gesture>,
        complete: bool,
    },
}

impl GameState {
    pub fn new(kind: GameKind, mode: GameMode, rules: &GameRules, hands: usize) -> Self {
        match kind {
            GameKind::Godai => GameState::Godai(GodaiState::new(mode)),
            GameKind::Epta => GameState::Epta(EptaState::new()),
            GameKind::Idio => GameState::Idio(IdioState::new(hands, rules.strike_threshold(hands))),
        }
    }

    pub fn kind(&self) -> GameKind {
        match self {
            GameState::Godai(_) => GameKind::Godai,
            GameState::Epta(_) => GameKind::Epta,
            GameState::Idio(_) => GameKind::Idio,
        }
    }

    pub fn is_finished(&self) -> bool {
        match self {
            GameState::Godai(s) => s.is_finished(),
            GameState::Epta(s) => s.is_finished(),
            GameState::Idio(s) => s.is_complete(),
        }
    }

    /// Hands that reveal a gesture in the next round.
    pub fn hands_in_next_round(&self) -> Vec<Side> {
        match self {
            GameState::Epta(s) => vec![s.turn],
            _ => Side::BOTH.to_vec(),
        }
    }

    /// Applies one round of revealed gestures, given as `(hand, gesture)`.
    pub fn apply_round(
        &self,
        rules: &GameRules,
        shown: &[(Side, Gesture)],
    ) -> Result<(GameState, RoundResult), GameError> {
        match self {
            GameState::Godai(s) => {
                let pick = |side| shown.iter().find(|(h, _)| *h == side).map(|(_, g)| *g);
                let (Some(left), Some(right)) = (pick(Side::Left), pick(Side::Right)) else {
                    return Err(GameError::WrongHandCount {
                        expected: 2,
                        got: shown.len(),
                    });
                };
                let next = s.apply(rules, left, right)?;
                let last = next.history.last().expect("round recorded");
                let result = RoundResult::Godai {
                    round: last.round,
                    left,
                    right,
                    left_element: rules.element(left),
                    right_element: rules.element(right),
                    outcome: last.outcome,
                    score: next.score,
                    match_winner: next.winner(),
                };
                Ok((GameState::Godai(next), result))
            }
            GameState::Epta(s) => {
                let [(hand, gesture)] = shown else {
                    return Err(GameError::WrongHandCount {
                        expected: 1,
                        got: shown.len(),
                    });
                };
                if s.is_finished() {
                    return Err(GameError::GameOver);
                }
                if *hand != s.turn {
                    return Err(GameError::OutOfTurn(*hand));
                }
                let number = rules.number(*gesture);
                let next = s.apply(rules, number)?;
                let result = RoundResult::Epta {
                    hand: *hand,
                    gesture: *gesture,
                    number,
                    sums: next.sums,
                    outcome: next.outcome,
                };
                Ok((GameState::Epta(next), result))
            }
            GameState::Idio(s) => {
                let gestures: Vec<Gesture> = shown.iter().map(|(_, g)| *g).collect();
                let (next, newly) = s.apply(&gestures)?;
                let result = RoundResult::Idio {
                    round: next.round,
                    shown: gestures,
                    newly_struck: newly,
                    struck: next.struck.iter().copied().collect(),
                    complete: next.is_complete(),
                };
                Ok((GameState::Idio(next), result))
            }
        }
    }
}

/// Draws the next gesture for one hand.
///
/// Uniform over all five gestures for Godai and Eptá and over the gestures
/// not yet struck for Ídio. Each call consumes randomness only from `rng`,
/// so a seed fixes the whole sequence.
pub fn draw_gesture(rng: &mut SessionRng, state: &GameState) -> Result<Gesture, GameError> {
    match state {
        GameState::Idio(s) => {
            let remaining = s.remaining();
            if remaining.is_empty() {
                return Err(GameError::NoGesturesRemaining);
            }
            Ok(remaining[rng.below(remaining.len() as u32) as usize])
        }
        _ => Ok(Gesture::ALL[rng.below(Gesture::ALL.len() as u32) as usize]),
    }
}
