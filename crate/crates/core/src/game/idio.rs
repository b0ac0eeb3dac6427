//! Ídio: hands show random gestures; a gesture shown by enough hands at once
//! is struck off and never drawn again. All five struck ends the game.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gesture::Gesture;
use super::GameError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdioState {
    pub struck: BTreeSet<Gesture>,
    pub round: u32,
    pub strike_threshold: u32,
    pub hands: usize,
}

impl IdioState {
    pub fn new(hands: usize, strike_threshold: u32) -> Self {
        Self {
            struck: BTreeSet::new(),
            round: 0,
            strike_threshold,
            hands,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.struck.len() == Gesture::ALL.len()
    }

    /// Gestures still in play, in canonical order.
    pub fn remaining(&self) -> Vec<Gesture> {
        Gesture::ALL
            .into_iter()
            .filter(|g| !self.struck.contains(g))
            .collect()
    }

    /// Plays one round. Returns the new state and the gestures struck this round.
    pub fn apply(&self, shown: &[Gesture]) -> Result<(IdioState, Vec<Gesture>), GameError> {
        if shown.len() != self.hands {
            return Err(GameError::WrongHandCount {
                expected: self.hands,
                got: shown.len(),
            });
        }
        if let Some(g) = shown.iter().find(|g| self.struck.contains(g)) {
            return Err(GameError::StruckGestureShown(*g));
        }
        let mut next = self.clone();
        let mut newly = Vec::new();
        for g in Gesture::ALL {
            let count = shown.iter().filter(|s| **s == g).count() as u32;
            if count >= self.strike_threshold {
                next.struck.insert(g);
                newly.push(g);
            }
        }
        next.round += 1;
        Ok((next, newly))
    }
}
