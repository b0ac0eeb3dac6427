//! Core of the Thea spectating system.
//!
//! * [`game`] holds the three rule engines (Godai, Eptá, Ídio) and the
//!   gesture semantics they share.
//! * [`control`] is the session state machine that paces every round.
//! * [`device`] simulates the two wearable EMS units.
//! * [`wire`] is the framed binary protocol between controller and units,
//!   plus a lossy simulated transport.
//!
//! Everything in this crate is deterministic given a seed and a clock.

pub mod clock;
pub mod control;
pub mod device;
pub mod game;
pub mod rng;
pub mod wire;

pub use game::{Gesture, Side};
