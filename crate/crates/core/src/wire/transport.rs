//! Simulated lossy link carrying encoded frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{encode, EncodeError, Frame};
use crate::clock::Millis;
use crate::rng::SessionRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Latency {
    Fixed { ms: u64 },
    Uniform { min_ms: u64, max_ms: u64 },
}

impl Default for Latency {
    fn default() -> Self {
        Latency::Fixed { ms: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    #[serde(default)]
    pub latency: Latency,
    #[serde(default)]
    pub drop_prob: f64,
    #[serde(default)]
    pub duplicate_prob: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            latency: Latency::default(),
            drop_prob: 0.0,
            duplicate_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("{name} = {value} is outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("latency range {min_ms}..={max_ms} is empty")]
    LatencyRange { min_ms: u64, max_ms: u64 },
}

impl TransportParams {
    pub fn fixed(ms: u64) -> Self {
        Self {
            latency: Latency::Fixed { ms },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        for (name, value) in [
            ("drop_prob", self.drop_prob),
            ("duplicate_prob", self.duplicate_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(TransportError::Probability { name, value });
            }
        }
        if let Latency::Uniform { min_ms, max_ms } = self.latency {
            if min_ms > max_ms {
                return Err(TransportError::LatencyRange { min_ms, max_ms });
            }
        }
        Ok(())
    }
}

/// Encoded bytes arriving at the far end at `at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub at: Millis,
    pub bytes: Vec<u8>,
}

fn sample_latency(latency: Latency, rng: &mut SessionRng) -> u64 {
    match latency {
        Latency::Fixed { ms } => ms,
        Latency::Uniform { min_ms, max_ms } => rng.range_inclusive(min_ms, max_ms),
    }
}

/// Sends one frame through the link.
///
/// Sampling order per frame is fixed: drop trial, latency, duplicate trial,
/// then the duplicate's latency. A dropped frame consumes only the drop trial.
pub fn transport_send(
    params: &TransportParams,
    frame: &Frame,
    now: Millis,
    rng: &mut SessionRng,
) -> Result<Vec<Delivery>, EncodeError> {
    let bytes = encode(frame)?;
    if rng.chance(params.drop_prob) {
        return Ok(Vec::new());
    }
    let mut out = vec![Delivery {
        at: now + sample_latency(params.latency, rng),
        bytes: bytes.clone(),
    }];
    if params.duplicate_prob > 0.0 && rng.chance(params.duplicate_prob) {
        out.push(Delivery {
            at: now + sample_latency(params.latency, rng),
            bytes,
        });
    }
    Ok(out)
}

/// One direction of a link with its own random stream.
#[derive(Debug, Clone)]
pub struct Transport {
    pub params: TransportParams,
    rng: SessionRng,
}

impl Transport {
    pub fn new(params: TransportParams, rng: SessionRng) -> Self {
        Self { params, rng }
    }

    pub fn send(&mut self, frame: &Frame, now: Millis) -> Result<Vec<Delivery>, EncodeError> {
        transport_send(&self.params, frame, now, &mut self.rng)
    }
}
