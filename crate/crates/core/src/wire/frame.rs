//! Frame layout and single-frame encoding.
//!
//! ```text
//! +------+---------+------+-----+-----------+-----------------+
//! | 0xA5 | version | kind | len | payload   | CRC-16 (LE)     |
//! | 1 B  | 1 B     | 1 B  | 1 B | len bytes | over version..  |
//! +------+---------+------+-----+-----------+-----------------+
//! ```
//!
//! Multi-byte fields are little-endian. Payloads:
//!
//! | kind | name           | payload                                                       |
//! |------|----------------|---------------------------------------------------------------|
//! | 0x01 | ACTUATE        | channel u8 (1..=4), duration_ms u16 (<= 2000)                  |
//! | 0x02 | STOP_ALL       | -                                                             |
//! | 0x03 | STATUS_REQ     | -                                                             |
//! | 0x04 | STATUS_RESP    | flags u8, active channel u8 (0 = none), calibrated mask u8, cumulative_on_ms u32 |
//! | 0x05 | EVENT_KILL     | flags u8                                                      |
//! | 0x06 | PING           | -                                                             |
//! | 0x07 | PONG           | -                                                             |
//! | 0x08 | CALIBRATE_SET  | channel u8, fidelity u16 in basis points (0..=10000)          |
//! | 0x09 | ACTUATION_DONE | channel u8, completeness u8, on_ms u16, cumulative_on_ms u32, flags u8 |
//!
//! Flag bits: STATUS_RESP bit0 kill switch on, bit1 usage limit reached;
//! EVENT_KILL bit0 engaged, bit1 usage limit reached; ACTUATION_DONE bit0
//! usage limit reached, bit1 interrupted. Other bits must be zero.
//! Completeness: 0 none, 1 partial, 2 complete.
//!
//! Stimulation intensity, pulse rate and pulse width have no field in any
//! frame; the hardware only exposes them on its manual dial.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::crc::crc16_ccitt;

pub const SOF: u8 = 0xA5;
pub const VERSION: u8 = 0x01;
/// SOF, version, kind, length and the two CRC bytes.
pub const OVERHEAD: usize = 6;
pub const MAX_PAYLOAD: usize = 255;
/// Longest actuation the controller may command.
pub const MAX_ACTUATION_MS: u16 = 2000;
pub const FIDELITY_SCALE: u16 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum FrameKind {
    Actuate = 0x01,
    StopAll = 0x02,
    StatusReq = 0x03,
    StatusResp = 0x04,
    EventKill = 0x05,
    Ping = 0x06,
    Pong = 0x07,
    CalibrateSet = 0x08,
    ActuationDone = 0x09,
}

impl FrameKind {
    pub fn from_byte(b: u8) -> Option<FrameKind> {
        use FrameKind::*;
        Some(match b {
            0x01 => Actuate,
            0x02 => StopAll,
            0x03 => StatusReq,
            0x04 => StatusResp,
            0x05 => EventKill,
            0x06 => Ping,
            0x07 => Pong,
            0x08 => CalibrateSet,
            0x09 => ActuationDone,
            _ => return None,
        })
    }

    fn payload_len(self) -> usize {
        use FrameKind::*;
        match self {
            Actuate | CalibrateSet => 3,
            StopAll | StatusReq | Ping | Pong => 0,
            StatusResp => 7,
            EventKill => 1,
            ActuationDone => 9,
        }
    }
}

/// How completely a gesture was rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    None,
    Partial,
    Complete,
}

impl Completeness {
    fn to_byte(self) -> u8 {
        match self {
            Completeness::None => 0,
            Completeness::Partial => 1,
            Completeness::Complete => 2,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Completeness::None),
            1 => Some(Completeness::Partial),
            2 => Some(Completeness::Complete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceStatus {
    pub kill_switch_on: bool,
    pub usage_limit_reached: bool,
    /// 0 when no channel is active.
    pub active_channel: u8,
    /// Bit `i` set when channel `i + 1` is calibrated.
    pub calibrated_mask: u8,
    pub cumulative_on_ms: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActuationDone {
    pub channel: u8,
    pub completeness: Completeness,
    pub on_ms: u16,
    pub cumulative_on_ms: u32,
    pub usage_limit_reached: bool,
    pub interrupted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Frame {
    Actuate {
        channel: u8,
        duration_ms: u16,
    },
    StopAll,
    StatusReq,
    StatusResp(DeviceStatus),
    EventKill {
        engaged: bool,
        usage_limit_reached: bool,
    },
    Ping,
    Pong,
    CalibrateSet {
        channel: u8,
        fidelity_bp: u16,
    },
    ActuationDone(ActuationDone),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds 255")]
    PayloadTooLarge(usize),
    #[error("channel {0} is outside 1..=4")]
    BadChannel(u8),
    #[error("actuation of {0} ms exceeds the 2000 ms ceiling")]
    DurationTooLong(u16),
    #[error("fidelity {0} exceeds 10000 basis points")]
    BadFidelity(u16),
}

/// Why a complete, CRC-valid frame could not be turned into a [`Frame`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("unknown frame kind {0:#04x}")]
    UnknownKind(u8),
    #[error("{kind:?} payload has {len} bytes")]
    BadLength { kind: FrameKind, len: usize },
    #[error("{kind:?} payload has a bad field")]
    BadField { kind: FrameKind },
}

fn flags(bits: &[bool]) -> u8 {
    bits.iter()
        .enumerate()
        .fold(0u8, |acc, (i, b)| acc | ((*b as u8) << i))
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        match self {
            Frame::Actuate { .. } => FrameKind::Actuate,
            Frame::StopAll => FrameKind::StopAll,
            Frame::StatusReq => FrameKind::StatusReq,
            Frame::StatusResp(_) => FrameKind::StatusResp,
            Frame::EventKill { .. } => FrameKind::EventKill,
            Frame::Ping => FrameKind::Ping,
            Frame::Pong => FrameKind::Pong,
            Frame::CalibrateSet { .. } => FrameKind::CalibrateSet,
            Frame::ActuationDone(_) => FrameKind::ActuationDone,
        }
    }

    /// Range checks applied before anything goes on the wire.
    pub fn validate(&self) -> Result<(), EncodeError> {
        match *self {
            Frame::Actuate {
                channel,
                duration_ms,
            } => {
                if !(1..=4).contains(&channel) {
                    return Err(EncodeError::BadChannel(channel));
                }
                if duration_ms > MAX_ACTUATION_MS {
                    return Err(EncodeError::DurationTooLong(duration_ms));
                }
            }
            Frame::CalibrateSet {
                channel,
                fidelity_bp,
            } => {
                if !(1..=4).contains(&channel) {
                    return Err(EncodeError::BadChannel(channel));
                }
                if fidelity_bp > FIDELITY_SCALE {
                    return Err(EncodeError::BadFidelity(fidelity_bp));
                }
            }
            Frame::StatusResp(s) if s.active_channel > 4 => {
                return Err(EncodeError::BadChannel(s.active_channel));
            }
            Frame::ActuationDone(d) if !(1..=4).contains(&d.channel) => {
                return Err(EncodeError::BadChannel(d.channel));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn payload(&self) -> Vec<u8> {
        match *self {
            Frame::Actuate {
                channel,
                duration_ms,
            } => {
                let d = duration_ms.to_le_bytes();
                vec![channel, d[0], d[1]]
            }
            Frame::StopAll | Frame::StatusReq | Frame::Ping | Frame::Pong => Vec::new(),
            Frame::StatusResp(s) => {
                let mut p = vec![
                    flags(&[s.kill_switch_on, s.usage_limit_reached]),
                    s.active_channel,
                    s.calibrated_mask,
                ];
                p.extend_from_slice(&s.cumulative_on_ms.to_le_bytes());
                p
            }
            Frame::EventKill {
                engaged,
                usage_limit_reached,
            } => vec![flags(&[engaged, usage_limit_reached])],
            Frame::CalibrateSet {
                channel,
                fidelity_bp,
            } => {
                let f = fidelity_bp.to_le_bytes();
                vec![channel, f[0], f[1]]
            }
            Frame::ActuationDone(d) => {
                let mut p = vec![d.channel, d.completeness.to_byte()];
                p.extend_from_slice(&d.on_ms.to_le_bytes());
                p.extend_from_slice(&d.cumulative_on_ms.to_le_bytes());
                p.push(flags(&[d.usage_limit_reached, d.interrupted]));
                p
            }
        }
    }

    /// Parses a payload whose framing and CRC have already been checked.
    pub fn from_payload(kind: u8, p: &[u8]) -> Result<Frame, PayloadError> {
        let kind = FrameKind::from_byte(kind).ok_or(PayloadError::UnknownKind(kind))?;
        if p.len() != kind.payload_len() {
            return Err(PayloadError::BadLength { kind, len: p.len() });
        }
        let bad = || PayloadError::BadField { kind };
        let bits = |b: u8, n: u32| -> Result<Vec<bool>, PayloadError> {
            if b >> n != 0 {
                return Err(bad());
            }
            Ok((0..n).map(|i| b >> i & 1 == 1).collect())
        };
        let u16_at = |i: usize| u16::from_le_bytes([p[i], p[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes([p[i], p[i + 1], p[i + 2], p[i + 3]]);
        let frame = match kind {
            FrameKind::Actuate => Frame::Actuate {
                channel: p[0],
                duration_ms: u16_at(1),
            },
            FrameKind::StopAll => Frame::StopAll,
            FrameKind::StatusReq => Frame::StatusReq,
            FrameKind::StatusResp => {
                let f = bits(p[0], 2)?;
                Frame::StatusResp(DeviceStatus {
                    kill_switch_on: f[0],
                    usage_limit_reached: f[1],
                    active_channel: p[1],
                    calibrated_mask: p[2],
                    cumulative_on_ms: u32_at(3),
                })
            }
            FrameKind::EventKill => {
                let f = bits(p[0], 2)?;
                Frame::EventKill {
                    engaged: f[0],
                    usage_limit_reached: f[1],
                }
            }
            FrameKind::Ping => Frame::Ping,
            FrameKind::Pong => Frame::Pong,
            FrameKind::CalibrateSet => Frame::CalibrateSet {
                channel: p[0],
                fidelity_bp: u16_at(1),
            },
            FrameKind::ActuationDone => {
                let f = bits(p[8], 2)?;
                Frame::ActuationDone(ActuationDone {
                    channel: p[0],
                    completeness: Completeness::from_byte(p[1]).ok_or_else(bad)?,
                    on_ms: u16_at(2),
                    cumulative_on_ms: u32_at(4),
                    usage_limit_reached: f[0],
                    interrupted: f[1],
                })
            }
        };
        frame.validate().map_err(|_| bad())?;
        Ok(frame)
    }
}

/// Frames an arbitrary kind byte and payload.
pub fn encode_raw(kind: u8, payload: &[u8]) -> Result<Vec<u8>, EncodeError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(OVERHEAD + payload.len());
    out.push(SOF);
    out.push(VERSION);
    out.push(kind);
    out.push(payload.len() as u8);
    out.extend_from_slice(payload);
    let crc = crc16_ccitt(&out[1..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Encodes one frame after range-checking it.
pub fn encode(frame: &Frame) -> Result<Vec<u8>, EncodeError> {
    frame.validate()?;
    encode_raw(frame.kind() as u8, &frame.payload())
}
