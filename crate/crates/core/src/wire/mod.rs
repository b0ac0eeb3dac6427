//! Framed binary protocol between the session controller and the device
//! microcontrollers, and the simulated link that carries it.

pub mod capture;
pub mod codec;
pub mod crc;
pub mod frame;
pub mod transport;

pub use codec::{decode_stream, Decoded, Diagnostic, StreamDecoder};
pub use crc::crc16_ccitt;
pub use frame::{
    encode, encode_raw, ActuationDone, Completeness, DeviceStatus, EncodeError, Frame, FrameKind,
    MAX_ACTUATION_MS,
};
pub use transport::{transport_send, Delivery, Latency, Transport, TransportParams};
