//! Stream decoding with resynchronisation.
//!
//! The decoder scans for the start-of-frame byte, checks version, length
//! and CRC, and on any failure moves one byte past the rejected SOF and
//! scans again. Bytes that cannot start a frame are discarded. Rejected
//! frames are counted in diagnostics and never returned.

use serde::{Deserialize, Serialize};

use super::crc::crc16_ccitt;
use super::frame::{Frame, PayloadError, OVERHEAD, SOF, VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "diagnostic", rename_all = "snake_case")]
pub enum Diagnostic {
    BadCrc,
    UnknownKind {
        kind: u8,
    },
    /// A frame header whose body never arrived.
    Truncated,
    BadVersion {
        version: u8,
    },
    MalformedPayload {
        kind: u8,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decoded {
    pub frames: Vec<Frame>,
    pub diagnostics: Vec<Diagnostic>,
    /// Trailing bytes that may be the start of a frame still in flight.
    pub remainder: Vec<u8>,
}

enum Candidate {
    Incomplete,
    Rejected(Diagnostic),
    /// Length-consistent and CRC-valid; the parse result and frame size.
    Framed(Result<Frame, PayloadError>, usize),
}

fn candidate_at(buf: &[u8], p: usize) -> Candidate {
    let rest = &buf[p..];
    if rest.len() < 4 {
        return Candidate::Incomplete;
    }
    if rest[1] != VERSION {
        return Candidate::Rejected(Diagnostic::BadVersion { version: rest[1] });
    }
    let len = rest[3] as usize;
    let total = OVERHEAD + len;
    if rest.len() < total {
        return Candidate::Incomplete;
    }
    let body = &rest[1..4 + len];
    let crc = u16::from_le_bytes([rest[4 + len], rest[5 + len]]);
    if crc16_ccitt(body) != crc {
        return Candidate::Rejected(Diagnostic::BadCrc);
    }
    Candidate::Framed(Frame::from_payload(rest[2], &rest[4..4 + len]), total)
}

fn next_sof(buf: &[u8], from: usize) -> Option<usize> {
    buf.get(from..)?
        .iter()
        .position(|b| *b == SOF)
        .map(|i| from + i)
}

/// True if a complete, CRC-valid frame starts somewhere at or after `from`.
fn valid_frame_after(buf: &[u8], from: usize) -> bool {
    let mut i = from;
    while let Some(p) = next_sof(buf, i) {
        if matches!(candidate_at(buf, p), Candidate::Framed(..)) {
            return true;
        }
        i = p + 1;
    }
    false
}

/// Decodes every complete frame in `buffer`. Never fails.
pub fn decode_stream(buffer: &[u8]) -> Decoded {
    let mut out = Decoded::default();
    let mut i = 0;
    while let Some(p) = next_sof(buffer, i) {
        match candidate_at(buffer, p) {
            Candidate::Incomplete => {
                if valid_frame_after(buffer, p + 1) {
                    out.diagnostics.push(Diagnostic::Truncated);
                    i = p + 1;
                    continue;
                }
                out.remainder = buffer[p..].to_vec();
                break;
            }
            Candidate::Rejected(d) => {
                out.diagnostics.push(d);
                i = p + 1;
            }
            Candidate::Framed(parsed, total) => {
                match parsed {
                    Ok(f) => out.frames.push(f),
                    Err(PayloadError::UnknownKind(kind)) => {
                        out.diagnostics.push(Diagnostic::UnknownKind { kind })
                    }
                    Err(_) => out.diagnostics.push(Diagnostic::MalformedPayload {
                        kind: buffer[p + 2],
                    }),
                }
                i = p + total;
            }
        }
    }
    out
}

/// Incremental decoder for a byte stream that arrives in pieces.
#[derive(Debug, Clone, Default)]
pub struct StreamDecoder {
    pending: Vec<u8>,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> (Vec<Frame>, Vec<Diagnostic>) {
        self.pending.extend_from_slice(bytes);
        let decoded = decode_stream(&self.pending);
        self.pending = decoded.remainder;
        (decoded.frames, decoded.diagnostics)
    }

    /// Bytes buffered while waiting for the rest of a frame.
    pub fn pending(&self) -> &[u8] {
        &self.pending
    }

    /// Ends the stream; a buffered partial frame is reported as truncated.
    ///
    /// The buffer never holds a complete valid frame after its first SOF
    /// (the decoder would have skipped ahead to it), so one diagnostic
    /// covers whatever is left.
    pub fn finish(&mut self) -> Vec<Diagnostic> {
        if std::mem::take(&mut self.pending).is_empty() {
            Vec::new()
        } else {
            vec![Diagnostic::Truncated]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::frame::encode;

    fn actuate() -> Frame {
        Frame::Actuate {
            channel: 2,
            duration_ms: 2000,
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(decode_stream(&[]), Decoded::default());
    }

    #[test]
    fn garbage_around_frame() {
        let mut buf = vec![0x00, 0xA5, 0x13, 0xFF, 0xA5, 0x01, 0x09];
        buf.extend(encode(&actuate()).unwrap());
        buf.extend([0x11, 0x22, 0x33]);
        let d = decode_stream(&buf);
        assert_eq!(d.frames, vec![actuate()]);
        assert!(d.remainder.is_empty());
    }

    #[test]
    fn header_with_huge_length_does_not_hide_later_frame() {
        // A stray SOF whose length byte claims 255 bytes, then a real frame.
        let mut buf = vec![0xA5, 0x01, 0x01, 0xFF];
        buf.extend(encode(&Frame::Ping).unwrap());
        let d = decode_stream(&buf);
        assert_eq!(d.frames, vec![Frame::Ping]);
        assert_eq!(d.diagnostics, vec![Diagnostic::Truncated]);
    }

    #[test]
    fn every_single_payload_bit_flip_is_caught() {
        let clean = encode(&actuate()).unwrap();
        let payload = 4..4 + 3;
        for byte in payload {
            for bit in 0..8 {
                let mut b = clean.clone();
                b[byte] ^= 1 << bit;
                let d = decode_stream(&b);
                assert!(d.frames.is_empty(), "byte {byte} bit {bit}");
                assert_eq!(d.diagnostics, vec![Diagnostic::BadCrc]);
            }
        }
    }

    #[test]
    fn unknown_kind_and_malformed_payload() {
        let b = crate::wire::frame::encode_raw(0x7E, &[1, 2]).unwrap();
        assert_eq!(
            decode_stream(&b).diagnostics,
            vec![Diagnostic::UnknownKind { kind: 0x7E }]
        );
        let b = crate::wire::frame::encode_raw(0x01, &[1]).unwrap();
        assert_eq!(
            decode_stream(&b).diagnostics,
            vec![Diagnostic::MalformedPayload { kind: 0x01 }]
        );
    }

    #[test]
    fn partial_frame_is_kept_as_remainder() {
        let full = encode(&actuate()).unwrap();
        let d = decode_stream(&full[..5]);
        assert!(d.frames.is_empty() && d.diagnostics.is_empty());
        assert_eq!(d.remainder, full[..5].to_vec());
    }

    #[test]
    fn stream_decoder_reassembles_byte_by_byte() {
        let mut bytes = encode(&actuate()).unwrap();
        bytes.extend(encode(&Frame::StopAll).unwrap());
        let mut dec = StreamDecoder::new();
        let mut frames = Vec::new();
        for b in &bytes {
            let (f, d) = dec.push(std::slice::from_ref(b));
            assert!(d.is_empty());
            frames.extend(f);
        }
        assert_eq!(frames, vec![actuate(), Frame::StopAll]);
        assert!(dec.pending().is_empty());
        assert!(dec.finish().is_empty());
    }

    #[test]
    fn finish_reports_truncation() {
        let full = encode(&actuate()).unwrap();
        let mut dec = StreamDecoder::new();
        dec.push(&full[..6]);
        assert_eq!(dec.finish(), vec![Diagnostic::Truncated]);
    }
}
