//! Capture files: one line per frame on the wire,
//! `t_ms direction endpoint hex`, where direction is `>` (controller to
//! device) or `<` (device to controller). Blank lines and `#` comments are
//! skipped.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::codec::{decode_stream, Decoded};
use crate::clock::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToDevice,
    FromDevice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureLine {
    pub t_ms: Millis,
    pub direction: Direction,
    pub endpoint: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("capture line {line}: {reason}")]
pub struct CaptureError {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for CaptureLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::ToDevice => '>',
            Direction::FromDevice => '<',
        };
        write!(f, "{} {} {} ", self.t_ms, dir, self.endpoint)?;
        for b in &self.bytes {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for CaptureLine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let mut next = |what: &str| parts.next().ok_or_else(|| format!("missing {what}"));
        let t_ms = next("timestamp")?
            .parse()
            .map_err(|e| format!("bad timestamp: {e}"))?;
        let direction = match next("direction")? {
            ">" => Direction::ToDevice,
            "<" => Direction::FromDevice,
            other => return Err(format!("bad direction {other:?}")),
        };
        let endpoint = next("endpoint")?.to_string();
        let hex = next("hex")?;
        if hex.len() % 2 != 0 {
            return Err("odd-length hex".into());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16))
            .collect::<Result<Vec<u8>, _>>()
            .map_err(|e| format!("bad hex: {e}"))?;
        Ok(CaptureLine {
            t_ms,
            direction,
            endpoint,
            bytes,
        })
    }
}

pub fn parse_capture(text: &str) -> Result<Vec<CaptureLine>, CaptureError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| {
            l.parse().map_err(|reason| CaptureError {
                line: i + 1,
                reason,
            })
        })
        .collect()
}

/// Decodes each captured line as it would arrive at its receiver.
pub fn replay_capture(lines: &[CaptureLine]) -> Vec<(Millis, Direction, String, Decoded)> {
    lines
        .iter()
        .map(|l| {
            (
                l.t_ms,
                l.direction,
                l.endpoint.clone(),
                decode_stream(&l.bytes),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::frame::{encode, Frame};

    #[test]
    fn line_round_trip_and_replay() {
        let line = CaptureLine {
            t_ms: 2005,
            direction: Direction::ToDevice,
            endpoint: "left".into(),
            bytes: encode(&Frame::StopAll).unwrap(),
        };
        let text = format!("# capture\n{line}\n\n");
        let parsed = parse_capture(&text).unwrap();
        assert_eq!(parsed, vec![line]);
        let replayed = replay_capture(&parsed);
        assert_eq!(replayed[0].3.frames, vec![Frame::StopAll]);
    }

    #[test]
    fn bad_lines_report_position() {
        let err = parse_capture("1 > left a5\n2 ? left a5\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_capture("1 > left a").is_err());
        assert!(parse_capture("x > left a5").is_err());
    }
}
