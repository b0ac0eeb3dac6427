//! Reruns a session from its log and checks the result byte for byte.

use crate::error::ServiceError;
use crate::host::SessionHost;
use crate::log::{RecordKind, SessionLog};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    Identical {
        records: usize,
    },
    /// First line (1-based, header is line 1) where the rerun differs.
    Diverged {
        line: usize,
        expected: String,
        got: String,
    },
}

/// Rebuilds the host from the header and feeds it the logged inputs at
/// their logged instants.
pub fn rerun(log: &SessionLog) -> Result<SessionHost, ServiceError> {
    let mut host = SessionHost::new(log.header.clone())?;
    for (t, action) in log.inputs() {
        match host.inject(action, t) {
            Ok(()) | Err(ServiceError::InvalidEvent(_)) | Err(ServiceError::SessionEnded(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let last_t = log.records.last().map_or(log.header.start_ms, |r| r.t_ms);
    match log.records.last().map(|r| &r.kind) {
        Some(RecordKind::SessionEnded { .. }) => {
            host.finish(last_t - log.header.start_ms);
        }
        _ => host.run_until(last_t),
    }
    Ok(host)
}

pub fn verify(text: &str) -> Result<ReplayOutcome, ServiceError> {
    let log = SessionLog::parse(text)?;
    let host = rerun(&log)?;
    let again = host.to_log().to_jsonl();
    if again == text {
        return Ok(ReplayOutcome::Identical {
            records: log.records.len(),
        });
    }
    let mut a = text.lines();
    let mut b = again.lines();
    let mut line = 0;
    loop {
        line += 1;
        match (a.next(), b.next()) {
            (x, y) if x == y && x.is_some() => {}
            (x, y) => {
                return Ok(ReplayOutcome::Diverged {
                    line,
                    expected: x.unwrap_or("<end of log>").to_string(),
                    got: y.unwrap_or("<end of rerun>").to_string(),
                })
            }
        }
    }
}
