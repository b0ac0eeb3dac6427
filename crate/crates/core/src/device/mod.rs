//! Virtual EMS rig.
//!
//! Each wearable unit is an EMS device whose single stimulation output is
//! split by a microcontroller into four channels. Only one channel can be
//! live at a time. A physical kill switch overrides everything the software
//! asks for. Intensity is a manual dial the software cannot set; it is
//! tracked for logs only and never travels on the wire.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Millis;
use crate::game::{Channel, Gesture, HandId};
use crate::rng::SessionRng;
use crate::wire::frame::{ActuationDone, DeviceStatus, FIDELITY_SCALE, MAX_ACTUATION_MS};
use crate::wire::{Completeness, Frame, TransportParams};

/// Approximate mass of one arm unit.
pub const MASS_G: u32 = 350;
/// Continuous-use notification threshold: 30 minutes of stimulation.
pub const USAGE_LIMIT_MS: u64 = 30 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("channel {0} does not exist")]
    UnknownChannel(u8),
    #[error("{active} is still active")]
    Busy { active: Channel },
    #[error("kill switch is engaged")]
    KillSwitchEngaged,
    #[error("fidelity {0} is outside [0, 1]")]
    BadFidelity(f64),
    #[error("actuation of {0} ms exceeds the 2000 ms ceiling")]
    DurationTooLong(u16),
    #[error("intensity {0} is outside 1..=10")]
    BadIntensity(u8),
    #[error("device does not accept {0:?} frames")]
    UnexpectedFrame(crate::wire::FrameKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub index: Channel,
    pub calibrated: bool,
    /// Probability that an actuation renders the gesture completely.
    pub fidelity: f64,
    pub active_until: Option<Millis>,
}

impl ChannelState {
    fn new(index: Channel) -> Self {
        Self {
            index,
            calibrated: false,
            fidelity: 0.0,
            active_until: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Activation {
    channel: Channel,
    started_at: Millis,
    until: Millis,
    completeness: Completeness,
}

/// Emitted once, the first time cumulative stimulation reaches
/// [`USAGE_LIMIT_MS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageLimitReached {
    pub cumulative_on_ms: u64,
}

/// What the rig did with one gesture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActuationReport {
    pub hand: HandId,
    pub gesture: Gesture,
    pub completeness: Completeness,
    pub at: Millis,
}

impl ActuationReport {
    /// The open palm is the rest position: nothing is driven and it is
    /// always "shown" completely.
    pub fn open_palm(hand: HandId, at: Millis) -> Self {
        Self {
            hand,
            gesture: Gesture::OpenPalm,
            completeness: Completeness::Complete,
            at,
        }
    }
}

/// Result of feeding a frame to a device.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviceOutput {
    pub responses: Vec<Frame>,
    /// When the started actuation finishes; call [`DeviceState::settle`] then.
    pub report_due: Option<Millis>,
    pub usage_limit: Option<UsageLimitReached>,
}

/// Things that happened on the device, for logs and transcript scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum DeviceEvent {
    Activated {
        channel: Channel,
        until: Millis,
    },
    Finished {
        channel: Channel,
        completeness: Completeness,
        on_ms: u64,
    },
    Interrupted {
        channel: Channel,
        on_ms: u64,
    },
    Rejected {
        reason: RejectReason,
    },
    KillEngaged,
    KillReleased,
    Calibrated {
        channel: Channel,
        fidelity: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    KillSwitch,
    Busy,
    UnknownChannel,
    DurationTooLong,
    BadFidelity,
    UnexpectedFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub id: String,
    pub channels: [ChannelState; 4],
    pub kill_switch_on: bool,
    pub manual_intensity: u8,
    pub cumulative_on_ms: u64,
    pub usage_notified: bool,
    active: Option<Activation>,
    #[serde(skip)]
    events: Vec<(Millis, DeviceEvent)>,
}

impl DeviceState {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            channels: Channel::ALL.map(ChannelState::new),
            kill_switch_on: false,
            manual_intensity: 5,
            cumulative_on_ms: 0,
            usage_notified: false,
            active: None,
            events: Vec::new(),
        }
    }

    pub fn mass_g(&self) -> u32 {
        MASS_G
    }

    pub fn active_channel(&self) -> Option<Channel> {
        self.active.map(|a| a.channel)
    }

    pub fn is_fully_calibrated(&self) -> bool {
        self.channels.iter().all(|c| c.calibrated)
    }

    /// Device events since the last call, oldest first.
    pub fn drain_events(&mut self) -> Vec<(Millis, DeviceEvent)> {
        std::mem::take(&mut self.events)
    }

    pub fn status(&self) -> DeviceStatus {
        DeviceStatus {
            kill_switch_on: self.kill_switch_on,
            usage_limit_reached: self.usage_notified,
            active_channel: self.active_channel().map_or(0, Channel::get),
            calibrated_mask: self
                .channels
                .iter()
                .enumerate()
                .fold(0, |m, (i, c)| m | ((c.calibrated as u8) << i)),
            cumulative_on_ms: self.cumulative_on_ms.min(u32::MAX as u64) as u32,
        }
    }

    /// Marks a channel calibrated with the given fidelity. Calibration stays
    /// in place across games and across kill-switch toggles.
    pub fn calibrate(&mut self, channel: u8, fidelity: f64) -> Result<(), DeviceError> {
        if self.kill_switch_on {
            return Err(DeviceError::KillSwitchEngaged);
        }
        let ch = Channel::new(channel).ok_or(DeviceError::UnknownChannel(channel))?;
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(DeviceError::BadFidelity(fidelity));
        }
        let slot = &mut self.channels[ch.slot()];
        slot.calibrated = true;
        slot.fidelity = fidelity;
        Ok(())
    }

    /// Set by hand on the device; the software has no way to change it.
    pub fn set_manual_intensity(&mut self, level: u8) -> Result<(), DeviceError> {
        if !(1..=10).contains(&level) {
            return Err(DeviceError::BadIntensity(level));
        }
        self.manual_intensity = level;
        Ok(())
    }

    pub fn accrue_usage(&mut self, active_ms: u64) -> Option<UsageLimitReached> {
        self.cumulative_on_ms += active_ms;
        if !self.usage_notified && self.cumulative_on_ms >= USAGE_LIMIT_MS {
            self.usage_notified = true;
            return Some(UsageLimitReached {
                cumulative_on_ms: self.cumulative_on_ms,
            });
        }
        None
    }

    /// Starts a new usage period (a new session on the same hardware).
    pub fn reset_usage(&mut self) {
        self.cumulative_on_ms = 0;
        self.usage_notified = false;
    }

    /// Ends the current activation early, accruing the time it was on.
    fn cut_active(&mut self, now: Millis) -> Option<(Activation, u64, Option<UsageLimitReached>)> {
        let a = self.active.take()?;
        self.channels[a.channel.slot()].active_until = None;
        let end = now.min(a.until);
        let on_ms = end.saturating_sub(a.started_at);
        let usage = self.accrue_usage(on_ms);
        Some((a, on_ms, usage))
    }

    /// Completes an actuation whose time is up. Returns the ACTUATION_DONE
    /// frame to send back, if one finished.
    pub fn settle(&mut self, now: Millis) -> (Option<Frame>, Option<UsageLimitReached>) {
        match self.active {
            Some(a) if a.until <= now => {
                let (a, on_ms, usage) = self.cut_active(a.until).expect("active");
                self.events.push((
                    a.until,
                    DeviceEvent::Finished {
                        channel: a.channel,
                        completeness: a.completeness,
                        on_ms,
                    },
                ));
                let frame = Frame::ActuationDone(ActuationDone {
                    channel: a.channel.get(),
                    completeness: a.completeness,
                    on_ms: on_ms as u16,
                    cumulative_on_ms: self.status().cumulative_on_ms,
                    usage_limit_reached: usage.is_some(),
                    interrupted: false,
                });
                (Some(frame), usage)
            }
            _ => (None, None),
        }
    }

    /// Flips the physical kill switch.
    ///
    /// Engaging cuts any live channel in the same step and emits no
    /// actuation report for it; the returned frame is the EVENT_KILL notice.
    pub fn toggle_kill_switch(&mut self, now: Millis) -> (Frame, Option<UsageLimitReached>) {
        let mut usage = None;
        if self.kill_switch_on {
            self.kill_switch_on = false;
            self.events.push((now, DeviceEvent::KillReleased));
        } else {
            self.kill_switch_on = true;
            if let Some((_, _, u)) = self.cut_active(now) {
                usage = u;
            }
            self.events.push((now, DeviceEvent::KillEngaged));
        }
        let frame = Frame::EventKill {
            engaged: self.kill_switch_on,
            usage_limit_reached: usage.is_some(),
        };
        (frame, usage)
    }

    fn reject(
        &mut self,
        now: Millis,
        reason: RejectReason,
        err: DeviceError,
    ) -> Result<DeviceOutput, DeviceError> {
        self.events.push((now, DeviceEvent::Rejected { reason }));
        Err(err)
    }

    /// Handles one decoded frame from the controller.
    pub fn handle_frame(
        &mut self,
        frame: &Frame,
        now: Millis,
        rng: &mut SessionRng,
    ) -> Result<DeviceOutput, DeviceError> {
        let mut out = DeviceOutput::default();
        let (done, usage) = self.settle(now);
        out.responses.extend(done);
        out.usage_limit = usage;

        if self.kill_switch_on {
            self.events.push((
                now,
                DeviceEvent::Rejected {
                    reason: RejectReason::KillSwitch,
                },
            ));
            out.responses.push(Frame::EventKill {
                engaged: true,
                usage_limit_reached: false,
            });
            return Ok(out);
        }

        match *frame {
            Frame::Actuate {
                channel,
                duration_ms,
            } => {
                let Some(ch) = Channel::new(channel) else {
                    return self.reject(
                        now,
                        RejectReason::UnknownChannel,
                        DeviceError::UnknownChannel(channel),
                    );
                };
                if duration_ms > MAX_ACTUATION_MS {
                    return self.reject(
                        now,
                        RejectReason::DurationTooLong,
                        DeviceError::DurationTooLong(duration_ms),
                    );
                }
                if let Some(a) = self.active {
                    return self.reject(
                        now,
                        RejectReason::Busy,
                        DeviceError::Busy { active: a.channel },
                    );
                }
                let slot = self.channels[ch.slot()];
                let u = rng.unit();
                let completeness = if !slot.calibrated {
                    Completeness::None
                } else if u < slot.fidelity {
                    Completeness::Complete
                } else {
                    Completeness::Partial
                };
                let until = now + duration_ms as Millis;
                self.active = Some(Activation {
                    channel: ch,
                    started_at: now,
                    until,
                    completeness,
                });
                self.channels[ch.slot()].active_until = Some(until);
                self.events
                    .push((now, DeviceEvent::Activated { channel: ch, until }));
                out.report_due = Some(until);
            }
            Frame::StopAll => {
                if let Some((a, on_ms, usage)) = self.cut_active(now) {
                    self.events.push((
                        now,
                        DeviceEvent::Interrupted {
                            channel: a.channel,
                            on_ms,
                        },
                    ));
                    let completeness = match a.completeness {
                        Completeness::Complete => Completeness::Partial,
                        c => c,
                    };
                    out.responses.push(Frame::ActuationDone(ActuationDone {
                        channel: a.channel.get(),
                        completeness,
                        on_ms: on_ms as u16,
                        cumulative_on_ms: self.status().cumulative_on_ms,
                        usage_limit_reached: usage.is_some(),
                        interrupted: true,
                    }));
                    out.usage_limit = out.usage_limit.or(usage);
                }
            }
            Frame::StatusReq => out.responses.push(Frame::StatusResp(self.status())),
            Frame::Ping => out.responses.push(Frame::Pong),
            Frame::CalibrateSet {
                channel,
                fidelity_bp,
            } => {
                if fidelity_bp > FIDELITY_SCALE {
                    return self.reject(
                        now,
                        RejectReason::BadFidelity,
                        DeviceError::BadFidelity(fidelity_bp as f64 / FIDELITY_SCALE as f64),
                    );
                }
                let fidelity = fidelity_bp as f64 / FIDELITY_SCALE as f64;
                if let Err(e) = self.calibrate(channel, fidelity) {
                    return self.reject(now, RejectReason::UnknownChannel, e);
                }
                self.events.push((
                    now,
                    DeviceEvent::Calibrated {
                        channel: Channel::new(channel).expect("validated"),
                        fidelity,
                    },
                ));
                out.responses.push(Frame::StatusResp(self.status()));
            }
            ref other => {
                return self.reject(
                    now,
                    RejectReason::UnexpectedFrame,
                    DeviceError::UnexpectedFrame(other.kind()),
                );
            }
        }
        Ok(out)
    }
}

/// Device config file entry: identity, starting calibration and link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub id: String,
    pub side: crate::game::Side,
    /// Channel number ("1".."4") to fidelity. Missing channels start
    /// uncalibrated.
    #[serde(default)]
    pub fidelity: BTreeMap<String, f64>,
    #[serde(default)]
    pub transport: TransportParams,
    #[serde(default = "default_intensity")]
    pub manual_intensity: u8,
}

fn default_intensity() -> u8 {
    5
}

impl DeviceConfig {
    pub fn calibrated(id: impl Into<String>, side: crate::game::Side, fidelity: f64) -> Self {
        Self {
            id: id.into(),
            side,
            fidelity: (1..=4).map(|c| (c.to_string(), fidelity)).collect(),
            transport: TransportParams::default(),
            manual_intensity: 5,
        }
    }

    pub fn build(&self) -> Result<DeviceState, DeviceError> {
        let mut d = DeviceState::new(self.id.clone());
        d.set_manual_intensity(self.manual_intensity)?;
        for (ch, f) in &self.fidelity {
            let ch: u8 = ch.parse().map_err(|_| DeviceError::UnknownChannel(0))?;
            d.calibrate(ch, *f)?;
        }
        Ok(d)
    }
}
