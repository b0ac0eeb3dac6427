//! One running session: the control machine, both devices and their links
//! on a single discrete-event queue.
//!
//! Time only moves through [`SessionHost::run_until`] and
//! [`SessionHost::inject`]. Items due at the same instant run in the order
//! they were scheduled, and an input injected at `t` runs after everything
//! already queued for `t`. Driving a host with the same inputs at the same
//! instants therefore always yields the same log, whether the instants come
//! from a script or from a wall clock.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thea_core::clock::{ClockMode, Millis};
use thea_core::control::{
    ControlError, Effect, ScriptAction, SessionEvent, SessionMachine, SessionNote, SessionPhase,
};
use thea_core::device::DeviceState;
use thea_core::game::{Channel, GameRules, Gesture, HandId, PerHand, Side};
use thea_core::rng::{SessionRng, Stream, RNG_ALGORITHM};
use thea_core::wire::capture::{CaptureLine, Direction};
use thea_core::wire::{Completeness, Frame, StreamDecoder, Transport};

use crate::config::SessionConfig;
use crate::error::ServiceError;
use crate::log::{
    DeviceSetup, EndReason, LinkDirection, LogHeader, LogRecord, RecordKind, SessionLog, LOG_FORMAT,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Timer(thea_core::control::DeadlineId),
    ToDevice(Side, Vec<u8>),
    ToHost(Side, Vec<u8>),
    Settle(Side),
}

impl Item {
    fn is_link(&self) -> bool {
        !matches!(self, Item::Timer(_))
    }
}

struct Actor {
    state: DeviceState,
    rng: SessionRng,
    rx: StreamDecoder,
    downlink: Transport,
    uplink: Transport,
    host_rx: StreamDecoder,
    /// Gesture whose ACTUATE went out and has not been reported yet.
    in_flight: Option<(Gesture, Channel)>,
}

fn side_index(side: Side) -> u8 {
    side.index() as u8
}

impl Actor {
    fn new(setup: &DeviceSetup, side: Side, seed: u64) -> Self {
        let mut state = setup.state.clone();
        state.reset_usage();
        let i = side_index(side);
        Actor {
            state,
            rng: SessionRng::for_stream(seed, Stream::Device(i)),
            rx: StreamDecoder::new(),
            downlink: Transport::new(
                setup.transport,
                SessionRng::for_stream(seed, Stream::Downlink(i)),
            ),
            uplink: Transport::new(
                setup.transport,
                SessionRng::for_stream(seed, Stream::Uplink(i)),
            ),
            host_rx: StreamDecoder::new(),
            in_flight: None,
        }
    }
}

pub struct SessionHost {
    header: LogHeader,
    machine: SessionMachine,
    hands: PerHand<HandId>,
    actors: PerHand<Actor>,
    queue: BinaryHeap<Reverse<(Millis, u64, Item)>>,
    next_seq: u64,
    links_pending: usize,
    now: Millis,
    records: Vec<LogRecord>,
    capture: Vec<CaptureLine>,
    started_at: Option<Millis>,
    terminal: Option<(Millis, EndReason)>,
    ended: bool,
}

impl SessionHost {
    /// Builds the host and logs `SessionStarted` at `header.start_ms`.
    pub fn new(header: LogHeader) -> Result<Self, ServiceError> {
        if header.format != LOG_FORMAT {
            return Err(ServiceError::BadLog(format!(
                "unsupported format {:?}",
                header.format
            )));
        }
        header.config.validate()?;
        let rules = GameRules::new(header.rules.clone())?;
        let seed = header.seed;
        let machine = SessionMachine::new(header.config.loop_setup(), rules, seed);
        let hands = header.config.hands();
        let actors = PerHand::new(
            Actor::new(&header.devices.left, Side::Left, seed),
            Actor::new(&header.devices.right, Side::Right, seed),
        );
        let mut host = SessionHost {
            now: header.start_ms,
            header,
            machine,
            hands,
            actors,
            queue: BinaryHeap::new(),
            next_seq: 0,
            links_pending: 0,
            records: Vec::new(),
            capture: Vec::new(),
            started_at: None,
            terminal: None,
            ended: false,
        };
        let cfg = &host.header.config;
        let started = RecordKind::SessionStarted {
            nicknames: cfg.nicknames.clone(),
            game: cfg.game,
            mode: cfg.mode,
            sound: cfg.sound,
            assignment: cfg.assignment,
            hands: host.hands.clone(),
        };
        host.log(started);
        Ok(host)
    }

    /// Header for a session that takes over `devices` now.
    pub fn header(
        session_id: impl Into<String>,
        config: SessionConfig,
        rules: thea_core::game::GameConfig,
        devices: PerHand<DeviceSetup>,
        clock: ClockMode,
        start_ms: Millis,
    ) -> LogHeader {
        LogHeader {
            format: LOG_FORMAT.to_string(),
            session_id: session_id.into(),
            clock,
            start_ms,
            seed: config.seed,
            rng: RNG_ALGORITHM.to_string(),
            config,
            rules,
            devices,
        }
    }

    pub fn log_header(&self) -> &LogHeader {
        &self.header
    }

    pub fn session_id(&self) -> &str {
        &self.header.session_id
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn phase(&self) -> &SessionPhase {
        self.machine.phase()
    }

    pub fn machine(&self) -> &SessionMachine {
        &self.machine
    }

    pub fn hands(&self) -> &PerHand<HandId> {
        &self.hands
    }

    pub fn device(&self, side: Side) -> &DeviceState {
        &self.actors[side].state
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    /// Frames as they arrived at each end.
    pub fn capture(&self) -> &[CaptureLine] {
        &self.capture
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    /// Completed or safe-off; link traffic may still be draining.
    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn next_due(&self) -> Option<Millis> {
        self.queue.peek().map(|Reverse((t, _, _))| *t)
    }

    pub fn to_log(&self) -> SessionLog {
        SessionLog {
            header: self.header.clone(),
            records: self.records.clone(),
        }
    }

    pub fn into_devices(self) -> PerHand<DeviceState> {
        PerHand::new(self.actors.left.state, self.actors.right.state)
    }

    fn log(&mut self, kind: RecordKind) {
        let seq = self.records.len() as u64;
        self.records.push(LogRecord {
            seq,
            t_ms: self.now,
            session_id: self.header.session_id.clone(),
            kind,
        });
    }

    fn push(&mut self, at: Millis, item: Item) {
        if item.is_link() {
            self.links_pending += 1;
        }
        self.queue.push(Reverse((at, self.next_seq, item)));
        self.next_seq += 1;
    }

    /// Runs every queued item due at or before `t`, then sets the clock to `t`.
    pub fn run_until(&mut self, t: Millis) {
        while !self.ended {
            match self.queue.peek() {
                Some(Reverse((at, _, _))) if *at <= t => {}
                _ => break,
            }
            let Reverse((at, _, item)) = self.queue.pop().expect("peeked");
            self.now = self.now.max(at);
            if item.is_link() {
                self.links_pending -= 1;
            }
            self.process(item);
            self.check_end();
        }
        if !self.ended {
            self.now = self.now.max(t);
        }
    }

    /// Applies a participant action at `t` (clamped to the host clock).
    ///
    /// Rejected actions are logged and reported as
    /// [`ServiceError::InvalidEvent`]. Once the game is over only the
    /// kill switch still acts, since it is a physical switch on the unit.
    pub fn inject(&mut self, action: ScriptAction, t: Millis) -> Result<(), ServiceError> {
        self.run_until(t);
        if self.ended || (self.terminal.is_some() && !matches!(action, ScriptAction::Kill(_))) {
            return Err(ServiceError::SessionEnded(self.header.session_id.clone()));
        }
        self.log(RecordKind::Input { action });
        let result = match action {
            ScriptAction::Kill(side) => {
                self.toggle_kill(side);
                Ok(())
            }
            ScriptAction::Reveal => self.dispatch(action.as_event(), Some(RecordKind::RevealUsed)),
            other => self.dispatch(other.as_event(), None),
        };
        let out = match result {
            Ok(()) => Ok(()),
            Err(e) => {
                let reason = e.to_string();
                self.log(RecordKind::EventRejected {
                    action,
                    reason: reason.clone(),
                });
                Err(ServiceError::InvalidEvent(reason))
            }
        };
        self.check_end();
        out
    }

    /// Runs the session out: until it ends, nothing is left to happen, or
    /// the clock passes `start_ms + horizon_ms`. Logs `SessionEnded`.
    pub fn finish(&mut self, horizon_ms: Millis) -> EndReason {
        let limit = self.header.start_ms.saturating_add(horizon_ms);
        while !self.ended {
            match self.next_due() {
                Some(t) if t <= limit => self.run_until(t),
                Some(_) => {
                    self.now = self.now.max(limit);
                    self.end(EndReason::Horizon);
                }
                None => self.end(EndReason::InputExhausted),
            }
        }
        self.ended_reason().expect("ended")
    }

    pub fn ended_reason(&self) -> Option<EndReason> {
        self.records.iter().rev().find_map(|r| match r.kind {
            RecordKind::SessionEnded { reason, .. } => Some(reason),
            _ => None,
        })
    }

    fn end(&mut self, reason: EndReason) {
        if self.ended {
            return;
        }
        let stop = self.terminal.map_or(self.now, |(t, _)| t);
        let duration_ms = self.started_at.map_or(0, |s| stop.saturating_sub(s));
        self.log(RecordKind::SessionEnded {
            duration_ms,
            reason,
        });
        self.ended = true;
        self.queue.clear();
        self.links_pending = 0;
    }

    fn check_end(&mut self) {
        if let Some((_, reason)) = self.terminal {
            if self.links_pending == 0 {
                self.end(reason);
            }
        }
    }

    fn process(&mut self, item: Item) {
        match item {
            Item::Timer(id) => {
                if self.terminal.is_none() {
                    // Stale timers are a no-op inside the machine.
                    let _ = self.dispatch(SessionEvent::TimerElapsed(id), None);
                }
            }
            Item::ToDevice(side, bytes) => self.device_rx(side, bytes),
            Item::Settle(side) => {
                let (frame, _) = self.actors[side].state.settle(self.now);
                if let Some(f) = frame {
                    self.uplink(side, f);
                }
                self.drain_device_events(side);
            }
            Item::ToHost(side, bytes) => self.host_rx(side, bytes),
        }
    }

    fn dispatch(
        &mut self,
        ev: SessionEvent,
        preface: Option<RecordKind>,
    ) -> Result<(), ControlError> {
        let before = self.machine.phase().clone();
        let (next, effects) = self.machine.transition(ev, self.now)?;
        self.machine = next;
        if let Some(p) = preface {
            self.log(p);
        }
        let after = self.machine.phase().clone();
        let entering_actuation = after == SessionPhase::Actuating && before != after;
        if after != before {
            if before == SessionPhase::Idle && self.started_at.is_none() {
                self.started_at = Some(self.now);
            }
            self.log(RecordKind::PhaseChanged {
                from: before,
                to: after.clone(),
            });
        }
        for e in effects {
            self.execute(e);
        }
        if entering_actuation {
            self.show_open_palms();
        }
        if after.is_terminal() && self.terminal.is_none() {
            let reason = match after {
                SessionPhase::Completed => EndReason::Completed,
                _ => EndReason::SafeOff,
            };
            self.terminal = Some((self.now, reason));
        }
        Ok(())
    }

    /// The open palm is shown by not driving the hand; nothing reports it.
    fn show_open_palms(&mut self) {
        let palms: Vec<Side> = self
            .machine
            .current_plan()
            .map(|p| {
                p.hands
                    .iter()
                    .filter(|h| h.channel.is_none())
                    .map(|h| h.side)
                    .collect()
            })
            .unwrap_or_default();
        for side in palms {
            self.log(RecordKind::GestureShown {
                hand: self.hands[side].clone(),
                gesture: Gesture::OpenPalm,
                completeness: Completeness::Complete,
            });
        }
    }

    fn execute(&mut self, effect: Effect) {
        match effect {
            Effect::AppendLog { note } => {
                let kind = match note {
                    SessionNote::Paused => RecordKind::Paused,
                    SessionNote::Resumed => RecordKind::Resumed,
                    SessionNote::RoundResolved { result } => RecordKind::RoundResolved { result },
                    SessionNote::KillSwitch { hand } => RecordKind::KillSwitch {
                        hand: self.hands[hand].clone(),
                    },
                    SessionNote::UsageLimit => RecordKind::UsageLimit,
                };
                self.log(kind);
            }
            Effect::ArmTimer { id, ms } => {
                self.log(RecordKind::Effect { effect });
                self.push(self.now + ms, Item::Timer(id));
            }
            Effect::SendActuate {
                hand,
                channel,
                duration_ms,
            } => {
                self.log(RecordKind::Effect { effect });
                let gesture =
                    Gesture::from_channel(channel).expect("every channel drives a gesture");
                self.actors[hand].in_flight = Some((gesture, channel));
                let duration_ms = duration_ms.min(u16::MAX as u64) as u16;
                self.downlink(
                    hand,
                    Frame::Actuate {
                        channel: channel.get(),
                        duration_ms,
                    },
                );
            }
            Effect::SendStopAll => {
                self.log(RecordKind::Effect { effect });
                for side in Side::BOTH {
                    self.downlink(side, Frame::StopAll);
                }
            }
            other => self.log(RecordKind::Effect { effect: other }),
        }
    }

    fn downlink(&mut self, side: Side, frame: Frame) {
        let deliveries = self.actors[side]
            .downlink
            .send(&frame, self.now)
            .expect("controller frames are valid");
        for d in deliveries {
            self.push(d.at, Item::ToDevice(side, d.bytes));
        }
    }

    fn uplink(&mut self, side: Side, frame: Frame) {
        let deliveries = self.actors[side]
            .uplink
            .send(&frame, self.now)
            .expect("device frames are valid");
        for d in deliveries {
            self.push(d.at, Item::ToHost(side, d.bytes));
        }
    }

    fn record_capture(&mut self, side: Side, direction: Direction, bytes: &[u8]) {
        self.capture.push(CaptureLine {
            t_ms: self.now,
            direction,
            endpoint: self.actors[side].state.id.clone(),
            bytes: bytes.to_vec(),
        });
    }

    fn device_rx(&mut self, side: Side, bytes: Vec<u8>) {
        self.record_capture(side, Direction::ToDevice, &bytes);
        let (frames, diags) = self.actors[side].rx.push(&bytes);
        for d in diags {
            self.log(RecordKind::LinkDiagnostic {
                side,
                direction: LinkDirection::Downlink,
                diagnostic: d,
            });
        }
        for f in frames {
            let now = self.now;
            let actor = &mut self.actors[side];
            let out = actor.state.handle_frame(&f, now, &mut actor.rng);
            if let Ok(out) = out {
                if let Some(due) = out.report_due {
                    self.push(due, Item::Settle(side));
                }
                for r in out.responses {
                    self.uplink(side, r);
                }
            }
            self.drain_device_events(side);
        }
    }

    fn drain_device_events(&mut self, side: Side) {
        let events = self.actors[side].state.drain_events();
        let device_id = self.actors[side].state.id.clone();
        for (_, event) in events {
            self.log(RecordKind::Device {
                side,
                device_id: device_id.clone(),
                event,
            });
        }
    }

    fn toggle_kill(&mut self, side: Side) {
        let (frame, _) = self.actors[side].state.toggle_kill_switch(self.now);
        self.drain_device_events(side);
        self.uplink(side, frame);
    }

    fn host_rx(&mut self, side: Side, bytes: Vec<u8>) {
        self.record_capture(side, Direction::FromDevice, &bytes);
        let (frames, diags) = self.actors[side].host_rx.push(&bytes);
        for d in diags {
            self.log(RecordKind::LinkDiagnostic {
                side,
                direction: LinkDirection::Uplink,
                diagnostic: d,
            });
        }
        for f in frames {
            let usage = match f {
                Frame::ActuationDone(done) => {
                    let in_flight = self.actors[side].in_flight;
                    if let Some((gesture, channel)) = in_flight {
                        if channel.get() == done.channel {
                            self.actors[side].in_flight = None;
                            self.log(RecordKind::GestureShown {
                                hand: self.hands[side].clone(),
                                gesture,
                                completeness: done.completeness,
                            });
                            self.notify(SessionEvent::ActuationAcked(side));
                        }
                    }
                    done.usage_limit_reached
                }
                Frame::EventKill {
                    engaged,
                    usage_limit_reached,
                } => {
                    if engaged {
                        self.notify(SessionEvent::KillSwitch(side));
                    }
                    usage_limit_reached
                }
                Frame::StatusResp(s) => s.usage_limit_reached,
                _ => false,
            };
            if usage {
                self.notify(SessionEvent::UsageLimitReached);
            }
        }
    }

    /// Device-originated events; dropped once the session is over.
    fn notify(&mut self, ev: SessionEvent) {
        if self.terminal.is_none() {
            let _ = self.dispatch(ev, None);
        }
    }
}

/// Applies a script to a fresh host, then runs it out.
pub fn run_script(
    header: LogHeader,
    script: &thea_core::control::Script,
    horizon_ms: Millis,
) -> Result<SessionHost, ServiceError> {
    let mut host = SessionHost::new(header)?;
    for e in &script.entries {
        if host.is_ended() {
            break;
        }
        let at = host.log_header().start_ms + e.t_ms;
        match host.inject(e.action, at) {
            Ok(()) | Err(ServiceError::InvalidEvent(_)) | Err(ServiceError::SessionEnded(_)) => {}
            Err(other) => return Err(other),
        }
    }
    host.finish(horizon_ms);
    Ok(host)
}

/// Header for a virtual-clock session on devices built from `rig`.
///
/// Fails with [`ServiceError::DevicesNotCalibrated`] unless both devices
/// have all four channels calibrated.
pub fn virtual_header(
    session_id: impl Into<String>,
    config: SessionConfig,
    rig: &[thea_core::device::DeviceConfig],
) -> Result<LogHeader, ServiceError> {
    config.validate()?;
    let rules = config.load_game_config()?;
    let setup = |id: &String| -> Result<DeviceSetup, ServiceError> {
        let dc = rig
            .iter()
            .find(|d| &d.id == id)
            .ok_or_else(|| ServiceError::UnknownDevice(id.clone()))?;
        dc.transport
            .validate()
            .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
        Ok(DeviceSetup {
            state: dc.build()?,
            transport: dc.transport,
        })
    };
    let devices = PerHand::new(setup(&config.devices.left)?, setup(&config.devices.right)?);
    check_calibrated(&devices)?;
    Ok(SessionHost::header(
        session_id,
        config,
        rules,
        devices,
        ClockMode::Virtual,
        0,
    ))
}

pub fn check_calibrated(devices: &PerHand<DeviceSetup>) -> Result<(), ServiceError> {
    let missing: Vec<String> = [&devices.left, &devices.right]
        .into_iter()
        .filter(|d| !d.state.is_fully_calibrated())
        .map(|d| d.state.id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ServiceError::DevicesNotCalibrated(missing))
    }
}
