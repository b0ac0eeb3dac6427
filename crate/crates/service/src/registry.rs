//! The service state shared by the HTTP API: devices, sessions, log store
//! and the cached statistics. Every call takes the current instant; the
//! registry never reads a clock itself.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thea_core::clock::{ClockMode, Millis};
use thea_core::control::{ScriptAction, SessionPhase};
use thea_core::device::{DeviceConfig, DeviceState};
use thea_core::game::{GameState, PerHand, RoundResult, Side};
use thea_core::wire::{DeviceStatus, TransportParams};

use crate::config::{ServiceConfig, SessionConfig};
use crate::error::ServiceError;
use crate::host::{check_calibrated, SessionHost};
use crate::log::{DeviceSetup, EndReason, LogRecord};
use crate::stats::{Play, PlayerStats, StatsIndex};
use crate::store::{IndexEntry, LogStore};

struct DeviceEntry {
    state: DeviceState,
    side: Side,
    transport: TransportParams,
    session: Option<String>,
}

struct Session {
    host: SessionHost,
    /// Records on disk.
    written: usize,
    /// Records handed out by [`Registry::take_new`]; never ahead of `written`.
    flushed: usize,
    devices: PerHand<String>,
    released: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceView {
    pub id: String,
    pub side: Side,
    pub session: Option<String>,
    pub manual_intensity: u8,
    /// Per channel "1".."4"; absent when uncalibrated.
    pub fidelity: BTreeMap<String, f64>,
    pub status: DeviceStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub config: SessionConfig,
    pub phase: SessionPhase,
    pub game: GameState,
    pub last_result: Option<RoundResult>,
    pub rounds_played: u32,
    pub next_seq: u64,
    pub ended: Option<EndReason>,
    pub devices: PerHand<DeviceStatus>,
}

pub struct Registry {
    store: LogStore,
    devices: BTreeMap<String, DeviceEntry>,
    sessions: BTreeMap<String, Session>,
    stats: StatsIndex,
    created: u64,
}

impl Registry {
    /// Loads devices from the config and rebuilds statistics from the logs
    /// already in the store.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let store = LogStore::open(&config.log_dir)?;
        let mut devices = BTreeMap::new();
        for d in &config.devices {
            Self::insert_device(&mut devices, d)?;
        }
        let stats = StatsIndex::from_logs(&store.load_indexed()?);
        Ok(Self {
            store,
            devices,
            sessions: BTreeMap::new(),
            stats,
            created: 0,
        })
    }

    fn insert_device(
        devices: &mut BTreeMap<String, DeviceEntry>,
        d: &DeviceConfig,
    ) -> Result<(), ServiceError> {
        d.transport
            .validate()
            .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
        if devices.contains_key(&d.id) {
            return Err(ServiceError::InvalidConfig(format!(
                "device {} listed twice",
                d.id
            )));
        }
        devices.insert(
            d.id.clone(),
            DeviceEntry {
                state: d.build()?,
                side: d.side,
                transport: d.transport,
                session: None,
            },
        );
        Ok(())
    }

    pub fn store(&self) -> &LogStore {
        &self.store
    }

    pub fn create_session(
        &mut self,
        config: SessionConfig,
        now: Millis,
    ) -> Result<String, ServiceError> {
        config.validate()?;
        let rules = config.load_game_config()?;
        let mut setups = Vec::new();
        for id in [&config.devices.left, &config.devices.right] {
            let d = self
                .devices
                .get(id)
                .ok_or_else(|| ServiceError::UnknownDevice(id.clone()))?;
            if d.session.is_some() {
                return Err(ServiceError::DeviceBusy(id.clone()));
            }
            if d.state.kill_switch_on {
                return Err(ServiceError::KillSwitchEngaged(id.clone()));
            }
            setups.push(DeviceSetup {
                state: d.state.clone(),
                transport: d.transport,
            });
        }
        let right = setups.pop().expect("two devices");
        let left = setups.pop().expect("two devices");
        let devices = PerHand::new(left, right);
        check_calibrated(&devices)?;

        self.created += 1;
        let session_id = format!("s{now}-{}", self.created);
        let ids = config.devices.clone();
        let header = SessionHost::header(&session_id, config, rules, devices, ClockMode::Wall, now);
        let host = SessionHost::new(header)?;
        self.store.create(host.log_header())?;
        for id in [&ids.left, &ids.right] {
            self.devices.get_mut(id).expect("checked").session = Some(session_id.clone());
        }
        self.sessions.insert(
            session_id.clone(),
            Session {
                host,
                written: 0,
                flushed: 0,
                devices: ids,
                released: false,
            },
        );
        self.persist(&session_id)?;
        Ok(session_id)
    }

    fn session_mut(&mut self, id: &str) -> Result<&mut Session, ServiceError> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<&Session, ServiceError> {
        self.sessions
            .get(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Applies a participant action now.
    pub fn dispatch(
        &mut self,
        id: &str,
        action: ScriptAction,
        now: Millis,
    ) -> Result<(), ServiceError> {
        let s = self.session_mut(id)?;
        if s.host.is_ended() {
            return Err(ServiceError::SessionEnded(id.to_string()));
        }
        let at = now.max(s.host.now());
        let result = s.host.inject(action, at);
        self.persist(id)?;
        result
    }

    /// Runs everything due up to `now`.
    pub fn tick(&mut self, id: &str, now: Millis) -> Result<(), ServiceError> {
        let s = self.session_mut(id)?;
        if !s.host.is_ended() {
            let at = now.max(s.host.now());
            s.host.run_until(at);
        }
        self.persist(id)
    }

    pub fn next_due(&self, id: &str) -> Result<Option<Millis>, ServiceError> {
        let s = self.session(id)?;
        Ok(if s.host.is_ended() {
            None
        } else {
            s.host.next_due()
        })
    }

    pub fn is_ended(&self, id: &str) -> Result<bool, ServiceError> {
        Ok(self.session(id)?.host.is_ended())
    }

    /// Records not yet handed out, oldest first.
    pub fn take_new(&mut self, id: &str) -> Result<Vec<LogRecord>, ServiceError> {
        let s = self.session_mut(id)?;
        let new = s.host.records()[s.flushed..s.written].to_vec();
        s.flushed = s.written;
        Ok(new)
    }

    /// Records with `seq >= from_seq` that have been handed out.
    pub fn records_from(&self, id: &str, from_seq: u64) -> Result<Vec<LogRecord>, ServiceError> {
        let s = self.session(id)?;
        let from = (from_seq as usize).min(s.flushed);
        Ok(s.host.records()[from..s.flushed].to_vec())
    }

    /// Writes new records and, once the session has ended, hands the
    /// devices back and updates statistics.
    fn persist(&mut self, id: &str) -> Result<(), ServiceError> {
        let s = self.sessions.get_mut(id).expect("caller checked");
        let total = s.host.records().len();
        if s.written < total {
            self.store.append(id, &s.host.records()[s.written..])?;
            s.written = total;
        }
        if !s.host.is_ended() || s.released {
            return Ok(());
        }
        s.released = true;
        let log = s.host.to_log();
        let ids = s.devices.clone();
        for side in Side::BOTH {
            let state = s.host.device(side).clone();
            if let Some(d) = self.devices.get_mut(&ids[side]) {
                d.state = state;
                d.state.drain_events();
                d.session = None;
            }
        }
        if let Some(play) = Play::from_log(&log) {
            self.stats.add(&play);
        }
        let mut entry = IndexEntry::for_header(&log.header);
        entry.ended = log.ended().map(|(_, r)| r);
        self.store.upsert(entry)
    }

    pub fn session_view(&self, id: &str) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let h = &s.host;
        let m = h.machine();
        Ok(SessionView {
            session_id: id.to_string(),
            config: h.log_header().config.clone(),
            phase: m.phase().clone(),
            game: m.game().clone(),
            last_result: m.last_result().cloned(),
            rounds_played: m.rounds_played(),
            next_seq: s.written as u64,
            ended: h.ended_reason(),
            devices: PerHand::new(
                h.device(Side::Left).status(),
                h.device(Side::Right).status(),
            ),
        })
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.keys().cloned().collect()
    }

    pub fn stats(&self, player: &str) -> PlayerStats {
        self.stats.player(player)
    }

    pub fn device_view(&self, id: &str) -> Result<DeviceView, ServiceError> {
        let d = self
            .devices
            .get(id)
            .ok_or_else(|| ServiceError::UnknownDevice(id.to_string()))?;
        // A device in a session is owned by that session's host.
        let state = match d.session.as_deref().and_then(|sid| self.sessions.get(sid)) {
            Some(s) => {
                let side = if s.devices.left == id {
                    Side::Left
                } else {
                    Side::Right
                };
                s.host.device(side)
            }
            None => &d.state,
        };
        Ok(DeviceView {
            id: id.to_string(),
            side: d.side,
            session: d.session.clone(),
            manual_intensity: state.manual_intensity,
            fidelity: state
                .channels
                .iter()
                .filter(|c| c.calibrated)
                .map(|c| (c.index.get().to_string(), c.fidelity))
                .collect(),
            status: state.status(),
        })
    }

    pub fn device_ids(&self) -> Vec<String> {
        self.devices.keys().cloned().collect()
    }

    /// Stores calibration for an idle device. Calibration carries over to
    /// every later session on it.
    pub fn calibrate(
        &mut self,
        id: &str,
        fidelity: &BTreeMap<String, f64>,
    ) -> Result<DeviceView, ServiceError> {
        let d = self
            .devices
            .get_mut(id)
            .ok_or_else(|| ServiceError::UnknownDevice(id.to_string()))?;
        if d.session.is_some() {
            return Err(ServiceError::DeviceBusy(id.to_string()));
        }
        let mut next = d.state.clone();
        for (ch, f) in fidelity {
            let ch: u8 = ch
                .parse()
                .map_err(|_| ServiceError::InvalidConfig(format!("bad channel {ch:?}")))?;
            next.calibrate(ch, *f)?;
        }
        d.state = next;
        self.device_view(id)
    }

    /// Flips the physical kill switch. On a device in a live session this
    /// goes through the session so that it is logged and replayable.
    pub fn toggle_kill(&mut self, id: &str, now: Millis) -> Result<DeviceView, ServiceError> {
        let d = self
            .devices
            .get_mut(id)
            .ok_or_else(|| ServiceError::UnknownDevice(id.to_string()))?;
        match d.session.clone() {
            Some(sid) => {
                let side = if self.sessions[&sid].devices.left == id {
                    Side::Left
                } else {
                    Side::Right
                };
                self.dispatch(&sid, ScriptAction::Kill(side), now)?;
            }
            None => {
                d.state.toggle_kill_switch(now);
                d.state.drain_events();
            }
        }
        self.device_view(id)
    }
}
