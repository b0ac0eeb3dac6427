//! Session and service configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thea_core::control::{LoopSetup, SoundMode, TimingConfig};
use thea_core::device::DeviceConfig;
use thea_core::game::{GameConfig, GameKind, GameMode, HandId, PerHand, Side};

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// One participant wears both devices.
    SoloTwoHands,
    /// Two participants, one device each.
    SharedOneHandEach,
}

fn default_devices() -> PerHand<String> {
    PerHand::new("left".into(), "right".into())
}

fn default_sound() -> SoundMode {
    SoundMode::TwoPitch
}

fn default_assignment() -> Assignment {
    Assignment::SoloTwoHands
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub nicknames: Vec<String>,
    pub game: GameKind,
    pub mode: GameMode,
    #[serde(default = "default_sound")]
    pub sound: SoundMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_assignment")]
    pub assignment: Assignment,
    #[serde(default)]
    pub timing: TimingConfig,
    /// Game rules file; the built-in rules when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_config: Option<PathBuf>,
    /// Device ids worn on each side.
    #[serde(default = "default_devices")]
    pub devices: PerHand<String>,
}

impl SessionConfig {
    pub fn new(nicknames: &[&str], game: GameKind, mode: GameMode, seed: u64) -> Self {
        Self {
            nicknames: nicknames.iter().map(|s| s.to_string()).collect(),
            game,
            mode,
            sound: default_sound(),
            seed,
            assignment: if nicknames.len() == 2 {
                Assignment::SharedOneHandEach
            } else {
                Assignment::SoloTwoHands
            },
            timing: TimingConfig::default(),
            game_config: None,
            devices: default_devices(),
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: &str| Err(ServiceError::InvalidConfig(m.to_string()));
        if self.nicknames.is_empty() || self.nicknames.len() > 2 {
            return bad("one or two nicknames are required");
        }
        if self.nicknames.iter().any(|n| n.trim().is_empty()) {
            return bad("nicknames must not be blank");
        }
        match self.assignment {
            Assignment::SharedOneHandEach if self.nicknames.len() != 2 => {
                return bad("shared_one_hand_each needs two nicknames");
            }
            Assignment::SharedOneHandEach if self.nicknames[0] == self.nicknames[1] => {
                return bad("shared participants need distinct nicknames");
            }
            Assignment::SoloTwoHands if self.nicknames.len() != 1 => {
                return bad("solo_two_hands takes a single nickname");
            }
            _ => {}
        }
        if matches!(self.game, GameKind::Epta | GameKind::Idio) && self.mode != GameMode::FreePlay {
            return bad(&format!("{} is only played in free play", self.game.name()));
        }
        if self.devices.left == self.devices.right {
            return bad("left and right must be different devices");
        }
        self.timing.validate().map_err(ServiceError::InvalidConfig)
    }

    pub fn loop_setup(&self) -> LoopSetup {
        LoopSetup {
            game: self.game,
            mode: self.mode,
            sound: self.sound,
            timing: self.timing,
            hands: 2,
        }
    }

    /// Who wears which side.
    pub fn hands(&self) -> PerHand<HandId> {
        let left = &self.nicknames[0];
        let right = self.nicknames.get(1).unwrap_or(left);
        PerHand::new(
            HandId::new(Side::Left, left),
            HandId::new(Side::Right, right),
        )
    }

    pub fn load_game_config(&self) -> Result<GameConfig, ServiceError> {
        match &self.game_config {
            Some(p) => Ok(GameConfig::load(p)?),
            None => Ok(GameConfig::default()),
        }
    }
}

/// `thea serve` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_log_dir")]
    pub log_dir: PathBuf,
    #[serde(default)]
    pub devices: Vec<DeviceConfig>,
}

fn default_log_dir() -> PathBuf {
    PathBuf::from("thea-logs")
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            log_dir: default_log_dir(),
            devices: default_rig(0.9),
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ServiceError::InvalidConfig(e.to_string()))
    }
}

/// A `[[devices]]` list on its own, as accepted by `thea run --device-config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub devices: Vec<DeviceConfig>,
}

impl DeviceFile {
    pub fn load(path: &Path) -> Result<Vec<DeviceConfig>, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
        let f: DeviceFile =
            toml::from_str(&text).map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
        Ok(f.devices)
    }
}

/// Two fully calibrated devices named "left" and "right".
pub fn default_rig(fidelity: f64) -> Vec<DeviceConfig> {
    Side::BOTH
        .iter()
        .map(|s| DeviceConfig::calibrated(s.name(), *s, fidelity))
        .collect()
}
