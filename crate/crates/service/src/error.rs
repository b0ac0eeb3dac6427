use thea_core::device::DeviceError;
use thea_core::game::ConfigError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("devices not calibrated: {}", .0.join(", "))]
    DevicesNotCalibrated(Vec<String>),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("device {0} is in use by another session")]
    DeviceBusy(String),
    #[error("kill switch is engaged on {0}")]
    KillSwitchEngaged(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} has ended")]
    SessionEnded(String),
    #[error("event rejected: {0}")]
    InvalidEvent(String),
    #[error("device error: {0}")]
    Device(#[from] DeviceError),
    #[error("bad log: {0}")]
    BadLog(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<ConfigError> for ServiceError {
    fn from(e: ConfigError) -> Self {
        ServiceError::InvalidConfig(e.to_string())
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Io(e.to_string())
    }
}
