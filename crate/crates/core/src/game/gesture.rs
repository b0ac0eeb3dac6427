use std::fmt;

use serde::{Deserialize, Serialize};

/// The five hand gestures the EMS rig can produce.
///
/// Every game reads the same gestures; only their meaning changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    /// Relaxed hand. Driven by no channel.
    OpenPalm,
    ThreeFinger,
    MiddleFinger,
    WristInward,
    WristOutward,
}

impl Gesture {
    pub const ALL: [Gesture; 5] = [
        Gesture::OpenPalm,
        Gesture::ThreeFinger,
        Gesture::MiddleFinger,
        Gesture::WristInward,
        Gesture::WristOutward,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The stimulation channel that actuates this gesture.
    ///
    /// `OpenPalm` is the rest position and is never driven.
    pub fn channel(self) -> Option<Channel> {
        match self {
            Gesture::OpenPalm => None,
            Gesture::ThreeFinger => Some(Channel(1)),
            Gesture::MiddleFinger => Some(Channel(2)),
            Gesture::WristInward => Some(Channel(3)),
            Gesture::WristOutward => Some(Channel(4)),
        }
    }

    pub fn from_channel(channel: Channel) -> Option<Gesture> {
        Gesture::ALL
            .into_iter()
            .find(|g| g.channel() == Some(channel))
    }

    pub fn name(self) -> &'static str {
        match self {
            Gesture::OpenPalm => "open_palm",
            Gesture::ThreeFinger => "three_finger",
            Gesture::MiddleFinger => "middle_finger",
            Gesture::WristInward => "wrist_inward",
            Gesture::WristOutward => "wrist_outward",
        }
    }
}

impl fmt::Display for Gesture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the four stimulation outputs split from a device's single source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Channel(u8);

impl Channel {
    pub const ALL: [Channel; 4] = [Channel(1), Channel(2), Channel(3), Channel(4)];

    pub fn new(index: u8) -> Option<Channel> {
        (1..=4).contains(&index).then_some(Channel(index))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based slot in a device's channel array.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for Channel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Channel::new(value).ok_or_else(|| format!("channel {value} is outside 1..=4"))
    }
}

impl From<Channel> for u8 {
    fn from(c: Channel) -> u8 {
        c.0
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.0)
    }
}

/// The five Godai elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Wood,
    Fire,
    Earth,
    Metal,
    Water,
}

impl Element {
    pub const ALL: [Element; 5] = [
        Element::Wood,
        Element::Fire,
        Element::Earth,
        Element::Metal,
        Element::Water,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Element::Wood => "wood",
            Element::Fire => "fire",
            Element::Earth => "earth",
            Element::Metal => "metal",
            Element::Water => "water",
        };
        f.write_str(s)
    }
}

/// Which arm a hand (and its device) is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(format!("unknown side {other:?}")),
        }
    }
}

/// A hand in a session: the arm it is on and who is wearing it.
///
/// Solo sessions have one wearer on both sides; shared sessions put a
/// different participant on each device.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HandId {
    pub side: Side,
    pub wearer: String,
}

impl HandId {
    pub fn new(side: Side, wearer: impl Into<String>) -> Self {
        Self {
            side,
            wearer: wearer.into(),
        }
    }
}

/// Per-game reading of a gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureMeaning {
    Element(Element),
    Number(u32),
    Symbol(Gesture),
}
