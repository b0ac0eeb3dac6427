//! Game configuration: meaning maps, the Godai dominance matrix, the Eptá
//! number set and the Ídio strike threshold.
//!
//! [`GameConfig`] is the human-editable TOML form; [`GameRules`] is the
//! validated form the engines consume.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gesture::{Element, Gesture, GestureMeaning};
use super::GameKind;

/// Sum an Eptá hand has to hit exactly.
pub const EPTA_TARGET: u32 = 7;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("dominance matrix: {0}")]
    Dominance(String),
    #[error("cannot read game config: {0}")]
    Io(String),
    #[error("cannot parse game config: {0}")]
    Parse(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// "Who beats whom" over the five elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[Element; 2]>", into = "Vec<[Element; 2]>")]
pub struct DominanceMatrix {
    beats: [[bool; 5]; 5],
}

impl DominanceMatrix {
    /// Regular tournament where each element beats the next two in `order`.
    pub fn from_cycle(order: [Element; 5]) -> Self {
        let mut beats = [[false; 5]; 5];
        for (i, winner) in order.iter().enumerate() {
            for step in 1..=2 {
                let loser = order[(i + step) % 5];
                beats[winner.index()][loser.index()] = true;
            }
        }
        Self { beats }
    }

    /// Builds from `[winner, loser]` pairs and validates.
    pub fn from_pairs(pairs: &[[Element; 2]]) -> Result<Self, ConfigError> {
        let mut beats = [[false; 5]; 5];
        for [w, l] in pairs {
            if beats[w.index()][l.index()] {
                return Err(ConfigError::Dominance(format!("pair {w}>{l} listed twice")));
            }
            beats[w.index()][l.index()] = true;
        }
        let m = Self { beats };
        m.validate()?;
        Ok(m)
    }

    pub fn beats(&self, a: Element, b: Element) -> bool {
        self.beats[a.index()][b.index()]
    }

    pub fn pairs(&self) -> Vec<[Element; 2]> {
        let mut out = Vec::with_capacity(10);
        for a in Element::ALL {
            for b in Element::ALL {
                if self.beats(a, b) {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    /// Irreflexive, a complete tournament, 2-regular, and consistent with
    /// Metal > Earth and Fire > Metal.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Dominance(m));
        for a in Element::ALL {
            if self.beats(a, a) {
                return err(format!("{a} beats itself"));
            }
            let wins = Element::ALL.iter().filter(|&&b| self.beats(a, b)).count();
            let losses = Element::ALL.iter().filter(|&&b| self.beats(b, a)).count();
            if wins != 2 || losses != 2 {
                return err(format!(
                    "{a} wins {wins} and loses {losses}, expected 2 and 2"
                ));
            }
            for b in Element::ALL {
                if a < b && self.beats(a, b) == self.beats(b, a) {
                    return err(format!("pair {a}/{b} must have exactly one winner"));
                }
            }
        }
        for (w, l) in [
            (Element::Metal, Element::Earth),
            (Element::Fire, Element::Metal),
        ] {
            if !self.beats(w, l) {
                return err(format!("{w} must beat {l}"));
            }
        }
        Ok(())
    }
}

impl Default for DominanceMatrix {
    fn default() -> Self {
        Self::from_cycle([
            Element::Fire,
            Element::Metal,
            Element::Earth,
            Element::Water,
            Element::Wood,
        ])
    }
}

impl TryFrom<Vec<[Element; 2]>> for DominanceMatrix {
    type Error = ConfigError;

    fn try_from(pairs: Vec<[Element; 2]>) -> Result<Self, Self::Error> {
        Self::from_pairs(&pairs)
    }
}

impl From<DominanceMatrix> for Vec<[Element; 2]> {
    fn from(m: DominanceMatrix) -> Self {
        m.pairs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GodaiConfig {
    pub elements: BTreeMap<Gesture, Element>,
    /// `[winner, loser]` pairs.
    pub beats: DominanceMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EptaConfig {
    pub numbers: BTreeMap<Gesture, u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdioConfig {
    /// Hands that must show a gesture together to strike it. When absent,
    /// two-hand sessions need both hands and larger sessions need three.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike_threshold: Option<u32>,
}

/// The game config file as written by people.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub godai: GodaiConfig,
    pub epta: EptaConfig,
    #[serde(default)]
    pub idio: IdioConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        use Gesture::*;
        Self {
            godai: GodaiConfig {
                elements: BTreeMap::from([
                    (OpenPalm, Element::Water),
                    (ThreeFinger, Element::Fire),
                    (MiddleFinger, Element::Wood),
                    (WristInward, Element::Earth),
                    (WristOutward, Element::Metal),
                ]),
                beats: DominanceMatrix::default(),
            },
            epta: EptaConfig {
                numbers: BTreeMap::from([
                    (OpenPalm, 5),
                    (ThreeFinger, 1),
                    (MiddleFinger, 0),
                    (WristInward, 2),
                    (WristOutward, 3),
                ]),
            },
            idio: IdioConfig::default(),
        }
    }
}

impl GameConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("game config serializes")
    }

    pub fn validate(self) -> Result<GameRules, ConfigError> {
        GameRules::new(self)
    }
}

/// Validated game configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRules {
    elements: [Element; 5],
    numbers: [u32; 5],
    dominance: DominanceMatrix,
    strike_threshold: Option<u32>,
    config: GameConfig,
}

impl Default for GameRules {
    fn default() -> Self {
        GameRules::new(GameConfig::default()).expect("default game config is valid")
    }
}

impl GameRules {
    pub fn new(config: GameConfig) -> Result<Self, ConfigError> {
        let mut elements = [Element::Water; 5];
        let mut seen = [false; 5];
        for g in Gesture::ALL {
            let e = *config
                .godai
                .elements
                .get(&g)
                .ok_or_else(|| invalid(format!("godai.elements is missing {g}")))?;
            if std::mem::replace(&mut seen[e.index()], true) {
                return Err(invalid(format!("godai.elements maps two gestures to {e}")));
            }
            elements[g.index()] = e;
        }
        if elements[Gesture::OpenPalm.index()] != Element::Water {
            return Err(invalid("godai.elements must map open_palm to water"));
        }

        let mut numbers = [0u32; 5];
        for g in Gesture::ALL {
            let n = *config
                .epta
                .numbers
                .get(&g)
                .ok_or_else(|| invalid(format!("epta.numbers is missing {g}")))?;
            if numbers[..g.index()].contains(&n) {
                return Err(invalid(format!("epta.numbers maps two gestures to {n}")));
            }
            numbers[g.index()] = n;
        }
        if numbers[Gesture::OpenPalm.index()] != 5 {
            return Err(invalid("epta.numbers must map open_palm to 5"));
        }

        config.godai.beats.validate()?;
        if let Some(t) = config.idio.strike_threshold {
            if t < 2 {
                return Err(invalid("idio.strike_threshold must be at least 2"));
            }
        }

        Ok(Self {
            elements,
            numbers,
            dominance: config.godai.beats.clone(),
            strike_threshold: config.idio.strike_threshold,
            config,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn dominance(&self) -> &DominanceMatrix {
        &self.dominance
    }

    pub fn element(&self, g: Gesture) -> Element {
        self.elements[g.index()]
    }

    pub fn number(&self, g: Gesture) -> u32 {
        self.numbers[g.index()]
    }

    pub fn gesture_for_number(&self, n: u32) -> Option<Gesture> {
        Gesture::ALL.into_iter().find(|g| self.number(*g) == n)
    }

    /// The Eptá number set, ascending.
    pub fn epta_numbers(&self) -> Vec<u32> {
        let mut v = self.numbers.to_vec();
        v.sort_unstable();
        v
    }

    /// Strike threshold for a session with `hands` active hands.
    pub fn strike_threshold(&self, hands: usize) -> u32 {
        self.strike_threshold
            .unwrap_or(if hands <= 2 { 2 } else { 3 })
    }

    pub fn meaning_of(&self, g: Gesture, game: GameKind) -> GestureMeaning {
        match game {
            GameKind::Godai => GestureMeaning::Element(self.element(g)),
            GameKind::Epta => GestureMeaning::Number(self.number(g)),
            GameKind::Idio => GestureMeaning::Symbol(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_matches_cycle_rule() {
        let m = DominanceMatrix::default();
        use Element::*;
        let expected = [
            (Fire, Metal),
            (Fire, Earth),
            (Metal, Earth),
            (Metal, Water),
            (Earth, Water),
            (Earth, Wood),
            (Water, Wood),
            (Water, Fire),
            (Wood, Fire),
            (Wood, Metal),
        ];
        for (w, l) in expected {
            assert!(m.beats(w, l), "{w} should beat {l}");
            assert!(!m.beats(l, w));
        }
        assert_eq!(m.pairs().len(), 10);
        m.validate().unwrap();
    }

    #[test]
    fn every_orientation_with_fixed_pairs_is_checked() {
        // Enumerate all 2^10 orientations of the 10 element pairs and compare
        // the validator with a direct count.
        let pairs: Vec<(Element, Element)> = Element::ALL
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| Element::ALL[i + 1..].iter().map(move |&b| (a, b)))
            .collect();
        let mut accepted = 0;
        for mask in 0u32..1 << 10 {
            let oriented: Vec<[Element; 2]> = pairs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 1 { [a, b] } else { [b, a] })
                .collect();
            let regular = Element::ALL
                .iter()
                .all(|e| oriented.iter().filter(|p| p[0] == *e).count() == 2);
            let has = |w, l| oriented.contains(&[w, l]);
            let expect_ok = regular
                && has(Element::Metal, Element::Earth)
                && has(Element::Fire, Element::Metal);
            let got = DominanceMatrix::from_pairs(&oriented);
            assert_eq!(got.is_ok(), expect_ok, "mask {mask:#b}");
            accepted += expect_ok as u32;
        }
        // 24 regular tournaments on 5 labelled vertices; constraints keep some.
        assert!(accepted >= 1);
    }

    #[test]
    fn rejects_bad_matrices() {
        use Element::*;
        // self-beat
        assert!(DominanceMatrix::from_pairs(&[[Fire, Fire]]).is_err());
        // incomplete
        assert!(DominanceMatrix::from_pairs(&[[Metal, Earth], [Fire, Metal]]).is_err());
        // reversed fixed pair: Earth beats Metal
        let mut pairs = DominanceMatrix::default().pairs();
        for p in pairs.iter_mut() {
            p.swap(0, 1);
        }
        assert!(DominanceMatrix::from_pairs(&pairs).is_err());
    }

    #[test]
    fn default_rules_meanings() {
        let r = GameRules::default();
        assert_eq!(
            r.meaning_of(Gesture::OpenPalm, GameKind::Godai),
            GestureMeaning::Element(Element::Water)
        );
        assert_eq!(
            r.meaning_of(Gesture::OpenPalm, GameKind::Epta),
            GestureMeaning::Number(5)
        );
        for g in Gesture::ALL {
            assert_eq!(r.meaning_of(g, GameKind::Idio), GestureMeaning::Symbol(g));
        }
        assert_eq!(r.epta_numbers(), vec![0, 1, 2, 3, 5]);
        let mut elems: Vec<_> = Gesture::ALL.iter().map(|g| r.element(*g)).collect();
        elems.sort();
        assert_eq!(elems, Element::ALL.to_vec());
        assert_eq!(r.strike_threshold(2), 2);
        assert_eq!(r.strike_threshold(4), 3);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = GameConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(GameConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = GameConfig::default();
        cfg.godai.elements.insert(Gesture::OpenPalm, Element::Fire);
        assert!(cfg.validate().is_err());

        let mut cfg = GameConfig::default();
        cfg.epta.numbers.insert(Gesture::WristOutward, 1);
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));

        let mut cfg = GameConfig::default();
        cfg.epta.numbers.remove(&Gesture::WristOutward);
        assert!(cfg.validate().is_err());

        let mut cfg = GameConfig::default();
        cfg.idio.strike_threshold = Some(1);
        assert!(cfg.validate().is_err());

        let bad = "[godai]\nelements = {}\nbeats = [[\"fire\", \"fire\"]]\n[epta]\nnumbers = {}\n";
        assert!(GameConfig::from_toml_str(bad).is_err());
    }
}
