use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aquatics::{Face, FacePattern, Site, Tank, WaterParams};
use crate::codecs::Frame;
use crate::fsm::{parse_bit_string, Command, LabletProgram, PROGRAM_BITS};
use crate::photonics::OpticalLinkParams;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub duration_s: f64,
    #[serde(default = "default_physics_dt")]
    pub physics_dt: f64,
    #[serde(default = "default_substeps")]
    pub comm_substeps: u32,
    #[serde(default = "default_decimation")]
    pub decimation: u64,
    #[serde(default)]
    pub tank: Tank,
    #[serde(default)]
    pub water: WaterParams,
    #[serde(default)]
    pub link: OpticalLinkParams,
    /// Sunlight from straight above, W/cm².
    #[serde(default = "default_sun")]
    pub sun_irradiance: f64,
    /// Irradiance of the global command LED on an upward face, W/cm².
    #[serde(default = "default_global")]
    pub global_light_irradiance: f64,
    /// Harvest below which an FSM stops clocking, W.
    #[serde(default = "default_resting")]
    pub resting_power: f64,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub schedule: Vec<Action>,
}

fn default_physics_dt() -> f64 {
    1e-3
}
fn default_substeps() -> u32 {
    10
}
fn default_decimation() -> u64 {
    100
}
fn default_sun() -> f64 {
    0.1
}
fn default_global() -> f64 {
    1e-4
}
fn default_resting() -> f64 {
    2e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    /// Horizontal position (x, y), m.
    pub position: [f64; 2],
    #[serde(default = "default_site")]
    pub site: Site,
    /// Height for bodies placed in open water, m.
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default, with = "program_text")]
    pub program: Option<LabletProgram>,
    #[serde(default = "default_rate")]
    pub decoder_rate_hz: f64,
    #[serde(default)]
    pub tx_rate_hz: Option<f64>,
    #[serde(default = "default_clock")]
    pub clock_hz: [f64; 2],
    #[serde(default)]
    pub tethered: bool,
    #[serde(default)]
    pub gas_nl: f64,
    #[serde(default)]
    pub faces: BTreeMap<Face, FacePattern>,
    #[serde(default = "default_opd_faces")]
    pub opd_faces: [Face; 2],
    #[serde(default = "default_green")]
    pub green_face: Face,
    #[serde(default = "default_red")]
    pub red_face: Face,
}

fn default_site() -> Site {
    Site::Floor
}
fn default_rate() -> f64 {
    200.0
}
fn default_clock() -> [f64; 2] {
    [20.0, 400.0]
}
fn default_opd_faces() -> [Face; 2] {
    [Face::PosZ, Face::PosX]
}
fn default_green() -> Face {
    Face::NegX
}
fn default_red() -> Face {
    Face::PosY
}

mod program_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::fsm::LabletProgram;

    pub fn serialize<S: Serializer>(p: &Option<LabletProgram>, s: S) -> Result<S::Ok, S::Error> {
        match p {
            Some(p) => s.serialize_some(&p.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<LabletProgram>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

impl AgentSpec {
    pub fn new(id: u32, x: f64, y: f64) -> Self {
        AgentSpec {
            id,
            name: String::new(),
            position: [x, y],
            site: Site::Floor,
            z: None,
            program: None,
            decoder_rate_hz: default_rate(),
            tx_rate_hz: None,
            clock_hz: default_clock(),
            tethered: false,
            gas_nl: 0.0,
            faces: BTreeMap::new(),
            opd_faces: default_opd_faces(),
            green_face: default_green(),
            red_face: default_red(),
        }
    }

    pub fn face(&self, f: Face) -> FacePattern {
        self.faces.get(&f).copied().unwrap_or_else(|| FacePattern::uniform(false))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// Modulated top light seen by every upward-facing detector.
    GlobalLight {
        t_s: f64,
        rate_hz: f64,
        payload: String,
        #[serde(default)]
        duration_s: Option<f64>,
    },
    /// Frame put on one agent's green transmitter by its external driver.
    Emit {
        t_s: f64,
        agent: u32,
        payload: String,
        #[serde(default)]
        rate_hz: Option<f64>,
    },
    /// Wired serial program load.
    Program { t_s: f64, agent: u32, bits: String },
}

impl Action {
    pub fn time(&self) -> f64 {
        match self {
            Action::GlobalLight { t_s, .. } | Action::Emit { t_s, .. } | Action::Program { t_s, .. } => *t_s,
        }
    }
}

/// Parses a light payload: START/STOP/SEND, an 8-bit command word, 0xNN, or a
/// 58-bit program.
pub fn parse_payload(text: &str) -> Result<Frame, Error> {
    let t = text.trim();
    if let Ok(c) = t.parse::<Command>() {
        return Ok(Frame::Command { byte: c.byte() });
    }
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        let byte = u8::from_str_radix(hex, 16).map_err(|_| Error::Config(format!("bad command byte {t:?}")))?;
        return Ok(Frame::Command { byte });
    }
    let bits = parse_bit_string(t).map_err(|_| Error::Config(format!("bad payload {t:?}")))?;
    let word = bits.iter().fold(0u64, |w, &b| w << 1 | b as u64);
    match bits.len() {
        8 => Ok(Frame::Command { byte: word as u8 }),
        PROGRAM_BITS => Ok(Frame::Program { word }),
        n => Err(Error::Config(format!("payload of {n} bits is neither a command nor a program"))),
    }
}

pub fn check_rate(rate_hz: f64) -> Result<(), Error> {
    if !(1.0..=1000.0).contains(&rate_hz) {
        return Err(Error::Config(format!("rate {rate_hz} Hz outside 1..1000 Hz")));
    }
    Ok(())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        s.validate().map_err(|e| {
            let line = e.agent.and_then(|id| locate_agent(text, id));
            ScenarioError { line, column: None, message: e.message }
        })?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let fail = |agent, message: String| Err(ValidationError { agent, message });
        if !(self.physics_dt > 0.0) || self.comm_substeps == 0 {
            return fail(None, "physics_dt must be positive and comm_substeps at least 1".into());
        }
        let dt_ns = (self.physics_dt * 1e9).round() as u64;
        if !dt_ns.is_multiple_of(self.comm_substeps as u64) {
            return fail(None, "comm step must divide the physics step".into());
        }
        if self.decimation == 0 {
            return fail(None, "decimation must be at least 1".into());
        }
        if !(self.duration_s >= 0.0) {
            return fail(None, "duration_s must not be negative".into());
        }
        if self.tank.size.iter().any(|v| !(*v > 0.0)) {
            return fail(None, "tank size must be positive".into());
        }
        let mut ids: Vec<u32> = self.agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return fail(Some(w[0]), format!("duplicate agent id {}", w[0]));
        }
        for a in &self.agents {
            if let Err(e) = check_rate(a.decoder_rate_hz).and_then(|_| a.tx_rate_hz.map_or(Ok(()), check_rate)) {
                return fail(Some(a.id), e.to_string());
            }
            if a.clock_hz.iter().any(|c| !(*c > 0.0)) {
                return fail(Some(a.id), "clock rates must be positive".into());
            }
            if a.gas_nl < 0.0 {
                return fail(Some(a.id), "gas_nl must not be negative".into());
            }
        }
        for act in &self.schedule {
            let agent = match act {
                Action::GlobalLight { rate_hz, payload, .. } => {
                    if let Err(e) = check_rate(*rate_hz).and_then(|_| parse_payload(payload)) {
                        return fail(None, e.to_string());
                    }
                    None
                }
                Action::Emit { agent, payload, rate_hz, .. } => {
                    if let Err(e) = rate_hz.map_or(Ok(()), check_rate).and_then(|_| parse_payload(payload)) {
                        return fail(Some(*agent), e.to_string());
                    }
                    Some(*agent)
                }
                Action::Program { agent, bits, .. } => {
                    if let Err(e) = bits.parse::<LabletProgram>() {
                        return fail(Some(*agent), e.to_string());
                    }
                    Some(*agent)
                }
            };
            if let Some(id) = agent {
                if !self.agents.iter().any(|a| a.id == id) {
                    return fail(None, format!("schedule refers to unknown agent {id}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub agent: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

fn locate_agent(text: &str, id: u32) -> Option<usize> {
    let needle = format!("\"id\": {id}");
    let compact = format!("\"id\":{id}");
    text.lines().position(|l| {
        let l = l.trim_end_matches([',', ' ']);
        l.ends_with(&needle) || l.ends_with(&compact) || l.contains(&format!("{needle},")) || l.contains(&format!("{compact},"))
    })
    .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payloads() {
        assert_eq!(parse_payload("START").unwrap(), Frame::Command { byte: 0xA5 });
        assert_eq!(parse_payload("0x00").unwrap(), Frame::Command { byte: 0 });
        assert_eq!(parse_payload("01011010").unwrap(), Frame::Command { byte: 0x5A });
        assert!(matches!(parse_payload(&"0".repeat(58)).unwrap(), Frame::Program { word: 0 }));
        assert!(parse_payload("1010").is_err());
    }

    #[test]
    fn malformed_reports_line() {
        let text = "{\n  \"duration_s\": 1.0,\n  \"agents\": [ {\"id\": 1, \"position\": [0.01]} ]\n}";
        let err = Scenario::from_json(text).unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn duplicate_ids_located() {
        let text = "{\n\"agents\": [\n{\"id\": 4, \"position\": [0.01, 0.01]},\n{\"id\": 4, \"position\": [0.02, 0.01]}\n]\n}";
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.message.contains("duplicate"));
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn rate_range() {
        assert!(check_rate(0.5).is_err());
        assert!(check_rate(1000.0).is_ok());
        assert!(check_rate(1000.5).is_err());
    }
}
