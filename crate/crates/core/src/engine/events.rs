use serde::{Deserialize, Serialize};

use crate::aquatics::{Face, Offset};
use crate::fsm::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    BgeOn { agent: u32 },
    BgeOff { agent: u32 },
    Levitate { agent: u32 },
    SurfaceReached { agent: u32 },
    SinkStart { agent: u32 },
    FloorReached { agent: u32 },
    Docked { agents: [u32; 2], faces: [Face; 2], offset: Offset, score: i32 },
    Undocked { agents: [u32; 2], faces: [Face; 2] },
    ModeChanged { agent: u32, from: Mode, to: Mode },
    CommandReceived { agent: u32, byte: u8, outcome: String },
    ProgramLatched { agent: u32, bits: String },
    DecodeFailed { agent: u32, reason: String },
    ProtocolViolation { agent: u32, detail: String },
    LightInjected { rate_hz: f64, payload: String, frames: u32 },
    Emitted { agent: u32, payload: String, rate_hz: f64 },
    CommandApplied { command: serde_json::Value },
}

impl EventKind {
    pub fn agent(&self) -> Option<u32> {
        use EventKind::*;
        match self {
            BgeOn { agent }
            | BgeOff { agent }
            | Levitate { agent }
            | SurfaceReached { agent }
            | SinkStart { agent }
            | FloorReached { agent }
            | ModeChanged { agent, .. }
            | CommandReceived { agent, .. }
            | ProgramLatched { agent, .. }
            | DecodeFailed { agent, .. }
            | ProtocolViolation { agent, .. }
            | Emitted { agent, .. } => Some(*agent),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        use EventKind::*;
        match self {
            BgeOn { .. } => "bge_on",
            BgeOff { .. } => "bge_off",
            Levitate { .. } => "levitate",
            SurfaceReached { .. } => "surface_reached",
            SinkStart { .. } => "sink_start",
            FloorReached { .. } => "floor_reached",
            Docked { .. } => "docked",
            Undocked { .. } => "undocked",
            ModeChanged { .. } => "mode_changed",
            CommandReceived { .. } => "command_received",
            ProgramLatched { .. } => "program_latched",
            DecodeFailed { .. } => "decode_failed",
            ProtocolViolation { .. } => "protocol_violation",
            LightInjected { .. } => "light_injected",
            Emitted { .. } => "emitted",
            CommandApplied { .. } => "command_applied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}
