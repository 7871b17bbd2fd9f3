use std::collections::VecDeque;

use nalgebra::{Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::EventKind;
use super::scenario::{AgentSpec, Scenario};
use crate::aquatics::{Face, FacePattern, Site, SmartletBody};
use crate::codecs::frame::encode_frame_at;
use crate::codecs::{Frame, ManchesterParams, PulseTrain, StreamReceiver};
use crate::fsm::{FsmState, Level, Mode};
use crate::photonics::solar::sun_from_above;
use crate::photonics::{SeriesString, StringOutput};

/// Frames queued back to back on a line are separated by this many cells.
pub const FRAME_GAP_CELLS: u64 = 4;

/// Queue of absolutely timed waveforms driving one LED.
#[derive(Debug, Clone, Default)]
pub struct Transmitter {
    queue: VecDeque<PulseTrain>,
}

impl Transmitter {
    /// Queues `frame` to start at `now` or after whatever is already queued.
    pub fn send(&mut self, now: u64, frame: &Frame, params: &ManchesterParams) -> u64 {
        let start = self.queue.back().map_or(now, |t| (t.duration_ns() + FRAME_GAP_CELLS * params.cell_ns()).max(now));
        let train = encode_frame_at(start, frame, params);
        let end = train.duration_ns();
        self.queue.push_back(train);
        end
    }

    pub fn level(&mut self, t: u64) -> bool {
        while self.queue.front().is_some_and(|f| f.duration_ns() <= t) {
            self.queue.pop_front();
        }
        self.queue.front().is_some_and(|f| f.level_at(t).is_high())
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u32,
    pub name: String,
    pub body: SmartletBody,
    pub fsm: FsmState,
    pub decoder: StreamReceiver,
    pub tx_params: ManchesterParams,
    pub transmitter: Transmitter,
    pub clock_hz: [f64; 2],
    pub next_tick_ns: u64,
    pub string: SeriesString,
    pub harvest: StringOutput,
    pub faces: [FacePattern; 6],
    pub opd_faces: [Face; 2],
    pub green_face: Face,
    pub red_face: Face,
    /// Low-passed output voltage of each detector.
    pub opd_level: [f64; 2],
    pub opd_digital: [bool; 2],
    pub green: bool,
    pub red: bool,
    pub bge_on: bool,
    pub tethered: bool,
    pub frozen: bool,
    pub last_mode: Mode,
    pub rng: ChaCha8Rng,
}

impl Agent {
    pub fn from_spec(spec: &AgentSpec, scenario: &Scenario, seed: u64) -> Self {
        let mut body = SmartletBody::default();
        let tank = &scenario.tank;
        body.position = Vector3::new(spec.position[0], spec.position[1], 0.0);
        body.site = spec.site;
        body.position.z = match spec.site {
            Site::Floor => tank.floor_z(body.edge),
            Site::Surface => tank.surface_z(body.edge),
            Site::Water => spec.z.unwrap_or(tank.size[2] / 2.0),
        };
        body.gas_volume = spec.gas_nl * 1e-12;
        let fsm = spec.program.map(FsmState::with_program).unwrap_or_default();
        let string = SeriesString::folded();
        let harvest = string.power(&[sun_from_above(scenario.sun_irradiance)], &Rotation3::identity());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(spec.id as u64);
        let mut agent = Agent {
            id: spec.id,
            name: if spec.name.is_empty() { format!("S{}", spec.id) } else { spec.name.clone() },
            body,
            fsm,
            decoder: StreamReceiver::new(ManchesterParams::at_rate(spec.decoder_rate_hz)),
            tx_params: ManchesterParams::at_rate(spec.tx_rate_hz.unwrap_or(spec.decoder_rate_hz)),
            transmitter: Transmitter::default(),
            clock_hz: spec.clock_hz,
            next_tick_ns: 0,
            string,
            harvest,
            faces: Face::ALL.map(|f| spec.face(f)),
            opd_faces: spec.opd_faces,
            green_face: spec.green_face,
            red_face: spec.red_face,
            opd_level: [0.0; 2],
            opd_digital: [false; 2],
            green: false,
            red: false,
            bge_on: false,
            tethered: spec.tethered,
            frozen: false,
            last_mode: Mode::Idle,
            rng,
        };
        agent.frozen = !agent.tethered && agent.harvest.power < scenario.resting_power;
        agent.next_tick_ns = agent.clock_period_ns();
        agent
    }

    pub fn clock_period_ns(&self) -> u64 {
        let fast = self.fsm.program.is_some_and(|p| p.clock_fast);
        (1e9 / self.clock_hz[fast as usize]).round() as u64
    }

    pub fn face_point(&self, f: Face) -> Vector3<f64> {
        self.body.position + Vector3::from(f.normal()) * (self.body.edge / 2.0)
    }

    pub fn powered(&self) -> bool {
        self.tethered || !self.frozen
    }

    /// Electrolysis current available to the BGE.
    pub fn bge_current(&self) -> f64 {
        if !self.bge_on || self.tethered || self.frozen || self.harvest.v_out < 1.8 {
            return 0.0;
        }
        (self.harvest.power / 2.1).min(7e-6)
    }

    /// Mirrors FSM outputs onto LEDs and the BGE; reports changes.
    pub fn sync_outputs(&mut self, now: u64, events: &mut Vec<EventKind>) {
        let mode = self.fsm.mode;
        if mode != self.last_mode {
            events.push(EventKind::ModeChanged { agent: self.id, from: self.last_mode, to: mode });
            if mode == Mode::Sending {
                let frame = Frame::Program { word: self.fsm.register };
                self.transmitter.send(now, &frame, &self.tx_params);
            }
            self.last_mode = mode;
        }
        let bge = self.fsm.actuators[2] == Level::High;
        if bge != self.bge_on {
            self.bge_on = bge;
            events.push(if bge { EventKind::BgeOn { agent: self.id } } else { EventKind::BgeOff { agent: self.id } });
        }
        self.red = self.fsm.actuators[0] == Level::High;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leds {
    pub g: bool,
    pub r: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: u32,
    pub pos: [f64; 3],
    pub gas_nl: f64,
    pub site: Site,
    pub mode: Mode,
    pub phase: u8,
    pub leds: Leds,
    pub bge: bool,
    pub bonds: Vec<u32>,
}

impl Agent {
    pub fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            id: self.id,
            pos: self.body.position.into(),
            gas_nl: self.body.gas_volume * 1e12,
            site: self.body.site,
            mode: self.fsm.mode,
            phase: self.fsm.phase,
            leds: Leds { g: self.green, r: self.red },
            bge: self.bge_on,
            bonds: self.body.bonds.iter().map(|b| b.peer).collect(),
        }
    }
}
