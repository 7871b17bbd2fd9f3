use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentSnapshot, FRAME_GAP_CELLS};
use super::events::{Event, EventKind};
use super::scenario::{check_rate, parse_payload, Action, Scenario};
use crate::aquatics::{
    buoyancy_force, capillary_pull, dock_score, gas_rate, step_motion, Bond, Face, MotionEvent, MotionInput, Offset, Site,
};
use crate::codecs::frame::encode_frame_at;
use crate::codecs::{Frame, ManchesterParams, PulseTrain};
use crate::fsm::{CommandOutcome, LabletProgram, PROGRAM_BITS};
use crate::photonics::{Emitter, Receiver};
use crate::Error;

/// Agent count from which per-tick force evaluation runs on the rayon pool.
pub const PARALLEL_THRESHOLD: usize = 16;

/// A command arriving from outside the scenario (console or script). Applied
/// at tick boundaries and logged so the session can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WorldCommand {
    Command {
        kind: String,
        rate_hz: f64,
        payload: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent: Option<u32>,
    },
    Program { agent: u32, bits: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub tick: u64,
    pub agents: Vec<AgentSnapshot>,
}

pub struct World {
    pub scenario: Scenario,
    pub tick: u64,
    pub agents: Vec<Agent>,
    dt_ns: u64,
    sub_ns: u64,
    global: Vec<PulseTrain>,
    schedule: Vec<Action>,
    cursor: usize,
    pending: Vec<Event>,
    lit: bool,
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self, Error> {
        scenario.validate().map_err(|e| Error::Config(e.message))?;
        let mut agents: Vec<Agent> = scenario.agents.iter().map(|s| Agent::from_spec(s, scenario, scenario.seed)).collect();
        agents.sort_by_key(|a| a.id);
        let mut schedule = scenario.schedule.clone();
        schedule.sort_by(|a, b| a.time().total_cmp(&b.time()));
        let dt_ns = (scenario.physics_dt * 1e9).round() as u64;
        Ok(World {
            scenario: scenario.clone(),
            tick: 0,
            agents,
            dt_ns,
            sub_ns: dt_ns / scenario.comm_substeps as u64,
            global: Vec::new(),
            schedule,
            cursor: 0,
            pending: Vec::new(),
            lit: false,
        })
    }

    pub fn time_ns(&self) -> u64 {
        self.tick * self.dt_ns
    }

    pub fn time_s(&self) -> f64 {
        self.time_ns() as f64 * 1e-9
    }

    pub fn total_ticks(&self) -> u64 {
        (self.scenario.duration_s / self.scenario.physics_dt).round() as u64
    }

    pub fn agent(&self, id: u32) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    fn index_of(&self, id: u32) -> Result<usize, Error> {
        self.agents.iter().position(|a| a.id == id).ok_or_else(|| Error::Config(format!("no agent {id}")))
    }

    pub fn snapshot(&self) -> StateRecord {
        StateRecord { tick: self.tick, agents: self.agents.iter().map(Agent::snapshot).collect() }
    }

    /// Events produced since the last call.
    pub fn drain_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.pending)
    }

    fn push(&mut self, kind: EventKind) {
        self.pending.push(Event { tick: self.tick, kind });
    }

    /// Adds the top command light. A zero duration is a no-op; no duration
    /// means a single frame.
    pub fn inject_global_light(&mut self, payload: &str, rate_hz: f64, duration_s: Option<f64>) -> Result<u32, Error> {
        check_rate(rate_hz)?;
        let frame = parse_payload(payload)?;
        if duration_s == Some(0.0) {
            return Ok(0);
        }
        if duration_s.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Config("duration must be positive".into()));
        }
        let params = ManchesterParams::at_rate(rate_hz);
        let mut start = self.global.last().map_or(0, |t| t.duration_ns() + FRAME_GAP_CELLS * params.cell_ns());
        start = start.max(self.time_ns());
        let first = encode_frame_at(start, &frame, &params);
        let span = first.duration_ns() - start + FRAME_GAP_CELLS * params.cell_ns();
        let frames = match duration_s {
            None => 1,
            Some(d) => (((d * 1e9).round() as u64 + FRAME_GAP_CELLS * params.cell_ns()) / span).max(1),
        };
        for k in 0..frames {
            self.global.push(encode_frame_at(start + k * span, &frame, &params));
        }
        self.push(EventKind::LightInjected { rate_hz, payload: payload.to_string(), frames: frames as u32 });
        Ok(frames as u32)
    }

    /// Wired serial load of a 58-bit program into one agent.
    pub fn load_program(&mut self, id: u32, bits: &str) -> Result<(), Error> {
        let program: LabletProgram = bits.parse()?;
        let idx = self.index_of(id)?;
        let now = self.time_ns();
        let mut events = Vec::new();
        let result = deliver_program(&mut self.agents[idx], program.to_word(), now, &mut events);
        for e in events {
            self.push(e);
        }
        result
    }

    pub fn emit(&mut self, id: u32, payload: &str, rate_hz: Option<f64>) -> Result<(), Error> {
        let frame = parse_payload(payload)?;
        let idx = self.index_of(id)?;
        let now = self.time_ns();
        let agent = &mut self.agents[idx];
        let params = match rate_hz {
            Some(r) => {
                check_rate(r)?;
                ManchesterParams::at_rate(r)
            }
            None => agent.tx_params,
        };
        agent.transmitter.send(now, &frame, &params);
        self.push(EventKind::Emitted { agent: id, payload: payload.to_string(), rate_hz: params.bit_rate_hz });
        Ok(())
    }

    pub fn apply(&mut self, cmd: &WorldCommand) -> Result<(), Error> {
        match cmd {
            WorldCommand::Command { kind, rate_hz, payload, duration_s, agent } => match kind.as_str() {
                "global_light" => self.inject_global_light(payload, *rate_hz, *duration_s).map(|_| ()),
                "emit" => {
                    let id = agent.ok_or_else(|| Error::Config("emit needs an agent".into()))?;
                    self.emit(id, payload, Some(*rate_hz))
                }
                other => Err(Error::Config(format!("unknown command kind {other:?}"))),
            },
            WorldCommand::Program { agent, bits } => self.load_program(*agent, bits),
        }?;
        let value = serde_json::to_value(cmd).expect("commands serialize");
        self.push(EventKind::CommandApplied { command: value });
        Ok(())
    }

    fn run_schedule(&mut self) {
        let now = self.time_ns();
        while self.cursor < self.schedule.len() {
            let act = self.schedule[self.cursor].clone();
            if (act.time() * 1e9).round() as u64 > now {
                break;
            }
            self.cursor += 1;
            let r = match &act {
                Action::GlobalLight { rate_hz, payload, duration_s, .. } => {
                    self.inject_global_light(payload, *rate_hz, *duration_s).map(|_| ())
                }
                Action::Emit { agent, payload, rate_hz, .. } => self.emit(*agent, payload, *rate_hz),
                Action::Program { agent, bits, .. } => self.load_program(*agent, bits),
            };
            if let Err(e) = r {
                let agent = match act {
                    Action::Emit { agent, .. } | Action::Program { agent, .. } => agent,
                    Action::GlobalLight { .. } => 0,
                };
                self.push(EventKind::ProtocolViolation { agent, detail: e.to_string() });
            }
        }
    }

    fn global_high(&mut self, t: u64) -> bool {
        while self.global.first().is_some_and(|f| f.duration_ns() <= t) {
            self.global.remove(0);
        }
        self.global.first().is_some_and(|f| f.level_at(t).is_high())
    }

    /// One physics tick with its communication sub-steps.
    pub fn step(&mut self) {
        self.run_schedule();
        let t0 = self.time_ns();
        let mut events = Vec::new();
        for k in 0..self.scenario.comm_substeps as u64 {
            self.comm_substep(t0 + k * self.sub_ns, &mut events);
        }
        for e in events.drain(..) {
            self.push(e);
        }
        self.physics(&mut events);
        for e in events {
            self.push(e);
        }
        self.tick += 1;
    }

    fn comm_substep(&mut self, t: u64, events: &mut Vec<EventKind>) {
        let global = self.global_high(t);
        let mut any_green = false;
        for a in &mut self.agents {
            a.green = a.powered() && a.transmitter.level(t);
            any_green |= a.green;
        }
        let link = self.scenario.link;
        if global || any_green || self.lit {
            let alpha = link.filter_alpha(self.sub_ns as f64 * 1e-9);
            let e_global = self.scenario.global_light_irradiance;
            let emitters: Vec<(usize, Emitter)> = self
                .agents
                .iter()
                .enumerate()
                .filter(|(_, a)| a.green)
                .map(|(i, a)| (i, Emitter { position: a.face_point(a.green_face), normal: a.green_face.normal().into(), on: true }))
                .collect();
            let mut still_lit = false;
            for (i, a) in self.agents.iter_mut().enumerate() {
                for s in 0..2 {
                    let face = a.opd_faces[s];
                    let normal: Vector3<f64> = face.normal().into();
                    let rx = Receiver { position: a.face_point(face), normal };
                    let mut e = if global { e_global * normal.z.max(0.0) } else { 0.0 };
                    for (j, em) in &emitters {
                        if *j != i {
                            e += link.irradiance(em, &rx);
                        }
                    }
                    a.opd_level[s] += alpha * (link.voltage(e) - a.opd_level[s]);
                    if a.opd_level[s] < 1e-12 {
                        a.opd_level[s] = 0.0;
                    }
                    still_lit |= a.opd_level[s] > 0.0;
                    a.opd_digital[s] = link.digital(a.opd_level[s]);
                }
            }
            self.lit = still_lit;
        }
        for a in &mut self.agents {
            a.fsm.sensors = a.opd_digital;
            if !a.powered() {
                continue;
            }
            let din = a.opd_digital[0] || a.opd_digital[1];
            if let Some(result) = a.decoder.sample(t, din) {
                match result {
                    Ok(Frame::Command { byte }) => {
                        let outcome = match a.fsm.receive_command(byte) {
                            CommandOutcome::Applied(_) => "applied",
                            CommandOutcome::Ignored(_) => "ignored",
                            CommandOutcome::Unrecognized => "unrecognized",
                        };
                        events.push(EventKind::CommandReceived { agent: a.id, byte, outcome: outcome.into() });
                    }
                    Ok(Frame::Program { word }) => {
                        let _ = deliver_program(a, word, t, events);
                    }
                    Err(e) => events.push(EventKind::DecodeFailed { agent: a.id, reason: e.to_string() }),
                }
                a.sync_outputs(t, events);
            }
            while a.next_tick_ns <= t {
                a.fsm.tick();
                a.next_tick_ns += a.clock_period_ns();
                a.sync_outputs(t, events);
            }
        }
    }

    fn physics(&mut self, events: &mut Vec<EventKind>) {
        let dt = self.scenario.physics_dt;
        let water = self.scenario.water;
        let tank = self.scenario.tank;
        let lateral = |i: usize, agents: &[Agent]| -> Vector3<f64> {
            let a = &agents[i];
            if a.body.site != Site::Surface || !a.body.bonds.is_empty() {
                return Vector3::zeros();
            }
            agents
                .iter()
                .enumerate()
                .filter(|(j, b)| *j != i && b.body.site == Site::Surface)
                .map(|(_, b)| capillary_pull(&a.body.position, &b.body.position, (a.body.edge + b.body.edge) / 2.0, &water))
                .sum()
        };
        let n = self.agents.len();
        let forces: Vec<Vector3<f64>> = if n >= PARALLEL_THRESHOLD {
            (0..n).into_par_iter().map(|i| lateral(i, &self.agents)).collect()
        } else {
            (0..n).map(|i| lateral(i, &self.agents)).collect()
        };
        for (a, f) in self.agents.iter_mut().zip(forces) {
            let input = MotionInput {
                gas_rate: gas_rate(a.bge_current()).unwrap_or(0.0),
                lateral_force: f,
                bonded: !a.body.bonds.is_empty(),
                pinned: a.tethered,
            };
            if let Some(ev) = step_motion(&mut a.body, &input, &tank, &water, dt, &mut a.rng) {
                let agent = a.id;
                events.push(match ev {
                    MotionEvent::Levitate => EventKind::Levitate { agent },
                    MotionEvent::SurfaceReached => EventKind::SurfaceReached { agent },
                    MotionEvent::SinkStart => EventKind::SinkStart { agent },
                    MotionEvent::FloorReached => EventKind::FloorReached { agent },
                });
            }
        }
        self.separate();
        self.update_bonds(events);
    }

    /// Pushes overlapping cubes apart along their axis of least penetration.
    fn separate(&mut self) {
        let n = self.agents.len();
        for i in 0..n {
            for j in i + 1..n {
                let (left, right) = self.agents.split_at_mut(j);
                let (a, b) = (&mut left[i], &mut right[0]);
                let reach = (a.body.edge + b.body.edge) / 2.0;
                let d = b.body.position - a.body.position;
                let pen = Vector3::new(reach - d.x.abs(), reach - d.y.abs(), reach - d.z.abs());
                if pen.x <= 1e-12 || pen.y <= 1e-12 || pen.z <= 1e-12 {
                    continue;
                }
                let axis = if pen.x <= pen.y && pen.x <= pen.z {
                    0
                } else if pen.y <= pen.z {
                    1
                } else {
                    2
                };
                let sign = if d[axis] >= 0.0 { 1.0 } else { -1.0 };
                let (wa, wb) = match (a.tethered, b.tethered) {
                    (true, true) => continue,
                    (true, false) => (0.0, 1.0),
                    (false, true) => (1.0, 0.0),
                    (false, false) => (0.5, 0.5),
                };
                a.body.position[axis] -= sign * pen[axis] * wa;
                b.body.position[axis] += sign * pen[axis] * wb;
            }
        }
    }

    fn update_bonds(&mut self, events: &mut Vec<EventKind>) {
        let water = self.scenario.water;
        let n = self.agents.len();
        for i in 0..n {
            let mut k = 0;
            while k < self.agents[i].body.bonds.len() {
                let bond = self.agents[i].body.bonds[k];
                let j = self.agents.iter().position(|a| a.id == bond.peer).expect("bond peers exist");
                if j < i {
                    k += 1;
                    continue;
                }
                let down = |a: &Agent| (-buoyancy_force(&a.body, &water)).max(0.0);
                let pull = down(&self.agents[i]).max(down(&self.agents[j]));
                let apart = self.agents[i].body.site != Site::Surface || self.agents[j].body.site != Site::Surface;
                if pull > bond.strength || apart {
                    self.agents[i].body.bonds.remove(k);
                    let id_i = self.agents[i].id;
                    self.agents[j].body.bonds.retain(|b| b.peer != id_i);
                    events.push(EventKind::Undocked {
                        agents: [id_i, bond.peer],
                        faces: [bond.face, bond.peer_face],
                    });
                } else {
                    k += 1;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.agents[i], &self.agents[j]);
                if a.body.site != Site::Surface || b.body.site != Site::Surface || a.body.bonds.iter().any(|x| x.peer == b.id) {
                    continue;
                }
                let Some((fa, fb, offset)) = contact(a, b, water.capture_fraction) else {
                    continue;
                };
                let Some(score) = dock_score(&a.faces[fa.index()], &b.faces[fb.index()], offset) else {
                    continue;
                };
                if score < water.dock_threshold {
                    continue;
                }
                let strength = water.surface_bond_force * score as f64;
                let down = |x: &Agent| (-buoyancy_force(&x.body, &water)).max(0.0);
                if down(a).max(down(b)) > strength {
                    continue;
                }
                let (ida, idb) = (a.id, b.id);
                self.agents[i].body.bonds.push(Bond { peer: idb, face: fa, peer_face: fb, offset, score, strength });
                self.agents[j].body.bonds.push(Bond { peer: ida, face: fb, peer_face: fa, offset, score, strength });
                events.push(EventKind::Docked { agents: [ida, idb], faces: [fa, fb], offset, score });
            }
        }
    }
}

/// Facing pair and registration class of two floating cubes within capture range.
fn contact(a: &Agent, b: &Agent, capture: f64) -> Option<(Face, Face, Offset)> {
    let e = (a.body.edge + b.body.edge) / 2.0;
    let d = b.body.position - a.body.position;
    let (gap_axis, side) = if d.x.abs() >= d.y.abs() { (d.x, d.y) } else { (d.y, d.x) };
    if gap_axis.abs() - e >= capture * e {
        return None;
    }
    let lateral = side.abs().max(d.z.abs());
    let offset = if lateral < e / 4.0 {
        Offset::Full
    } else if lateral < 3.0 * e / 4.0 {
        if side.abs() >= d.z.abs() {
            Offset::HalfX
        } else {
            Offset::HalfY
        }
    } else {
        return None;
    };
    let fa = match (d.x.abs() >= d.y.abs(), gap_axis >= 0.0) {
        (true, true) => Face::PosX,
        (true, false) => Face::NegX,
        (false, true) => Face::PosY,
        (false, false) => Face::NegY,
    };
    Some((fa, fa.opposite(), offset))
}

fn deliver_program(agent: &mut Agent, word: u64, now: u64, events: &mut Vec<EventKind>) -> Result<(), Error> {
    for i in 0..PROGRAM_BITS {
        let bit = word >> (PROGRAM_BITS - 1 - i) & 1 == 1;
        match agent.fsm.load_bit(bit) {
            Err(e) => {
                events.push(EventKind::ProtocolViolation { agent: agent.id, detail: e.to_string() });
                agent.sync_outputs(now, events);
                return Err(e);
            }
            Ok(outcome) => match outcome.latched {
                Some(Ok(p)) => events.push(EventKind::ProgramLatched { agent: agent.id, bits: p.to_string() }),
                Some(Err(e)) => {
                    events.push(EventKind::ProtocolViolation { agent: agent.id, detail: e.to_string() });
                }
                None => {}
            },
        }
    }
    agent.sync_outputs(now, events);
    Ok(())
}
