use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::agent::AgentSnapshot;
use super::events::{Event, EventKind};
use super::scenario::Scenario;
use super::world::{StateRecord, World, WorldCommand};
use crate::Error;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header { v: u32, seed: u64, scenario: Box<Scenario> },
    State { tick: u64, agents: Vec<AgentSnapshot> },
    Event(Event),
}

impl From<StateRecord> for TraceRecord {
    fn from(s: StateRecord) -> Self {
        TraceRecord::State { tick: s.tick, agents: s.agents }
    }
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn write(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Passes bytes through while computing their SHA-256.
pub struct HashingWriter<W: Write> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        HashingWriter { inner, hash: Sha256::new() }
    }

    pub fn hex_digest(&self) -> String {
        self.hash.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, Error> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Config(format!("trace line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Steps a world and streams its records. Shared by batch runs, the service
/// and replay.
pub struct Simulation {
    pub world: World,
    decimation: u64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, Error> {
        Ok(Simulation { world: World::new(scenario)?, decimation: scenario.decimation })
    }

    pub fn header(&self) -> TraceRecord {
        let s = &self.world.scenario;
        TraceRecord::Header { v: TRACE_VERSION, seed: s.seed, scenario: Box::new(s.clone()) }
    }

    pub fn done(&self) -> bool {
        self.world.tick >= self.world.total_ticks()
    }

    /// Records due at the current tick before stepping: the state snapshot on
    /// decimation boundaries.
    fn state_due(&self) -> Option<TraceRecord> {
        let w = &self.world;
        (!w.agents.is_empty() && w.tick.is_multiple_of(self.decimation)).then(|| w.snapshot().into())
    }

    /// Advances one tick, returning the records it produced in order.
    pub fn step(&mut self) -> Vec<TraceRecord> {
        let mut out: Vec<TraceRecord> = self.state_due().into_iter().collect();
        self.world.step();
        out.extend(self.world.drain_events().into_iter().map(TraceRecord::Event));
        out
    }

    /// Applies an external command, returning the records it produced.
    pub fn apply(&mut self, cmd: &WorldCommand) -> Result<Vec<TraceRecord>, Error> {
        let r = self.world.apply(cmd);
        let events: Vec<TraceRecord> = self.world.drain_events().into_iter().map(TraceRecord::Event).collect();
        r.map(|_| events)
    }

    /// Final snapshot once the run is over.
    pub fn finish(&self) -> Option<TraceRecord> {
        (!self.world.agents.is_empty()).then(|| self.world.snapshot().into())
    }
}

pub fn run<W: Write>(scenario: &Scenario, writer: &mut TraceWriter<W>) -> Result<Vec<Event>, RunError> {
    let mut sim = Simulation::new(scenario)?;
    writer.write(&sim.header())?;
    let mut events = Vec::new();
    while !sim.done() {
        for rec in sim.step() {
            writer.write(&rec)?;
            if let TraceRecord::Event(e) = rec {
                events.push(e);
            }
        }
    }
    if let Some(rec) = sim.finish() {
        writer.write(&rec)?;
    }
    writer.flush()?;
    Ok(events)
}

/// Re-runs a recorded session from its header, re-applying console commands
/// at the ticks they were logged. Stops at the last recorded tick, or at the
/// scenario duration when the trace holds nothing but its header.
pub fn replay<W: Write>(records: &[TraceRecord], writer: &mut TraceWriter<W>) -> Result<(), RunError> {
    let Some(TraceRecord::Header { scenario, .. }) = records.first() else {
        return Err(RunError::Sim(Error::Config("trace has no header".into())));
    };
    let mut commands: Vec<(u64, WorldCommand)> = Vec::new();
    for r in records {
        if let TraceRecord::Event(Event { tick, kind: EventKind::CommandApplied { command } }) = r {
            let cmd = serde_json::from_value(command.clone()).map_err(|e| Error::Config(e.to_string()))?;
            commands.push((*tick, cmd));
        }
    }
    let last_tick = records
        .iter()
        .filter_map(|r| match r {
            TraceRecord::State { tick, .. } => Some(*tick),
            TraceRecord::Event(e) => Some(e.tick),
            TraceRecord::Header { .. } => None,
        })
        .max();
    let mut sim = Simulation::new(scenario)?;
    writer.write(&sim.header())?;
    let mut next = 0;
    let stop = last_tick.unwrap_or_else(|| sim.world.total_ticks());
    loop {
        while next < commands.len() && commands[next].0 == sim.world.tick {
            for rec in sim.apply(&commands[next].1)? {
                writer.write(&rec)?;
            }
            next += 1;
        }
        if sim.world.tick >= stop {
            break;
        }
        for rec in sim.step() {
            writer.write(&rec)?;
        }
    }
    if let Some(rec) = sim.finish() {
        writer.write(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] Error),
    #[error("trace output: {0}")]
    Io(#[from] std::io::Error),
}
