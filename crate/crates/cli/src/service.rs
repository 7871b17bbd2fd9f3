//! Live simulation served to operator consoles over WebSocket.
//!
//! One engine thread owns the world. Connections push parsed requests into a
//! single ordered queue; the engine applies them between ticks and fans its
//! output out through a broadcast channel.

use std::io::Write;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use smartlet::engine::{Scenario, Simulation, TraceRecord, TraceWriter};
use tokio::sync::{broadcast, mpsc as tmpsc};

use crate::protocol::{self, ControlAction, Inbound, Reply, Request};

/// Minimum wall-clock spacing of broadcast state snapshots.
pub const SNAPSHOT_INTERVAL: Duration = Duration::from_nanos(1_000_000_000 / 30);
/// Longest run of ticks executed before the queue is checked again.
const TICK_BATCH: u64 = 50;
const MAX_STEP_COUNT: u64 = 10_000;

type Outbox = tmpsc::UnboundedSender<String>;

enum EngineMsg {
    Hello(Outbox),
    Request(Request, Outbox),
    Shutdown,
}

pub struct Service {
    tx: mpsc::Sender<EngineMsg>,
    out: broadcast::Sender<Arc<str>>,
    engine: Option<JoinHandle<std::io::Result<()>>>,
}

#[derive(Clone)]
struct AppState {
    tx: mpsc::Sender<EngineMsg>,
    out: broadcast::Sender<Arc<str>>,
}

impl Service {
    /// Starts the engine thread with `scenario` loaded and paused.
    pub fn start(scenario: Scenario, trace: Option<Box<dyn Write + Send>>) -> Result<Self, smartlet::Error> {
        let sim = Simulation::new(&scenario)?;
        let (tx, rx) = mpsc::channel();
        let (out, _) = broadcast::channel(4096);
        let engine = Engine::new(scenario, sim, trace, out.clone());
        let handle = std::thread::Builder::new().name("engine".into()).spawn(move || engine.run(rx)).expect("spawn engine thread");
        Ok(Service { tx, out, engine: Some(handle) })
    }

    pub fn router(&self) -> Router {
        Router::new().route("/", get(upgrade)).route("/ws", get(upgrade)).with_state(AppState { tx: self.tx.clone(), out: self.out.clone() })
    }

    /// Stops the engine, closing the trace with a final snapshot.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        let _ = self.tx.send(EngineMsg::Shutdown);
        match self.engine.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(std::io::Error::other("engine thread panicked")),
            None => Ok(()),
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        if let Some(h) = self.engine.take() {
            let _ = self.tx.send(EngineMsg::Shutdown);
            let _ = h.join();
        }
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let (direct, mut inbox) = tmpsc::unbounded_channel::<String>();
    let mut feed = state.out.subscribe();
    if state.tx.send(EngineMsg::Hello(direct.clone())).is_err() {
        return;
    }
    loop {
        let text: String = tokio::select! {
            biased;
            Some(m) = inbox.recv() => m,
            r = feed.recv() => match r {
                Ok(m) => m.to_string(),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            m = stream.next() => {
                match m {
                    Some(Ok(Message::Text(t))) => match protocol::parse(t.as_str()) {
                        Ok(req) => {
                            if state.tx.send(EngineMsg::Request(req, direct.clone())).is_err() {
                                break;
                            }
                        }
                        Err(e) => {
                            let _ = direct.send(Reply::from(e).to_json());
                        }
                    },
                    Some(Ok(Message::Binary(_))) => {
                        let _ = direct.send(Reply::Error { msg: "binary frames are not supported".into(), reference: None }.to_json());
                    }
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                    Some(Ok(_)) => {}
                }
                continue;
            }
        };
        if sink.send(Message::Text(text.into())).await.is_err() {
            break;
        }
    }
}

fn record_json(rec: &TraceRecord) -> String {
    serde_json::to_string(rec).expect("records serialize")
}

struct Engine {
    scenario: Scenario,
    sim: Simulation,
    trace: Option<TraceWriter<Box<dyn Write + Send>>>,
    out: broadcast::Sender<Arc<str>>,
    paused: bool,
    speed: f64,
    anchor: (Instant, u64),
    last_snapshot: Option<Instant>,
}

impl Engine {
    fn new(scenario: Scenario, sim: Simulation, trace: Option<Box<dyn Write + Send>>, out: broadcast::Sender<Arc<str>>) -> Self {
        let mut e = Engine {
            scenario,
            sim,
            trace: trace.map(TraceWriter::new),
            out,
            paused: true,
            speed: 1.0,
            anchor: (Instant::now(), 0),
            last_snapshot: None,
        };
        let header = e.sim.header();
        e.record(&header);
        e
    }

    fn run(mut self, rx: mpsc::Receiver<EngineMsg>) -> std::io::Result<()> {
        loop {
            let msg = if self.paused {
                match rx.recv() {
                    Ok(m) => Some(m),
                    Err(_) => break,
                }
            } else {
                match rx.recv_timeout(self.until_next_tick()) {
                    Ok(m) => Some(m),
                    Err(mpsc::RecvTimeoutError::Timeout) => None,
                    Err(mpsc::RecvTimeoutError::Disconnected) => break,
                }
            };
            match msg {
                Some(EngineMsg::Shutdown) => break,
                Some(EngineMsg::Hello(reply)) => {
                    let _ = reply.send(record_json(&self.sim.world.snapshot().into()));
                }
                Some(EngineMsg::Request(req, reply)) => {
                    let r = self.handle(req);
                    let _ = reply.send(r.to_json());
                }
                None => self.advance_realtime(),
            }
        }
        self.close()
    }

    fn close(&mut self) -> std::io::Result<()> {
        if let Some(rec) = self.sim.finish() {
            self.record(&rec);
        }
        match self.trace.as_mut() {
            Some(t) => t.flush(),
            None => Ok(()),
        }
    }

    fn tick_ns(&self) -> f64 {
        self.scenario.physics_dt * 1e9
    }

    fn due_tick(&self) -> u64 {
        let (t0, tick0) = self.anchor;
        tick0 + (t0.elapsed().as_nanos() as f64 * self.speed / self.tick_ns()) as u64
    }

    fn until_next_tick(&self) -> Duration {
        let (t0, tick0) = self.anchor;
        let next_ns = (self.sim.world.tick + 1 - tick0) as f64 * self.tick_ns() / self.speed;
        Duration::from_nanos(next_ns as u64).saturating_sub(t0.elapsed())
    }

    fn reanchor(&mut self) {
        self.anchor = (Instant::now(), self.sim.world.tick);
    }

    fn advance_realtime(&mut self) {
        let due = self.due_tick();
        let mut budget = TICK_BATCH;
        while self.sim.world.tick < due && budget > 0 {
            self.tick();
            budget -= 1;
            let w = &self.sim.world;
            if w.tick.is_multiple_of(self.scenario.decimation) && self.last_snapshot.is_none_or(|t| t.elapsed() >= SNAPSHOT_INTERVAL) {
                self.broadcast_snapshot();
            }
        }
        // Drop backlog that the engine cannot catch up on.
        let lag = self.due_tick().saturating_sub(self.sim.world.tick) as f64 * self.tick_ns();
        if lag > 1e9 {
            self.reanchor();
        }
    }

    fn tick(&mut self) {
        for rec in self.sim.step() {
            if let TraceRecord::Event(_) = rec {
                let _ = self.out.send(record_json(&rec).into());
            }
            self.record(&rec);
        }
    }

    fn broadcast_snapshot(&mut self) {
        if let Some(t) = self.last_snapshot {
            std::thread::sleep(SNAPSHOT_INTERVAL.saturating_sub(t.elapsed()));
        }
        let _ = self.out.send(record_json(&self.sim.world.snapshot().into()).into());
        self.last_snapshot = Some(Instant::now());
    }

    fn record(&mut self, rec: &TraceRecord) {
        if let Some(t) = self.trace.as_mut() {
            if let Err(e) = t.write(rec) {
                eprintln!("trace write failed, recording stopped: {e}");
                self.trace = None;
            }
        }
    }

    fn handle(&mut self, req: Request) -> Reply {
        let reference = req.reference.clone();
        let fail = |msg: String| Reply::Error { msg, reference: Some(reference.clone()) };
        match req.message {
            Inbound::Apply(cmd) => match self.sim.apply(&cmd) {
                Ok(records) => {
                    for rec in records {
                        let _ = self.out.send(record_json(&rec).into());
                        self.record(&rec);
                    }
                }
                Err(e) => return fail(e.to_string()),
            },
            Inbound::Control { action, value } => match action {
                ControlAction::Pause => self.paused = true,
                ControlAction::Resume => {
                    self.paused = false;
                    self.reanchor();
                }
                ControlAction::Step => {
                    let count = match value {
                        None | Some(Value::Null) => 1,
                        Some(v) => match v.as_u64() {
                            Some(n @ 1..=MAX_STEP_COUNT) => n,
                            _ => return fail(format!("step count must be an integer in 1..={MAX_STEP_COUNT}")),
                        },
                    };
                    self.paused = true;
                    for _ in 0..count {
                        for _ in 0..self.scenario.decimation {
                            self.tick();
                        }
                        self.broadcast_snapshot();
                    }
                }
                ControlAction::Reset => {
                    if let Some(rec) = self.sim.finish() {
                        self.record(&rec);
                    }
                    self.sim = Simulation::new(&self.scenario).expect("scenario validated at start");
                    let header = self.sim.header();
                    self.record(&header);
                    self.paused = true;
                    self.broadcast_snapshot();
                }
                ControlAction::Speed => match value.as_ref().and_then(Value::as_f64) {
                    Some(s) if s > 0.0 && s.is_finite() => {
                        self.speed = s;
                        self.reanchor();
                    }
                    _ => return fail("speed must be a positive number".into()),
                },
            },
        }
        Reply::Ack { reference }
    }
}
