pub mod agent;
pub mod events;
pub mod scenario;
pub mod trace;
pub mod world;

pub use agent::{Agent, AgentSnapshot, Leds};
pub use events::{Event, EventKind};
pub use scenario::{Action, AgentSpec, Scenario, ScenarioError};
pub use trace::{read_trace, HashingWriter, replay, run, RunError, Simulation, TraceRecord, TraceWriter};
pub use world::{StateRecord, World, WorldCommand};
