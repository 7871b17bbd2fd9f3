//! Solar harvesting and the optical communication channel.

pub mod dome;
pub mod link;
pub mod solar;

pub use dome::{DomeMode, DomePoint};
pub use link::{Emitter, OpticalLinkParams, Receiver};
pub use solar::{angular_factor, pce, CellKind, LightSource, MismatchRule, SeriesString, SolarCellSpec, SourceKind, StringOutput};
