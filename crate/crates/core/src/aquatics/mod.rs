//! Electrolysis, buoyancy-driven motion, capillary attraction and docking.

pub mod body;
pub mod capillary;
pub mod docking;
pub mod gas;

pub use body::{buoyancy_force, step_motion, Bond, MotionEvent, MotionInput, Site, SmartletBody, Tank, WaterParams, G};
pub use capillary::{capillary_force, capillary_pull};
pub use docking::{dock_score, Face, FacePattern, Offset};
pub use gas::gas_rate;
