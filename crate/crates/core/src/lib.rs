//! Simulator of smartlet micro-robot cubes: the lablet state machine, optical
//! codecs, solar harvesting, buoyancy locomotion and capillary docking.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod aquatics;
pub mod codecs;
pub mod engine;
pub mod error;
pub mod fsm;
pub mod photonics;

pub use error::Error;
