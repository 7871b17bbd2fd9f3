//! Bit-exact waveform codecs.

pub mod frame;
pub mod manchester;
pub mod pulse;
pub mod receiver;
pub mod ws2812;

pub use frame::{decode_frame, encode_frame, Frame, FrameError};
pub use manchester::{Convention, DecodeError, ManchesterParams};
pub use pulse::{Edge, Line, PulseTrain};
pub use receiver::StreamReceiver;
pub use ws2812::{Ws2812Error, Ws2812Timing};
