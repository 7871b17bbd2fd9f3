//! Optical frames: preamble, 2-bit frame type, payload.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::manchester::{self, DecodeError, ManchesterParams};
use super::pulse::PulseTrain;
use crate::fsm::{word_to_bits, LabletProgram, PROGRAM_BITS};

const TYPE_COMMAND: [bool; 2] = [false, false];
const TYPE_PROGRAM: [bool; 2] = [false, true];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum Frame {
    Command { byte: u8 },
    /// Raw register image; validated only when the receiving FSM latches it.
    Program { word: u64 },
}

impl Frame {
    pub fn program(p: &LabletProgram) -> Self {
        Frame::Program { word: p.to_word() }
    }

    pub fn bits(&self) -> Vec<bool> {
        match *self {
            Frame::Command { byte } => {
                let mut v = TYPE_COMMAND.to_vec();
                v.extend((0..8).map(|i| byte >> (7 - i) & 1 == 1));
                v
            }
            Frame::Program { word } => {
                let mut v = TYPE_PROGRAM.to_vec();
                v.extend(word_to_bits(word));
                v
            }
        }
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, FrameError> {
        if bits.len() < 2 {
            return Err(FrameError::Length(bits.len()));
        }
        let payload = &bits[2..];
        let fold = |b: &[bool]| b.iter().fold(0u64, |w, &x| w << 1 | x as u64);
        match [bits[0], bits[1]] {
            TYPE_COMMAND if payload.len() == 8 => Ok(Frame::Command { byte: fold(payload) as u8 }),
            TYPE_PROGRAM if payload.len() == PROGRAM_BITS => Ok(Frame::Program { word: fold(payload) }),
            TYPE_COMMAND | TYPE_PROGRAM => Err(FrameError::Length(bits.len())),
            _ => Err(FrameError::UnknownType),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("frame of {0} bits does not match its type")]
    Length(usize),
    #[error("unknown frame type")]
    UnknownType,
}

pub fn encode_frame(frame: &Frame, params: &ManchesterParams) -> PulseTrain {
    manchester::encode(&frame.bits(), params)
}

pub fn encode_frame_at(t0: u64, frame: &Frame, params: &ManchesterParams) -> PulseTrain {
    manchester::encode_at(t0, &frame.bits(), params)
}

pub fn decode_frame(train: &PulseTrain, params: &ManchesterParams) -> Result<Frame, FrameError> {
    Frame::from_bits(&manchester::decode(train, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::Command;

    #[test]
    fn command_frame_round_trip() {
        let p = ManchesterParams::at_rate(1000.0);
        let f = Frame::Command { byte: Command::STOP };
        assert_eq!(decode_frame(&encode_frame(&f, &p), &p), Ok(f));
    }

    #[test]
    fn program_frame_round_trip() {
        let p = ManchesterParams::at_rate(50.0);
        let f = Frame::Program { word: 0x2AB_CDEF_0123_4567 & ((1 << 58) - 1) };
        assert_eq!(decode_frame(&encode_frame(&f, &p), &p), Ok(f));
    }

    #[test]
    fn bad_lengths() {
        assert_eq!(Frame::from_bits(&[false, false, true]), Err(FrameError::Length(3)));
        assert_eq!(Frame::from_bits(&[true, true, false]), Err(FrameError::UnknownType));
    }
}
