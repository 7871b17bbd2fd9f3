use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pulse::{Line, PulseTrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// '1' is Low then High (rising mid-bit edge).
    RisingIsOne,
    FallingIsOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManchesterParams {
    pub bit_rate_hz: f64,
    pub convention: Convention,
    pub tolerance: f64,
    pub preamble_bits: usize,
}

impl Default for ManchesterParams {
    fn default() -> Self {
        ManchesterParams { bit_rate_hz: 200.0, convention: Convention::RisingIsOne, tolerance: 0.25, preamble_bits: 8 }
    }
}

impl ManchesterParams {
    pub fn at_rate(bit_rate_hz: f64) -> Self {
        ManchesterParams { bit_rate_hz, ..Default::default() }
    }

    pub fn half_cell_ns(&self) -> u64 {
        (5e8 / self.bit_rate_hz).round() as u64
    }

    pub fn cell_ns(&self) -> u64 {
        2 * self.half_cell_ns()
    }

    fn one_rises(&self) -> bool {
        self.convention == Convention::RisingIsOne
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("no lock on preamble")]
    NoLock,
    #[error("frame aborted after {} bits", bits.len())]
    FrameAbort { bits: Vec<bool> },
}

pub fn preamble(n: usize) -> impl Iterator<Item = bool> {
    (0..n).map(|i| i % 2 == 0)
}

pub fn encode(bits: &[bool], params: &ManchesterParams) -> PulseTrain {
    encode_at(0, bits, params)
}

pub fn encode_at(t0: u64, bits: &[bool], params: &ManchesterParams) -> PulseTrain {
    let half = params.half_cell_ns();
    let rises = params.one_rises();
    let all = preamble(params.preamble_bits).chain(bits.iter().copied());
    let segs = all.flat_map(move |b| {
        let first = Line::from_bool(b != rises);
        [(first, half), (first.toggled(), half)]
    });
    PulseTrain::from_segments(t0, segs).end_low()
}

/// Transitions as (time, rising). Edge 0 counts only if it rises from the
/// implicit Low before the train.
fn transitions(train: &PulseTrain) -> Vec<(f64, bool)> {
    train
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, e)| *i > 0 || e.level == Line::High)
        .map(|(_, e)| (e.t_ns as f64, e.level == Line::High))
        .collect()
}

pub fn decode(train: &PulseTrain, params: &ManchesterParams) -> Result<Vec<bool>, DecodeError> {
    let tr = transitions(train);
    let nominal = 1e9 / params.bit_rate_hz;
    let tol = params.tolerance;
    let rises = params.one_rises();
    let bit_of = |rising: bool| rising == rises;

    let (mut last_mid, period, mut idx) = if params.preamble_bits == 0 {
        let t0 = train.edges().first().map_or(0.0, |e| e.t_ns as f64);
        (t0 - nominal / 2.0, nominal, 0)
    } else {
        let p = params.preamble_bits;
        let mut start = 0;
        if tr.first().is_some_and(|&(_, r)| !bit_of(r)) {
            start = 1;
        }
        if tr.len() < start + p {
            return Err(DecodeError::NoLock);
        }
        let pre = &tr[start..start + p];
        for (i, &(_, r)) in pre.iter().enumerate() {
            if bit_of(r) != (i % 2 == 0) {
                return Err(DecodeError::NoLock);
            }
        }
        let period = if p > 1 { (pre[p - 1].0 - pre[0].0) / (p - 1) as f64 } else { nominal };
        if (period - nominal).abs() > tol * nominal {
            return Err(DecodeError::NoLock);
        }
        for w in pre.windows(2) {
            if ((w[1].0 - w[0].0) - period).abs() >= tol * period {
                return Err(DecodeError::NoLock);
            }
        }
        (pre[p - 1].0, period, start + p)
    };

    let mut bits = Vec::new();
    while idx < tr.len() {
        let (t, rising) = tr[idx];
        let dt = t - last_mid;
        if (dt - period).abs() < tol * period {
            bits.push(bit_of(rising));
            last_mid = t;
            idx += 1;
        } else if (dt - period / 2.0).abs() < tol * period {
            let Some(&(t2, r2)) = tr.get(idx + 1) else {
                break;
            };
            if ((t2 - t) - period / 2.0).abs() < tol * period && r2 != rising {
                bits.push(bit_of(r2));
                last_mid = t2;
                idx += 2;
            } else {
                return Err(DecodeError::FrameAbort { bits });
            }
        } else {
            return Err(DecodeError::FrameAbort { bits });
        }
    }
    Ok(bits)
}
