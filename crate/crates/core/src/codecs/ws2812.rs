//! WS2812B single-wire NZR protocol with cascade (24 bits consumed per pixel).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pulse::{Line, PulseTrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ws2812Timing {
    pub t0h_ns: u64,
    pub t1h_ns: u64,
    pub t0l_ns: u64,
    pub t1l_ns: u64,
    pub reset_ns: u64,
    pub segment_tolerance_ns: u64,
    pub period_ns: u64,
    pub period_tolerance_ns: u64,
}

impl Default for Ws2812Timing {
    fn default() -> Self {
        Ws2812Timing {
            t0h_ns: 400,
            t1h_ns: 800,
            t0l_ns: 850,
            t1l_ns: 450,
            reset_ns: 50_000,
            segment_tolerance_ns: 150,
            period_ns: 1250,
            period_tolerance_ns: 600,
        }
    }
}

impl Ws2812Timing {
    fn within(&self, value: u64, nominal: u64) -> bool {
        value.abs_diff(nominal) <= self.segment_tolerance_ns
    }

    pub fn high_ns(&self, bit: bool) -> u64 {
        if bit {
            self.t1h_ns
        } else {
            self.t0h_ns
        }
    }

    pub fn low_ns(&self, bit: bool) -> u64 {
        if bit {
            self.t1l_ns
        } else {
            self.t0l_ns
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Ws2812Error {
    #[error("segment {index} of {len_ns} ns outside its timing window")]
    Segment { index: usize, len_ns: u64 },
    #[error("only {0} bits before reset")]
    FrameUnderrun(usize),
    #[error("{0} bits is not a whole number of pixels")]
    PartialPixel(usize),
}

/// Pixels are (G, R, B).
pub fn pixel_bits(pixels: &[[u8; 3]]) -> Vec<bool> {
    pixels.iter().flat_map(|p| p.iter().flat_map(|&byte| (0..8).map(move |i| byte >> (7 - i) & 1 == 1))).collect()
}

pub fn encode(pixels: &[[u8; 3]], timing: &Ws2812Timing) -> PulseTrain {
    encode_bits(&pixel_bits(pixels), timing)
}

pub fn encode_bits(bits: &[bool], timing: &Ws2812Timing) -> PulseTrain {
    if bits.is_empty() {
        return PulseTrain::empty();
    }
    let segs = bits.iter().flat_map(|&b| [(Line::High, timing.high_ns(b)), (Line::Low, timing.low_ns(b))]);
    PulseTrain::from_segments(0, segs).extend_low(timing.reset_ns)
}

/// Bits up to the first reset.
pub fn decode_bits(train: &PulseTrain, timing: &Ws2812Timing) -> Result<Vec<bool>, Ws2812Error> {
    let segs = train.segments();
    let mut bits = Vec::new();
    let mut i = segs.iter().position(|s| s.0 == Line::High).unwrap_or(segs.len());
    while i < segs.len() {
        let (_, high) = segs[i];
        let bit = if timing.within(high, timing.t1h_ns) {
            true
        } else if timing.within(high, timing.t0h_ns) {
            false
        } else {
            return Err(Ws2812Error::Segment { index: i, len_ns: high });
        };
        let low = segs.get(i + 1).map_or(0, |s| s.1);
        if low >= timing.reset_ns {
            bits.push(bit);
            break;
        }
        if !timing.within(low, timing.low_ns(bit)) {
            return Err(Ws2812Error::Segment { index: i + 1, len_ns: low });
        }
        if (high + low).abs_diff(timing.period_ns) > timing.period_tolerance_ns {
            return Err(Ws2812Error::Segment { index: i + 1, len_ns: low });
        }
        bits.push(bit);
        i += 2;
    }
    Ok(bits)
}

pub fn decode(train: &PulseTrain, timing: &Ws2812Timing) -> Result<Vec<[u8; 3]>, Ws2812Error> {
    let bits = decode_bits(train, timing)?;
    if bits.len() % 24 != 0 {
        return Err(Ws2812Error::PartialPixel(bits.len()));
    }
    Ok(bits
        .chunks(24)
        .map(|c| {
            let byte = |k: usize| c[8 * k..8 * k + 8].iter().fold(0u8, |a, &b| a << 1 | b as u8);
            [byte(0), byte(1), byte(2)]
        })
        .collect())
}

/// One pixel stage: latches the first 24 bits as a 0xGGRRBB word and re-emits
/// the remainder with nominal timing.
pub fn cascade(input: &PulseTrain, timing: &Ws2812Timing) -> Result<(u32, PulseTrain), Ws2812Error> {
    let bits = decode_bits(input, timing)?;
    if bits.len() < 24 {
        return Err(Ws2812Error::FrameUnderrun(bits.len()));
    }
    let word = bits[..24].iter().fold(0u32, |a, &b| a << 1 | b as u32);
    Ok((word, encode_bits(&bits[24..], timing)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_pixel_layout() {
        let t = encode(&[[255, 0, 0]], &Ws2812Timing::default());
        let segs = t.segments();
        for k in 0..8 {
            assert_eq!(segs[2 * k], (Line::High, 800));
            assert_eq!(segs[2 * k + 1], (Line::Low, 450));
        }
        for k in 8..23 {
            assert_eq!(segs[2 * k], (Line::High, 400));
            assert_eq!(segs[2 * k + 1], (Line::Low, 850));
        }
        assert_eq!(segs[47], (Line::Low, 850 + 50_000));
    }

    #[test]
    fn zero_pixel_length() {
        let timing = Ws2812Timing::default();
        let t = encode(&[[0, 0, 0]], &timing);
        assert_eq!(t.duration_ns(), 30_000 + timing.reset_ns);
    }

    #[test]
    fn out_of_window_high_rejected() {
        let timing = Ws2812Timing::default();
        let t = PulseTrain::from_segments(0, [(Line::High, 600), (Line::Low, 650)]).extend_low(60_000);
        assert!(matches!(decode_bits(&t, &timing), Err(Ws2812Error::Segment { index: 0, .. })));
    }

    #[test]
    fn cascade_boundaries() {
        let timing = Ws2812Timing::default();
        let (w, fwd) = cascade(&encode(&[[1, 2, 3]], &timing), &timing).unwrap();
        assert_eq!(w, 0x010203);
        assert!(fwd.is_empty());
        let short = encode_bits(&[true; 23], &timing);
        assert_eq!(cascade(&short, &timing), Err(Ws2812Error::FrameUnderrun(23)));
    }
}
