use proptest::prelude::*;
use smartlet::codecs::manchester::{self, Convention};
use smartlet::codecs::{decode_frame, encode_frame, ws2812, Frame, Line, ManchesterParams, PulseTrain, StreamReceiver, Ws2812Timing};

fn params(rate: f64, falling: bool) -> ManchesterParams {
    let mut p = ManchesterParams::at_rate(rate);
    if falling {
        p.convention = Convention::FallingIsOne;
    }
    p
}

fn frame() -> impl Strategy<Value = Frame> {
    prop_oneof![any::<u8>().prop_map(|byte| Frame::Command { byte }), (0u64..1 << 58).prop_map(|word| Frame::Program { word })]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn manchester_round_trip(bits in prop::collection::vec(any::<bool>(), 1..128), rate in 1.0f64..=1000.0, falling in any::<bool>()) {
        let p = params(rate, falling);
        prop_assert_eq!(manchester::decode(&manchester::encode(&bits, &p), &p).unwrap(), bits);
    }

    #[test]
    fn frame_round_trip(f in frame(), rate in 1.0f64..=1000.0) {
        let p = ManchesterParams::at_rate(rate);
        prop_assert_eq!(decode_frame(&encode_frame(&f, &p), &p).unwrap(), f);
    }

    #[test]
    fn ws2812_round_trip(pixels in prop::collection::vec(any::<[u8; 3]>(), 1..=8)) {
        let t = Ws2812Timing::default();
        prop_assert_eq!(ws2812::decode(&ws2812::encode(&pixels, &t), &t).unwrap(), pixels);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cascade_consumes_one_pixel_per_stage(pixels in prop::collection::vec(any::<[u8; 3]>(), 1..=8)) {
        let t = Ws2812Timing::default();
        let mut line = ws2812::encode(&pixels, &t);
        for (k, px) in pixels.iter().enumerate() {
            let (word, rest) = ws2812::cascade(&line, &t).unwrap();
            prop_assert_eq!(word, u32::from_be_bytes([0, px[0], px[1], px[2]]));
            prop_assert_eq!(ws2812::decode(&rest, &t).unwrap_or_default(), pixels[k + 1..].to_vec());
            line = rest;
        }
        prop_assert!(ws2812::cascade(&line, &t).is_err());
    }

    #[test]
    fn streaming_receiver_matches_batch(f in frame(), rate in prop::sample::select(vec![50.0, 200.0, 1000.0])) {
        let p = ManchesterParams::at_rate(rate);
        let train = encode_frame(&f, &p);
        let mut rx = StreamReceiver::new(p);
        let step = p.half_cell_ns() / 10;
        let mut got = None;
        let mut t = 0;
        while got.is_none() && t < train.duration_ns() + 5 * p.cell_ns() {
            got = rx.sample(t, train.level_at(t).is_high());
            t += step;
        }
        prop_assert_eq!(got, Some(Ok(f)));
    }
}

#[test]
fn green_red_blue_order() {
    let t = Ws2812Timing::default();
    let segs = ws2812::encode(&[[0xFF, 0, 0]], &t).segments();
    assert!(segs[..16].chunks(2).all(|c| c[0] == (Line::High, 800) && c[1] == (Line::Low, 450)));
    assert_eq!(segs[16], (Line::High, 400));
}

#[test]
fn ws2812_tolerates_datasheet_jitter() {
    let t = Ws2812Timing::default();
    let jittered = PulseTrain::from_segments(0, [(Line::High, 940), (Line::Low, 310), (Line::High, 260), (Line::Low, 990)]);
    let mut bits = ws2812::decode_bits(&jittered.extend_low(60_000), &t).unwrap();
    bits.truncate(2);
    assert_eq!(bits, [true, false]);
}

#[test]
fn wrong_rate_does_not_decode() {
    let start = Frame::Command { byte: 0xA5 };
    let train = encode_frame(&start, &ManchesterParams::at_rate(200.0));
    assert!(decode_frame(&train, &ManchesterParams::at_rate(50.0)).is_err());
    assert!(decode_frame(&train, &ManchesterParams::at_rate(1000.0)).is_err());
}
