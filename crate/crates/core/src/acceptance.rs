//! Pass/fail checks over the whole simulator, runnable from tests and the CLI.

use std::collections::BTreeMap;

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::aquatics::{buoyancy_force, dock_score, gas, gas_rate, FacePattern, Offset, Site, SmartletBody, WaterParams};
use crate::codecs::{decode_frame, encode_frame, manchester, ws2812, Convention, Frame, ManchesterParams, StreamReceiver, Ws2812Timing};
use crate::engine::{run, AgentSpec, Event, EventKind, HashingWriter, Scenario, TraceWriter};
use crate::fsm::{execute, Command, Condition, FsmState, LabletProgram, Level, Mode, PhaseBlock, Stimulus, Target, PROGRAM_BITS};
use crate::photonics::dome::{self, DomeMode};
use crate::photonics::solar::{sun_from_above, ONE_SUN};
use crate::photonics::{angular_factor, pce, CellKind, Emitter, OpticalLinkParams, Receiver, SeriesString, SolarCellSpec};

pub const DIVE: &str = include_str!("../../../scenarios/dive.json");
pub const TWO_RATES: &str = include_str!("../../../scenarios/two_rates.json");
pub const DOCKING: &str = include_str!("../../../scenarios/docking.json");
pub const DOCKING_MISMATCH: &str = include_str!("../../../scenarios/docking_mismatch.json");
const DOCK_FIXTURE: &str = include_str!("../tests/fixtures/dock_scores.json");
const FSM_FIXTURE: &str = include_str!("../tests/fixtures/fsm_vectors.jsonl");
const ORACLE_FIXTURE: &str = include_str!("../tests/fixtures/oracle_values.json");

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, failures: Vec<String>, ok: String) -> Self {
        let passed = failures.is_empty();
        Check { name, passed, detail: if passed { ok } else { failures.join("; ") } }
    }
}

pub type Criterion = (&'static str, fn() -> Check);

pub const CRITERIA: [Criterion; 11] = [
    ("pce_calibration", pce_calibration),
    ("omnidirectionality", omnidirectionality),
    ("folded_voltage", folded_voltage),
    ("codec_round_trips", codec_round_trips),
    ("frequency_selectivity", frequency_selectivity),
    ("fsm", fsm),
    ("link_envelope", link_envelope),
    ("gas_ode", gas_ode),
    ("dive_cycle", dive_cycle),
    ("docking", docking),
    ("determinism", determinism),
];

pub fn run_all() -> Vec<Check> {
    CRITERIA.iter().map(|(_, f)| f()).collect()
}

pub fn scenario(text: &str) -> Scenario {
    Scenario::from_json(text).expect("bundled scenarios are valid")
}

fn events(s: &Scenario) -> Vec<Event> {
    run(s, &mut TraceWriter::new(std::io::sink())).expect("bundled scenarios run")
}

/// SHA-256 of the full JSONL trace of a run, hex encoded.
pub fn trace_hash(s: &Scenario) -> String {
    let mut w = TraceWriter::new(HashingWriter::new(std::io::sink()));
    run(s, &mut w).expect("scenario runs");
    w.into_inner().hex_digest()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn pce_calibration() -> Check {
    let mut fail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let ff = rng.random_range(0.05..0.95);
        let isc = 10f64.powf(rng.random_range(-7.0..-2.0));
        let voc = rng.random_range(0.1..2.0);
        let p_in = 10f64.powf(rng.random_range(-5.0..0.0));
        let area = 10f64.powf(rng.random_range(-4.0..1.0));
        let cell = SolarCellSpec { i_sc: isc, v_oc: voc, fill_factor: ff, area_cm2: area, kind: CellKind::Planar { normal: [0.0, 0.0, 1.0] } };
        let got = pce(cell.p_max(), p_in, area).unwrap();
        let closed = ff * isc * voc / area / p_in * 100.0;
        worst = worst.max(rel(got, closed));
    }
    if worst >= 1e-12 {
        fail.push(format!("formula relative error {worst:e}"));
    }
    let tube = SolarCellSpec::single_tube();
    let eff = pce(tube.p_max(), ONE_SUN, tube.area_cm2).unwrap();
    if (eff - 11.5).abs() > 1e-12 {
        fail.push(format!("single tube {eff} %"));
    }
    let string = SeriesString::folded();
    let out = string.power(&[sun_from_above(ONE_SUN)], &Rotation3::identity());
    let eff_s = pce(out.power, ONE_SUN, string.total_area_cm2()).unwrap();
    if (eff_s - 1.5).abs() > 1e-9 || rel(out.i_out, 7e-6) > 1e-12 || rel(out.v_out, 2.1) > 1e-12 || rel(out.power, 17e-6) > 1e-9 {
        fail.push(format!("string {eff_s} % {} A {} V {} W", out.i_out, out.v_out, out.power));
    }
    Check::new(
        "pce_calibration",
        fail,
        format!("max rel err {worst:.1e}; tube {eff:.3} %; string {eff_s:.3} % at {:.1} uA {:.2} V {:.2} uW", out.i_out * 1e6, out.v_out, out.power * 1e6),
    )
}

pub fn omnidirectionality() -> Check {
    let mut fail = Vec::new();
    let folded: Vec<f64> = dome::sweep(DomeMode::Folded, &SeriesString::folded()).iter().map(|p| p.power).collect();
    let cv = dome::coefficient_of_variation(&folded);
    if !(cv < 0.20) {
        fail.push(format!("folded CV {cv:.3}"));
    }
    let flat: Vec<f64> = dome::sweep(DomeMode::Prefolded, &SeriesString::prefolded()).iter().map(|p| p.power).collect();
    let ratio = dome::max_min_ratio(&flat);
    if !(ratio > 3.0) {
        fail.push(format!("prefolded max/min {ratio}"));
    }
    let tube = SolarCellSpec::single_tube();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut broken = 0;
    for _ in 0..2000 {
        let d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
        if angular_factor(&tube, &d).to_bits() != angular_factor(&tube, &(r * d)).to_bits() {
            broken += 1;
        }
    }
    if broken > 0 {
        fail.push(format!("{broken} azimuthal rotations changed the tube response"));
    }
    Check::new("omnidirectionality", fail, format!("folded CV {cv:.3}; prefolded max/min {ratio}; tube response azimuth-invariant"))
}

pub fn folded_voltage() -> Check {
    let pts = dome::sweep(DomeMode::Folded, &SeriesString::folded());
    let (lo, hi) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.v_out), hi.max(p.v_out)));
    let mut fail = Vec::new();
    if lo < 2.1 - 1e-9 || hi > 3.1 + 1e-9 {
        fail.push(format!("voltage range [{lo}, {hi}] V"));
    }
    if pts.iter().any(|p| p.v_out >= 5.2 - 1e-9) {
        fail.push("a direction reached the planar 5.2 V".into());
    }
    Check::new("folded_voltage", fail, format!("{} directions, {lo:.2}..{hi:.2} V", pts.len()))
}

fn ws_segments_in_window(train: &crate::codecs::PulseTrain, t: &Ws2812Timing) -> bool {
    let segs = train.segments();
    let n = segs.len();
    segs.chunks(2).enumerate().all(|(k, pair)| {
        let [(_, hi), (_, lo)] = [pair[0], pair[1]];
        let bit = hi.abs_diff(t.t1h_ns) <= t.segment_tolerance_ns;
        let hi_ok = hi.abs_diff(t.high_ns(bit)) <= t.segment_tolerance_ns;
        let last = 2 * k + 2 == n;
        let lo_ok = if last { lo >= t.reset_ns } else { lo.abs_diff(t.low_ns(bit)) <= t.segment_tolerance_ns };
        let period_ok = last || (hi + lo).abs_diff(t.period_ns) <= t.period_tolerance_ns;
        hi_ok && lo_ok && period_ok
    })
}

pub fn codec_round_trips() -> Check {
    let mut fail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    let mut manchester_bad = 0;
    let mut frame_bad = 0;
    for i in 0..n {
        let len = rng.random_range(1..=96);
        let bits: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let mut params = ManchesterParams::at_rate(rng.random_range(1.0..=1000.0));
        if i % 2 == 1 {
            params.convention = Convention::FallingIsOne;
        }
        if manchester::decode(&manchester::encode(&bits, &params), &params).ok() != Some(bits) {
            manchester_bad += 1;
        }
        let frame = if rng.random() {
            Frame::Command { byte: rng.random() }
        } else {
            Frame::Program { word: rng.random::<u64>() >> 6 }
        };
        if decode_frame(&encode_frame(&frame, &params), &params).ok() != Some(frame) {
            frame_bad += 1;
        }
    }
    if manchester_bad + frame_bad > 0 {
        fail.push(format!("manchester {manchester_bad} / frame {frame_bad} round-trip failures"));
    }
    let timing = Ws2812Timing::default();
    let (mut ws_bad, mut window_bad, mut cascade_bad) = (0, 0, 0);
    for _ in 0..n {
        let count = rng.random_range(1..=8);
        let pixels: Vec<[u8; 3]> = (0..count).map(|_| rng.random()).collect();
        let train = ws2812::encode(&pixels, &timing);
        if ws2812::decode(&train, &timing).ok().as_deref() != Some(&pixels[..]) {
            ws_bad += 1;
        }
        if !ws_segments_in_window(&train, &timing) {
            window_bad += 1;
        }
        let mut line = train;
        for (k, px) in pixels.iter().enumerate() {
            let want = (px[0] as u32) << 16 | (px[1] as u32) << 8 | px[2] as u32;
            match ws2812::cascade(&line, &timing) {
                Ok((word, rest)) => {
                    let left = ws2812::decode_bits(&rest, &timing).map(|b| b.len()).unwrap_or(usize::MAX);
                    if word != want || left != 24 * (count - k - 1) {
                        cascade_bad += 1;
                        break;
                    }
                    line = rest;
                }
                Err(_) => {
                    cascade_bad += 1;
                    break;
                }
            }
        }
    }
    if ws_bad + window_bad + cascade_bad > 0 {
        fail.push(format!("ws2812b round trip {ws_bad}, timing window {window_bad}, cascade {cascade_bad} failures"));
    }
    Check::new("codec_round_trips", fail, format!("{n} Manchester payloads, {n} frames, {n} WS2812B strips (1-8 pixels) with cascade"))
}

const SELECT_RATES: [f64; 3] = [50.0, 200.0, 1000.0];

/// Which decoder rate receives a global START sent at each rate, through
/// the full optical path of the engine.
pub fn selectivity_matrix() -> [[bool; 3]; 3] {
    let mut out = [[false; 3]; 3];
    let program = scenario(DIVE).agents.iter().find_map(|a| a.program).expect("dive program");
    for (ti, &tx) in SELECT_RATES.iter().enumerate() {
        let mut s = Scenario::from_json("{}").unwrap();
        s.duration_s = 1.5;
        for (ri, &rx) in SELECT_RATES.iter().enumerate() {
            let mut a = AgentSpec::new(ri as u32 + 1, 10e-3 + 15e-3 * ri as f64, 10e-3);
            a.decoder_rate_hz = rx;
            a.program = Some(program);
            s.agents.push(a);
        }
        s.schedule.push(crate::engine::Action::GlobalLight { t_s: 0.1, rate_hz: tx, payload: "START".into(), duration_s: None });
        for e in events(&s) {
            if let EventKind::CommandReceived { agent, byte, .. } = e.kind {
                if byte == Command::Start.byte() {
                    out[ti][agent as usize - 1] = true;
                }
            }
        }
    }
    out
}

pub fn frequency_selectivity() -> Check {
    let mut fail = Vec::new();
    let mut codec = [[false; 3]; 3];
    for (i, &tx) in SELECT_RATES.iter().enumerate() {
        for (j, &rx) in SELECT_RATES.iter().enumerate() {
            let train = encode_frame(&Frame::Command { byte: Command::Start.byte() }, &ManchesterParams::at_rate(tx));
            codec[i][j] = decode_frame(&train, &ManchesterParams::at_rate(rx)).is_ok();
        }
    }
    let engine = selectivity_matrix();
    let diag = |m: &[[bool; 3]; 3]| (0..3).all(|i| (0..3).all(|j| m[i][j] == (i == j)));
    if !diag(&codec) {
        fail.push(format!("codec matrix {codec:?}"));
    }
    if !diag(&engine) {
        fail.push(format!("engine matrix {engine:?}"));
    }
    Check::new("frequency_selectivity", fail, "codec and in-tank 3x3 matrices over 50/200/1000 Hz are diagonal".into())
}

fn fsm_vectors_match() -> Result<usize, String> {
    #[derive(Deserialize)]
    struct Vector {
        name: String,
        program: Option<String>,
        stimulus: Vec<Stimulus>,
        ticks: u64,
        expected: Vec<String>,
    }
    let mut n = 0;
    for line in FSM_FIXTURE.lines().filter(|l| !l.trim().is_empty()) {
        let v: Vector = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let program = v.program.map(|p| p.parse::<LabletProgram>()).transpose().map_err(|e| e.to_string())?;
        let got = execute(program, &v.stimulus, v.ticks).map_err(|e| e.to_string())?;
        if got != v.expected {
            let at = got.iter().zip(&v.expected).position(|(a, b)| a != b).unwrap_or(got.len().min(v.expected.len()));
            return Err(format!("vector {} diverges at tick {at}", v.name));
        }
        n += 1;
    }
    Ok(n)
}

fn random_program(rng: &mut ChaCha8Rng) -> LabletProgram {
    loop {
        let word = rng.random::<u64>() >> 6;
        if let Ok(p) = LabletProgram::from_word(word) {
            return p;
        }
    }
}

/// Every (state, input) pair from a representative state set yields a
/// defined successor satisfying the structural invariants.
pub fn transition_totality() -> Result<usize, String> {
    let mut programs = Vec::new();
    for c in Condition::ALL {
        for t in Target::ALL {
            let ph = PhaseBlock { pattern: 0b1011_0010, mask: 0b101, repeats: 1, condition: c, target: t };
            programs.push(LabletProgram { clock_fast: false, autorun: true, send_on_idle: t == Target::Idle, phases: [ph; 3] });
        }
    }
    let mut states = vec![FsmState::new()];
    for p in &programs {
        let base = FsmState::with_program(*p);
        states.push(base);
        for phase in 0..3 {
            for step in 0..8 {
                for trig in [false, true] {
                    let mut s = base;
                    s.receive_command(Command::Start.byte());
                    s.phase = phase;
                    s.step = step;
                    s.pending_trigger = trig;
                    states.push(s);
                }
            }
        }
        let mut sending = base;
        sending.receive_command(Command::Send.byte());
        states.push(sending);
        let mut programming = base;
        programming.load_bit(true).map_err(|e| e.to_string())?;
        states.push(programming);
        let mut idle_late = base;
        idle_late.idle_ticks = 63;
        states.push(idle_late);
    }
    let valid = |s: &FsmState| {
        s.phase < 3
            && s.step < 8
            && (s.mode != Mode::Running || s.program.is_some())
            && (s.mode == Mode::Running || s.actuators == [Level::Z; 3])
            && (s.send_index as usize) <= PROGRAM_BITS
    };
    let mut count = 0;
    for s in &states {
        for sensors in [[false, false], [false, true], [true, false], [true, true]] {
            let mut t = *s;
            t.sensors = sensors;
            t.tick();
            count += 1;
            if !valid(&t) {
                return Err(format!("tick from {:?} gave {:?}", s.mode, t.mode));
            }
        }
        for byte in 0..=255u8 {
            let mut t = *s;
            t.receive_command(byte);
            count += 1;
            if !valid(&t) {
                return Err(format!("command {byte:#04x} from {:?}", s.mode));
            }
        }
        for bit in [false, true] {
            let mut t = *s;
            let r = t.load_bit(bit);
            count += 1;
            let busy = matches!(s.mode, Mode::Running | Mode::Sending);
            if busy != r.is_err() || (busy && t != *s) || !valid(&t) {
                return Err(format!("load_bit from {:?}", s.mode));
            }
        }
    }
    Ok(count)
}

pub fn fsm() -> Check {
    let mut fail = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..1000 {
        let p = random_program(&mut rng);
        let mut f = FsmState::new();
        let mut latched = None;
        for b in p.to_bits() {
            latched = f.load_bit(b).ok().and_then(|o| o.latched).or(latched);
        }
        if latched != Some(Ok(p)) || f.mode != Mode::Idle {
            bad += 1;
            continue;
        }
        f.receive_command(Command::Send.byte());
        let out: Vec<bool> = (0..PROGRAM_BITS).filter_map(|_| f.tick()).collect();
        if out != p.to_bits() || f.mode != Mode::Idle {
            bad += 1;
        }
    }
    if bad > 0 {
        fail.push(format!("{bad} of 1000 programs failed load/send identity"));
    }
    let program: LabletProgram = serde_json::from_str::<serde_json::Value>(ORACLE_FIXTURE).unwrap()["programs"]["canonical_dive"]
        .as_str()
        .unwrap()
        .parse()
        .unwrap();
    let mut f = FsmState::with_program(program);
    let mut a3 = Vec::new();
    for n in 0..200 {
        match n {
            10 => drop(f.receive_command(Command::Start.byte())),
            150 => drop(f.receive_command(Command::Stop.byte())),
            _ => {}
        }
        a3.push(f.actuators[2]);
        f.tick();
    }
    let high = |r: std::ops::Range<usize>| a3[r].iter().all(|l| *l == Level::High);
    let off = |r: std::ops::Range<usize>| a3[r].iter().all(|l| *l != Level::High);
    if !(off(0..10) && high(10..74) && off(74..150) && off(150..200)) {
        fail.push("A3 envelope does not follow START/STOP".into());
    }
    match fsm_vectors_match() {
        Ok(_) => {}
        Err(e) => fail.push(e),
    }
    let total = transition_totality();
    if let Err(e) = &total {
        fail.push(format!("transition totality: {e}"));
    }
    Check::new(
        "fsm",
        fail,
        format!("1000 load/send identities; A3 high only between START and phase end; golden vectors match; {} transitions total", total.unwrap_or(0)),
    )
}

/// Sends START over an aligned face-to-face link of `distance` metres.
pub fn link_transfer(params: &OpticalLinkParams, distance: f64, rate_hz: f64) -> Option<Frame> {
    let p = ManchesterParams::at_rate(rate_hz);
    let train = encode_frame(&Frame::Command { byte: Command::Start.byte() }, &p);
    let tx = Emitter { position: Vector3::zeros(), normal: Vector3::x(), on: true };
    let rx = Receiver { position: Vector3::new(distance, 0.0, 0.0), normal: -Vector3::x() };
    let e_on = params.irradiance(&tx, &rx);
    let dt = (p.half_cell_ns() / 25).clamp(1, 100_000);
    let alpha = params.filter_alpha(dt as f64 * 1e-9);
    let mut receiver = StreamReceiver::new(p);
    let mut level = 0.0;
    let end = train.duration_ns() + 6 * p.cell_ns();
    let mut t = 0;
    while t <= end {
        let target = params.voltage(if train.level_at(t).is_high() { e_on } else { 0.0 });
        level += alpha * (target - level);
        if let Some(r) = receiver.sample(t, params.digital(level)) {
            return r.ok();
        }
        t += dt;
    }
    None
}

pub fn link_envelope() -> Check {
    let params = OpticalLinkParams::default();
    let rates = [1.0, 10.0, 50.0, 200.0, 500.0, 1000.0];
    let near = [0.0, 0.5e-3, 1e-3, 2e-3, 3e-3, 4e-3];
    let far = [6e-3, 7e-3, 8e-3, 12e-3];
    let start = Some(Frame::Command { byte: Command::Start.byte() });
    let cases: Vec<(f64, f64, bool)> =
        rates.iter().flat_map(|&r| near.iter().map(move |&d| (r, d, true)).chain(far.iter().map(move |&d| (r, d, false)))).collect();
    let fail: Vec<String> = cases
        .par_iter()
        .filter(|(r, d, closes)| (link_transfer(&params, *d, *r) == start) != *closes)
        .map(|(r, d, closes)| format!("{} Hz at {} mm should {}", r, d * 1e3, if *closes { "close" } else { "fail" }))
        .collect();
    Check::new("link_envelope", fail, format!("{} rate/distance cases: closes to 4 mm, fails from 6 mm, 1-1000 Hz", cases.len()))
}

pub fn gas_ode() -> Check {
    let mut fail = Vec::new();
    let oracle: serde_json::Value = serde_json::from_str(ORACLE_FIXTURE).unwrap();
    let rate = gas_rate(7e-6).unwrap();
    let want = oracle["physics"]["gas_rate_7ua_m3_s"].as_f64().unwrap();
    if rel(rate, want) > 1e-12 {
        fail.push(format!("gas_rate(7 uA) = {rate:e}, oracle {want:e}"));
    }
    let k = 0.005;
    let dt = 1e-3;
    let mut v = 0.0;
    let mut worst: f64 = 0.0;
    for n in 1..=300_000u32 {
        v = gas::step_volume(v, rate, k, dt);
        if n % 1000 == 0 {
            worst = worst.max(rel(v, gas::analytic_volume(0.0, rate, k, n as f64 * dt)));
        }
    }
    for (t, val) in oracle["physics"]["analytic_gas_k0.005_m3"].as_object().unwrap() {
        let t: f64 = t.parse().unwrap();
        worst = worst.max(rel(gas::analytic_volume(0.0, rate, k, t), val.as_f64().unwrap()));
    }
    if worst >= 1e-6 {
        fail.push(format!("V(t) relative error {worst:e}"));
    }
    let water = WaterParams::default();
    let mut body = SmartletBody::default();
    body.gas_volume = body.critical_volume(&water);
    let at = buoyancy_force(&body, &water);
    body.gas_volume *= 1.0 + 1e-12;
    let above = buoyancy_force(&body, &water);
    body.gas_volume = body.critical_volume(&water) * (1.0 - 1e-12);
    let below = buoyancy_force(&body, &water);
    if !(at == 0.0 && above > 0.0 && below < 0.0) {
        fail.push(format!("buoyancy sign at/above/below V_crit: {at:e} {above:e} {below:e}"));
    }
    Check::new("gas_ode", fail, format!("gas rate {:.4} nL/s; 300 s max rel err {worst:.1e}; buoyancy zero exactly at V_crit", rate * 1e12))
}

const DIVE_ORDER: [&str; 6] = ["bge_on", "levitate", "surface_reached", "bge_off", "sink_start", "floor_reached"];

/// Checks that an agent's motion events cycle through the dive order, returning
/// the number of completed cycles.
pub fn dive_cycles(events: &[Event], agent: u32) -> Result<usize, String> {
    let seq: Vec<&str> =
        events.iter().filter(|e| e.kind.agent() == Some(agent) && DIVE_ORDER.contains(&e.kind.name())).map(|e| e.kind.name()).collect();
    for (i, name) in seq.iter().enumerate() {
        if *name != DIVE_ORDER[i % 6] {
            return Err(format!("agent {agent} event {i} is {name}, expected {}", DIVE_ORDER[i % 6]));
        }
    }
    Ok(seq.len() / 6)
}

pub fn dive_cycle() -> Check {
    let mut fail = Vec::new();
    let base = scenario(DIVE);
    let bad: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|seed| {
            let mut s = base.clone();
            s.seed = seed;
            match dive_cycles(&events(&s), 3) {
                Ok(n) if n >= 1 => None,
                Ok(_) => Some(format!("seed {seed}: no complete cycle")),
                Err(e) => Some(format!("seed {seed}: {e}")),
            }
        })
        .collect();
    fail.extend(bad.into_iter().take(3));
    let ev = events(&scenario(TWO_RATES));
    let commands: Vec<(u64, u8)> = ev
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::CommandReceived { agent: 2, byte, .. } => Some((e.tick, byte)),
            _ => None,
        })
        .collect();
    let trips = match commands.as_slice() {
        [(t0, a), (t1, b)] if *a == Command::Start.byte() && *b == Command::Stop.byte() => {
            let count = |name: &str| ev.iter().filter(|e| e.tick > *t0 && e.tick < *t1 && e.kind.agent() == Some(2) && e.kind.name() == name).count();
            let after = ev.iter().any(|e| e.tick >= *t1 && e.kind.agent() == Some(2) && e.kind.name() == "levitate");
            if after {
                fail.push("50 Hz agent left the floor after STOP".into());
            }
            if let Err(e) = dive_cycles(&ev, 2) {
                fail.push(e);
            }
            count("surface_reached").min(count("floor_reached"))
        }
        other => {
            fail.push(format!("50 Hz agent received {other:?}"));
            0
        }
    };
    if trips != 2 {
        fail.push(format!("{trips} surface round trips before STOP"));
    }
    let s3: Vec<u8> = ev
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::CommandReceived { agent: 3, byte, .. } => Some(byte),
            _ => None,
        })
        .collect();
    if s3 != [Command::Start.byte()] {
        fail.push(format!("200 Hz agent received {s3:?}"));
    }
    Check::new("dive_cycle", fail, format!("100 seeds keep the dive order; 50 Hz agent made {trips} round trips before STOP"))
}

pub fn dock_fixture_mismatches() -> Result<usize, String> {
    #[derive(Deserialize)]
    struct Case {
        a: String,
        b: String,
        offset: Offset,
        score: i32,
    }
    #[derive(Deserialize)]
    struct Fixture {
        patterns: BTreeMap<String, FacePattern>,
        cases: Vec<Case>,
    }
    let f: Fixture = serde_json::from_str(DOCK_FIXTURE).map_err(|e| e.to_string())?;
    for c in &f.cases {
        let (a, b) = (&f.patterns[&c.a], &f.patterns[&c.b]);
        let ab = dock_score(a, b, c.offset);
        let ba = dock_score(b, a, c.offset);
        if ab != Some(c.score) || ba != ab {
            return Err(format!("{} vs {} {:?}: got {ab:?}/{ba:?}, oracle {}", c.a, c.b, c.offset, c.score));
        }
    }
    Ok(f.cases.len())
}

pub fn docking() -> Check {
    let mut fail = Vec::new();
    let ev = events(&scenario(DOCKING));
    let docked = ev.iter().find(|e| matches!(e.kind, EventKind::Docked { .. })).map(|e| e.tick);
    let undocked = ev.iter().find(|e| matches!(e.kind, EventKind::Undocked { .. })).map(|e| e.tick);
    let bge_off = ev.iter().find(|e| matches!(e.kind, EventKind::BgeOff { agent: 2 })).map(|e| e.tick);
    match docked {
        Some(t) if t <= 60_000 => {}
        other => fail.push(format!("matching pair docked at {other:?}")),
    }
    match (docked, bge_off, undocked) {
        (Some(d), Some(off), Some(u)) if d < off && off < u => {}
        other => fail.push(format!("dock/bge_off/undock ticks {other:?}")),
    }
    let sank = undocked.is_some_and(|u| ev.iter().any(|e| e.tick >= u && matches!(e.kind, EventKind::FloorReached { agent: 2 })));
    if !sank {
        fail.push("undocked agent did not sink".into());
    }
    let mismatch = scenario(DOCKING_MISMATCH);
    let mev = events(&mismatch);
    if mev.iter().any(|e| matches!(e.kind, EventKind::Docked { .. })) {
        fail.push("non-matching pair docked".into());
    }
    if mismatch.duration_s < 300.0 || mev.iter().any(|e| matches!(e.kind, EventKind::SinkStart { .. })) {
        fail.push("non-matching pair did not float for 300 s".into());
    }
    let cases = dock_fixture_mismatches();
    if let Err(e) = &cases {
        fail.push(e.clone());
    }
    Check::new(
        "docking",
        fail,
        format!(
            "docked at {:.2} s, undocked at {:.1} s after buoyancy loss; mismatch never docks in 300 s; {} dock_score oracle cases symmetric",
            docked.unwrap_or(0) as f64 / 1000.0,
            undocked.unwrap_or(0) as f64 / 1000.0,
            cases.unwrap_or(0)
        ),
    )
}

/// Twenty agents: half floating in two rows, half diving on the floor.
pub fn swarm_scenario(seed: u64) -> Scenario {
    let mut s = scenario(DIVE);
    s.name = "swarm".into();
    s.seed = seed;
    s.duration_s = 30.0;
    s.schedule = vec![crate::engine::Action::GlobalLight { t_s: 0.2, rate_hz: 200.0, payload: "START".into(), duration_s: None }];
    let dive = s.agents.iter().find_map(|a| a.program).expect("dive program");
    s.agents.clear();
    for i in 0..20u32 {
        let mut a = AgentSpec::new(i + 1, 4e-3 + 4.5e-3 * (i % 10) as f64, if i < 10 { 5e-3 } else { 14e-3 });
        if i % 2 == 0 {
            a.site = Site::Surface;
            a.gas_nl = 23.0;
            a.faces.insert(crate::aquatics::Face::PosX, FacePattern::uniform(true));
            a.faces.insert(crate::aquatics::Face::NegX, FacePattern::uniform(true));
        } else {
            a.program = Some(dive);
            a.clock_hz = [2.0, 2.0];
        }
        s.agents.push(a);
    }
    s
}

pub fn determinism() -> Check {
    let mut fail = Vec::new();
    let dive = scenario(DIVE);
    let (a, b) = (trace_hash(&dive), trace_hash(&dive));
    if a != b {
        fail.push("dive trace hash differs between runs".into());
    }
    let swarm = swarm_scenario(11);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| trace_hash(&swarm));
    let four = pool(4).install(|| trace_hash(&swarm));
    let again = trace_hash(&swarm);
    if one != four || one != again {
        fail.push("20-agent trace hash depends on thread count".into());
    }
    Check::new("determinism", fail, format!("dive {}..; 20 agents on 1 and 4 threads {}..", &a[..12], &one[..12]))
}
