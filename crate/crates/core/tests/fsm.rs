use proptest::prelude::*;
use serde::Deserialize;
use smartlet::fsm::{execute, Command, CommandOutcome, FsmState, LabletProgram, Level, Mode, Stimulus, PROGRAM_BITS};
use smartlet::Error;

#[derive(Deserialize)]
struct Vector {
    name: String,
    program: Option<String>,
    stimulus: Vec<Stimulus>,
    ticks: u64,
    expected: Vec<String>,
}

fn vectors() -> Vec<Vector> {
    include_str!("fixtures/fsm_vectors.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn check(name: &str) {
    let v = vectors().into_iter().find(|v| v.name == name).unwrap();
    let program = v.program.map(|p| p.parse::<LabletProgram>().unwrap());
    let got = execute(program, &v.stimulus, v.ticks).unwrap();
    for (i, (g, e)) in got.iter().zip(&v.expected).enumerate() {
        assert_eq!(g, e, "{name} tick {i}");
    }
    assert_eq!(got.len(), v.expected.len());
}

#[test]
fn golden_start_stop() {
    check("start_stop_envelope");
}

#[test]
fn golden_sensor_jump() {
    check("sensor_jump");
}

#[test]
fn golden_trigger_command() {
    check("trigger_command");
}

#[test]
fn golden_previous_wraps() {
    check("previous_wraps");
}

#[test]
fn golden_send_on_idle() {
    check("send_on_idle");
}

#[test]
fn golden_load_then_start() {
    check("load_then_start");
}

#[test]
fn golden_explicit_send() {
    check("explicit_send");
}

#[test]
fn golden_autorun_timeout() {
    check("autorun_timeout");
}

#[test]
fn golden_all_zero_program() {
    check("all_zero_program_stays_idle");
}

#[test]
fn every_fixture_vector_is_covered() {
    assert_eq!(vectors().len(), 9);
}

fn program_word() -> impl Strategy<Value = u64> {
    (0u64..1 << PROGRAM_BITS).prop_map(|w| w & !(1 << 54))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn load_then_send_is_identity(word in program_word()) {
        let p = LabletProgram::from_word(word).unwrap();
        prop_assert_eq!(p.to_word(), word);
        let mut f = FsmState::new();
        let mut last = None;
        for b in p.to_bits() {
            last = f.load_bit(b).unwrap().latched;
        }
        prop_assert_eq!(last, Some(Ok(p)));
        prop_assert_eq!(f.receive_command(Command::Send.byte()), CommandOutcome::Applied(Command::Send));
        let sent: Vec<bool> = (0..PROGRAM_BITS).map(|_| f.tick().unwrap()).collect();
        prop_assert_eq!(sent, p.to_bits());
        prop_assert_eq!(f.mode, Mode::Idle);
    }

    #[test]
    fn text_round_trip(word in program_word()) {
        let p = LabletProgram::from_word(word).unwrap();
        prop_assert_eq!(p.to_string().parse::<LabletProgram>().unwrap(), p);
    }
}

#[test]
fn program_bits_while_running_are_rejected() {
    let p: LabletProgram = "0000111111111011110010000000001011110010000000001011110010".parse().unwrap();
    let mut f = FsmState::with_program(p);
    f.receive_command(Command::Start.byte());
    let before = f;
    assert!(matches!(f.load_bit(true), Err(Error::ProtocolViolation(_))));
    assert_eq!(f, before);
}

#[test]
fn reserved_bit_leaves_no_program() {
    let mut bits = vec![false; PROGRAM_BITS];
    bits[3] = true;
    let mut f = FsmState::new();
    let mut last = None;
    for b in bits {
        last = f.load_bit(b).unwrap().latched;
    }
    assert!(matches!(last, Some(Err(Error::MalformedProgram(_)))));
    assert!(f.program.is_none());
    assert_eq!(f.receive_command(Command::Start.byte()), CommandOutcome::Ignored(Command::Start));
}

#[test]
fn malformed_text_is_rejected() {
    assert!("0101".parse::<LabletProgram>().is_err());
    assert!("x".repeat(58).parse::<LabletProgram>().is_err());
}

#[test]
fn unknown_byte_is_unrecognized() {
    let mut f = FsmState::new();
    assert_eq!(f.receive_command(0x00), CommandOutcome::Unrecognized);
    assert_eq!(f.actuators, [Level::Z; 3]);
}

#[test]
fn totality_enumeration() {
    assert!(smartlet::acceptance::transition_totality().unwrap() > 100_000);
}
