use std::io::BufReader;

use smartlet::acceptance::{self, scenario, swarm_scenario, trace_hash};
use smartlet::engine::{read_trace, replay, run, EventKind, Scenario, Simulation, TraceRecord, TraceWriter, WorldCommand};
use smartlet::fsm::Mode;

fn trace_of(s: &Scenario) -> Vec<TraceRecord> {
    let mut w = TraceWriter::new(Vec::new());
    run(s, &mut w).unwrap();
    read_trace(BufReader::new(&w.into_inner()[..])).unwrap()
}

#[test]
fn empty_scenario_is_header_only() {
    let s = scenario(include_str!("../../../scenarios/empty.json"));
    let t = trace_of(&s);
    assert_eq!(t.len(), 1);
    assert!(matches!(t[0], TraceRecord::Header { v: 1, .. }));
}

#[test]
fn trace_lines_carry_type_tags() {
    let mut s = scenario(acceptance::DIVE);
    s.duration_s = 1.0;
    let mut w = TraceWriter::new(Vec::new());
    run(&s, &mut w).unwrap();
    let text = String::from_utf8(w.into_inner()).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["type"], "header");
    assert_eq!(lines[0]["seed"], 42);
    assert!(lines.iter().any(|l| l["type"] == "state" && l["agents"].as_array().unwrap().len() == 3));
    let ev = lines.iter().find(|l| l["type"] == "event" && l["kind"] == "command_received").unwrap();
    assert_eq!(ev["agent"], 3);
    assert_eq!(ev["byte"], 0xA5);
    let state = lines.iter().find(|l| l["type"] == "state").unwrap();
    for key in ["id", "pos", "gas_nl", "mode", "phase", "leds", "bonds"] {
        assert!(state["agents"][0].get(key).is_some(), "{key}");
    }
}

#[test]
fn malformed_scenarios_point_at_a_line() {
    let bad = "{\n  \"seed\": 1,\n  \"agents\": [\n    {\"id\": 1, \"position\": [0.01, 0.01], \"decoder_rate_hz\": 5000}\n  ]\n}";
    let e = Scenario::from_json(bad).unwrap_err();
    assert_eq!(e.line, Some(4));
    assert!(e.to_string().contains("line 4"));
    let e = Scenario::from_json("{\n \"seed\": 1,\n \"colour\": 3\n}").unwrap_err();
    assert_eq!(e.line, Some(3));
    assert!(Scenario::from_json("{\"seed\": \"x\"}").is_err());
}

#[test]
fn dive_events_in_order() {
    let mut s = scenario(acceptance::DIVE);
    s.duration_s = 200.0;
    let events: Vec<_> = trace_of(&s)
        .into_iter()
        .filter_map(|r| match r {
            TraceRecord::Event(e) => Some(e),
            _ => None,
        })
        .collect();
    assert_eq!(acceptance::dive_cycles(&events, 3).unwrap(), 2);
    assert!(events.iter().all(|e| e.kind.agent() != Some(1) || matches!(e.kind, EventKind::ModeChanged { .. })));
}

#[test]
fn same_seed_same_hash() {
    let s = scenario(acceptance::DIVE);
    assert_eq!(trace_hash(&s), trace_hash(&s));
}

#[test]
fn seed_changes_brownian_paths() {
    let mut a = swarm_scenario(1);
    a.duration_s = 10.0;
    let mut b = a.clone();
    b.seed = 2;
    assert_ne!(trace_hash(&a), trace_hash(&b));
}

#[test]
fn thread_count_does_not_change_trace() {
    let mut s = swarm_scenario(5);
    s.duration_s = 10.0;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| trace_hash(&s));
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| trace_hash(&s));
    assert_eq!(one, many);
}

#[test]
fn console_commands_replay_headlessly() {
    let mut s = scenario(acceptance::TWO_RATES);
    s.schedule.clear();
    s.duration_s = 3.0;
    let mut sim = Simulation::new(&s).unwrap();
    let mut live = TraceWriter::new(Vec::new());
    live.write(&sim.header()).unwrap();
    let cmd = WorldCommand::Command { kind: "global_light".into(), rate_hz: 200.0, payload: "START".into(), duration_s: None, agent: None };
    while !sim.done() {
        if sim.world.tick == 250 {
            for r in sim.apply(&cmd).unwrap() {
                live.write(&r).unwrap();
            }
        }
        for r in sim.step() {
            live.write(&r).unwrap();
        }
    }
    if let Some(r) = sim.finish() {
        live.write(&r).unwrap();
    }
    assert_eq!(sim.world.agent(3).unwrap().fsm.mode, Mode::Running);
    assert_eq!(sim.world.agent(2).unwrap().fsm.mode, Mode::Idle);
    let live = live.into_inner();
    let records = read_trace(BufReader::new(&live[..])).unwrap();
    let mut again = TraceWriter::new(Vec::new());
    replay(&records, &mut again).unwrap();
    assert_eq!(String::from_utf8(again.into_inner()).unwrap(), String::from_utf8(live).unwrap());
}

#[test]
fn out_of_range_light_is_rejected() {
    let s = scenario(acceptance::TWO_RATES);
    let mut sim = Simulation::new(&s).unwrap();
    let cmd = WorldCommand::Command { kind: "global_light".into(), rate_hz: 2000.0, payload: "START".into(), duration_s: None, agent: None };
    assert!(sim.apply(&cmd).is_err());
    let zero = WorldCommand::Command { kind: "global_light".into(), rate_hz: 200.0, payload: "START".into(), duration_s: Some(0.0), agent: None };
    assert_eq!(sim.world.inject_global_light("START", 200.0, Some(0.0)).unwrap(), 0);
    assert!(sim.apply(&zero).is_ok());
}

#[test]
fn repeated_light_fills_its_duration() {
    let s = scenario(acceptance::TWO_RATES);
    let mut sim = Simulation::new(&s).unwrap();
    let frames = sim.world.inject_global_light("STOP", 200.0, Some(1.0)).unwrap();
    // 90 ms frames with a 20 ms gap: nine fit in one second.
    assert_eq!(frames, 9);
}

#[test]
fn program_upload_latches() {
    let s = scenario(acceptance::TWO_RATES);
    let mut sim = Simulation::new(&s).unwrap();
    let bits = "0000111111111011110010000000001011110010000000001011110011".to_string();
    let recs = sim.apply(&WorldCommand::Program { agent: 2, bits: bits.clone() }).unwrap();
    assert!(recs.iter().any(|r| matches!(r, TraceRecord::Event(e) if matches!(&e.kind, EventKind::ProgramLatched { agent: 2, bits: b } if *b == bits))));
    assert!(sim.apply(&WorldCommand::Program { agent: 99, bits }).is_err());
}
