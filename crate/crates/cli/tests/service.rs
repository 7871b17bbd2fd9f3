use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use clap::Parser;
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use smartlet_cli::commands::{default_serve_scenario, dispatch};
use smartlet_cli::service::Service;
use smartlet_cli::Cli;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(trace: Option<&Path>) -> (Service, SocketAddr) {
    let sink = trace.map(|p| Box::new(std::fs::File::create(p).unwrap()) as Box<dyn std::io::Write + Send>);
    let service = Service::start(default_serve_scenario(), sink).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let router = service.router();
    tokio::spawn(async move { axum::serve(listener, router).await });
    (service, addr)
}

async fn connect(addr: SocketAddr) -> Ws {
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let hello = next(&mut ws).await;
    assert_eq!(hello["type"], "state");
    ws
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::text(v.to_string())).await.unwrap();
}

async fn next(ws: &mut Ws) -> Value {
    loop {
        let m = tokio::time::timeout(Duration::from_secs(30), ws.next()).await.expect("message in time").unwrap().unwrap();
        if let Message::Text(t) = m {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

/// Reads until the ack or error for `reference`, returning everything seen.
async fn until_reply(ws: &mut Ws, reference: i64) -> Vec<Value> {
    let mut seen = Vec::new();
    loop {
        let v = next(ws).await;
        let done = matches!(v["type"].as_str(), Some("ack" | "error")) && v["ref"] == reference;
        seen.push(v);
        if done {
            return seen;
        }
    }
}

async fn until_states(ws: &mut Ws, n: usize) -> Vec<Value> {
    let mut seen = Vec::new();
    while seen.iter().filter(|v: &&Value| v["type"] == "state").count() < n {
        let v = next(ws).await;
        if v["type"] != "ack" {
            seen.push(v);
        }
    }
    seen
}

#[tokio::test(flavor = "multi_thread")]
async fn ten_steps_give_ten_snapshots() {
    let (service, addr) = start(None).await;
    let mut ws = connect(addr).await;
    for k in 0..10 {
        send(&mut ws, json!({"type": "control", "action": "step", "ref": k})).await;
    }
    let mut states = Vec::new();
    let mut acks = 0;
    while states.len() < 10 || acks < 10 {
        let v = next(&mut ws).await;
        match v["type"].as_str().unwrap() {
            "state" => states.push(v["tick"].as_u64().unwrap()),
            "ack" => acks += 1,
            "event" => {}
            other => panic!("unexpected {other}: {v}"),
        }
    }
    assert_eq!(states, (1..=10).map(|k| k * 100).collect::<Vec<u64>>());
    service.shutdown().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn global_light_wakes_only_the_matching_agent() {
    let (service, addr) = start(None).await;
    let mut ws = connect(addr).await;
    send(&mut ws, json!({"v": 1, "type": "command", "kind": "global_light", "rate_hz": 200, "payload": "START", "ref": 1})).await;
    let first = until_reply(&mut ws, 1).await;
    assert_eq!(first.last().unwrap()["type"], "ack");
    assert!(first.iter().all(|v| v["kind"] != "mode_changed"));

    send(&mut ws, json!({"type": "control", "action": "step", "value": 20, "ref": 2})).await;
    let seen = until_reply(&mut ws, 2).await;
    let running: Vec<u64> =
        seen.iter().filter(|v| v["kind"] == "mode_changed" && v["to"] == "running").map(|v| v["agent"].as_u64().unwrap()).collect();
    assert_eq!(running, [3]);
    let last_state = seen.iter().rev().find(|v| v["type"] == "state").unwrap();
    let modes: Vec<(u64, &str)> = last_state["agents"].as_array().unwrap().iter().map(|a| (a["id"].as_u64().unwrap(), a["mode"].as_str().unwrap())).collect();
    assert_eq!(modes, [(2, "idle"), (3, "running")]);
    service.shutdown().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn consoles_share_one_stream() {
    let (service, addr) = start(None).await;
    let mut a = connect(addr).await;
    let mut b = connect(addr).await;
    send(&mut a, json!({"type": "command", "kind": "global_light", "rate_hz": 50, "payload": "START"})).await;
    send(&mut a, json!({"type": "control", "action": "step", "value": 15})).await;
    let sa = until_states(&mut a, 15).await;
    let sb = until_states(&mut b, 15).await;
    assert_eq!(sa, sb);
    assert!(sa.iter().any(|v| v["kind"] == "light_injected"));
    service.shutdown().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_messages_get_errors_and_session_continues() {
    let (service, addr) = start(None).await;
    let mut ws = connect(addr).await;
    ws.send(Message::text("{not json")).await.unwrap();
    let e = next(&mut ws).await;
    assert_eq!(e["type"], "error");
    assert!(e["msg"].as_str().unwrap().contains("invalid JSON"));

    for (k, bad) in [
        json!({"type": "control", "action": "fly", "ref": 10}),
        json!({"v": 9, "type": "control", "action": "pause", "ref": 11}),
        json!({"type": "program", "agent": 99, "bits": "0".repeat(58), "ref": 12}),
        json!({"type": "command", "kind": "global_light", "rate_hz": 2000, "payload": "START", "ref": 13}),
        json!({"type": "control", "action": "speed", "value": -1, "ref": 14}),
    ]
    .into_iter()
    .enumerate()
    {
        send(&mut ws, bad).await;
        let r = until_reply(&mut ws, 10 + k as i64).await;
        assert_eq!(r.last().unwrap()["type"], "error", "{r:?}");
    }
    send(&mut ws, json!({"type": "control", "action": "pause", "ref": 20})).await;
    assert_eq!(until_reply(&mut ws, 20).await.last().unwrap()["type"], "ack");
    service.shutdown().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn served_session_replays_headlessly() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("session.jsonl");
    let (service, addr) = start(Some(&trace)).await;
    let mut ws = connect(addr).await;
    let script = [
        json!({"type": "command", "kind": "global_light", "rate_hz": 200, "payload": "START", "ref": 1}),
        json!({"type": "control", "action": "step", "value": 5, "ref": 2}),
        json!({"type": "command", "kind": "global_light", "rate_hz": 50, "payload": "START", "duration_s": 0.3, "ref": 3}),
        json!({"type": "control", "action": "speed", "value": 20, "ref": 4}),
        json!({"type": "control", "action": "resume", "ref": 5}),
    ];
    for (k, m) in script.into_iter().enumerate() {
        send(&mut ws, m).await;
        until_reply(&mut ws, k as i64 + 1).await;
    }
    while next(&mut ws).await["tick"].as_u64().is_none_or(|t| t < 2000) {}
    send(&mut ws, json!({"type": "control", "action": "pause", "ref": 6})).await;
    until_reply(&mut ws, 6).await;
    send(&mut ws, json!({"type": "program", "agent": 2, "bits": "0".repeat(58), "ref": 7})).await;
    let refused = until_reply(&mut ws, 7).await;
    assert_eq!(refused.last().unwrap()["type"], "error", "agent 2 is running");
    send(&mut ws, json!({"type": "control", "action": "step", "ref": 8})).await;
    until_reply(&mut ws, 8).await;
    send(&mut ws, json!({"type": "control", "action": "reset", "ref": 9})).await;
    send(&mut ws, json!({"type": "program", "agent": 2, "bits": "0".repeat(58), "ref": 11})).await;
    assert_eq!(until_reply(&mut ws, 11).await.last().unwrap()["type"], "ack");
    send(&mut ws, json!({"type": "control", "action": "step", "value": 2, "ref": 10})).await;
    until_reply(&mut ws, 10).await;
    service.shutdown().unwrap();

    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("{\"type\":\"header\"")).count(), 2);
    assert_eq!(text.matches("\"kind\":\"command_applied\"").count(), 3);
    let out = dir.path().join("again.jsonl");
    let cli = Cli::parse_from(["smartlet", "replay", "--trace", trace.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    dispatch(cli).map_err(|f| f.msg).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), text);
}
