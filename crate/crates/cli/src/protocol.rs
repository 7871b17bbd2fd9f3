//! JSON wire messages exchanged with operator consoles over WebSocket.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use smartlet::engine::WorldCommand;

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Pause,
    Resume,
    Step,
    Reset,
    Speed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Apply(WorldCommand),
    Control { action: ControlAction, value: Option<Value> },
}

/// A parsed client message with the correlation value echoed in its reply.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub reference: Value,
    pub message: Inbound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub reference: Option<Value>,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ack {
        #[serde(rename = "ref")]
        reference: Value,
    },
    Error {
        msg: String,
        #[serde(rename = "ref", skip_serializing_if = "Option::is_none")]
        reference: Option<Value>,
    },
}

impl Reply {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("replies serialize")
    }
}

impl From<ProtocolError> for Reply {
    fn from(e: ProtocolError) -> Self {
        Reply::Error { msg: e.msg, reference: e.reference }
    }
}

#[derive(Deserialize)]
struct Control {
    action: ControlAction,
    #[serde(default)]
    value: Option<Value>,
}

pub fn parse(text: &str) -> Result<Request, ProtocolError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ProtocolError { reference: None, msg: format!("invalid JSON: {e}") })?;
    let Some(obj) = value.as_object() else {
        return Err(ProtocolError { reference: None, msg: "message must be a JSON object".into() });
    };
    let reference = obj.get("ref").cloned();
    let fail = |msg: String| ProtocolError { reference: reference.clone(), msg };
    match obj.get("v") {
        None => {}
        Some(v) if v.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(v) => return Err(fail(format!("unsupported protocol version {v}"))),
    }
    let kind = obj.get("type").and_then(Value::as_str).ok_or_else(|| fail("missing \"type\"".into()))?;
    let message = match kind {
        "command" | "program" => {
            Inbound::Apply(serde_json::from_value(value.clone()).map_err(|e| fail(format!("bad {kind} message: {e}")))?)
        }
        "control" => {
            let c: Control = serde_json::from_value(value.clone()).map_err(|e| fail(format!("bad control message: {e}")))?;
            Inbound::Control { action: c.action, value: c.value }
        }
        other => return Err(fail(format!("unknown message type {other:?}"))),
    };
    Ok(Request { reference: reference.unwrap_or(Value::Null), message })
}
