use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::input::InputDigest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violation,
    Refused,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation | Status::Refused => 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, InputDigest>,
    pub params: Value,
    pub status: Status,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

/// What a command hands back before the envelope is filled in.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
}

impl Outcome {
    pub fn ok(result: Value) -> Self {
        Self {
            status: Status::Ok,
            result,
        }
    }

    pub fn with(status: Status, result: Value) -> Self {
        Self { status, result }
    }

    pub fn holds(holds: bool, result: Value) -> Self {
        Self {
            status: if holds { Status::Ok } else { Status::Violation },
            result,
        }
    }
}
