//! Text and machine (one JSON object per run) reports.

use serde_json::{json, Value};

use crate::Format;

pub struct Outcome {
    pub command: &'static str,
    pub passed: bool,
    pub text: String,
    pub data: Value,
    /// File contents printed when no `--out` was given.
    pub payload: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str, passed: bool, text: String, data: Value) -> Self {
        Self { command, passed, text, data, payload: None }
    }

    pub fn pass(command: &'static str, text: String, data: Value) -> Self {
        Self::new(command, true, text, data)
    }

    pub fn with_payload(mut self, payload: Option<String>) -> Self {
        self.payload = payload;
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = String::new();
                if let Some(p) = &self.payload {
                    out.push_str(p);
                } else {
                    out.push_str(&self.text);
                    out.push('\n');
                }
                if self.payload.is_none() {
                    out.push_str(if self.passed { "PASS\n" } else { "FAIL\n" });
                }
                out
            }
            Format::Machine => {
                let v = json!({
                    "command": self.command,
                    "passed": self.passed,
                    "data": self.data,
                    "payload": self.payload,
                });
                format!("{v}\n")
            }
        }
    }
}

pub struct Failure {
    command: &'static str,
    message: String,
}

impl Failure {
    pub fn new(command: &'static str, message: &str) -> Self {
        Self { command, message: message.to_string() }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => format!("{}: {}\nFAIL\n", self.command, self.message),
            Format::Machine => format!("{}\n", json!({"command": self.command, "passed": false, "error": self.message})),
        }
    }
}
